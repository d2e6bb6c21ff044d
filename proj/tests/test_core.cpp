#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "promptrec/checkpoint.hpp"
#include "promptrec/error.hpp"
#include "promptrec/io.hpp"
#include "promptrec/model.hpp"
#include "promptrec/train.hpp"
#include "testutil.hpp"

using namespace promptrec;
using testutil::GradCheck;

namespace {

ModelConfig small_config(BlockVariant block = BlockVariant::self_attention) {
    ModelConfig cfg;
    cfg.vocab = 8;
    cfg.dim = 4;
    cfg.encoder = "gru";
    cfg.block = block;
    return cfg;
}

Batch small_batch() {
    Batch b;
    b.size = 3;
    b.contexts = {
        0, 0, 0, 0, 0, 0, 0, 0, 0, 2,  //
        0, 0, 0, 0, 0, 0, 0, 1, 5, 3,  //
        1, 2, 3, 4, 5, 6, 7, 8, 1, 2,  //
    };
    b.steps = {1, 3, 12};
    b.rewards = {0.35, 1.2, 0.0};
    b.targets = {3, 7, 1};
    b.immediate_rewards = {0.2, 1.0, 0.2};
    return b;
}

std::vector<PromptSample> toy_prompts(int count, int vocab, Rng& rng) {
    std::vector<PromptSample> out;
    for (int i = 0; i < count; ++i) {
        PromptSample p;
        p.context.fill(0);
        p.context[kContextLen - 1] = 1 + static_cast<int>(rng.uniform_int(vocab));
        p.context[kContextLen - 2] = 1 + static_cast<int>(rng.uniform_int(vocab));
        p.step = 1 + static_cast<int>(rng.uniform_int(5));
        p.cumulative_reward = rng.uniform(0.0, 2.0);
        p.action = 1 + static_cast<int>(rng.uniform_int(vocab));
        p.immediate_reward = rng.uniform() < 0.5 ? 0.2 : 1.0;
        out.push_back(p);
    }
    return out;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("prompt matrix stacks reward, state, and step rows in order") {
    Rng rng(1);
    Model model(small_config(), rng);
    const std::size_t d = model.config().dim;

    Tensor state = testutil::random_tensor({2, d}, rng, -1.0, 1.0, false);
    Tensor prompt = model.prompt_matrix({0.0, 2.0}, state, {1, 7});
    REQUIRE(prompt.shape() == Shape{2, 3, d});

    const Tensor& reward_emb = model.find_param("prompt.reward_emb");
    const Tensor& steps = model.find_param("prompt.step_table");
    for (std::size_t i = 0; i < d; ++i) {
        // Sample 0: reward 0 -> zero row; sample 1: reward 2 -> 2 * embedding.
        CHECK(prompt.values()[0 * 3 * d + i] == 0.0);
        CHECK(prompt.values()[1 * 3 * d + i] ==
              doctest::Approx(2.0 * reward_emb.values()[i]).epsilon(1e-15));
        // Row 1 is the encoder state.
        CHECK(prompt.values()[0 * 3 * d + d + i] == state.values()[i]);
        CHECK(prompt.values()[1 * 3 * d + d + i] == state.values()[d + i]);
        // Row 2 is the step embedding (1-based step -> row step-1).
        CHECK(prompt.values()[0 * 3 * d + 2 * d + i] == steps.values()[0 * d + i]);
        CHECK(prompt.values()[1 * 3 * d + 2 * d + i] == steps.values()[6 * d + i]);
    }

    // Steps clamp to the table size instead of overflowing.
    Tensor clamped = model.prompt_matrix({1.0}, testutil::random_tensor({1, d}, rng, -1, 1, false),
                                         {999});
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(clamped.values()[2 * d + i] ==
              steps.values()[(kMaxSessionLen - 1) * d + i]);
    }
    CHECK_THROWS_AS(model.prompt_matrix({1.0}, state, {0}), ValueError);
}

TEST_CASE("zero value projection makes the block the identity on the prompt") {
    Rng rng(2);
    Model model(small_config(), rng);
    Tensor& value_w = model.find_param("block.value_w");
    for (double& v : value_w.values()) v = 0.0;

    const std::size_t d = model.config().dim;
    Tensor state = testutil::random_tensor({2, d}, rng, -1.0, 1.0, false);
    Tensor prompt = model.prompt_matrix({0.5, 1.5}, state, {2, 4});
    Tensor mixed;
    Tensor out = model.block_state(prompt, nullptr, false, nullptr, &mixed);

    // The whole post-residual representation equals the prompt bit for bit.
    REQUIRE(mixed.shape() == prompt.shape());
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        CHECK(mixed.values()[i] == prompt.values()[i]);
    }
    // s~ must be exactly the state row of the unchanged prompt, and the
    // unstacked rows come back in (reward, state, step) order.
    auto rows = unstack(mixed, 1);
    REQUIRE(rows.size() == 3);
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(out.values()[b * d + i] == prompt.values()[b * 3 * d + d + i]);
            CHECK(rows[1].values()[b * d + i] == out.values()[b * d + i]);
        }
    }
}

TEST_CASE("block variants compute their documented reductions") {
    Rng rng(3);

    SUBCASE("mean_pool averages the three rows") {
        Model model(small_config(BlockVariant::mean_pool), rng);
        const std::size_t d = model.config().dim;
        Tensor prompt = testutil::random_tensor({1, 3, d}, rng, -1.0, 1.0, false);
        Tensor out = model.block_state(prompt);
        for (std::size_t i = 0; i < d; ++i) {
            const double expect = (prompt.values()[i] + prompt.values()[d + i] +
                                   prompt.values()[2 * d + i]) /
                                  3.0;
            CHECK(out.values()[i] == doctest::Approx(expect).epsilon(1e-15));
        }
        // Identical rows pool to themselves.
        Tensor row = testutil::random_tensor({1, d}, rng, -1.0, 1.0, false);
        Tensor same = stack({row, row, row}, 1);
        Tensor pooled = model.block_state(same);
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(pooled.values()[i] == doctest::Approx(row.values()[i]).epsilon(1e-15));
        }
    }

    SUBCASE("mlp with zero weights collapses to zero") {
        Model model(small_config(BlockVariant::mlp), rng);
        for (double& v : model.find_param("block.mlp_w1").values()) v = 0.0;
        for (double& v : model.find_param("block.mlp_w2").values()) v = 0.0;
        Tensor prompt = testutil::random_tensor({2, 3, 4}, rng, -1.0, 1.0, false);
        Tensor out = model.block_state(prompt);
        for (double v : out.values()) CHECK(v == 0.0);
    }

    SUBCASE("unknown variant names are rejected") {
        CHECK_THROWS_AS(block_variant_from_name("fancy"), ValueError);
    }
}

TEST_CASE("logits are an affine function of the attentive state") {
    Rng rng(4);
    Model model(small_config(), rng);
    const std::size_t n = model.config().vocab;
    Tensor& w = model.find_param("head.weight");
    Tensor& b = model.find_param("head.bias");

    SUBCASE("zero head gives uniform logits and uniform softmax") {
        for (double& v : w.values()) v = 0.0;
        Tensor state = testutil::random_tensor({1, 4}, rng, -1.0, 1.0, false);
        Tensor y = model.logits(state);
        REQUIRE(y.shape() == Shape{1, n});
        for (double v : y.values()) CHECK(v == 0.0);
        Tensor p = softmax(y);
        for (double v : p.values()) {
            CHECK(v == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-12));
        }
    }

    SUBCASE("a one-hot bias picks the argmax") {
        for (double& v : w.values()) v = 0.0;
        b.values()[4] = 3.0;
        Tensor state = testutil::random_tensor({1, 4}, rng, -1.0, 1.0, false);
        Tensor y = model.logits(state);
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (y.values()[i] > y.values()[arg]) arg = i;
        }
        CHECK(arg == 4);
    }

    SUBCASE("doubling the head doubles the logits exactly") {
        Tensor state = testutil::random_tensor({2, 4}, rng, -1.0, 1.0, false);
        Tensor y1 = model.logits(state);
        for (double& v : w.values()) v *= 2.0;
        for (double& v : b.values()) v *= 2.0;
        Tensor y2 = model.logits(state);
        for (std::size_t i = 0; i < y1.size(); ++i) {
            CHECK(y2.values()[i] == doctest::Approx(2.0 * y1.values()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted cross-entropy loss hand values") {
    // Zero immediate reward zeroes the loss in immediate mode.
    CHECK(weighted_ce_loss_value({0.3, -1.0, 0.4}, 2, 0.0, 1.7, LossWeightMode::immediate) ==
          0.0);
    // Uniform logits over 4 items, weight 1 -> ln 4.
    CHECK(weighted_ce_loss_value({0, 0, 0, 0}, 3, 1.0, 0.0, LossWeightMode::none) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // mode none == mode immediate with r_t = 1.
    CHECK(weighted_ce_loss_value({0.2, 0.9}, 1, 1.0, 0.5, LossWeightMode::immediate) ==
          weighted_ce_loss_value({0.2, 0.9}, 1, 123.0, 0.5, LossWeightMode::none));
    // Cumulative mode weights by R_t.
    CHECK(weighted_ce_loss_value({0.2, 0.9}, 1, 1.0, 2.0, LossWeightMode::cumulative) ==
          doctest::Approx(2.0 *
                          weighted_ce_loss_value({0.2, 0.9}, 1, 1.0, 1.0, LossWeightMode::none))
              .epsilon(1e-12));

    // Padding target rejected.
    Tensor logits = Tensor::zeros({1, 4});
    CHECK_THROWS_AS(weighted_ce_loss(logits, {0}, {1.0}), ValueError);
    CHECK_THROWS_AS(weighted_ce_loss(logits, {5}, {1.0}), ValueError);

    // Nonnegative weights keep the loss nonnegative.
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor l = testutil::random_tensor({2, 6}, rng, -3.0, 3.0, false);
        const double w0 = rng.uniform(0.0, 2.0), w1 = rng.uniform(0.0, 2.0);
        const int t0 = 1 + static_cast<int>(rng.uniform_int(6));
        const int t1 = 1 + static_cast<int>(rng.uniform_int(6));
        CHECK(weighted_ce_loss(l, {t0, t1}, {w0, w1}).item() >= 0.0);
    }

    // Batch loss is the mean of per-sample losses.
    Tensor two = Tensor::from({2, 3}, {0.5, 0.1, -0.2, 1.0, 0.0, 0.3});
    const double l0 = weighted_ce_loss_value({0.5, 0.1, -0.2}, 1, 0.2, 0, LossWeightMode::immediate);
    const double l1 = weighted_ce_loss_value({1.0, 0.0, 0.3}, 3, 1.0, 0, LossWeightMode::immediate);
    CHECK(weighted_ce_loss(two, {1, 3}, {0.2, 1.0}).item() ==
          doctest::Approx((l0 + l1) / 2.0).epsilon(1e-12));
}

TEST_CASE("full forward graph matches finite differences for both encoders and all variants") {
    for (const char* enc : {"gru", "attn"}) {
        for (BlockVariant variant : {BlockVariant::self_attention, BlockVariant::mean_pool,
                                     BlockVariant::mlp, BlockVariant::plain}) {
            Rng rng(6);
            ModelConfig cfg = small_config(variant);
            cfg.encoder = enc;
            cfg.layer_norm = variant == BlockVariant::self_attention;
            Model model(cfg, rng);
            const Batch batch = small_batch();
            std::vector<double> weights{0.2, 1.0, 0.7};

            std::vector<Tensor> leaves;
            for (const auto& [name, t] : model.params()) leaves.push_back(t);
            GradCheck check{leaves, [&](Graph* tape) {
                                Tensor logits = model.forward_logits(batch, tape);
                                return weighted_ce_loss(logits, batch.targets, weights, tape);
                            }};
            CHECK(check.max_rel_error() < 1e-4);
        }
    }
}

TEST_CASE("active parameters receive gradients; variant-inactive ones do not") {
    Rng rng(7);
    ModelConfig cfg = small_config(BlockVariant::self_attention);
    cfg.layer_norm = true;
    Model model(cfg, rng);
    const Batch batch = small_batch();
    std::vector<double> weights{1.0, 1.0, 1.0};

    Graph tape;
    Tensor logits = model.forward_logits(batch, &tape);
    Tensor loss = weighted_ce_loss(logits, batch.targets, weights, &tape);
    tape.backward(loss);

    auto grad_magnitude = [&](const std::string& name) {
        const Tensor& t = model.find_param(name);
        if (!t.has_grad()) return 0.0;
        double acc = 0.0;
        for (double g : t.grad()) acc += std::fabs(g);
        return acc;
    };

    for (const char* name : {"gru.items", "gru.update_w", "gru.update_u", "gru.reset_w",
                             "gru.reset_u", "gru.cand_w", "gru.cand_u", "prompt.reward_emb",
                             "prompt.step_table", "block.query_w", "block.key_w", "block.value_w",
                             "block.ln_gain", "block.ln_bias", "head.weight", "head.bias"}) {
        CHECK_MESSAGE(grad_magnitude(name) > 0.0, name);
    }
    // The MLP weights are inactive under the self-attention variant.
    CHECK(grad_magnitude("block.mlp_w1") == 0.0);
    CHECK(grad_magnitude("block.mlp_w2") == 0.0);
}

TEST_CASE("training reduces the loss and is bit-deterministic") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<PromptSample> prompts = toy_prompts(64, 8, rng);
        ModelConfig mcfg = small_config();
        mcfg.dropout = 0.2;
        Rng train_rng(seed + 1);
        Model model(mcfg, train_rng);
        TrainConfig tcfg;
        tcfg.batch_size = 16;
        tcfg.epochs = 5;
        tcfg.learning_rate = 0.01;
        TrainResult result = train_model(model, prompts, tcfg, train_rng);
        return std::make_pair(std::move(result), std::move(model));
    };

    auto [r1, m1] = run(11);
    CHECK_FALSE(r1.halted);
    REQUIRE(r1.epoch_mean_losses.size() == 5);
    CHECK(r1.epoch_mean_losses[0] > r1.epoch_mean_losses[4]);

    auto [r2, m2] = run(11);
    REQUIRE(r1.batch_losses.size() == r2.batch_losses.size());
    for (std::size_t i = 0; i < r1.batch_losses.size(); ++i) {
        CHECK(r1.batch_losses[i] == r2.batch_losses[i]);
    }
    for (std::size_t p = 0; p < m1.params().size(); ++p) {
        const auto& t1 = m1.params()[p].second;
        const auto& t2 = m2.params()[p].second;
        REQUIRE(t1.size() == t2.size());
        for (std::size_t i = 0; i < t1.size(); ++i) {
            CHECK(t1.values()[i] == t2.values()[i]);
        }
    }
}

TEST_CASE("training halts with a diagnostic on numerical failure") {
    Rng rng(13);
    std::vector<PromptSample> prompts = toy_prompts(8, 8, rng);
    Model model(small_config(), rng);
    auto head = model.find_param("head.weight").values();
    for (std::size_t i = 0; i < head.size(); ++i) head[i] = rng.uniform(-1.0, 1.0) * 1e308;
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 2;
    TrainResult result = train_model(model, prompts, cfg, rng);
    CHECK(result.halted);
    CHECK_FALSE(result.halt_reason.empty());
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Rng rng(17);
    ModelConfig cfg = small_config(BlockVariant::mlp);
    cfg.encoder = "attn";
    cfg.layer_norm = true;
    cfg.dropout = 0.3;
    Model model(cfg, rng);

    const std::string path = temp_path("promptrec_ckpt_test.bin");
    save_checkpoint(path, model, 987, {{"note", "roundtrip"}, {"lr", "0.01"}});

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.seed == 987);
    CHECK(loaded.config_echo.at("note") == "roundtrip");
    CHECK(loaded.model.config().encoder == "attn");
    CHECK(loaded.model.config().block == BlockVariant::mlp);
    CHECK(loaded.model.config().layer_norm);
    CHECK(loaded.model.config().dropout == 0.3);

    REQUIRE(loaded.model.params().size() == model.params().size());
    for (std::size_t p = 0; p < model.params().size(); ++p) {
        const auto& [name, t] = model.params()[p];
        const auto& [name2, t2] = loaded.model.params()[p];
        CHECK(name == name2);
        REQUIRE(t.size() == t2.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(t.values()[i] == t2.values()[i]);
        }
    }

    // Saving the loaded model reproduces the file byte-for-byte.
    const std::string path2 = temp_path("promptrec_ckpt_test2.bin");
    save_checkpoint(path2, loaded.model, 987, {{"note", "roundtrip"}, {"lr", "0.01"}});
    CHECK(read_text_file(path) == read_text_file(path2));

    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_SUITE_END();
