#include <doctest.h>

#include <map>

#include "promptrec/encoders.hpp"
#include "promptrec/error.hpp"
#include "promptrec/ops.hpp"
#include "testutil.hpp"

using namespace promptrec;
using testutil::GradCheck;

namespace {

std::vector<int> pad_context(const std::vector<int>& items) {
    std::vector<int> ctx(kContextLen, 0);
    for (std::size_t i = 0; i < items.size(); ++i) {
        ctx[kContextLen - items.size() + i] = items[i];
    }
    return ctx;
}

std::map<std::string, Tensor> param_map(const Encoder& enc) {
    std::vector<NamedTensor> params;
    enc.collect_params(params);
    std::map<std::string, Tensor> out;
    for (auto& [name, t] : params) out.emplace(name, t);
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("encoders");

TEST_CASE("zero-weight GRU is a fixed point at zero") {
    Rng rng(1);
    GruEncoder enc(6, 4, rng);
    std::vector<NamedTensor> params;
    enc.collect_params(params);
    for (auto& [name, t] : params) {
        for (double& v : t.values()) v = 0.0;
    }
    const std::vector<int> ctx = pad_context({1, 2, 3, 4, 5});
    Tensor s = enc.encode(ctx, 1);
    REQUIRE(s.shape() == Shape{1, 4});
    for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("encoders produce (batch, dim) states") {
    Rng rng(2);
    for (const char* kind : {"gru", "attn"}) {
        auto enc = make_encoder(kind, 8, 5, rng);
        std::vector<int> ctx = pad_context({3, 1, 4});
        std::vector<int> batch2 = ctx;
        std::vector<int> full = pad_context({1, 2, 3, 4, 5, 6, 7, 8, 1, 2});
        batch2.insert(batch2.end(), full.begin(), full.end());
        Tensor s = enc->encode(batch2, 2);
        CHECK(s.shape() == Shape{2, 5});
        CHECK(enc->dim() == 5);
        CHECK(std::string(enc->kind()) == kind);
    }
    CHECK_THROWS_AS(make_encoder("caser", 8, 5, rng), ValueError);
}

TEST_CASE("out-of-range items are rejected") {
    Rng rng(3);
    GruEncoder enc(4, 3, rng);
    std::vector<int> ctx = pad_context({4});  // vocab is 4 -> rows 0..4
    CHECK_THROWS_AS(enc.encode(pad_context({5}), 1), ValueError);
    CHECK_NOTHROW(enc.encode(ctx, 1));
    CHECK_THROWS_AS(enc.encode(ctx, 2), ShapeError);  // batch/context mismatch
}

TEST_CASE("padding rows never influence the state") {
    Rng rng(4);
    for (const char* kind : {"gru", "attn"}) {
        auto enc = make_encoder(kind, 6, 4, rng);
        const std::vector<int> ctx = pad_context({2, 5, 1});
        Tensor before = enc->encode(ctx, 1);

        Tensor items = kind == std::string("gru")
                           ? static_cast<GruEncoder*>(enc.get())->item_table()
                           : static_cast<AttnEncoder*>(enc.get())->item_table();
        for (std::size_t i = 0; i < 4; ++i) items.values()[i] = 100.0 + static_cast<double>(i);

        Tensor after = enc->encode(ctx, 1);
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(before.values()[i] == after.values()[i]);
        }
    }
}

TEST_CASE("attention encoder is causal") {
    Rng rng(5);
    AttnEncoder enc(9, 4, rng);
    std::vector<int> ctx = {1, 2, 3, 4, 5, 6, 7, 8, 9, 1};
    Tensor base = enc.encode_sequence(ctx, 1);
    std::vector<int> changed = ctx;
    const std::size_t j = 5;
    changed[j] = 2;
    Tensor moved = enc.encode_sequence(changed, 1);
    const std::size_t d = 4;
    for (std::size_t pos = 0; pos < kContextLen; ++pos) {
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            diff += std::fabs(base.values()[pos * d + i] - moved.values()[pos * d + i]);
        }
        if (pos < j) {
            CHECK(diff == 0.0);
        } else {
            CHECK(diff > 0.0);
        }
    }
}

TEST_CASE("single-item context reduces to a feed-forward of that embedding") {
    Rng rng(6);
    AttnEncoder enc(7, 5, rng);
    const int item = 3;
    Tensor state = enc.encode(pad_context({item}), 1);

    auto params = param_map(enc);
    Tensor x = add(embedding(params.at("attn.items"), {item}),
                   embedding(params.at("attn.positions"), {kContextLen - 1}));
    // Attention over a single visible key passes its value row through.
    Tensor v = matmul(x, params.at("attn.value_w"), nullptr, true);
    Tensor h = tanh(add(matmul(v, params.at("attn.ff1_w"), nullptr, true),
                        params.at("attn.ff1_b")));
    Tensor o = add(matmul(h, params.at("attn.ff2_w"), nullptr, true), params.at("attn.ff2_b"));
    REQUIRE(state.size() == o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        CHECK(state.values()[i] == doctest::Approx(o.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("encoder gradients match finite differences") {
    Rng rng(7);
    std::vector<int> contexts = pad_context({1, 3});
    std::vector<int> second = pad_context({2, 4, 1, 3, 2, 4, 1, 3, 2, 4});
    contexts.insert(contexts.end(), second.begin(), second.end());

    SUBCASE("gru") {
        GruEncoder enc(4, 3, rng);
        std::vector<NamedTensor> named;
        enc.collect_params(named);
        std::vector<Tensor> params;
        for (auto& [name, t] : named) params.push_back(t);
        GradCheck check{params, [&](Graph* tape) {
                            return sum(tanh(enc.encode(contexts, 2, tape), tape), tape);
                        }};
        CHECK(check.max_rel_error() < 1e-4);
    }

    SUBCASE("attn") {
        AttnEncoder enc(4, 3, rng);
        std::vector<NamedTensor> named;
        enc.collect_params(named);
        std::vector<Tensor> params;
        for (auto& [name, t] : named) params.push_back(t);
        GradCheck check{params, [&](Graph* tape) {
                            return sum(tanh(enc.encode(contexts, 2, tape), tape), tape);
                        }};
        CHECK(check.max_rel_error() < 1e-4);
    }
}

TEST_SUITE_END();
