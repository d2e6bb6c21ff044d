#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "promptrec/error.hpp"
#include "promptrec/eval.hpp"
#include "promptrec/io.hpp"
#include "promptrec/model.hpp"
#include "testutil.hpp"

using namespace promptrec;

namespace {

// Brute-force oracle: fully sort (descending logit, ascending index), scan
// for the target, then apply the metric definitions directly.
std::pair<int, double> brute_force_hr_ndcg(const std::vector<double>& logits, int target,
                                           int k) {
    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 1);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (logits[a - 1] != logits[b - 1]) return logits[a - 1] > logits[b - 1];
        return a < b;
    });
    int rank = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] == target) {
            rank = static_cast<int>(i) + 1;
            break;
        }
    }
    if (rank > k) return {0, 0.0};
    return {1, 1.0 / std::log2(rank + 1.0)};
}

Session make_session(std::string id, std::vector<int> items, std::vector<Behavior> behaviors) {
    Session s;
    s.id = std::move(id);
    s.items = std::move(items);
    s.behaviors = std::move(behaviors);
    return s;
}

Model fixed_bias_model(std::size_t vocab, int favourite) {
    ModelConfig cfg;
    cfg.vocab = vocab;
    cfg.dim = 4;
    cfg.encoder = "gru";
    cfg.block = BlockVariant::plain;
    Rng rng(1);
    Model model(cfg, rng);
    for (double& v : model.find_param("head.weight").values()) v = 0.0;
    auto bias = model.find_param("head.bias").values();
    for (double& v : bias) v = 0.0;
    bias[static_cast<std::size_t>(favourite - 1)] = 5.0;
    return model;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("inference reward scales the step average") {
    const StepRewardTable table = StepRewardTable::from_means({{1, 0.25}, {3, 0.5}});
    InferenceConfig cfg;
    Rng rng(1);

    cfg.mu = 2.0;
    cfg.epsilon = 0.0;
    CHECK(inference_reward(1, table, cfg, rng) == 0.5);  // exactly mu * avg
    cfg.mu = 1.0;
    CHECK(inference_reward(3, table, cfg, rng) == 0.5);
    CHECK(inference_reward(9, table, cfg, rng) == 0.5);  // fallback to step 3

    cfg.mu = 2.0;
    cfg.epsilon = 0.5;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += inference_reward(1, table, cfg, rng) / 0.25;
    CHECK(sum / n == doctest::Approx(2.0).epsilon(0.005));

    cfg.epsilon = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("rank_items orders by logit with index tie-breaks") {
    CHECK(rank_items({0.1, 0.9, 0.5}) == std::vector<int>{2, 3, 1});
    CHECK(rank_items({0.7, 0.7, 0.7}) == std::vector<int>{1, 2, 3});

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(30);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-1.0, 1.0);
        if (trial % 3 == 0) logits[rng.uniform_int(n)] = logits[rng.uniform_int(n)];  // ties
        const std::vector<int> order = rank_items(logits);
        for (std::size_t pos = 0; pos < n; ++pos) {
            CHECK(rank_of_target(logits, order[pos]) == static_cast<int>(pos) + 1);
        }
    }
}

TEST_CASE("hr and ndcg hand values") {
    CHECK(hr_ndcg(1, 5) == std::pair<int, double>{1, 1.0});
    const auto [hit3, ndcg3] = hr_ndcg(3, 5);
    CHECK(hit3 == 1);
    CHECK(ndcg3 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hr_ndcg(6, 5) == std::pair<int, double>{0, 0.0});
    CHECK_THROWS_AS(hr_ndcg(0, 5), ValueError);
}

TEST_CASE("metrics match the brute-force oracle on 1000 random cases") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + rng.uniform_int(60);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-2.0, 2.0);
        if (trial % 4 == 0) {
            logits[rng.uniform_int(n)] = logits[rng.uniform_int(n)];
        }
        const int target = 1 + static_cast<int>(rng.uniform_int(n));
        const int k = 1 + static_cast<int>(rng.uniform_int(20));
        const auto expect = brute_force_hr_ndcg(logits, target, k);
        const auto got = hr_ndcg(rank_of_target(logits, target), k);
        CHECK(got.first == expect.first);
        CHECK(got.second == expect.second);
    }
}

TEST_CASE("a model that always ranks the truth first scores perfect metrics") {
    // Every target is item 1; the model has a hard bias for item 1.
    std::vector<Session> sessions;
    sessions.push_back(make_session("a", {1, 1, 1, 1},
                                    {Behavior::click, Behavior::click, Behavior::purchase,
                                     Behavior::click}));
    sessions.push_back(make_session("b", {2, 1, 1},
                                    {Behavior::click, Behavior::purchase, Behavior::click}));
    Model model = fixed_bias_model(6, 1);
    const StepRewardTable table = StepRewardTable::from_means({{1, 1.0}});
    RewardConfig reward_cfg;
    InferenceConfig infer_cfg;

    const EvalReport report = evaluate(model, sessions, reward_cfg, table, infer_cfg);
    CHECK(report.steps_evaluated == 5);
    // Targets: click, purchase, click in session a; purchase, click in b.
    CHECK(report.purchase.count == 2);
    CHECK(report.click.count == 3);
    for (const BehaviorMetrics* m : {&report.purchase, &report.click}) {
        for (const auto& [k, hr] : m->hr) {
            CHECK(hr == 1.0);
            CHECK(m->ndcg.at(k) == 1.0);
        }
    }
    // Sum of immediate rewards of correctly top-1 ranked targets.
    CHECK(report.cumulative_reward_at_1 ==
          doctest::Approx(2 * 1.0 + 3 * 0.2).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate(model, {}, reward_cfg, table, infer_cfg), ValueError);
}

TEST_CASE("behavior denominators follow the targets") {
    std::vector<Session> sessions;
    sessions.push_back(make_session(
        "a", {3, 4, 5, 6},
        {Behavior::purchase, Behavior::click, Behavior::purchase, Behavior::click}));
    Model model = fixed_bias_model(8, 2);
    const StepRewardTable table = StepRewardTable::from_means({{1, 1.0}});
    const EvalReport report = evaluate(model, sessions, RewardConfig{}, table,
                                       InferenceConfig{});
    // Targets are items 4 (click), 5 (purchase), 6 (click).
    CHECK(report.purchase.count == 1);
    CHECK(report.click.count == 2);
    CHECK(report.cumulative_reward_at_1 == 0.0);  // favourite item 2 never the target
}

TEST_CASE("an untrained model hits at roughly k/n") {
    SynthSpec spec;
    spec.vocab = 50;
    spec.sessions = 400;
    spec.fanout = 8;
    spec.seed = 3;
    const auto sessions = synth_corpus(spec);

    ModelConfig cfg;
    cfg.vocab = 50;
    cfg.dim = 8;
    cfg.encoder = "gru";
    Rng rng(1234);
    Model model(cfg, rng);

    RewardConfig reward_cfg;
    const StepRewardTable table =
        StepRewardTable::from_samples(generate_prompts(sessions, reward_cfg));
    const EvalReport report = evaluate(model, sessions, reward_cfg, table, InferenceConfig{});

    const double steps = static_cast<double>(report.steps_evaluated);
    REQUIRE(steps > 2000);
    for (int k : {5, 10, 20}) {
        const double p = static_cast<double>(k) / 50.0;
        const double sigma = std::sqrt(p * (1.0 - p) / steps);
        const double hr = (report.purchase.hr.at(k) * report.purchase.count +
                           report.click.hr.at(k) * report.click.count) /
                          steps;
        CHECK(std::fabs(hr - p) <= 4.0 * sigma);
    }
}

TEST_CASE("evaluation with epsilon 0 is deterministic and averaging is idempotent") {
    SynthSpec spec;
    spec.vocab = 12;
    spec.sessions = 30;
    spec.seed = 4;
    const auto sessions = synth_corpus(spec);
    Model model = fixed_bias_model(12, 3);
    RewardConfig reward_cfg;
    const StepRewardTable table =
        StepRewardTable::from_samples(generate_prompts(sessions, reward_cfg));

    InferenceConfig infer_cfg;
    const EvalReport a = evaluate(model, sessions, reward_cfg, table, infer_cfg);
    const EvalReport b = evaluate(model, sessions, reward_cfg, table, infer_cfg);
    CHECK(report_text(a) == report_text(b));
    CHECK(report_csv(a) == report_csv(b));

    const EvalReport avg = evaluate_runs(model, sessions, reward_cfg, table, infer_cfg, 3);
    for (int k : {5, 10, 20}) {
        CHECK(avg.purchase.hr.at(k) == doctest::Approx(a.purchase.hr.at(k)).epsilon(1e-12));
        CHECK(avg.click.ndcg.at(k) == doctest::Approx(a.click.ndcg.at(k)).epsilon(1e-12));
    }
    CHECK(avg.cumulative_reward_at_1 ==
          doctest::Approx(a.cumulative_reward_at_1).epsilon(1e-12));
}

TEST_CASE("sweeps share the seed and emit one row per grid point") {
    SynthSpec spec;
    spec.vocab = 12;
    spec.sessions = 25;
    spec.seed = 5;
    const auto sessions = synth_corpus(spec);
    Model model = fixed_bias_model(12, 3);
    RewardConfig reward_cfg;
    const StepRewardTable table =
        StepRewardTable::from_samples(generate_prompts(sessions, reward_cfg));
    InferenceConfig base;

    const auto points = sweep(model, sessions, reward_cfg, table, base, "mu", {1, 2, 3, 4});
    CHECK(points.size() == 4);
    const std::string csv = sweep_csv(points);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows
    CHECK(csv.rfind("parameter,cumulative_reward_at_1,hr5_purchase,ng5_purchase,hr5_click,"
                    "ng5_click\n", 0) == 0);

    // A single-point grid is one evaluation.
    const auto single = sweep(model, sessions, reward_cfg, table, base, "mu", {2.0});
    const EvalReport direct = evaluate(model, sessions, reward_cfg, table, base);
    CHECK(report_text(single[0].report) == report_text(direct));

    // epsilon = 0 twice gives identical rows.
    const auto eps = sweep(model, sessions, reward_cfg, table, base, "epsilon", {0.0, 0.25, 0.0});
    const std::string eps_csv = sweep_csv(eps);
    const auto lines = split(eps_csv, '\n');
    CHECK(split(lines[1], ',').back() == split(lines[3], ',').back());
    CHECK(lines[1].substr(lines[1].find(',')) == lines[3].substr(lines[3].find(',')));

    CHECK_THROWS_AS(sweep(model, sessions, reward_cfg, table, base, "mu", {}), ValueError);
    CHECK_THROWS_AS(sweep(model, sessions, reward_cfg, table, base, "lambda", {1.0}),
                    ValueError);
}

TEST_SUITE_END();
