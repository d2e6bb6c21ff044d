#include "promptrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "promptrec/error.hpp"
#include "promptrec/io.hpp"

namespace promptrec {

void InferenceConfig::validate() const {
    if (epsilon < 0.0) throw ValueError("inference: epsilon must be >= 0");
    if (ks.empty()) throw ValueError("inference: need at least one cutoff k");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1) throw ValueError("inference: cutoffs must be >= 1");
        if (i > 0 && ks[i] <= ks[i - 1]) {
            throw ValueError("inference: cutoffs must be strictly increasing");
        }
    }
}

double inference_reward(int step, const StepRewardTable& averages, const InferenceConfig& cfg,
                        Rng& rng) {
    const double g = rng.gaussian(cfg.mu, cfg.epsilon);
    return g * averages.lookup(step);
}

std::vector<int> rank_items(const std::vector<double>& logits) {
    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double la = logits[static_cast<std::size_t>(a - 1)];
        const double lb = logits[static_cast<std::size_t>(b - 1)];
        if (la != lb) return la > lb;
        return a < b;
    });
    return order;
}

int rank_of_target(const std::vector<double>& logits, int target) {
    if (target < 1 || static_cast<std::size_t>(target) > logits.size()) {
        throw ValueError("rank: target " + std::to_string(target) + " outside 1.." +
                         std::to_string(logits.size()));
    }
    const double lt = logits[static_cast<std::size_t>(target - 1)];
    int rank = 1;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const int item = static_cast<int>(j) + 1;
        if (item == target) continue;
        if (logits[j] > lt || (logits[j] == lt && item < target)) ++rank;
    }
    return rank;
}

std::pair<int, double> hr_ndcg(int rank, int k) {
    if (rank < 1) throw ValueError("metrics: rank must be >= 1");
    if (rank > k) return {0, 0.0};
    return {1, 1.0 / std::log2(static_cast<double>(rank) + 1.0)};
}

void EvalReport::validate() const {
    for (const BehaviorMetrics* m : {&purchase, &click}) {
        double prev_hr = 0.0, prev_ndcg = 0.0;
        for (const auto& [k, hr] : m->hr) {
            const double ndcg = m->ndcg.at(k);
            if (hr < 0.0 || hr > 1.0) throw ValueError("report: HR out of [0, 1]");
            if (ndcg > hr + 1e-12) throw ValueError("report: NDCG exceeds HR at k");
            if (hr + 1e-12 < prev_hr || ndcg + 1e-12 < prev_ndcg) {
                throw ValueError("report: metrics are not monotone in k");
            }
            prev_hr = hr;
            prev_ndcg = ndcg;
        }
    }
}

namespace {

struct EvalRow {
    std::array<int, kContextLen> context;
    int step = 1;
    int target = 0;
    Behavior behavior = Behavior::click;
    double immediate_reward = 0.0;
    double prompt_reward = 0.0;
};

struct Accumulator {
    std::map<int, long> hits;
    std::map<int, double> ndcg_sum;
    std::size_t count = 0;
};

EvalReport aggregate(const std::vector<int>& ks, const Accumulator& purchase,
                     const Accumulator& click, double reward_at_1, std::size_t steps) {
    EvalReport report;
    auto fill = [&](const Accumulator& acc, BehaviorMetrics& out) {
        out.count = acc.count;
        for (int k : ks) {
            const double denom = acc.count > 0 ? static_cast<double>(acc.count) : 1.0;
            out.hr[k] = static_cast<double>(acc.hits.count(k) ? acc.hits.at(k) : 0) / denom;
            out.ndcg[k] = (acc.ndcg_sum.count(k) ? acc.ndcg_sum.at(k) : 0.0) / denom;
        }
    };
    fill(purchase, report.purchase);
    fill(click, report.click);
    report.cumulative_reward_at_1 = reward_at_1;
    report.steps_evaluated = steps;
    return report;
}

}  // namespace

EvalReport evaluate(Model& model, const std::vector<Session>& test_sessions,
                    const RewardConfig& reward_cfg, const StepRewardTable& averages,
                    const InferenceConfig& infer_cfg) {
    infer_cfg.validate();
    reward_cfg.validate();
    if (test_sessions.empty()) throw ValueError("evaluate: empty test set");

    // Collect every evaluated step first; prompt rewards are drawn in this
    // fixed order so a seed pins the whole evaluation.
    std::vector<EvalRow> rows;
    for (const Session& s : test_sessions) {
        s.validate();
        if (s.length() < 2) continue;
        for (std::size_t t = 1; t < s.length(); ++t) {
            EvalRow row;
            row.context.fill(0);
            const std::size_t take = std::min<std::size_t>(t, kContextLen);
            for (std::size_t i = 0; i < take; ++i) {
                row.context[kContextLen - take + i] = s.items[t - take + i];
            }
            row.step = static_cast<int>(t);
            row.target = s.items[t];
            row.behavior = s.behaviors[t];
            row.immediate_reward = reward_cfg.reward_for(s.behaviors[t]);
            rows.push_back(row);
        }
    }
    if (rows.empty()) throw ValueError("evaluate: no evaluable steps in the test set");

    Rng rng(infer_cfg.seed);
    for (EvalRow& row : rows) {
        row.prompt_reward = inference_reward(row.step, averages, infer_cfg, rng);
    }

    const std::size_t n = model.config().vocab;
    Accumulator purchase, click;
    double reward_at_1 = 0.0;

    constexpr std::size_t kEvalBatch = 256;
    std::vector<double> row_logits(n);
    for (std::size_t start = 0; start < rows.size(); start += kEvalBatch) {
        const std::size_t stop = std::min(rows.size(), start + kEvalBatch);
        Batch batch;
        batch.size = stop - start;
        for (std::size_t r = start; r < stop; ++r) {
            batch.contexts.insert(batch.contexts.end(), rows[r].context.begin(),
                                  rows[r].context.end());
            batch.steps.push_back(rows[r].step);
            batch.rewards.push_back(rows[r].prompt_reward);
        }
        Tensor logits = model.forward_logits(batch);
        for (std::size_t r = start; r < stop; ++r) {
            const double* lrow = logits.values().data() + (r - start) * n;
            row_logits.assign(lrow, lrow + n);
            const int rank = rank_of_target(row_logits, rows[r].target);
            Accumulator& acc = rows[r].behavior == Behavior::purchase ? purchase : click;
            ++acc.count;
            for (int k : infer_cfg.ks) {
                const auto [hit, ndcg] = hr_ndcg(rank, k);
                acc.hits[k] += hit;
                acc.ndcg_sum[k] += ndcg;
            }
            if (rank == 1) reward_at_1 += rows[r].immediate_reward;
        }
    }

    EvalReport report = aggregate(infer_cfg.ks, purchase, click, reward_at_1, rows.size());
    report.config_echo["mu"] = format_g17(infer_cfg.mu);
    report.config_echo["epsilon"] = format_g17(infer_cfg.epsilon);
    report.config_echo["seed"] = std::to_string(infer_cfg.seed);
    report.config_echo["lambda"] = format_g17(reward_cfg.lambda);
    report.config_echo["discount_mode"] = discount_mode_name(reward_cfg.discount_mode);
    report.config_echo["r_click"] = format_g17(reward_cfg.r_click);
    report.config_echo["r_purchase"] = format_g17(reward_cfg.r_purchase);
    report.validate();
    return report;
}

EvalReport evaluate_runs(Model& model, const std::vector<Session>& test_sessions,
                         const RewardConfig& reward_cfg, const StepRewardTable& averages,
                         const InferenceConfig& infer_cfg, int runs) {
    if (runs < 1) throw ValueError("evaluate: runs must be >= 1");
    EvalReport mean;
    for (int r = 0; r < runs; ++r) {
        InferenceConfig cfg = infer_cfg;
        cfg.seed = infer_cfg.seed + static_cast<std::uint64_t>(r);
        EvalReport one = evaluate(model, test_sessions, reward_cfg, averages, cfg);
        if (r == 0) {
            mean = one;
            continue;
        }
        auto add_metrics = [](BehaviorMetrics& acc, const BehaviorMetrics& add) {
            for (auto& [k, v] : acc.hr) v += add.hr.at(k);
            for (auto& [k, v] : acc.ndcg) v += add.ndcg.at(k);
        };
        add_metrics(mean.purchase, one.purchase);
        add_metrics(mean.click, one.click);
        mean.cumulative_reward_at_1 += one.cumulative_reward_at_1;
    }
    if (runs > 1) {
        const double inv = 1.0 / static_cast<double>(runs);
        for (BehaviorMetrics* m : {&mean.purchase, &mean.click}) {
            for (auto& [k, v] : m->hr) v *= inv;
            for (auto& [k, v] : m->ndcg) v *= inv;
        }
        mean.cumulative_reward_at_1 *= inv;
    }
    mean.config_echo["runs"] = std::to_string(runs);
    mean.validate();
    return mean;
}

std::string report_text(const EvalReport& report) {
    report.validate();
    std::ostringstream os;
    os << "steps_evaluated = " << report.steps_evaluated << '\n';
    os << "cumulative_reward_at_1 = " << format_fixed(report.cumulative_reward_at_1) << '\n';
    auto emit = [&](const char* name, const BehaviorMetrics& m) {
        os << name << ".count = " << m.count << '\n';
        for (const auto& [k, hr] : m.hr) {
            os << name << ".hr@" << k << " = " << format_fixed(hr) << '\n';
            os << name << ".ndcg@" << k << " = " << format_fixed(m.ndcg.at(k)) << '\n';
        }
    };
    emit("purchase", report.purchase);
    emit("click", report.click);
    for (const auto& [key, value] : report.config_echo) {
        os << "config." << key << " = " << value << '\n';
    }
    return os.str();
}

std::string report_csv(const EvalReport& report) {
    report.validate();
    std::ostringstream os;
    os << "behavior,k,hr,ndcg\n";
    auto emit = [&](const char* name, const BehaviorMetrics& m) {
        for (const auto& [k, hr] : m.hr) {
            os << name << ',' << k << ',' << format_fixed(hr) << ','
               << format_fixed(m.ndcg.at(k)) << '\n';
        }
    };
    emit("purchase", report.purchase);
    emit("click", report.click);
    return os.str();
}

std::vector<SweepPoint> sweep(Model& model, const std::vector<Session>& test_sessions,
                              const RewardConfig& reward_cfg, const StepRewardTable& averages,
                              const InferenceConfig& base_cfg, const std::string& parameter,
                              const std::vector<double>& grid) {
    if (grid.empty()) throw ValueError("sweep: empty grid");
    if (parameter != "mu" && parameter != "epsilon") {
        throw ValueError("sweep: parameter must be 'mu' or 'epsilon', got '" + parameter + "'");
    }
    std::vector<SweepPoint> points;
    for (double value : grid) {
        InferenceConfig cfg = base_cfg;  // shared seed across grid points
        if (parameter == "mu") {
            cfg.mu = value;
        } else {
            cfg.epsilon = value;
        }
        SweepPoint point;
        point.parameter = value;
        point.report = evaluate(model, test_sessions, reward_cfg, averages, cfg);
        points.push_back(std::move(point));
    }
    return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "parameter,cumulative_reward_at_1,hr5_purchase,ng5_purchase,hr5_click,ng5_click\n";
    for (const SweepPoint& p : points) {
        const int k = p.report.purchase.hr.begin()->first;
        os << format_g17(p.parameter) << ',' << format_fixed(p.report.cumulative_reward_at_1)
           << ',' << format_fixed(p.report.purchase.hr.at(k)) << ','
           << format_fixed(p.report.purchase.ndcg.at(k)) << ','
           << format_fixed(p.report.click.hr.at(k)) << ','
           << format_fixed(p.report.click.ndcg.at(k)) << '\n';
    }
    return os.str();
}

}  // namespace promptrec
