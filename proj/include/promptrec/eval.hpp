#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "promptrec/data.hpp"
#include "promptrec/model.hpp"

namespace promptrec {

// Prompt-reward settings for inference: the conditioning reward at step t is
// a Gaussian draw N(mu, epsilon^2) times the training-set average cumulative
// reward at that step.
struct InferenceConfig {
    double mu = 2.0;
    double epsilon = 0.0;
    std::uint64_t seed = 1;
    std::vector<int> ks = {5, 10, 20};

    void validate() const;
};

// One Gaussian draw per evaluated step; epsilon = 0 gives exactly mu * avg.
double inference_reward(int step, const StepRewardTable& averages, const InferenceConfig& cfg,
                        Rng& rng);

// Items ordered by descending logit; ties broken by ascending item index.
std::vector<int> rank_items(const std::vector<double>& logits);

// 1-based rank of `target` under the same ordering, without the full sort.
int rank_of_target(const std::vector<double>& logits, int target);

// hit = 1 iff rank <= k; ndcg = 1/log2(rank+1) for hits, else 0.
std::pair<int, double> hr_ndcg(int rank, int k);

struct BehaviorMetrics {
    std::map<int, double> hr;    // k -> hit ratio
    std::map<int, double> ndcg;  // k -> mean rank-discounted gain
    std::size_t count = 0;       // evaluated steps with this behavior
};

struct EvalReport {
    BehaviorMetrics purchase;
    BehaviorMetrics click;
    double cumulative_reward_at_1 = 0.0;
    std::size_t steps_evaluated = 0;
    std::map<std::string, std::string> config_echo;

    // Checks HR@5 <= HR@10 <= HR@20 (and likewise NDCG), NDCG <= HR, and
    // metric ranges on every emission.
    void validate() const;
};

// Scores every step t of every test session (context of the last items, the
// generated prompt reward, full-item ranking) and aggregates HR/NDCG per
// behavior of the ground-truth action. cumulative_reward_at_1 sums the
// immediate reward of targets ranked first.
EvalReport evaluate(Model& model, const std::vector<Session>& test_sessions,
                    const RewardConfig& reward_cfg, const StepRewardTable& averages,
                    const InferenceConfig& infer_cfg);

// Mean of `runs` evaluations with seeds seed, seed+1, ...
EvalReport evaluate_runs(Model& model, const std::vector<Session>& test_sessions,
                         const RewardConfig& reward_cfg, const StepRewardTable& averages,
                         const InferenceConfig& infer_cfg, int runs);

std::string report_text(const EvalReport& report);
std::string report_csv(const EvalReport& report);

struct SweepPoint {
    double parameter = 0.0;
    EvalReport report;
};

// One evaluation per grid value of `parameter` ("mu" or "epsilon"), each with
// the same evaluation seed.
std::vector<SweepPoint> sweep(Model& model, const std::vector<Session>& test_sessions,
                              const RewardConfig& reward_cfg, const StepRewardTable& averages,
                              const InferenceConfig& base_cfg, const std::string& parameter,
                              const std::vector<double>& grid);

std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace promptrec
