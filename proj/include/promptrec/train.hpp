#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "promptrec/data.hpp"
#include "promptrec/model.hpp"

namespace promptrec {

struct TrainConfig {
    std::size_t batch_size = 256;
    double learning_rate = 0.01;
    std::size_t epochs = 10;
    LossWeightMode loss_weight = LossWeightMode::immediate;
    std::uint64_t seed = 42;

    void validate() const;
};

struct TrainResult {
    std::vector<double> batch_losses;
    std::vector<double> epoch_mean_losses;
    std::vector<double> validation_scores;  // one per completed epoch when a validator is set
    std::size_t best_epoch = 0;             // 1-based; last epoch when no validator is set
    bool halted = false;                    // stopped on a numerical failure
    std::string halt_reason;
};

// Score used for best-model selection (higher is better).
using ValidationFn = std::function<double(Model&)>;
// Called at every epoch end; `best` marks a new best validation score.
using EpochHook = std::function<void(Model&, std::size_t epoch, bool best)>;

// Mini-batch training: seeded-shuffled epochs, forward -> weighted loss ->
// backward -> Adam step. `rng` must be the same generator that initialized
// the model so one seed drives the whole run. On a non-finite loss or
// gradient the run halts with the diagnostic recorded in the result;
// parameters keep their last good values.
TrainResult train_model(Model& model, const std::vector<PromptSample>& prompts,
                        const TrainConfig& cfg, Rng& rng, const ValidationFn& validate = {},
                        const EpochHook& epoch_hook = {});

}  // namespace promptrec
