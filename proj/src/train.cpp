#include "promptrec/train.hpp"

#include <cmath>
#include <numeric>

#include "promptrec/adam.hpp"
#include "promptrec/error.hpp"

namespace promptrec {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValueError("train: batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValueError("train: learning rate must be positive");
    if (epochs < 1) throw ValueError("train: epochs must be >= 1");
}

TrainResult train_model(Model& model, const std::vector<PromptSample>& prompts,
                        const TrainConfig& cfg, Rng& rng, const ValidationFn& validate,
                        const EpochHook& epoch_hook) {
    cfg.validate();
    if (prompts.empty()) throw ValueError("train: empty prompt set");

    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    AdamOptimizer optimizer(adam_cfg, model.params());

    std::vector<std::size_t> order(prompts.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_score = -1e300;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> indices(order.begin() + start, order.begin() + stop);
            const Batch batch = Batch::from_samples(prompts, indices);

            std::vector<double> weights(batch.size);
            for (std::size_t b = 0; b < batch.size; ++b) {
                weights[b] = ce_weight(cfg.loss_weight, batch.immediate_rewards[b],
                                       batch.rewards[b]);
            }

            try {
                Graph tape;
                Tensor logits = model.forward_logits(batch, &tape, /*training=*/true, &rng);
                Tensor loss = weighted_ce_loss(logits, batch.targets, weights, &tape);
                const double loss_value = loss.item();
                if (!std::isfinite(loss_value)) {
                    throw NumericalError("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
                }
                tape.backward(loss);
                optimizer.step();
                model.zero_grads();
                result.batch_losses.push_back(loss_value);
                epoch_loss += loss_value;
                ++epoch_batches;
            } catch (const NumericalError& e) {
                result.halted = true;
                result.halt_reason = std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(epoch_batches + 1) + ")";
                if (result.best_epoch == 0 && epoch > 1) result.best_epoch = epoch - 1;
                return result;
            }
        }

        result.epoch_mean_losses.push_back(epoch_loss / static_cast<double>(epoch_batches));

        bool is_best = false;
        if (validate) {
            const double score = validate(model);
            result.validation_scores.push_back(score);
            if (score > best_score) {
                best_score = score;
                result.best_epoch = epoch;
                is_best = true;
            }
        } else {
            result.best_epoch = epoch;
            is_best = true;
        }
        if (epoch_hook) epoch_hook(model, epoch, is_best);
    }
    return result;
}

}  // namespace promptrec
