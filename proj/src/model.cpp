#include "promptrec/model.hpp"

#include <algorithm>
#include <cmath>

#include "promptrec/error.hpp"
#include "promptrec/io.hpp"

namespace promptrec {

const char* block_variant_name(BlockVariant v) {
    switch (v) {
        case BlockVariant::self_attention: return "self_attention";
        case BlockVariant::mean_pool: return "mean_pool";
        case BlockVariant::mlp: return "mlp";
        case BlockVariant::plain: return "plain";
    }
    return "?";
}

BlockVariant block_variant_from_name(const std::string& name) {
    if (name == "self_attention") return BlockVariant::self_attention;
    if (name == "mean_pool") return BlockVariant::mean_pool;
    if (name == "mlp") return BlockVariant::mlp;
    if (name == "plain") return BlockVariant::plain;
    throw ValueError("unknown block variant '" + name + "'");
}

const char* loss_weight_mode_name(LossWeightMode m) {
    switch (m) {
        case LossWeightMode::immediate: return "immediate";
        case LossWeightMode::none: return "none";
        case LossWeightMode::cumulative: return "cumulative";
    }
    return "?";
}

LossWeightMode loss_weight_mode_from_name(const std::string& name) {
    if (name == "immediate") return LossWeightMode::immediate;
    if (name == "none") return LossWeightMode::none;
    if (name == "cumulative") return LossWeightMode::cumulative;
    throw ValueError("unknown loss weight mode '" + name + "'");
}

void ModelConfig::validate() const {
    if (vocab == 0) throw ValueError("model: vocab must be positive");
    if (dim == 0) throw ValueError("model: dim must be positive");
    if (encoder != "gru" && encoder != "attn") {
        throw ValueError("model: unknown encoder '" + encoder + "'");
    }
    if (dropout < 0.0 || dropout > 0.5) {
        throw ValueError("model: dropout ratio must lie in [0, 0.5], got " + format_g17(dropout));
    }
}

Batch Batch::from_samples(const std::vector<PromptSample>& samples,
                          const std::vector<std::size_t>& indices) {
    Batch b;
    b.size = indices.size();
    b.contexts.reserve(b.size * kContextLen);
    b.steps.reserve(b.size);
    b.rewards.reserve(b.size);
    b.targets.reserve(b.size);
    b.immediate_rewards.reserve(b.size);
    for (std::size_t idx : indices) {
        const PromptSample& s = samples.at(idx);
        b.contexts.insert(b.contexts.end(), s.context.begin(), s.context.end());
        b.steps.push_back(s.step);
        b.rewards.push_back(s.cumulative_reward);
        b.targets.push_back(s.action);
        b.immediate_rewards.push_back(s.immediate_reward);
    }
    return b;
}

double ce_weight(LossWeightMode mode, double immediate_reward, double cumulative_reward) {
    switch (mode) {
        case LossWeightMode::immediate: return immediate_reward;
        case LossWeightMode::none: return 1.0;
        case LossWeightMode::cumulative: return cumulative_reward;
    }
    return 1.0;
}

Tensor weighted_ce_loss(Tensor logits, const std::vector<int>& targets,
                        const std::vector<double>& weights, Graph* tape) {
    if (logits.rank() != 2) {
        throw ShapeError("loss: logits must be (batch, items), got " + shape_str(logits.shape()));
    }
    const std::size_t batch = logits.shape()[0];
    const std::size_t items = logits.shape()[1];
    if (targets.size() != batch || weights.size() != batch) {
        throw ShapeError("loss: batch size mismatch");
    }
    Tensor picks = Tensor::zeros({batch, items});
    for (std::size_t b = 0; b < batch; ++b) {
        const int t = targets[b];
        if (t <= 0 || static_cast<std::size_t>(t) > items) {
            throw ValueError("loss: target " + std::to_string(t) +
                             " is not a valid item index (padding is not a candidate)");
        }
        picks.values()[b * items + static_cast<std::size_t>(t - 1)] = weights[b];
    }
    Tensor log_probs = log(softmax(logits, tape), tape);
    return scale(sum(mul(picks, log_probs, tape), tape), -1.0 / static_cast<double>(batch), tape);
}

double weighted_ce_loss_value(const std::vector<double>& logits, int target,
                              double immediate_reward, double cumulative_reward,
                              LossWeightMode mode) {
    Tensor l = Tensor::from({1, logits.size()},
                            std::vector<double>(logits.begin(), logits.end()));
    const double w = ce_weight(mode, immediate_reward, cumulative_reward);
    return weighted_ce_loss(l, {target}, {w}).item();
}

Model::Model(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t d = cfg_.dim;
    const std::size_t n = cfg_.vocab;
    encoder_ = make_encoder(cfg_.encoder, n, d, rng);
    reward_emb_ = glorot_uniform({1, d}, 1, d, rng);
    step_table_ = glorot_uniform({kMaxSessionLen, d}, kMaxSessionLen, d, rng);
    block_q_ = glorot_uniform({d, d}, d, d, rng);
    block_k_ = glorot_uniform({d, d}, d, d, rng);
    block_v_ = glorot_uniform({d, d}, d, d, rng);
    ln_gain_ = Tensor::full({d}, 1.0, /*requires_grad=*/true);
    ln_bias_ = Tensor::zeros({d}, /*requires_grad=*/true);
    mlp_w1_ = glorot_uniform({d, 3 * d}, 3 * d, d, rng);
    mlp_w2_ = glorot_uniform({d, d}, d, d, rng);
    head_w_ = glorot_uniform({n, d}, d, n, rng);
    head_b_ = Tensor::zeros({n}, /*requires_grad=*/true);

    encoder_->collect_params(params_);
    params_.emplace_back("prompt.reward_emb", reward_emb_);
    params_.emplace_back("prompt.step_table", step_table_);
    params_.emplace_back("block.query_w", block_q_);
    params_.emplace_back("block.key_w", block_k_);
    params_.emplace_back("block.value_w", block_v_);
    params_.emplace_back("block.ln_gain", ln_gain_);
    params_.emplace_back("block.ln_bias", ln_bias_);
    params_.emplace_back("block.mlp_w1", mlp_w1_);
    params_.emplace_back("block.mlp_w2", mlp_w2_);
    params_.emplace_back("head.weight", head_w_);
    params_.emplace_back("head.bias", head_b_);
}

Tensor& Model::find_param(const std::string& name) {
    for (auto& [n, t] : params_) {
        if (n == name) return t;
    }
    throw ValueError("model: no parameter named '" + name + "'");
}

void Model::zero_grads() {
    for (auto& [name, t] : params_) {
        if (t.has_grad()) t.zero_grad();
    }
}

Tensor Model::prompt_matrix(const std::vector<double>& rewards, Tensor state,
                            const std::vector<int>& steps, Graph* tape) {
    const std::size_t batch = rewards.size();
    if (state.rank() != 2 || state.shape()[0] != batch || steps.size() != batch) {
        throw ShapeError("prompt: state/reward/step sizes disagree");
    }
    Tensor reward_col = Tensor::zeros({batch, 1});
    for (std::size_t b = 0; b < batch; ++b) {
        reward_col.values()[b] = rewards[b];
    }
    // Reward embedding is the trainable direction scaled by the prompt reward.
    Tensor reward_rows = matmul(reward_col, reward_emb_, tape);

    std::vector<int> step_rows(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        if (steps[b] < 1) {
            throw ValueError("prompt: step must be >= 1, got " + std::to_string(steps[b]));
        }
        step_rows[b] = std::min(steps[b], kMaxSessionLen) - 1;
    }
    Tensor step_rows_t = embedding(step_table_, step_rows, tape);

    return stack({reward_rows, state, step_rows_t}, /*axis=*/1, tape);
}

Tensor Model::block_state(Tensor prompt, Graph* tape, bool training, Rng* dropout_rng,
                          Tensor* mixed_out) {
    if (prompt.rank() != 3 || prompt.shape()[1] != 3 || prompt.shape()[2] != cfg_.dim) {
        throw ShapeError("block: prompt must be (batch, 3, dim), got " +
                         shape_str(prompt.shape()));
    }
    switch (cfg_.block) {
        case BlockVariant::self_attention: {
            Tensor q = matmul(prompt, block_q_, tape, true);
            Tensor k = matmul(prompt, block_k_, tape, true);
            Tensor v = matmul(prompt, block_v_, tape, true);
            Tensor branch = attention(q, k, v, Tensor(), tape);
            if (training && cfg_.dropout > 0.0) {
                if (dropout_rng == nullptr) {
                    throw ValueError("block: dropout requires an rng in training mode");
                }
                branch = dropout(branch, cfg_.dropout, true, *dropout_rng, tape);
            }
            Tensor mixed = add(prompt, branch, tape);
            if (cfg_.layer_norm) mixed = layer_norm(mixed, ln_gain_, ln_bias_, tape);
            if (mixed_out) *mixed_out = mixed;
            return unstack(mixed, /*axis=*/1, tape)[1];
        }
        case BlockVariant::mean_pool: {
            auto rows = unstack(prompt, /*axis=*/1, tape);
            return scale(add(add(rows[0], rows[1], tape), rows[2], tape), 1.0 / 3.0, tape);
        }
        case BlockVariant::mlp: {
            Tensor flat = reshape(prompt, {prompt.shape()[0], 3 * cfg_.dim}, tape);
            Tensor hidden = tanh(matmul(flat, mlp_w1_, tape, true), tape);
            return tanh(matmul(hidden, mlp_w2_, tape, true), tape);
        }
        case BlockVariant::plain:
            throw ValueError("block: plain variant bypasses the prompt block");
    }
    throw ValueError("block: unknown variant");
}

Tensor Model::logits(Tensor state, Graph* tape) {
    // Head activation is the identity: softmax follows immediately and a
    // monotone activation would not change the ranking.
    return add(matmul(state, head_w_, tape, true), head_b_, tape);
}

Tensor Model::forward_logits(const Batch& batch, Graph* tape, bool training, Rng* dropout_rng) {
    if (batch.size == 0) throw ValueError("forward: empty batch");
    Tensor state = encoder_->encode(batch.contexts, batch.size, tape);
    if (cfg_.block == BlockVariant::plain) {
        return logits(state, tape);
    }
    Tensor prompt = prompt_matrix(batch.rewards, state, batch.steps, tape);
    Tensor attentive = block_state(prompt, tape, training, dropout_rng);
    return logits(attentive, tape);
}

}  // namespace promptrec
