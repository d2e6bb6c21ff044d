#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promptrec/adam.hpp"
#include "promptrec/data.hpp"
#include "promptrec/encoders.hpp"
#include "promptrec/ops.hpp"
#include "promptrec/rng.hpp"
#include "promptrec/tensor.hpp"

namespace promptrec {

// How the stacked prompt representation is reduced to the state used for
// classification. `plain` bypasses the prompt entirely (ordinary
// cross-entropy next-item training on the encoder state).
enum class BlockVariant { self_attention, mean_pool, mlp, plain };

const char* block_variant_name(BlockVariant v);
BlockVariant block_variant_from_name(const std::string& name);

enum class LossWeightMode { immediate, none, cumulative };

const char* loss_weight_mode_name(LossWeightMode m);
LossWeightMode loss_weight_mode_from_name(const std::string& name);

struct ModelConfig {
    std::size_t vocab = 0;  // candidate items 1..vocab
    std::size_t dim = 64;
    std::string encoder = "gru";  // gru | attn
    BlockVariant block = BlockVariant::self_attention;
    bool layer_norm = false;
    double dropout = 0.0;  // applied to the attention branch in training mode

    void validate() const;
};

// One forward batch. `targets` and `immediate_rewards` are only needed when
// a loss is computed.
struct Batch {
    std::size_t size = 0;
    std::vector<int> contexts;  // size * kContextLen, left-padded with 0
    std::vector<int> steps;     // 1-based untruncated positions
    std::vector<double> rewards;  // conditioning cumulative rewards
    std::vector<int> targets;
    std::vector<double> immediate_rewards;

    static Batch from_samples(const std::vector<PromptSample>& samples,
                              const std::vector<std::size_t>& indices);
};

double ce_weight(LossWeightMode mode, double immediate_reward, double cumulative_reward);

// Mean over the batch of -w_b * log softmax(logits_b)[target_b].
// Targets are 1-based item indices; 0 (padding) is rejected.
Tensor weighted_ce_loss(Tensor logits, const std::vector<int>& targets,
                        const std::vector<double>& weights, Graph* tape = nullptr);

// Single-sample form used by tests and spot checks.
double weighted_ce_loss_value(const std::vector<double>& logits, int target,
                              double immediate_reward, double cumulative_reward,
                              LossWeightMode mode);

// All trainable state: encoder, reward/step embeddings, block weights for
// every variant, and the classification head. The full tensor set is always
// constructed so checkpoints are uniform; variant-inactive weights simply
// never receive gradients.
class Model {
public:
    Model(ModelConfig cfg, Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    Encoder& encoder() { return *encoder_; }
    const std::vector<NamedTensor>& params() const { return params_; }
    Tensor& find_param(const std::string& name);
    void zero_grads();

    // Stacked prompt rows [reward embedding, state, step embedding]:
    // (batch, 3, dim). Steps clamp to the step-table size.
    Tensor prompt_matrix(const std::vector<double>& rewards, Tensor state,
                         const std::vector<int>& steps, Graph* tape = nullptr);

    // Applies the configured block variant to the prompt matrix and returns
    // the attentive state row: (batch, dim). For the self-attention variant,
    // `mixed_out` (when given) receives the full post-residual (batch, 3,
    // dim) representation the state row is unstacked from.
    Tensor block_state(Tensor prompt, Graph* tape = nullptr, bool training = false,
                       Rng* dropout_rng = nullptr, Tensor* mixed_out = nullptr);

    // Classification logits over the candidate items: (batch, vocab).
    Tensor logits(Tensor state, Graph* tape = nullptr);

    Tensor forward_logits(const Batch& batch, Graph* tape = nullptr, bool training = false,
                          Rng* dropout_rng = nullptr);

private:
    ModelConfig cfg_;
    std::unique_ptr<Encoder> encoder_;
    Tensor reward_emb_;  // (1, dim); reward embedding scaled by R_t
    Tensor step_table_;  // (kMaxSessionLen, dim)
    Tensor block_q_, block_k_, block_v_;
    Tensor ln_gain_, ln_bias_;
    Tensor mlp_w1_, mlp_w2_;  // (dim, 3*dim), (dim, dim)
    Tensor head_w_;           // (vocab, dim)
    Tensor head_b_;           // (vocab)
    std::vector<NamedTensor> params_;
};

}  // namespace promptrec
