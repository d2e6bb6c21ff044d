#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promptrec/adam.hpp"
#include "promptrec/data.hpp"
#include "promptrec/ops.hpp"
#include "promptrec/tensor.hpp"

namespace promptrec {

// Maps a batch of padded interaction contexts to state vectors. Contexts are
// flat batch * kContextLen item indices, left-padded with 0; padding must
// never influence the returned state.
class Encoder {
public:
    virtual ~Encoder() = default;

    // contexts.size() must equal batch * kContextLen; returns (batch, dim).
    virtual Tensor encode(const std::vector<int>& contexts, std::size_t batch,
                          Graph* tape = nullptr) = 0;

    virtual void collect_params(std::vector<NamedTensor>& out) const = 0;
    virtual const char* kind() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t vocab() const = 0;
};

// Gated recurrent unit over the non-padding suffix of the context, zero
// initial state. Gate weights follow the usual update/reset/candidate form
// without biases.
class GruEncoder final : public Encoder {
public:
    GruEncoder(std::size_t vocab, std::size_t dim, Rng& rng);

    Tensor encode(const std::vector<int>& contexts, std::size_t batch,
                  Graph* tape = nullptr) override;
    void collect_params(std::vector<NamedTensor>& out) const override;
    const char* kind() const override { return "gru"; }
    std::size_t dim() const override { return dim_; }
    std::size_t vocab() const override { return vocab_; }

    Tensor& item_table() { return items_; }
    std::vector<Tensor*> gate_weights() {
        return {&update_w_, &update_u_, &reset_w_, &reset_u_, &cand_w_, &cand_u_};
    }

private:
    std::size_t vocab_;
    std::size_t dim_;
    Tensor items_;  // (vocab + 1, dim); row 0 is padding
    Tensor update_w_, update_u_;
    Tensor reset_w_, reset_u_;
    Tensor cand_w_, cand_u_;
};

// Single-head, single-block causal self-attention encoder: item plus
// positional embeddings, masked scaled dot-product attention, then a
// position-wise two-layer feed-forward. The state is the output at the last
// non-padding position.
class AttnEncoder final : public Encoder {
public:
    AttnEncoder(std::size_t vocab, std::size_t dim, Rng& rng);

    Tensor encode(const std::vector<int>& contexts, std::size_t batch,
                  Graph* tape = nullptr) override;
    // Per-position outputs (batch, kContextLen, dim); encode() selects the
    // last non-padding position from this.
    Tensor encode_sequence(const std::vector<int>& contexts, std::size_t batch,
                           Graph* tape = nullptr);

    void collect_params(std::vector<NamedTensor>& out) const override;
    const char* kind() const override { return "attn"; }
    std::size_t dim() const override { return dim_; }
    std::size_t vocab() const override { return vocab_; }

    Tensor& item_table() { return items_; }

private:
    std::size_t vocab_;
    std::size_t dim_;
    Tensor items_;      // (vocab + 1, dim)
    Tensor positions_;  // (kContextLen, dim)
    Tensor query_w_, key_w_, value_w_;
    Tensor ff1_w_, ff1_b_, ff2_w_, ff2_b_;
};

std::unique_ptr<Encoder> make_encoder(const std::string& kind, std::size_t vocab,
                                      std::size_t dim, Rng& rng);

}  // namespace promptrec
