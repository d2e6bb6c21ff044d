#include "promptrec/encoders.hpp"

#include <algorithm>

#include "promptrec/error.hpp"

namespace promptrec {

namespace {

void check_context_batch(const std::vector<int>& contexts, std::size_t batch) {
    if (contexts.size() != batch * kContextLen) {
        throw ShapeError("encoder: expected " + std::to_string(batch * kContextLen) +
                         " context entries, got " + std::to_string(contexts.size()));
    }
}

}  // namespace

GruEncoder::GruEncoder(std::size_t vocab, std::size_t dim, Rng& rng)
    : vocab_(vocab),
      dim_(dim),
      items_(glorot_uniform({vocab + 1, dim}, vocab + 1, dim, rng)),
      update_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      update_u_(glorot_uniform({dim, dim}, dim, dim, rng)),
      reset_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      reset_u_(glorot_uniform({dim, dim}, dim, dim, rng)),
      cand_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      cand_u_(glorot_uniform({dim, dim}, dim, dim, rng)) {}

Tensor GruEncoder::encode(const std::vector<int>& contexts, std::size_t batch, Graph* tape) {
    check_context_batch(contexts, batch);
    Tensor state = Tensor::zeros({batch, dim_});
    const Tensor ones = Tensor::full({batch, dim_}, 1.0);

    for (std::size_t step = 0; step < kContextLen; ++step) {
        std::vector<int> ids(batch);
        std::size_t real = 0;
        for (std::size_t b = 0; b < batch; ++b) {
            ids[b] = contexts[b * kContextLen + step];
            if (ids[b] != 0) ++real;
        }
        if (real == 0) continue;  // all padding: the recurrence has not started

        Tensor x = embedding(items_, ids, tape);
        Tensor z = sigmoid(add(matmul(x, update_w_, tape, true),
                               matmul(state, update_u_, tape, true), tape),
                           tape);
        Tensor r = sigmoid(add(matmul(x, reset_w_, tape, true),
                               matmul(state, reset_u_, tape, true), tape),
                           tape);
        Tensor cand = tanh(add(matmul(x, cand_w_, tape, true),
                               matmul(mul(r, state, tape), cand_u_, tape, true), tape),
                           tape);
        Tensor keep = add(scale(z, -1.0, tape), ones, tape);
        Tensor next = add(mul(keep, state, tape), mul(z, cand, tape), tape);

        if (real == batch) {
            state = next;
        } else {
            // Rows still in their padded prefix keep the previous state.
            Tensor mask = Tensor::zeros({batch, dim_});
            Tensor anti = Tensor::zeros({batch, dim_});
            for (std::size_t b = 0; b < batch; ++b) {
                const double on = ids[b] != 0 ? 1.0 : 0.0;
                for (std::size_t i = 0; i < dim_; ++i) {
                    mask.values()[b * dim_ + i] = on;
                    anti.values()[b * dim_ + i] = 1.0 - on;
                }
            }
            state = add(mul(mask, next, tape), mul(anti, state, tape), tape);
        }
    }
    return state;
}

void GruEncoder::collect_params(std::vector<NamedTensor>& out) const {
    out.emplace_back("gru.items", items_);
    out.emplace_back("gru.update_w", update_w_);
    out.emplace_back("gru.update_u", update_u_);
    out.emplace_back("gru.reset_w", reset_w_);
    out.emplace_back("gru.reset_u", reset_u_);
    out.emplace_back("gru.cand_w", cand_w_);
    out.emplace_back("gru.cand_u", cand_u_);
}

AttnEncoder::AttnEncoder(std::size_t vocab, std::size_t dim, Rng& rng)
    : vocab_(vocab),
      dim_(dim),
      items_(glorot_uniform({vocab + 1, dim}, vocab + 1, dim, rng)),
      positions_(glorot_uniform({kContextLen, dim}, kContextLen, dim, rng)),
      query_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      key_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      value_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      ff1_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      ff1_b_(Tensor::zeros({dim}, /*requires_grad=*/true)),
      ff2_w_(glorot_uniform({dim, dim}, dim, dim, rng)),
      ff2_b_(Tensor::zeros({dim}, /*requires_grad=*/true)) {}

Tensor AttnEncoder::encode_sequence(const std::vector<int>& contexts, std::size_t batch,
                                    Graph* tape) {
    check_context_batch(contexts, batch);

    Tensor x = embedding(items_, contexts, {batch, kContextLen}, tape);
    x = add(x, positions_, tape);

    Tensor q = matmul(x, query_w_, tape, true);
    Tensor k = matmul(x, key_w_, tape, true);
    Tensor v = matmul(x, value_w_, tape, true);

    // Additive mask: position i may attend to non-padding positions j <= i.
    constexpr double kMasked = -1e9;
    Tensor mask = Tensor::zeros({batch, kContextLen, kContextLen});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < kContextLen; ++i) {
            for (std::size_t j = 0; j < kContextLen; ++j) {
                const bool visible = j <= i && contexts[b * kContextLen + j] != 0;
                mask.values()[(b * kContextLen + i) * kContextLen + j] = visible ? 0.0 : kMasked;
            }
        }
    }

    Tensor att = attention(q, k, v, mask, tape);
    Tensor h = tanh(add(matmul(att, ff1_w_, tape, true), ff1_b_, tape), tape);
    return add(matmul(h, ff2_w_, tape, true), ff2_b_, tape);
}

Tensor AttnEncoder::encode(const std::vector<int>& contexts, std::size_t batch, Graph* tape) {
    Tensor seq = encode_sequence(contexts, batch, tape);
    std::vector<int> last(batch, -1);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < kContextLen; ++j) {
            if (contexts[b * kContextLen + j] != 0) last[b] = static_cast<int>(j);
        }
        if (last[b] < 0) {
            throw ValueError("encoder: context row " + std::to_string(b) + " is all padding");
        }
    }
    return select_positions(seq, last, tape);
}

void AttnEncoder::collect_params(std::vector<NamedTensor>& out) const {
    out.emplace_back("attn.items", items_);
    out.emplace_back("attn.positions", positions_);
    out.emplace_back("attn.query_w", query_w_);
    out.emplace_back("attn.key_w", key_w_);
    out.emplace_back("attn.value_w", value_w_);
    out.emplace_back("attn.ff1_w", ff1_w_);
    out.emplace_back("attn.ff1_b", ff1_b_);
    out.emplace_back("attn.ff2_w", ff2_w_);
    out.emplace_back("attn.ff2_b", ff2_b_);
}

std::unique_ptr<Encoder> make_encoder(const std::string& kind, std::size_t vocab,
                                      std::size_t dim, Rng& rng) {
    if (kind == "gru") return std::make_unique<GruEncoder>(vocab, dim, rng);
    if (kind == "attn") return std::make_unique<AttnEncoder>(vocab, dim, rng);
    throw ValueError("unknown encoder '" + kind + "' (expected gru or attn)");
}

}  // namespace promptrec
