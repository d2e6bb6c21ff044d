#pragma once

#include <vector>

#include "promptrec/rng.hpp"
#include "promptrec/tensor.hpp"

namespace promptrec {

// Forward operations. Every op validates operand shapes (rejecting with a
// message naming the op and both shapes) and rejects non-finite inputs.
// When `tape` is non-null the op records a backward closure on it; passing
// nullptr runs the op in inference mode with no gradient bookkeeping.

// a: (..., m, k), b: (k, n) or (..., k, n); with transpose_b the last two
// dims of b are swapped. Leading dims of a act as batch dims; a rank-2 b is
// shared across the batch.
Tensor matmul(Tensor a, Tensor b, Graph* tape = nullptr, bool transpose_b = false);

// Elementwise; b may also have a shape equal to a trailing suffix of a's
// shape, in which case it is broadcast across the leading dims.
Tensor add(Tensor a, Tensor b, Graph* tape = nullptr);
Tensor mul(Tensor a, Tensor b, Graph* tape = nullptr);

Tensor sigmoid(Tensor x, Graph* tape = nullptr);
Tensor tanh(Tensor x, Graph* tape = nullptr);

// Softmax over the last axis; computed with max-subtraction.
Tensor softmax(Tensor x, Graph* tape = nullptr);

// Row lookup: table (rows, d), ids indexing rows. Output shape is
// id_shape + {d}; id_shape must multiply out to ids.size().
Tensor embedding(Tensor table, const std::vector<int>& ids, Shape id_shape,
                 Graph* tape = nullptr);
Tensor embedding(Tensor table, const std::vector<int>& ids, Graph* tape = nullptr);

// Stack N same-shape tensors along a new axis at position `axis`;
// unstack is the inverse along an existing axis.
Tensor stack(const std::vector<Tensor>& parts, std::size_t axis = 0, Graph* tape = nullptr);
std::vector<Tensor> unstack(Tensor x, std::size_t axis = 0, Graph* tape = nullptr);

// Inverted dropout: in training mode zeroes each element with probability
// `ratio` and rescales survivors by 1/(1-ratio); eval mode is the identity.
Tensor dropout(Tensor x, double ratio, bool training, Rng& rng, Graph* tape = nullptr);

// Normalizes the last axis to zero mean / unit variance (1e-8 added to the
// variance), then applies elementwise gain and bias (both last-axis sized).
Tensor layer_norm(Tensor x, Tensor gain, Tensor bias, Graph* tape = nullptr);

// Elementwise natural log; rejects non-positive inputs.
Tensor log(Tensor x, Graph* tape = nullptr);

Tensor scale(Tensor x, double factor, Graph* tape = nullptr);

// Full reductions to a single-element tensor.
Tensor sum(Tensor x, Graph* tape = nullptr);
Tensor mean(Tensor x, Graph* tape = nullptr);

// Row-major reshape (element count preserved).
Tensor reshape(Tensor x, Shape new_shape, Graph* tape = nullptr);

// x: (B, L, d), positions: one index in [0, L) per batch row -> (B, d).
Tensor select_positions(Tensor x, const std::vector<int>& positions, Graph* tape = nullptr);

// Scaled dot-product attention softmax(Q K^T / sqrt(d)) V. An optional
// additive mask (same shape as the score matrix) is applied before the
// softmax; pass a default-constructed Tensor for no mask.
Tensor attention(Tensor q, Tensor k, Tensor v, Tensor mask = Tensor(), Graph* tape = nullptr);

// Glorot-uniform initialized parameter tensor (requires_grad = true).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace promptrec
