#include "promptrec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "promptrec/error.hpp"

namespace promptrec {

namespace {

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": shape mismatch between " + shape_str(a) +
                     " and " + shape_str(b));
}

void prepare_output(Tensor& out, Graph* tape) {
    if (tape) out.ensure_grad();
}

void prepare_input(Tensor& in, Graph* tape) {
    if (tape && in.requires_grad()) in.ensure_grad();
}

// Broadcast validation for add/mul: returns true when b's shape is a strict
// trailing suffix of a's shape (b tiles contiguously in row-major order).
bool suffix_broadcast(const Shape& a, const Shape& b) {
    if (b.size() >= a.size()) return false;
    const std::size_t off = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (a[off + i] != b[i]) return false;
    }
    return true;
}

}  // namespace

Tensor matmul(Tensor a, Tensor b, Graph* tape, bool transpose_b) {
    a.check_finite("matmul");
    b.check_finite("matmul");
    if (a.rank() < 2 || b.rank() < 2) shape_fail("matmul", a.shape(), b.shape());
    if (b.rank() != 2 && b.rank() != a.rank()) shape_fail("matmul", a.shape(), b.shape());

    const std::size_t ra = a.rank(), rb = b.rank();
    const std::size_t m = a.shape()[ra - 2];
    const std::size_t k = a.shape()[ra - 1];
    const std::size_t n = transpose_b ? b.shape()[rb - 2] : b.shape()[rb - 1];
    const std::size_t kb = transpose_b ? b.shape()[rb - 1] : b.shape()[rb - 2];
    if (k != kb) shape_fail("matmul", a.shape(), b.shape());
    if (rb == ra) {
        for (std::size_t i = 0; i + 2 < ra; ++i) {
            if (a.shape()[i] != b.shape()[i]) shape_fail("matmul", a.shape(), b.shape());
        }
    }

    Shape out_shape(a.shape().begin(), a.shape().end() - 2);
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor out = Tensor::zeros(out_shape);

    const std::size_t batches = a.size() / (m * k);
    const bool batched_b = rb > 2;
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = out.values().data();

    for (std::size_t bi = 0; bi < batches; ++bi) {
        const double* ab = av + bi * m * k;
        const double* bb = bv + (batched_b ? bi * n * k : 0);
        double* ob = ov + bi * m * n;
        if (!transpose_b) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double aik = ab[i * k + p];
                    if (aik == 0.0) continue;
                    const double* brow = bb + p * n;
                    double* orow = ob + i * n;
                    for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
                }
            }
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = ab + i * k;
                for (std::size_t j = 0; j < n; ++j) {
                    const double* brow = bb + j * k;
                    double acc = 0.0;
                    for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
                    ob[i * n + j] = acc;
                }
            }
        }
    }

    if (tape) {
        prepare_input(a, tape);
        prepare_input(b, tape);
        prepare_output(out, tape);
        tape->record("matmul", [a, b, out, m, n, k, batches, batched_b, transpose_b]() mutable {
            const double* og = out.grad().data();
            const double* av2 = a.values().data();
            const double* bv2 = b.values().data();
            for (std::size_t bi = 0; bi < batches; ++bi) {
                const double* gb = og + bi * m * n;
                const double* ab = av2 + bi * m * k;
                const double* bb = bv2 + (batched_b ? bi * n * k : 0);
                if (a.has_grad()) {
                    double* ga = a.grad().data() + bi * m * k;
                    if (!transpose_b) {
                        // dA = dC * B^T
                        for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t p = 0; p < k; ++p) {
                                const double* brow = bb + p * n;
                                const double* grow = gb + i * n;
                                double acc = 0.0;
                                for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                                ga[i * k + p] += acc;
                            }
                        }
                    } else {
                        // dA = dC * B (B stored as (n, k))
                        for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t j = 0; j < n; ++j) {
                                const double g = gb[i * n + j];
                                if (g == 0.0) continue;
                                const double* brow = bb + j * k;
                                double* garow = ga + i * k;
                                for (std::size_t p = 0; p < k; ++p) garow[p] += g * brow[p];
                            }
                        }
                    }
                }
                if (b.has_grad()) {
                    double* gbv = b.grad().data() + (batched_b ? bi * n * k : 0);
                    if (!transpose_b) {
                        // dB = A^T * dC
                        for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t p = 0; p < k; ++p) {
                                const double aip = ab[i * k + p];
                                if (aip == 0.0) continue;
                                const double* grow = gb + i * n;
                                double* gbrow = gbv + p * n;
                                for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                            }
                        }
                    } else {
                        // dB[j, p] = sum_i dC[i, j] * A[i, p]
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* arow = ab + i * k;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double g = gb[i * n + j];
                                if (g == 0.0) continue;
                                double* gbrow = gbv + j * k;
                                for (std::size_t p = 0; p < k; ++p) gbrow[p] += g * arow[p];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

namespace {

enum class EwKind { add, mul };

Tensor elementwise(const char* name, EwKind kind, Tensor a, Tensor b, Graph* tape) {
    a.check_finite(name);
    b.check_finite(name);
    const bool same = a.shape() == b.shape();
    if (!same && !suffix_broadcast(a.shape(), b.shape())) {
        shape_fail(name, a.shape(), b.shape());
    }
    const std::size_t na = a.size(), nb = b.size();
    Tensor out = Tensor::zeros(a.shape());
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* ov = out.values().data();
        if (kind == EwKind::add) {
            for (std::size_t i = 0; i < na; ++i) ov[i] = av[i] + bv[i % nb];
        } else {
            for (std::size_t i = 0; i < na; ++i) ov[i] = av[i] * bv[i % nb];
        }
    }
    if (tape) {
        prepare_input(a, tape);
        prepare_input(b, tape);
        prepare_output(out, tape);
        tape->record(name, [a, b, out, kind, na, nb]() mutable {
            const double* og = out.grad().data();
            if (a.has_grad()) {
                double* ga = a.grad().data();
                if (kind == EwKind::add) {
                    for (std::size_t i = 0; i < na; ++i) ga[i] += og[i];
                } else {
                    const double* bv = b.values().data();
                    for (std::size_t i = 0; i < na; ++i) ga[i] += og[i] * bv[i % nb];
                }
            }
            if (b.has_grad()) {
                double* gb = b.grad().data();
                if (kind == EwKind::add) {
                    for (std::size_t i = 0; i < na; ++i) gb[i % nb] += og[i];
                } else {
                    const double* av = a.values().data();
                    for (std::size_t i = 0; i < na; ++i) gb[i % nb] += og[i] * av[i];
                }
            }
        });
    }
    return out;
}

}  // namespace

Tensor add(Tensor a, Tensor b, Graph* tape) { return elementwise("add", EwKind::add, a, b, tape); }
Tensor mul(Tensor a, Tensor b, Graph* tape) { return elementwise("mul", EwKind::mul, a, b, tape); }

Tensor sigmoid(Tensor x, Graph* tape) {
    x.check_finite("sigmoid");
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x.values()[i];
        // Evaluate on the stable side of the exponential.
        out.values()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                   : std::exp(v) / (1.0 + std::exp(v));
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("sigmoid", [x, out, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            const double* y = out.values().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i] * y[i] * (1.0 - y[i]);
        });
    }
    return out;
}

Tensor tanh(Tensor x, Graph* tape) {
    x.check_finite("tanh");
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = std::tanh(x.values()[i]);
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("tanh", [x, out, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            const double* y = out.values().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i] * (1.0 - y[i] * y[i]);
        });
    }
    return out;
}

Tensor softmax(Tensor x, Graph* tape) {
    x.check_finite("softmax");
    const std::size_t width = x.shape().back();
    const std::size_t rows = x.size() / width;
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.values().data();
    double* ov = out.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv + r * width;
        double* orow = ov + r * width;
        double mx = row[0];
        for (std::size_t i = 1; i < width; ++i) mx = std::max(mx, row[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            orow[i] = std::exp(row[i] - mx);
            z += orow[i];
        }
        for (std::size_t i = 0; i < width; ++i) orow[i] /= z;
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("softmax", [x, out, rows, width]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            const double* y = out.values().data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* yrow = y + r * width;
                const double* grow = og + r * width;
                double dot = 0.0;
                for (std::size_t i = 0; i < width; ++i) dot += grow[i] * yrow[i];
                double* gxrow = gx + r * width;
                for (std::size_t i = 0; i < width; ++i) {
                    gxrow[i] += yrow[i] * (grow[i] - dot);
                }
            }
        });
    }
    return out;
}

Tensor embedding(Tensor table, const std::vector<int>& ids, Shape id_shape, Graph* tape) {
    table.check_finite("embedding");
    if (table.rank() != 2) {
        throw ShapeError("embedding: table must be rank 2, got " + shape_str(table.shape()));
    }
    if (shape_size(id_shape) != ids.size()) {
        throw ShapeError("embedding: id shape " + shape_str(id_shape) + " does not match " +
                         std::to_string(ids.size()) + " ids");
    }
    const std::size_t rows = table.shape()[0];
    const std::size_t d = table.shape()[1];
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= rows) {
            throw ValueError("embedding: index " + std::to_string(id) + " out of range [0, " +
                             std::to_string(rows) + ")");
        }
    }
    Shape out_shape = id_shape;
    out_shape.push_back(d);
    Tensor out = Tensor::zeros(out_shape);
    const double* tv = table.values().data();
    double* ov = out.values().data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::memcpy(ov + i * d, tv + static_cast<std::size_t>(ids[i]) * d, d * sizeof(double));
    }
    if (tape) {
        prepare_input(table, tape);
        prepare_output(out, tape);
        tape->record("embedding", [table, out, ids, d]() mutable {
            if (!table.has_grad()) return;
            double* gt = table.grad().data();
            const double* og = out.grad().data();
            for (std::size_t i = 0; i < ids.size(); ++i) {
                double* trow = gt + static_cast<std::size_t>(ids[i]) * d;
                const double* grow = og + i * d;
                for (std::size_t j = 0; j < d; ++j) trow[j] += grow[j];
            }
        });
    }
    return out;
}

Tensor embedding(Tensor table, const std::vector<int>& ids, Graph* tape) {
    return embedding(std::move(table), ids, Shape{ids.size()}, tape);
}

Tensor stack(const std::vector<Tensor>& parts, std::size_t axis, Graph* tape) {
    if (parts.empty()) throw ValueError("stack: no tensors given");
    const Shape& base = parts[0].shape();
    for (const Tensor& p : parts) {
        p.check_finite("stack");
        if (p.shape() != base) shape_fail("stack", base, p.shape());
    }
    if (axis > base.size()) {
        throw ShapeError("stack: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(base));
    }
    const std::size_t count = parts.size();
    Shape out_shape = base;
    out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= base[i];
    for (std::size_t i = axis; i < base.size(); ++i) inner *= base[i];

    Tensor out = Tensor::zeros(out_shape);
    double* ov = out.values().data();
    for (std::size_t p = 0; p < count; ++p) {
        const double* pv = parts[p].values().data();
        for (std::size_t o = 0; o < outer; ++o) {
            std::memcpy(ov + (o * count + p) * inner, pv + o * inner, inner * sizeof(double));
        }
    }
    if (tape) {
        std::vector<Tensor> held = parts;
        for (Tensor& p : held) prepare_input(p, tape);
        prepare_output(out, tape);
        tape->record("stack", [held, out, count, outer, inner]() mutable {
            const double* og = out.grad().data();
            for (std::size_t p = 0; p < count; ++p) {
                if (!held[p].has_grad()) continue;
                double* gp = held[p].grad().data();
                for (std::size_t o = 0; o < outer; ++o) {
                    const double* src = og + (o * count + p) * inner;
                    double* dst = gp + o * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                }
            }
        });
    }
    return out;
}

std::vector<Tensor> unstack(Tensor x, std::size_t axis, Graph* tape) {
    x.check_finite("unstack");
    if (axis >= x.rank()) {
        throw ShapeError("unstack: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(x.shape()));
    }
    const std::size_t count = x.shape()[axis];
    Shape part_shape;
    for (std::size_t i = 0; i < x.rank(); ++i) {
        if (i != axis) part_shape.push_back(x.shape()[i]);
    }
    if (part_shape.empty()) part_shape = {1};
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.shape()[i];

    std::vector<Tensor> parts;
    parts.reserve(count);
    const double* xv = x.values().data();
    for (std::size_t p = 0; p < count; ++p) {
        Tensor part = Tensor::zeros(part_shape);
        double* pv = part.values().data();
        for (std::size_t o = 0; o < outer; ++o) {
            std::memcpy(pv + o * inner, xv + (o * count + p) * inner, inner * sizeof(double));
        }
        parts.push_back(part);
    }
    if (tape) {
        prepare_input(x, tape);
        for (Tensor& p : parts) prepare_output(p, tape);
        std::vector<Tensor> held = parts;
        tape->record("unstack", [x, held, count, outer, inner]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            for (std::size_t p = 0; p < count; ++p) {
                const double* gp = held[p].grad().data();
                for (std::size_t o = 0; o < outer; ++o) {
                    double* dst = gx + (o * count + p) * inner;
                    const double* src = gp + o * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                }
            }
        });
    }
    return parts;
}

Tensor dropout(Tensor x, double ratio, bool training, Rng& rng, Graph* tape) {
    if (ratio < 0.0 || ratio >= 1.0) {
        throw ValueError("dropout: ratio must be in [0, 1), got " + std::to_string(ratio));
    }
    x.check_finite("dropout");
    if (!training || ratio == 0.0) return x;

    const std::size_t n = x.size();
    const double keep_scale = 1.0 / (1.0 - ratio);
    auto mask = std::make_shared<std::vector<double>>(n);
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
        const double m = rng.uniform() >= ratio ? keep_scale : 0.0;
        (*mask)[i] = m;
        out.values()[i] = x.values()[i] * m;
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("dropout", [x, out, mask, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor layer_norm(Tensor x, Tensor gain, Tensor bias, Graph* tape) {
    x.check_finite("layer_norm");
    gain.check_finite("layer_norm");
    bias.check_finite("layer_norm");
    const std::size_t width = x.shape().back();
    if (gain.shape() != Shape{width}) shape_fail("layer_norm", x.shape(), gain.shape());
    if (bias.shape() != Shape{width}) shape_fail("layer_norm", x.shape(), bias.shape());
    constexpr double kEps = 1e-8;

    const std::size_t rows = x.size() / width;
    Tensor out = Tensor::zeros(x.shape());
    auto normed = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    const double* xv = x.values().data();
    const double* gv = gain.values().data();
    const double* bv = bias.values().data();
    double* ov = out.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv + r * width;
        double mu = 0.0;
        for (std::size_t i = 0; i < width; ++i) mu += row[i];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) var += (row[i] - mu) * (row[i] - mu);
        var /= static_cast<double>(width);
        const double is = 1.0 / std::sqrt(var + kEps);
        (*inv_std)[r] = is;
        for (std::size_t i = 0; i < width; ++i) {
            const double nv = (row[i] - mu) * is;
            (*normed)[r * width + i] = nv;
            ov[r * width + i] = nv * gv[i] + bv[i];
        }
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_input(gain, tape);
        prepare_input(bias, tape);
        prepare_output(out, tape);
        tape->record("layer_norm", [x, gain, bias, out, normed, inv_std, rows, width]() mutable {
            const double* og = out.grad().data();
            const double* gv = gain.values().data();
            if (gain.has_grad()) {
                double* gg = gain.grad().data();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t i = 0; i < width; ++i) {
                        gg[i] += og[r * width + i] * (*normed)[r * width + i];
                    }
                }
            }
            if (bias.has_grad()) {
                double* gb = bias.grad().data();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t i = 0; i < width; ++i) gb[i] += og[r * width + i];
                }
            }
            if (x.has_grad()) {
                double* gx = x.grad().data();
                const double w = static_cast<double>(width);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* grow = og + r * width;
                    const double* nrow = normed->data() + r * width;
                    double sum_dn = 0.0, sum_dn_n = 0.0;
                    for (std::size_t i = 0; i < width; ++i) {
                        const double dn = grow[i] * gv[i];
                        sum_dn += dn;
                        sum_dn_n += dn * nrow[i];
                    }
                    const double is = (*inv_std)[r];
                    for (std::size_t i = 0; i < width; ++i) {
                        const double dn = grow[i] * gv[i];
                        gx[r * width + i] += is * (dn - sum_dn / w - nrow[i] * sum_dn_n / w);
                    }
                }
            }
        });
    }
    return out;
}

Tensor log(Tensor x, Graph* tape) {
    x.check_finite("log");
    const std::size_t n = x.size();
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x.values()[i];
        // A probability underflowing to zero is a numerical failure, not a
        // usage error; it maps to the halt-with-diagnostic path.
        if (v <= 0.0) throw NumericalError("log: input must be positive");
        out.values()[i] = std::log(v);
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("log", [x, out, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            const double* xv = x.values().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i] / xv[i];
        });
    }
    return out;
}

Tensor scale(Tensor x, double factor, Graph* tape) {
    x.check_finite("scale");
    if (!std::isfinite(factor)) throw NumericalError("scale: non-finite factor");
    const std::size_t n = x.size();
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = x.values()[i] * factor;
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("scale", [x, out, factor, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i] * factor;
        });
    }
    return out;
}

namespace {

Tensor reduce(const char* name, Tensor x, Graph* tape, bool take_mean) {
    x.check_finite(name);
    const std::size_t n = x.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x.values()[i];
    if (take_mean) acc /= static_cast<double>(n);
    Tensor out = Tensor::scalar(acc);
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record(name, [x, out, n, take_mean]() mutable {
            if (!x.has_grad()) return;
            const double g = take_mean ? out.grad()[0] / static_cast<double>(n) : out.grad()[0];
            double* gx = x.grad().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return out;
}

}  // namespace

Tensor sum(Tensor x, Graph* tape) { return reduce("sum", x, tape, false); }
Tensor mean(Tensor x, Graph* tape) { return reduce("mean", x, tape, true); }

Tensor reshape(Tensor x, Shape new_shape, Graph* tape) {
    x.check_finite("reshape");
    if (shape_size(new_shape) != x.size()) shape_fail("reshape", x.shape(), new_shape);
    Tensor out = Tensor::from(new_shape,
                              std::vector<double>(x.values().begin(), x.values().end()));
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        const std::size_t n = x.size();
        tape->record("reshape", [x, out, n]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            for (std::size_t i = 0; i < n; ++i) gx[i] += og[i];
        });
    }
    return out;
}

Tensor select_positions(Tensor x, const std::vector<int>& positions, Graph* tape) {
    x.check_finite("select_positions");
    if (x.rank() != 3) {
        throw ShapeError("select_positions: expected rank-3 input, got " + shape_str(x.shape()));
    }
    const std::size_t batch = x.shape()[0];
    const std::size_t length = x.shape()[1];
    const std::size_t d = x.shape()[2];
    if (positions.size() != batch) {
        throw ShapeError("select_positions: expected " + std::to_string(batch) +
                         " positions, got " + std::to_string(positions.size()));
    }
    for (int p : positions) {
        if (p < 0 || static_cast<std::size_t>(p) >= length) {
            throw ValueError("select_positions: position " + std::to_string(p) +
                             " out of range [0, " + std::to_string(length) + ")");
        }
    }
    Tensor out = Tensor::zeros({batch, d});
    const double* xv = x.values().data();
    double* ov = out.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
        std::memcpy(ov + b * d,
                    xv + (b * length + static_cast<std::size_t>(positions[b])) * d,
                    d * sizeof(double));
    }
    if (tape) {
        prepare_input(x, tape);
        prepare_output(out, tape);
        tape->record("select_positions", [x, out, positions, length, d, batch]() mutable {
            if (!x.has_grad()) return;
            double* gx = x.grad().data();
            const double* og = out.grad().data();
            for (std::size_t b = 0; b < batch; ++b) {
                double* dst = gx + (b * length + static_cast<std::size_t>(positions[b])) * d;
                const double* src = og + b * d;
                for (std::size_t i = 0; i < d; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

Tensor attention(Tensor q, Tensor k, Tensor v, Tensor mask, Graph* tape) {
    if (q.rank() < 2 || k.rank() != q.rank() || v.rank() != q.rank()) {
        shape_fail("attention", q.shape(), k.shape());
    }
    const std::size_t d = q.shape().back();
    if (k.shape().back() != d) shape_fail("attention", q.shape(), k.shape());
    if (v.shape()[v.rank() - 2] != k.shape()[k.rank() - 2]) {
        shape_fail("attention", k.shape(), v.shape());
    }
    Tensor scores = matmul(q, k, tape, /*transpose_b=*/true);
    Tensor scaled = scale(scores, 1.0 / std::sqrt(static_cast<double>(d)), tape);
    if (mask.defined()) scaled = add(scaled, mask, tape);
    Tensor weights = softmax(scaled, tape);
    return matmul(weights, v, tape);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    for (double& v : t.values()) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace promptrec
