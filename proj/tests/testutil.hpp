#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "promptrec/rng.hpp"
#include "promptrec/tensor.hpp"

namespace testutil {

// Central finite-difference gradient oracle, independent of the backward
// pass it checks. `forward` must rebuild the computation from scratch on
// every call: with a tape when one is given, value-only otherwise.
struct GradCheck {
    std::vector<promptrec::Tensor> params;
    std::function<promptrec::Tensor(promptrec::Graph*)> forward;
    double h = 1e-5;

    double max_rel_error() {
        using promptrec::Graph;
        for (auto& p : params) {
            p.ensure_grad();
            p.zero_grad();
        }
        Graph graph;
        promptrec::Tensor loss = forward(&graph);
        graph.backward(loss);

        std::vector<std::vector<double>> analytic;
        analytic.reserve(params.size());
        for (auto& p : params) {
            analytic.emplace_back(p.grad().begin(), p.grad().end());
        }

        double worst = 0.0;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto vals = params[pi].values();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double saved = vals[i];
                vals[i] = saved + h;
                const double fp = forward(nullptr).item();
                vals[i] = saved - h;
                const double fm = forward(nullptr).item();
                vals[i] = saved;
                const double fd = (fp - fm) / (2.0 * h);
                const double a = analytic[pi][i];
                const double denom = std::max({1.0, std::fabs(a), std::fabs(fd)});
                worst = std::max(worst, std::fabs(a - fd) / denom);
            }
        }
        return worst;
    }
};

inline promptrec::Tensor random_tensor(promptrec::Shape shape, promptrec::Rng& rng,
                                       double lo = -2.0, double hi = 2.0,
                                       bool requires_grad = true) {
    promptrec::Tensor t = promptrec::Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace testutil
