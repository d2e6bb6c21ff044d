#include "promptrec/adam.hpp"

#include <cmath>
#include <set>

#include "promptrec/error.hpp"

namespace promptrec {

AdamOptimizer::AdamOptimizer(const AdamConfig& config, const std::vector<NamedTensor>& params)
    : config_(config), params_(params) {
    std::set<std::string> names;
    for (const auto& [name, tensor] : params_) {
        if (!names.insert(name).second) {
            throw ValueError("adam: parameter '" + name + "' registered twice");
        }
        if (!tensor.defined() || !tensor.requires_grad()) {
            throw ValueError("adam: parameter '" + name + "' is not trainable");
        }
        m_.emplace_back(tensor.size(), 0.0);
        v_.emplace_back(tensor.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    // Validate every gradient before mutating anything so a rejected update
    // leaves parameters and moments untouched.
    for (const auto& [name, tensor] : params_) {
        if (!tensor.has_grad()) continue;
        for (double g : tensor.grad()) {
            if (!std::isfinite(g)) {
                throw NumericalError("adam: non-finite gradient in parameter '" + name +
                                     "', update rejected");
            }
        }
    }

    ++step_count_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));

    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& t = params_[p].second;
        if (!t.has_grad()) continue;
        auto vals = t.values();
        auto grads = t.grad();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double g = grads[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            vals[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

}  // namespace promptrec
