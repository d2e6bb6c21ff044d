#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "promptrec/tensor.hpp"

namespace promptrec {

using NamedTensor = std::pair<std::string, Tensor>;

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias-corrected moments. Parameters are registered once at
// construction; moment buffers stay aligned with that list.
class AdamOptimizer {
public:
    AdamOptimizer(const AdamConfig& config, const std::vector<NamedTensor>& params);

    // Applies one update from the gradients currently held by the parameters.
    // A parameter without a gradient buffer is skipped (variant-inactive
    // weights); a non-finite gradient rejects the update with a diagnostic.
    void step();

    std::int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<NamedTensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t step_count_ = 0;
};

}  // namespace promptrec
