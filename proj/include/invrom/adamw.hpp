#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "invrom/tensor.hpp"

namespace invrom {

/// Decoupled-weight-decay Adam. Decay is applied to the raw parameter before
/// the adaptive update; moments use the standard bias correction.
struct AdamWState {
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

class AdamW {
public:
    AdamW(std::vector<Tensor*> params, double lr = 1e-4, double weight_decay = 1e-4,
          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    /// One optimizer step. Throws NumericalError naming the parameter block
    /// if any gradient entry is NaN/Inf; parameters are left untouched then.
    void step(const std::unordered_map<Tensor*, Tensor>& grads);

    const AdamWState& state() const { return state_; }
    std::int64_t step_count() const { return state_.step_count; }

private:
    std::vector<Tensor*> params_;
    AdamWState state_;
};

}  // namespace invrom
