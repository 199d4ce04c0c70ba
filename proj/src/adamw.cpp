#include "invrom/adamw.hpp"

#include <cmath>

namespace invrom {

AdamW::AdamW(std::vector<Tensor*> params, double lr, double weight_decay, double beta1,
             double beta2, double epsilon)
    : params_(std::move(params)) {
    state_.learning_rate = lr;
    state_.weight_decay = weight_decay;
    state_.beta1 = beta1;
    state_.beta2 = beta2;
    state_.epsilon = epsilon;
    state_.first_moment.reserve(params_.size());
    state_.second_moment.reserve(params_.size());
    for (const Tensor* p : params_) {
        state_.first_moment.emplace_back(p->numel(), 0.0);
        state_.second_moment.emplace_back(p->numel(), 0.0);
    }
}

void AdamW::step(const std::unordered_map<Tensor*, Tensor>& grads) {
    // Validate all gradients before mutating anything, so a failed step
    // leaves parameters and moments untouched.
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto it = grads.find(params_[i]);
        if (it == grads.end()) continue;
        if (!it->second.all_finite())
            throw NumericalError("adamw: non-finite gradient in parameter block " +
                                 std::to_string(i));
    }

    state_.step_count += 1;
    const double lr = state_.learning_rate;
    const double wd = state_.weight_decay;
    const double b1 = state_.beta1, b2 = state_.beta2, eps = state_.epsilon;
    const double bc1 = 1.0 - std::pow(b1, (double)state_.step_count);
    const double bc2 = 1.0 - std::pow(b2, (double)state_.step_count);

    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor* p = params_[i];
        auto it = grads.find(p);
        if (it == grads.end()) continue;
        const double* g = it->second.data.data();
        double* th = p->data.data();
        double* m = state_.first_moment[i].data();
        double* v = state_.second_moment[i].data();
        const std::ptrdiff_t n = (std::ptrdiff_t)p->numel();
#pragma omp parallel for if (n >= (1 << 14))
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            th[j] -= lr * wd * th[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            th[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
        }
    }
}

}  // namespace invrom
