#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "invrom/tape.hpp"
#include "invrom/tensor.hpp"

namespace invrom {

/// Persisted power-iteration state for one weight matrix.
struct SpectralNormState {
    Tensor u;             // unit vector, length = rows of W
    double sigma = 1.0;   // current largest-singular-value estimate
};

/// One power-iteration update of (u, sigma) for W, n_iters steps. A zero
/// matrix clamps sigma to 1e-12 (with a warning) instead of dividing by 0.
void spectral_power_iterate(const Tensor& w, SpectralNormState& state, int n_iters);

/// W / sigma_max(W) with sigma_max estimated by `n_iters` power iterations
/// starting from the persisted vector in `state`.
Tensor spectral_normalize(const Tensor& w, SpectralNormState& state, int n_iters);

struct LinearLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
    SpectralNormState sn;
};

/// Feedforward block: GeLU on hidden layers, linear output. When
/// `spectral_norm` is on, the forward pass uses W / sigma (sigma from the
/// persisted power-iteration state) while gradients update the raw W.
struct Mlp {
    std::vector<LinearLayer> layers;
    bool spectral_norm = false;

    static Mlp make(const std::vector<std::size_t>& widths, std::mt19937_64& rng);

    int forward(Tape& tape, int x) const;
    void collect_params(std::vector<Tensor*>& out);
    void power_iterate(int n_iters = 1);
    std::size_t in_dim() const { return layers.front().weight.rows(); }
    std::size_t out_dim() const { return layers.back().weight.cols(); }
    std::size_t param_count() const;
};

}  // namespace invrom
