#include "invrom/mlp.hpp"

#include <cblas.h>
#include <cmath>
#include <iostream>

namespace invrom {

void spectral_power_iterate(const Tensor& w, SpectralNormState& state, int n_iters) {
    const std::size_t rows = w.rows(), cols = w.cols();
    if (state.u.numel() != rows) {
        // Deterministic pseudo-random start; a constant vector can be nearly
        // orthogonal to the top singular direction and stall convergence.
        std::mt19937_64 rng(0x5eed0000u ^ (rows * 131071 + cols));
        state.u = Tensor::uniform(1, rows, -1.0, 1.0, rng);
        const double nrm = cblas_dnrm2((int)rows, state.u.data.data(), 1);
        cblas_dscal((int)rows, 1.0 / nrm, state.u.data.data(), 1);
    }
    std::vector<double> v(cols);
    for (int it = 0; it < n_iters; ++it) {
        // v = W^T u / ||.||
        cblas_dgemv(CblasRowMajor, CblasTrans, (int)rows, (int)cols, 1.0,
                    w.data.data(), (int)cols, state.u.data.data(), 1, 0.0, v.data(), 1);
        double nv = cblas_dnrm2((int)cols, v.data(), 1);
        if (nv < 1e-300) {
            state.sigma = 1e-12;
            std::cerr << "warning: spectral norm of a (near-)zero matrix clamped\n";
            return;
        }
        cblas_dscal((int)cols, 1.0 / nv, v.data(), 1);
        // u = W v / ||.||
        cblas_dgemv(CblasRowMajor, CblasNoTrans, (int)rows, (int)cols, 1.0,
                    w.data.data(), (int)cols, v.data(), 1, 0.0,
                    state.u.data.data(), 1);
        double nu = cblas_dnrm2((int)rows, state.u.data.data(), 1);
        if (nu < 1e-300) {
            state.sigma = 1e-12;
            std::cerr << "warning: spectral norm of a (near-)zero matrix clamped\n";
            return;
        }
        cblas_dscal((int)rows, 1.0 / nu, state.u.data.data(), 1);
        // sigma = u^T W v
        std::vector<double> wv(rows);
        cblas_dgemv(CblasRowMajor, CblasNoTrans, (int)rows, (int)cols, 1.0,
                    w.data.data(), (int)cols, v.data(), 1, 0.0, wv.data(), 1);
        state.sigma = cblas_ddot((int)rows, state.u.data.data(), 1, wv.data(), 1);
    }
    if (state.sigma < 1e-12) {
        state.sigma = 1e-12;
        std::cerr << "warning: spectral norm clamped to 1e-12\n";
    }
}

Tensor spectral_normalize(const Tensor& w, SpectralNormState& state, int n_iters) {
    spectral_power_iterate(w, state, n_iters);
    Tensor out = w;
    const double inv = 1.0 / state.sigma;
    for (auto& v : out.data) v *= inv;
    return out;
}

Mlp Mlp::make(const std::vector<std::size_t>& widths, std::mt19937_64& rng) {
    Mlp mlp;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const double bound = 1.0 / std::sqrt((double)fan_in);
        LinearLayer layer;
        layer.weight = Tensor::uniform(fan_in, widths[l + 1], -bound, bound, rng);
        layer.weight.requires_grad = true;
        layer.bias = Tensor::uniform(1, widths[l + 1], -bound, bound, rng);
        layer.bias.requires_grad = true;
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

int Mlp::forward(Tape& tape, int x) const {
    int h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& layer = const_cast<LinearLayer&>(layers[l]);
        int w = tape.leaf(&layer.weight);
        if (spectral_norm) w = tape.scale(w, 1.0 / layer.sn.sigma);
        h = tape.add(tape.matmul(h, w), tape.leaf(&layer.bias));
        if (l + 1 < layers.size()) h = tape.gelu(h);
    }
    return h;
}

void Mlp::collect_params(std::vector<Tensor*>& out) {
    for (auto& layer : layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
}

void Mlp::power_iterate(int n_iters) {
    for (auto& layer : layers) spectral_power_iterate(layer.weight, layer.sn, n_iters);
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weight.numel() + layer.bias.numel();
    return n;
}

}  // namespace invrom
