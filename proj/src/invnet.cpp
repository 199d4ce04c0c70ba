#include "invrom/invnet.hpp"

#include <cmath>

namespace invrom {

std::vector<double> clamped_exp(const std::vector<double>& s) {
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = std::exp(std::atan(s[i]));
    return out;
}

InvertibleNet::InvertibleNet(std::size_t dim, std::size_t n_layers, std::size_t hidden,
                             std::uint64_t seed)
    : dim_(dim), hidden_(hidden) {
    if (dim % 2 != 0)
        throw std::invalid_argument("invertible net: input dimension " +
                                    std::to_string(dim) + " must be even");
    std::mt19937_64 rng(seed);
    const std::size_t half = dim / 2;
    const std::vector<std::size_t> widths{half, hidden, half};
    for (std::size_t l = 0; l < n_layers; ++l) {
        CouplingLayer layer;
        layer.half_dim = half;
        layer.s1 = Mlp::make(widths, rng);
        layer.s2 = Mlp::make(widths, rng);
        layer.t1 = Mlp::make(widths, rng);
        layer.t2 = Mlp::make(widths, rng);
        layers_.push_back(std::move(layer));
    }
}

void InvertibleNet::set_spectral_norm(bool on) {
    spectral_norm_ = on;
    for (auto& layer : layers_) {
        layer.s1.spectral_norm = on;
        layer.s2.spectral_norm = on;
        layer.t1.spectral_norm = on;
        layer.t2.spectral_norm = on;
    }
    if (on) power_iterate(1);  // initialize sigma estimates
}

void InvertibleNet::power_iterate(int n_iters) {
    for (auto& layer : layers_) {
        layer.s1.power_iterate(n_iters);
        layer.s2.power_iterate(n_iters);
        layer.t1.power_iterate(n_iters);
        layer.t2.power_iterate(n_iters);
    }
}

int InvertibleNet::swap(Tape& tape, int x) const {
    const std::size_t half = dim_ / 2;
    int lo = tape.slice_cols(x, 0, half);
    int hi = tape.slice_cols(x, half, dim_);
    return tape.concat_cols(hi, lo);
}

int InvertibleNet::couple_forward(Tape& tape, const CouplingLayer& layer, int x) const {
    const std::size_t half = layer.half_dim;
    int x1 = tape.slice_cols(x, 0, half);
    int x2 = tape.slice_cols(x, half, 2 * half);
    // y1 = x1 (.) exp(arctan(s2(x2))) + t2(x2)
    int scale2 = tape.expo(tape.arctan(layer.s2.forward(tape, x2)));
    int y1 = tape.add(tape.hadamard(x1, scale2), layer.t2.forward(tape, x2));
    // y2 = x2 (.) exp(arctan(s1(y1))) + t1(y1)
    int scale1 = tape.expo(tape.arctan(layer.s1.forward(tape, y1)));
    int y2 = tape.add(tape.hadamard(x2, scale1), layer.t1.forward(tape, y1));
    return tape.concat_cols(y1, y2);
}

int InvertibleNet::couple_inverse(Tape& tape, const CouplingLayer& layer, int y) const {
    const std::size_t half = layer.half_dim;
    int y1 = tape.slice_cols(y, 0, half);
    int y2 = tape.slice_cols(y, half, 2 * half);
    // x2 first: x2 = (y2 - t1(y1)) (.) exp(-arctan(s1(y1)))
    int inv_scale1 = tape.expo(tape.scale(tape.arctan(layer.s1.forward(tape, y1)), -1.0));
    int x2 = tape.hadamard(tape.sub(y2, layer.t1.forward(tape, y1)), inv_scale1);
    // then x1 = (y1 - t2(x2)) (.) exp(-arctan(s2(x2)))
    int inv_scale2 = tape.expo(tape.scale(tape.arctan(layer.s2.forward(tape, x2)), -1.0));
    int x1 = tape.hadamard(tape.sub(y1, layer.t2.forward(tape, x2)), inv_scale2);
    return tape.concat_cols(x1, x2);
}

int InvertibleNet::forward(Tape& tape, int x) const {
    int cur = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        cur = couple_forward(tape, layers_[l], cur);
        if (swap_halves_ && l + 1 < layers_.size()) cur = swap(tape, cur);
    }
    return cur;
}

int InvertibleNet::inverse(Tape& tape, int y) const {
    int cur = y;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        if (swap_halves_ && l + 1 < layers_.size()) cur = swap(tape, cur);
        cur = couple_inverse(tape, layers_[l], cur);
    }
    return cur;
}

Tensor InvertibleNet::forward(const Tensor& x) const {
    Tape tape;
    return tape.val(forward(tape, tape.constant(x)));
}

Tensor InvertibleNet::inverse(const Tensor& y) const {
    Tape tape;
    return tape.val(inverse(tape, tape.constant(y)));
}

void InvertibleNet::collect_params(std::vector<Tensor*>& out) {
    for (auto& layer : layers_) {
        layer.s1.collect_params(out);
        layer.s2.collect_params(out);
        layer.t1.collect_params(out);
        layer.t2.collect_params(out);
    }
}

std::size_t InvertibleNet::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
        n += layer.s1.param_count() + layer.s2.param_count() + layer.t1.param_count() +
             layer.t2.param_count();
    return n;
}

}  // namespace invrom
