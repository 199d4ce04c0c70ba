#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "invrom/mlp.hpp"

namespace invrom {

/// exp(arctan(s)) elementwise; every factor lies in (e^{-pi/2}, e^{pi/2}).
std::vector<double> clamped_exp(const std::vector<double>& s);

/// Affine coupling layer: four subnets s1, s2, t1, t2 mapping half to half.
struct CouplingLayer {
    Mlp s1, s2, t1, t2;
    std::size_t half_dim = 0;
};

/// Stack of affine coupling layers with a half-swap between consecutive
/// layers; the inverse pass is exact by construction.
class InvertibleNet {
public:
    InvertibleNet() = default;
    /// dim must be even; each subnet has one hidden layer of `hidden` units.
    InvertibleNet(std::size_t dim, std::size_t n_layers, std::size_t hidden,
                  std::uint64_t seed);

    int forward(Tape& tape, int x) const;
    int inverse(Tape& tape, int y) const;

    /// Batch evaluation without gradient tracking (rows are samples).
    Tensor forward(const Tensor& x) const;
    Tensor inverse(const Tensor& y) const;

    void collect_params(std::vector<Tensor*>& out);
    std::size_t param_count() const;
    /// One persisted power-iteration step on every subnet weight matrix.
    void power_iterate(int n_iters = 1);

    std::size_t input_dim() const { return dim_; }
    std::size_t n_layers() const { return layers_.size(); }
    std::size_t hidden_width() const { return hidden_; }

    bool spectral_norm_enabled() const { return spectral_norm_; }
    void set_spectral_norm(bool on);
    bool swap_halves() const { return swap_halves_; }
    void set_swap_halves(bool on) { swap_halves_ = on; }

    std::vector<CouplingLayer>& layers() { return layers_; }
    const std::vector<CouplingLayer>& layers() const { return layers_; }

private:
    int couple_forward(Tape& tape, const CouplingLayer& layer, int x) const;
    int couple_inverse(Tape& tape, const CouplingLayer& layer, int y) const;
    int swap(Tape& tape, int x) const;

    std::vector<CouplingLayer> layers_;
    std::size_t dim_ = 0;
    std::size_t hidden_ = 0;
    bool swap_halves_ = true;
    bool spectral_norm_ = false;
};

}  // namespace invrom
