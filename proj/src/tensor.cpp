#include "invrom/tensor.hpp"

#include <cmath>

namespace invrom {

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                       std::mt19937_64& rng) {
    Tensor t(rows, cols);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

}  // namespace invrom
