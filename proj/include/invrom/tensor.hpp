#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace invrom {

/// Error thrown when operand shapes do not conform to an operation.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Error thrown on numerical failure (NaN loss, non-convergent Newton, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense f64 array, row-major, 1-D or 2-D. The value type carried through
/// every network, solver and metric in the library.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : shape{rows, cols}, data(rows * cols, fill) {}
    explicit Tensor(std::vector<double> values)
        : shape{1, values.size()}, data(std::move(values)) {}

    std::size_t numel() const { return data.size(); }
    /// 1-D tensors are treated as a single row.
    std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }
    bool is_scalar() const { return numel() == 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const {
        return rows() == o.rows() && cols() == o.cols();
    }
    std::string shape_str() const {
        return "[" + std::to_string(rows()) + "x" + std::to_string(cols()) + "]";
    }

    bool all_finite() const;

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }
    static Tensor full(std::size_t rows, std::size_t cols, double v) { return Tensor(rows, cols, v); }
    static Tensor scalar(double v) { Tensor t(1, 1); t.data[0] = v; return t; }
    /// Entries uniform in [lo, hi).
    static Tensor uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                          std::mt19937_64& rng);
};

}  // namespace invrom
