#pragma once

#include <functional>
#include <string>
#include <vector>

#include "invrom/dataset.hpp"
#include "invrom/tensor.hpp"

namespace invrom {

/// Maps a [B x N] batch of physical-unit snapshots to reconstructions.
using BatchReconstructFn = std::function<Tensor(const Tensor&)>;
/// Maps (t, mu) to a physical-unit prediction of length N.
using PointInferFn =
    std::function<std::vector<double>(double, const std::vector<double>&)>;

struct ErrorReport {
    std::vector<double> per_parameter;  // one relative error per test parameter
    double mean = 0.0;
    std::string model_id;
    std::size_t manifold_dim = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

/// Mean over test parameters of sqrt(sum_k ||x_k - x_hat_k||^2 /
/// sum_k ||x_k||^2). Reconstructions are produced by the callback in
/// physical units. Throws on a zero-norm trajectory.
ErrorReport projection_error(const SnapshotMatrix& x_test,
                             const BatchReconstructFn& reconstruct);

/// Same functional with ROM predictions at each column's (t, mu).
ErrorReport reduction_error(const SnapshotMatrix& x_test, const PointInferFn& infer);

}  // namespace invrom
