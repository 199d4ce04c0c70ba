#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "invrom/burgers.hpp"
#include "invrom/tensor.hpp"

namespace invrom {

struct ColumnMeta {
    std::vector<double> mu;  // parameter vector of the owning trajectory
    std::size_t k = 0;       // 1-based timestep index within the trajectory
    double t = 0.0;
};

/// Column-stacked snapshots: data is column-major, one column per snapshot.
struct SnapshotMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // column-major, rows*cols
    std::vector<ColumnMeta> meta;
    std::size_t param_dim = 0;
    double dt = 0.0, t0 = 0.0;
    std::size_t nt = 0;  // snapshots per trajectory

    const double* col(std::size_t j) const { return data.data() + j * rows; }
    double* col(std::size_t j) { return data.data() + j * rows; }
    std::size_t n_trajectories() const { return nt ? cols / nt : 0; }
};

/// Global scalar min-max scaler fitted on a training matrix.
struct Normalizer {
    double x_min = 0.0;
    double x_max = 1.0;

    static Normalizer fit(const SnapshotMatrix& train);
    double scale(double v) const { return (v - x_min) / (x_max - x_min); }
    double unscale(double v) const { return v * (x_max - x_min) + x_min; }
    void normalize(SnapshotMatrix& m) const;
    void denormalize(SnapshotMatrix& m) const;
};

struct SplitSpec {
    std::vector<std::array<double, 2>> train_params;
    std::vector<std::array<double, 2>> valid_params;
    std::vector<std::array<double, 2>> test_params;
    std::uint64_t seed = 0;
};

/// The 10 x 8 parameter grid over [4.25, 5.5] x [0.015, 0.03], mu1-major.
std::vector<std::array<double, 2>> build_burgers_grid();

/// Seeded shuffle picks 8 validation parameters from the grid; the remaining
/// 72 train. The test set is the two held-out parameter pairs of the study.
SplitSpec split_burgers(const std::vector<std::array<double, 2>>& grid,
                        std::uint64_t seed);

/// Stack trajectories into a snapshot matrix, trajectory-major then time.
SnapshotMatrix assemble(const std::vector<Trajectory>& trajectories);

/// Select the sub-matrix whose trajectory parameters appear in `params`.
SnapshotMatrix select_by_params(const SnapshotMatrix& all,
                                const std::vector<std::array<double, 2>>& params);

/// SNAPMAT1 snapshot file format (bit-exact, little-endian, column-major).
void write_snap(const std::string& path, const SnapshotMatrix& m);
SnapshotMatrix read_snap(const std::string& path);

}  // namespace invrom
