#pragma once

#include <string>
#include <vector>

#include "invrom/dataset.hpp"

namespace invrom {

/// Truncated POD basis: orthonormal columns of U and the matching singular
/// values, non-increasing.
struct PodBasis {
    std::size_t n = 0;  // state dimension
    std::size_t r = 0;  // number of modes
    std::vector<double> u;  // column-major n x r
    std::vector<double> singular_values;

    const double* mode(std::size_t j) const { return u.data() + j * n; }
};

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues sorted non-increasing; V's columns (column-major) are
/// the matching eigenvectors.
void symmetric_eigen_jacobi(std::vector<double> a, std::size_t n,
                            std::vector<double>& eigenvalues,
                            std::vector<double>& eigenvectors);

/// Method of snapshots on the smaller Gram matrix (X X^T or X^T X). Sign
/// convention: the largest-magnitude entry of each mode is made positive.
PodBasis compute_pod(const SnapshotMatrix& x_train, std::size_t r);

/// h = U^T x (length r) and x_hat = U h (length n).
std::vector<double> pod_project(const PodBasis& basis, const double* x);
std::vector<double> pod_reconstruct(const PodBasis& basis, const double* h);

/// Project every column: returns an r x cols coefficient matrix with the
/// source metadata carried over.
SnapshotMatrix pod_project_matrix(const PodBasis& basis, const SnapshotMatrix& x);
SnapshotMatrix pod_reconstruct_matrix(const PodBasis& basis, const SnapshotMatrix& h);

/// PODBAS01 checkpoint.
void write_pod(const std::string& path, const PodBasis& basis);
PodBasis read_pod(const std::string& path);

}  // namespace invrom
