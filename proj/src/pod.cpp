#include "invrom/pod.hpp"

#include <cblas.h>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "invrom/container.hpp"

namespace invrom {

void symmetric_eigen_jacobi(std::vector<double> a, std::size_t n,
                            std::vector<double>& eigenvalues,
                            std::vector<double>& eigenvectors) {
    // a is n x n symmetric, column-major (symmetry makes the order moot).
    std::vector<double>& v = eigenvectors;
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a[q * n + p] * a[q * n + p];
        return std::sqrt(2.0 * s);
    };

    double frob = 0.0;
    for (double x : a) frob += x * x;
    frob = std::sqrt(frob);
    const double tol = 1e-14 * std::max(frob, 1e-300);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[q * n + p];
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // Rotate rows/columns p and q of a.
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[p * n + k];
                    const double akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[k * n + p];
                    const double aqk = a[k * n + q];
                    a[k * n + p] = c * apk - s * aqk;
                    a[k * n + q] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[p * n + k];
                    const double vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }

    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i * n + i];

    // Sort non-increasing, permuting eigenvectors along.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return eigenvalues[i] > eigenvalues[j];
    });
    std::vector<double> ev_sorted(n), v_sorted(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        ev_sorted[i] = eigenvalues[order[i]];
        std::copy(v.begin() + (std::ptrdiff_t)(order[i] * n),
                  v.begin() + (std::ptrdiff_t)((order[i] + 1) * n),
                  v_sorted.begin() + (std::ptrdiff_t)(i * n));
    }
    eigenvalues = std::move(ev_sorted);
    eigenvectors = std::move(v_sorted);
}

PodBasis compute_pod(const SnapshotMatrix& x_train, std::size_t r) {
    const std::size_t n = x_train.rows, m = x_train.cols;
    if (r < 1 || r > std::min(n, m))
        throw std::invalid_argument("pod: r=" + std::to_string(r) +
                                    " out of range for " + std::to_string(n) + "x" +
                                    std::to_string(m) + " matrix");

    PodBasis basis;
    basis.n = n;
    basis.r = r;
    basis.u.resize(n * r);
    basis.singular_values.resize(r);

    std::vector<double> eigenvalues, eigenvectors;
    if (n <= m) {
        // Gram = X X^T (n x n); its eigenvectors are the left singular vectors.
        std::vector<double> gram(n * n);
        cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, (int)n, (int)m, 1.0,
                    x_train.data.data(), (int)n, 0.0, gram.data(), (int)n);
        for (std::size_t c = 0; c < n; ++c)  // mirror the lower triangle
            for (std::size_t rr = c + 1; rr < n; ++rr)
                gram[rr * n + c] = gram[c * n + rr];
        symmetric_eigen_jacobi(std::move(gram), n, eigenvalues, eigenvectors);
        for (std::size_t j = 0; j < r; ++j) {
            basis.singular_values[j] = std::sqrt(std::max(eigenvalues[j], 0.0));
            std::copy(eigenvectors.begin() + (std::ptrdiff_t)(j * n),
                      eigenvectors.begin() + (std::ptrdiff_t)((j + 1) * n),
                      basis.u.begin() + (std::ptrdiff_t)(j * n));
        }
    } else {
        // Gram = X^T X (m x m); U_j = X v_j / sigma_j.
        std::vector<double> gram(m * m);
        cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, (int)m, (int)n, 1.0,
                    x_train.data.data(), (int)n, 0.0, gram.data(), (int)m);
        for (std::size_t c = 0; c < m; ++c)
            for (std::size_t rr = c + 1; rr < m; ++rr)
                gram[rr * m + c] = gram[c * m + rr];
        symmetric_eigen_jacobi(std::move(gram), m, eigenvalues, eigenvectors);
        for (std::size_t j = 0; j < r; ++j) {
            const double sigma = std::sqrt(std::max(eigenvalues[j], 0.0));
            basis.singular_values[j] = sigma;
            const double inv = sigma > 0.0 ? 1.0 / sigma : 0.0;
            cblas_dgemv(CblasColMajor, CblasNoTrans, (int)n, (int)m, inv,
                        x_train.data.data(), (int)n,
                        eigenvectors.data() + j * m, 1, 0.0,
                        basis.u.data() + j * n, 1);
        }
    }

    const double sigma_max = basis.singular_values.empty() ? 0.0 : basis.singular_values[0];
    for (std::size_t j = 0; j < r; ++j) {
        if (basis.singular_values[j] < 1e-12 * sigma_max)
            std::cerr << "warning: pod mode " << j << " has near-zero singular value "
                      << basis.singular_values[j] << "\n";
        // Sign convention: largest-magnitude entry positive.
        double* col = basis.u.data() + j * n;
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
        if (col[arg] < 0.0)
            for (std::size_t i = 0; i < n; ++i) col[i] = -col[i];
    }
    return basis;
}

std::vector<double> pod_project(const PodBasis& basis, const double* x) {
    std::vector<double> h(basis.r);
    cblas_dgemv(CblasColMajor, CblasTrans, (int)basis.n, (int)basis.r, 1.0,
                basis.u.data(), (int)basis.n, x, 1, 0.0, h.data(), 1);
    return h;
}

std::vector<double> pod_reconstruct(const PodBasis& basis, const double* h) {
    std::vector<double> x(basis.n);
    cblas_dgemv(CblasColMajor, CblasNoTrans, (int)basis.n, (int)basis.r, 1.0,
                basis.u.data(), (int)basis.n, h, 1, 0.0, x.data(), 1);
    return x;
}

SnapshotMatrix pod_project_matrix(const PodBasis& basis, const SnapshotMatrix& x) {
    if (x.rows != basis.n)
        throw std::invalid_argument("pod: matrix rows " + std::to_string(x.rows) +
                                    " != basis dimension " + std::to_string(basis.n));
    SnapshotMatrix h;
    h.rows = basis.r;
    h.cols = x.cols;
    h.meta = x.meta;
    h.param_dim = x.param_dim;
    h.nt = x.nt;
    h.dt = x.dt;
    h.t0 = x.t0;
    h.data.resize(h.rows * h.cols);
    if (x.cols == 0) return h;
    cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, (int)basis.r, (int)x.cols,
                (int)basis.n, 1.0, basis.u.data(), (int)basis.n, x.data.data(),
                (int)x.rows, 0.0, h.data.data(), (int)basis.r);
    return h;
}

SnapshotMatrix pod_reconstruct_matrix(const PodBasis& basis, const SnapshotMatrix& h) {
    if (h.rows != basis.r)
        throw std::invalid_argument("pod: coefficient rows " + std::to_string(h.rows) +
                                    " != basis modes " + std::to_string(basis.r));
    SnapshotMatrix x;
    x.rows = basis.n;
    x.cols = h.cols;
    x.meta = h.meta;
    x.param_dim = h.param_dim;
    x.nt = h.nt;
    x.dt = h.dt;
    x.t0 = h.t0;
    x.data.resize(x.rows * x.cols);
    if (h.cols == 0) return x;
    cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, (int)basis.n, (int)h.cols,
                (int)basis.r, 1.0, basis.u.data(), (int)basis.n, h.data.data(),
                (int)h.rows, 0.0, x.data.data(), (int)basis.n);
    return x;
}

void write_pod(const std::string& path, const PodBasis& basis) {
    nlohmann::json h;
    h["rows"] = basis.n;
    h["cols"] = basis.r;
    h["dtype"] = "f64";
    h["order"] = "col-major";
    std::vector<double> payload = basis.u;
    payload.insert(payload.end(), basis.singular_values.begin(),
                   basis.singular_values.end());
    write_container(path, "PODBAS01", h, payload);
}

PodBasis read_pod(const std::string& path) {
    nlohmann::json h;
    std::vector<double> payload;
    read_container(path, "PODBAS01", h, payload);
    if (h.value("dtype", "") != std::string("f64"))
        throw BadDtypeError("pod basis dtype is not f64: " + path);
    PodBasis basis;
    basis.n = h.at("rows").get<std::size_t>();
    basis.r = h.at("cols").get<std::size_t>();
    if (payload.size() != basis.n * basis.r + basis.r)
        throw TruncatedError("pod basis payload size mismatch: " + path);
    basis.u.assign(payload.begin(), payload.begin() + (std::ptrdiff_t)(basis.n * basis.r));
    basis.singular_values.assign(payload.begin() + (std::ptrdiff_t)(basis.n * basis.r),
                                 payload.end());
    return basis;
}

}  // namespace invrom
