#include "invrom/metrics.hpp"

#include <cmath>

#include "invrom/autoencoder.hpp"

namespace invrom {

namespace {

/// Column ranges sharing one parameter vector, in order of first appearance.
std::vector<std::pair<std::size_t, std::size_t>> group_by_parameter(
    const SnapshotMatrix& m) {
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    std::size_t start = 0;
    for (std::size_t j = 1; j <= m.cols; ++j) {
        if (j == m.cols || m.meta[j].mu != m.meta[start].mu) {
            groups.emplace_back(start, j);
            start = j;
        }
    }
    return groups;
}

ErrorReport assemble_report(const SnapshotMatrix& x_test,
                            const std::vector<double>& num,
                            const std::vector<double>& den) {
    ErrorReport report;
    for (std::size_t g = 0; g < num.size(); ++g) {
        if (den[g] <= 0.0)
            throw std::invalid_argument("metrics: zero-norm test trajectory");
        report.per_parameter.push_back(std::sqrt(num[g] / den[g]));
    }
    double sum = 0.0;
    for (double e : report.per_parameter) sum += e;
    report.mean = report.per_parameter.empty()
                      ? 0.0
                      : sum / (double)report.per_parameter.size();
    (void)x_test;
    return report;
}

}  // namespace

ErrorReport projection_error(const SnapshotMatrix& x_test,
                             const BatchReconstructFn& reconstruct) {
    const auto groups = group_by_parameter(x_test);
    std::vector<double> num(groups.size(), 0.0), den(groups.size(), 0.0);
    constexpr std::size_t kBatch = 256;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t lo = groups[g].first; lo < groups[g].second; lo += kBatch) {
            const std::size_t count = std::min(kBatch, groups[g].second - lo);
            std::vector<std::size_t> idx(count);
            for (std::size_t i = 0; i < count; ++i) idx[i] = lo + i;
            Tensor x = gather_columns(x_test, idx.data(), count);
            Tensor xr = reconstruct(x);
            if (!x.same_shape(xr))
                throw std::invalid_argument("metrics: reconstruction shape mismatch");
            for (std::size_t i = 0; i < x.numel(); ++i) {
                const double d = x.data[i] - xr.data[i];
                num[g] += d * d;
                den[g] += x.data[i] * x.data[i];
            }
        }
    }
    return assemble_report(x_test, num, den);
}

ErrorReport reduction_error(const SnapshotMatrix& x_test, const PointInferFn& infer) {
    const auto groups = group_by_parameter(x_test);
    std::vector<double> num(groups.size(), 0.0), den(groups.size(), 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t j = groups[g].first; j < groups[g].second; ++j) {
            const auto& meta = x_test.meta[j];
            const std::vector<double> pred = infer(meta.t, meta.mu);
            if (pred.size() != x_test.rows)
                throw std::invalid_argument("metrics: prediction length mismatch");
            const double* x = x_test.col(j);
            for (std::size_t i = 0; i < x_test.rows; ++i) {
                const double d = x[i] - pred[i];
                num[g] += d * d;
                den[g] += x[i] * x[i];
            }
        }
    }
    return assemble_report(x_test, num, den);
}

}  // namespace invrom
