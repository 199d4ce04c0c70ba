#include "invrom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "invrom/container.hpp"

namespace invrom {

Normalizer Normalizer::fit(const SnapshotMatrix& train) {
    if (train.data.empty()) throw std::invalid_argument("normalizer: empty matrix");
    Normalizer nz;
    nz.x_min = *std::min_element(train.data.begin(), train.data.end());
    nz.x_max = *std::max_element(train.data.begin(), train.data.end());
    if (!(nz.x_max > nz.x_min))
        throw std::invalid_argument("normalizer: degenerate range, x_max == x_min");
    return nz;
}

void Normalizer::normalize(SnapshotMatrix& m) const {
    const double inv = 1.0 / (x_max - x_min);
    for (auto& v : m.data) v = (v - x_min) * inv;
}

void Normalizer::denormalize(SnapshotMatrix& m) const {
    const double w = x_max - x_min;
    for (auto& v : m.data) v = v * w + x_min;
}

std::vector<std::array<double, 2>> build_burgers_grid() {
    std::vector<std::array<double, 2>> grid;
    grid.reserve(80);
    for (int i = 0; i < 10; ++i) {
        const double mu1 = 4.25 + (5.5 - 4.25) * (double)i / 9.0;
        for (int j = 0; j < 8; ++j) {
            const double mu2 = 0.015 + (0.03 - 0.015) * (double)j / 7.0;
            grid.push_back({mu1, mu2});
        }
    }
    return grid;
}

SplitSpec split_burgers(const std::vector<std::array<double, 2>>& grid,
                        std::uint64_t seed) {
    if (grid.size() != 80)
        throw std::invalid_argument("split: expected the 80-point grid, got " +
                                    std::to_string(grid.size()));
    std::vector<std::size_t> idx(grid.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    SplitSpec s;
    s.seed = seed;
    for (std::size_t i = 0; i < 8; ++i) s.valid_params.push_back(grid[idx[i]]);
    for (std::size_t i = 8; i < grid.size(); ++i) s.train_params.push_back(grid[idx[i]]);
    // Keep the grid's deterministic ordering within each subset.
    auto by_grid = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
        return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
    };
    std::sort(s.train_params.begin(), s.train_params.end(), by_grid);
    std::sort(s.valid_params.begin(), s.valid_params.end(), by_grid);
    s.test_params = {{4.3, 0.021}, {5.15, 0.0285}};
    return s;
}

SnapshotMatrix assemble(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty())
        throw std::invalid_argument("assemble: no trajectories");
    const std::size_t n = trajectories.front().n_cells;
    const std::size_t nt = trajectories.front().states.size();
    for (const auto& tr : trajectories) {
        if (tr.n_cells != n)
            throw std::invalid_argument("assemble: inconsistent state dimension");
        if (tr.states.size() != nt)
            throw std::invalid_argument("assemble: inconsistent snapshot count");
    }
    SnapshotMatrix m;
    m.rows = n;
    m.cols = nt * trajectories.size();
    m.nt = nt;
    m.param_dim = 2;
    m.data.resize(m.rows * m.cols);
    m.meta.reserve(m.cols);
    if (!trajectories.front().times.empty()) {
        m.dt = trajectories.front().times.size() > 1
                   ? trajectories.front().times[1] - trajectories.front().times[0]
                   : trajectories.front().times[0];
        m.t0 = trajectories.front().times[0] - m.dt;
    }
    std::size_t j = 0;
    for (const auto& tr : trajectories) {
        for (std::size_t k = 0; k < nt; ++k, ++j) {
            std::copy(tr.states[k].begin(), tr.states[k].end(), m.col(j));
            ColumnMeta cm;
            cm.mu = {tr.parameter[0], tr.parameter[1]};
            cm.k = k + 1;
            cm.t = tr.times[k];
            m.meta.push_back(std::move(cm));
        }
    }
    return m;
}

SnapshotMatrix select_by_params(const SnapshotMatrix& all,
                                const std::vector<std::array<double, 2>>& params) {
    auto wanted = [&](const std::vector<double>& mu) {
        for (const auto& p : params)
            if (mu.size() == 2 && mu[0] == p[0] && mu[1] == p[1]) return true;
        return false;
    };
    SnapshotMatrix out;
    out.rows = all.rows;
    out.nt = all.nt;
    out.param_dim = all.param_dim;
    out.dt = all.dt;
    out.t0 = all.t0;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < all.cols; ++j)
        if (wanted(all.meta[j].mu)) keep.push_back(j);
    out.cols = keep.size();
    out.data.resize(out.rows * out.cols);
    out.meta.reserve(out.cols);
    for (std::size_t jj = 0; jj < keep.size(); ++jj) {
        std::copy(all.col(keep[jj]), all.col(keep[jj]) + all.rows, out.col(jj));
        out.meta.push_back(all.meta[keep[jj]]);
    }
    return out;
}

void write_snap(const std::string& path, const SnapshotMatrix& m) {
    nlohmann::json h;
    h["rows"] = m.rows;
    h["cols"] = m.cols;
    h["dtype"] = "f64";
    h["order"] = "col-major";
    h["nt"] = m.nt;
    h["dt"] = m.dt;
    h["t0"] = m.t0;
    h["param_dim"] = m.param_dim;
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols; j += (m.nt ? m.nt : m.cols ? m.cols : 1))
        params.push_back(m.meta[j].mu);
    h["params"] = params;
    write_container(path, "SNAPMAT1", h, m.data);
}

SnapshotMatrix read_snap(const std::string& path) {
    nlohmann::json h;
    std::vector<double> payload;
    read_container(path, "SNAPMAT1", h, payload);
    if (h.value("dtype", "") != std::string("f64"))
        throw BadDtypeError("snapshot file dtype is not f64: " + path);
    SnapshotMatrix m;
    try {
        m.rows = h.at("rows").get<std::size_t>();
        m.cols = h.at("cols").get<std::size_t>();
        m.nt = h.at("nt").get<std::size_t>();
        m.dt = h.value("dt", 0.0);
        m.t0 = h.value("t0", 0.0);
        m.param_dim = h.value("param_dim", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw BadHeaderError("snapshot header missing fields in " + path + ": " +
                             e.what());
    }
    if (payload.size() != m.rows * m.cols)
        throw TruncatedError("payload length " + std::to_string(payload.size()) +
                             " does not match rows*cols in " + path);
    m.data = std::move(payload);

    m.meta.resize(m.cols);
    const auto& params = h.value("params", nlohmann::json::array());
    for (std::size_t j = 0; j < m.cols; ++j) {
        const std::size_t traj = m.nt ? j / m.nt : 0;
        const std::size_t k = m.nt ? j % m.nt : j;
        if (traj < params.size())
            m.meta[j].mu = params[traj].get<std::vector<double>>();
        m.meta[j].k = k + 1;
        m.meta[j].t = m.t0 + (double)(k + 1) * m.dt;
    }
    return m;
}

}  // namespace invrom
