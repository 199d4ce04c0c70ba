#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invrom/autoencoder.hpp"
#include "invrom/pod.hpp"

using namespace invrom;

namespace {

SnapshotMatrix matrix_from_cols(std::size_t rows,
                                const std::vector<std::vector<double>>& cols) {
    SnapshotMatrix m;
    m.rows = rows;
    m.cols = cols.size();
    m.nt = cols.size();
    m.meta.resize(cols.size());
    m.data.reserve(rows * cols.size());
    for (const auto& c : cols) m.data.insert(m.data.end(), c.begin(), c.end());
    for (std::size_t j = 0; j < m.cols; ++j) {
        m.meta[j].mu = {1.0, 1.0};
        m.meta[j].k = j + 1;
        m.meta[j].t = 0.1 * (double)(j + 1);
    }
    return m;
}

SnapshotMatrix random_cols(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<double>> data(cols, std::vector<double>(rows));
    for (auto& c : data)
        for (auto& v : c) v = dist(rng);
    return matrix_from_cols(rows, data);
}

void zero_net(InvAutoencoder& model) {
    std::vector<Tensor*> params;
    model.collect_params(params);
    for (Tensor* p : params) std::fill(p->data.begin(), p->data.end(), 0.0);
}

}  // namespace

TEST_CASE("identity mask keeps the encoding untouched") {
    InvAutoencoder model(8, 8, 3, 16, 1);
    std::mt19937_64 rng(2);
    Tensor x = Tensor::uniform(4, 8, -1, 1, rng);
    Tensor z = model.encode(x);
    Tensor y = model.net().forward(x);
    CHECK(z.data == y.data);
}

TEST_CASE("n = 0 masks everything") {
    InvAutoencoder model(8, 0, 3, 16, 1);
    std::mt19937_64 rng(2);
    Tensor z = model.encode(Tensor::uniform(4, 8, -1, 1, rng));
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("zero-weight net with n=2 masks the tail exactly") {
    // 3 layers -> 2 half-swaps, which compose to the identity.
    InvAutoencoder model(4, 2, 3, 8, 1);
    zero_net(model);
    Tensor x(std::vector<double>{3, 1, 4, 1});
    Tensor z = model.encode(x);
    CHECK(z.data == std::vector<double>{3, 1, 0, 0});
    // Bit-level zeros in the masked coordinates.
    CHECK(std::signbit(z.data[2]) == false);
    CHECK(z.data[2] == 0.0);
    Tensor xr = model.decode(z);
    CHECK(xr.data == std::vector<double>{3, 1, 0, 0});
}

TEST_CASE("untrained round trip is exact when n = full_dim") {
    InvAutoencoder model(32, 32, 5, 32, 7);
    std::mt19937_64 rng(5);
    Tensor x = Tensor::uniform(6, 32, -2, 2, rng);
    Tensor xr = model.decode(model.encode(x));
    for (std::size_t i = 0; i < x.numel(); ++i)
        CHECK(std::abs(xr.data[i] - x.data[i]) < 1e-10);
}

TEST_CASE("pod-prefixed round trip with identity mask is the POD projection") {
    SnapshotMatrix data = random_cols(12, 30, 11);
    PodBasis basis = compute_pod(data, 4);
    InvAutoencoder model(4, 4, 3, 16, 13);

    std::mt19937_64 rng(17);
    Tensor x = Tensor::uniform(1, 12, 0.0, 1.0, rng);
    // U psi(mask(phi(U^T x))) with n = r collapses to U U^T x.
    auto h = pod_project(basis, x.data.data());
    Tensor hrow(1, 4);
    hrow.data = h;
    Tensor hr = model.decode(model.encode(hrow));
    auto xr = pod_reconstruct(basis, hr.data.data());
    auto xp = pod_reconstruct(basis, h.data());
    for (std::size_t i = 0; i < xr.size(); ++i)
        CHECK(std::abs(xr[i] - xp[i]) < 1e-10);

    // x already in span(U): full recovery.
    Tensor xs(1, 12);
    xs.data = pod_reconstruct(basis, h.data());
    auto hs = pod_project(basis, xs.data.data());
    Tensor hs_row(1, 4);
    hs_row.data = hs;
    Tensor hs_rec = model.decode(model.encode(hs_row));
    auto xs_rec = pod_reconstruct(basis, hs_rec.data.data());
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(std::abs(xs_rec[i] - xs.data[i]) < 1e-10);
}

TEST_CASE("baseline AE with zero weights propagates biases only") {
    BaselineAe model(6, 2, {8}, 3);
    std::vector<Tensor*> params;
    model.collect_params(params);
    for (Tensor* p : params) std::fill(p->data.begin(), p->data.end(), 0.0);
    std::mt19937_64 rng(7);
    Tensor a = model.reconstruct(Tensor::uniform(2, 6, -1, 1, rng));
    Tensor b = model.reconstruct(Tensor::uniform(2, 6, -1, 1, rng));
    CHECK(a.data == b.data);  // constant output independent of the input
}

TEST_CASE("parameter sharing: encoder and decoder reference the same storage") {
    InvAutoencoder model(16, 4, 5, 32, 19);
    std::vector<Tensor*> params;
    model.collect_params(params);

    std::mt19937_64 rng(23);
    Tensor x = Tensor::uniform(2, 16, -1, 1, rng);
    Tensor before = model.decode(model.encode(x));
    // Mutating any parameter changes both passes (same storage).
    params[0]->data[0] += 0.37;
    Tensor after = model.decode(model.encode(x));
    bool changed = false;
    for (std::size_t i = 0; i < before.numel(); ++i)
        changed |= before.data[i] != after.data[i];
    CHECK(changed);

    // Strictly fewer parameters than an unshared encoder/decoder pair of the
    // same capacity (2 subnet evaluations per coupling layer, same hidden
    // width, separate decoder parameters).
    const std::size_t depth = 2 * model.net().n_layers();
    BaselineAe dense(16, 4, std::vector<std::size_t>(depth, 32), 19);
    CHECK(model.param_count() < dense.param_count());
}

TEST_CASE("training for zero epochs leaves the model unchanged") {
    InvAutoencoder model(8, 2, 2, 8, 29);
    std::vector<Tensor*> params;
    model.collect_params(params);
    std::vector<std::vector<double>> before;
    for (Tensor* p : params) before.push_back(p->data);

    SnapshotMatrix train = random_cols(8, 16, 31);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.patience = 0;
    train_autoencoder(model, train, train, cfg);
    for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i]->data == before[i]);
}

TEST_CASE("identity-mask inv-AE starts at (numerically) zero loss") {
    InvAutoencoder model(16, 16, 5, 16, 37);
    SnapshotMatrix train = random_cols(16, 8, 41);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.patience = 1;
    cfg.batch_size = 8;
    auto hist = train_autoencoder(model, train, train, cfg);
    REQUIRE(hist.rows.size() == 1);
    CHECK(hist.rows[0].train_loss < 1e-16);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto run = [&]() {
        InvAutoencoder model(8, 2, 2, 16, 43);
        SnapshotMatrix train = random_cols(8, 32, 47);
        SnapshotMatrix valid = random_cols(8, 8, 53);
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.patience = 5;
        cfg.batch_size = 8;
        cfg.seed = 99;
        return train_autoencoder(model, train, valid, cfg);
    };
    auto a = run(), b = run();
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].train_loss == b.rows[i].train_loss);
        CHECK(a.rows[i].valid_loss == b.rows[i].valid_loss);
    }
}

TEST_CASE("baseline AE learns rank-1 data with one latent dimension") {
    // Synthetic oracle dataset: columns = scalar * fixed direction, scalars
    // spread over [0.2, 1]; a 1-D latent suffices.
    std::vector<double> direction{0.9, 0.1, 0.5, 0.3, 0.7, 0.2};
    std::vector<std::vector<double>> cols;
    for (int j = 0; j < 64; ++j) {
        const double a = 0.2 + 0.8 * (double)j / 63.0;
        std::vector<double> c(6);
        for (std::size_t i = 0; i < 6; ++i) c[i] = a * direction[i];
        cols.push_back(c);
    }
    SnapshotMatrix data = matrix_from_cols(6, cols);

    BaselineAe model(6, 1, {16, 8}, 59);
    TrainConfig cfg;
    cfg.epochs = 1500;
    cfg.patience = 1500;
    cfg.batch_size = 16;
    cfg.lr = 3e-3;
    cfg.weight_decay = 0.0;
    cfg.seed = 3;
    train_autoencoder(model, data, data, cfg);

    Tensor all(64, 6);
    for (std::size_t j = 0; j < 64; ++j)
        std::copy(data.col(j), data.col(j) + 6, all.data.begin() + (std::ptrdiff_t)(j * 6));
    Tensor rec = model.reconstruct(all);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < all.numel(); ++i) {
        num += (rec.data[i] - all.data[i]) * (rec.data[i] - all.data[i]);
        den += all.data[i] * all.data[i];
    }
    CHECK(std::sqrt(num / den) < 1e-2);
}

TEST_CASE("nan loss aborts with epoch and batch context") {
    InvAutoencoder model(8, 2, 2, 8, 61);
    std::vector<Tensor*> params;
    model.collect_params(params);
    params[0]->data[0] = std::nan("");
    SnapshotMatrix train = random_cols(8, 8, 67);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.patience = 1;
    CHECK_THROWS_WITH_AS(train_autoencoder(model, train, train, cfg),
                         doctest::Contains("epoch 0"), NumericalError);
}
