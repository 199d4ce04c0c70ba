#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invrom/dlrom.hpp"
#include "support/oracles.hpp"

using namespace invrom;

namespace {

SnapshotMatrix toy_matrix(std::size_t rows, std::size_t n_traj, std::size_t nt,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    SnapshotMatrix m;
    m.rows = rows;
    m.cols = n_traj * nt;
    m.nt = nt;
    m.param_dim = 2;
    m.dt = 0.1;
    m.data.resize(m.rows * m.cols);
    for (auto& v : m.data) v = dist(rng);
    m.meta.resize(m.cols);
    for (std::size_t tr = 0; tr < n_traj; ++tr) {
        const std::vector<double> mu{0.5 + (double)tr, 1.5 + (double)tr};
        for (std::size_t k = 0; k < nt; ++k) {
            auto& meta = m.meta[tr * nt + k];
            meta.mu = mu;
            meta.k = k + 1;
            meta.t = 0.1 * (double)(k + 1);
        }
    }
    return m;
}

RomModel toy_model(RomVariant variant, std::size_t full_dim, std::size_t n,
                   std::uint64_t seed) {
    RomModel model;
    model.variant = variant;
    model.mask = {full_dim, n};
    if (variant_uses_invnet(variant))
        model.inv_ae = InvAutoencoder(full_dim, n, 2, 16, seed);
    else
        model.base_ae = BaselineAe(full_dim, n, {16}, seed);
    model.regressor = LatentRegressor::make(2, n, {16, 16}, seed ^ 1);
    return model;
}

}  // namespace

TEST_CASE("alpha limits isolate the two loss terms") {
    SnapshotMatrix data = toy_matrix(8, 2, 4, 3);
    RomModel model = toy_model(RomVariant::InvDlrom, 8, 3, 5);
    // Ranges needed by the regressor input normalization.
    model.regressor.in_lo = {0.1, 0.5, 1.5};
    model.regressor.in_hi = {0.4, 1.5, 2.5};

    std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7};
    const double full = rom_loss(model, data, idx, 0.5);
    const double rec_only = rom_loss(model, data, idx, 1.0);
    const double lat_only = rom_loss(model, data, idx, 0.0);
    CHECK(rec_only > 0.0);
    CHECK(lat_only > 0.0);
    // Exact decomposition: loss(alpha) = alpha L_rec + (1-alpha) L_lat.
    CHECK(std::abs(full - (0.5 * rec_only + 0.5 * lat_only)) < 1e-12);
    for (double alpha : {0.25, 0.7, 0.9}) {
        const double l = rom_loss(model, data, idx, alpha);
        CHECK(std::abs(l - (alpha * rec_only + (1 - alpha) * lat_only)) < 1e-12);
    }
    CHECK_THROWS_AS(rom_loss(model, data, idx, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(rom_loss(model, data, idx, -0.1), std::invalid_argument);
}

TEST_CASE("exact regressor and identity mask give zero loss") {
    // n = full_dim (no masking): the inv-AE round trip is exact, and we make
    // the regressor output exactly phi(x) by construction for one column.
    SnapshotMatrix data = toy_matrix(8, 1, 1, 7);
    RomModel model = toy_model(RomVariant::InvDlrom, 8, 8, 9);
    model.regressor.in_lo = {0.0, 0.0, 1.0};
    model.regressor.in_hi = {1.0, 1.0, 2.0};

    // Force the regressor to a constant: zero weights, bias = phi(x).
    Tensor x(1, 8);
    std::copy(data.col(0), data.col(0) + 8, x.data.begin());
    Tensor y = model.inv_ae.net().forward(x);
    std::vector<Tensor*> reg_params;
    model.regressor.mlp.collect_params(reg_params);
    for (Tensor* p : reg_params) std::fill(p->data.begin(), p->data.end(), 0.0);
    model.regressor.mlp.layers.back().bias.data = y.data;

    const double loss = rom_loss(model, data, {0}, 0.5);
    CHECK(loss < 1e-16);
}

TEST_CASE("gradient of the DL-ROM loss matches finite differences") {
    SnapshotMatrix data = toy_matrix(8, 2, 3, 11);
    for (auto variant : {RomVariant::InvDlrom, RomVariant::Dlrom}) {
        RomModel model = toy_model(variant, 8, 3, 13);
        model.regressor.in_lo = {0.1, 0.5, 1.5};
        model.regressor.in_hi = {0.3, 1.5, 2.5};
        std::vector<Tensor*> params;
        model.collect_params(params);
        std::vector<std::size_t> idx{0, 2, 4};

        auto eval = [&]() { return rom_loss(model, data, idx, 0.4); };
        Tape tape;
        auto grads =
            tape.backward(rom_loss_node(model, tape, data, idx.data(), 3, 0.4));
        std::vector<std::vector<double>> ad;
        for (Tensor* p : params) ad.push_back(grads[p].data);
        CHECK(oracle::max_rel_error(ad, oracle::fd_gradient(eval, params, 1e-6)) <
              1e-5);
    }
}

TEST_CASE("inference pads the latent with exact zeros") {
    RomModel model = toy_model(RomVariant::InvDlrom, 8, 3, 17);
    model.regressor.in_lo = {0.0, 0.0, 0.0};
    model.regressor.in_hi = {1.0, 1.0, 1.0};
    model.trained = true;

    // Instrument: decode the padded latent by hand and compare with infer.
    Tensor in(1, 3);
    model.regressor.normalize_input(0.3, {0.4, 0.6}, in.data.data());
    Tape tape;
    int z = model.regressor.mlp.forward(tape, tape.constant(in));
    Tensor z_val = tape.val(z);
    Tensor padded(1, 8);
    std::copy(z_val.data.begin(), z_val.data.end(), padded.data.begin());
    for (std::size_t i = 3; i < 8; ++i) CHECK(padded.data[i] == 0.0);
    Tensor by_hand = model.inv_ae.decode(padded);

    auto pred = rom_infer(model, 0.3, {0.4, 0.6});
    REQUIRE(pred.size() == 8);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(pred[i] == doctest::Approx(by_hand.data[i]).epsilon(1e-14));
}

TEST_CASE("untrained model refuses to infer") {
    RomModel model = toy_model(RomVariant::InvDlrom, 8, 3, 19);
    CHECK_THROWS_AS(rom_infer(model, 0.1, {0.2, 0.3}), std::logic_error);
}

TEST_CASE("training reduces the loss and enables full-trajectory inference") {
    SnapshotMatrix train = toy_matrix(8, 3, 16, 23);
    SnapshotMatrix valid = toy_matrix(8, 1, 16, 29);
    RomModel model = toy_model(RomVariant::InvDlrom, 8, 2, 31);

    std::vector<std::size_t> all_idx(train.cols);
    std::iota(all_idx.begin(), all_idx.end(), 0);

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.patience = 40;
    cfg.batch_size = 16;
    cfg.lr = 1e-3;
    cfg.seed = 5;
    auto hist = train_rom(model, train, valid, cfg);
    REQUIRE(hist.rows.size() > 1);
    CHECK(hist.rows.back().train_loss < hist.rows.front().train_loss);
    CHECK(model.trained);

    // Full predicted trajectory at an unseen parameter: no FOM involved.
    for (std::size_t k = 1; k <= 16; ++k) {
        auto pred = rom_infer(model, 0.1 * (double)k, {1.0, 2.0});
        CHECK(pred.size() == 8);
        for (double v : pred) CHECK(std::isfinite(v));
    }
}

TEST_CASE("pod variant decodes through the basis") {
    SnapshotMatrix data = toy_matrix(12, 2, 8, 37);
    PodBasis basis = compute_pod(data, 4);
    SnapshotMatrix coeffs = pod_project_matrix(basis, data);

    RomModel model = toy_model(RomVariant::PodInvDlrom, 4, 2, 41);
    model.pod = basis;
    model.norm = Normalizer::fit(coeffs);
    SnapshotMatrix coeffs_n = coeffs;
    model.norm.normalize(coeffs_n);

    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.patience = 5;
    cfg.batch_size = 8;
    train_rom(model, coeffs_n, coeffs_n, cfg);

    auto pred = rom_infer(model, 0.2, {0.5, 1.5});
    CHECK(pred.size() == 12);  // physical dimension, not r
}

TEST_CASE("pod variants require the basis up front") {
    RomModel model = toy_model(RomVariant::PodInvDlrom, 4, 2, 43);
    SnapshotMatrix data = toy_matrix(4, 1, 4, 47);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.patience = 1;
    CHECK_THROWS_AS(train_rom(model, data, data, cfg), std::invalid_argument);
}
