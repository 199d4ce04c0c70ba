#include "invrom/autoencoder.hpp"

#include <algorithm>

#include "invrom/adamw.hpp"
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <random>

namespace invrom {

InvAutoencoder::InvAutoencoder(std::size_t full_dim, std::size_t latent_dim,
                               std::size_t n_layers, std::size_t hidden,
                               std::uint64_t seed)
    : net_(full_dim, n_layers, hidden, seed), mask_{full_dim, latent_dim} {
    if (latent_dim > full_dim)
        throw std::invalid_argument("inv-ae: latent dim exceeds full dim");
}

void InvAutoencoder::set_latent_dim(std::size_t n) {
    if (n > mask_.full_dim)
        throw std::invalid_argument("inv-ae: latent dim exceeds full dim");
    mask_.n = n;
}

int InvAutoencoder::encode(Tape& tape, int x) const {
    int y = net_.forward(tape, x);
    if (mask_.n == mask_.full_dim) return y;
    const std::size_t rows = tape.val(y).rows();
    int zeros = tape.constant(Tensor(rows, mask_.full_dim - mask_.n));
    if (mask_.n == 0) return zeros;
    return tape.concat_cols(tape.slice_cols(y, 0, mask_.n), zeros);
}

int InvAutoencoder::decode(Tape& tape, int z) const { return net_.inverse(tape, z); }

Tensor InvAutoencoder::encode(const Tensor& x) const {
    Tape tape;
    return tape.val(encode(tape, tape.constant(x)));
}

Tensor InvAutoencoder::decode(const Tensor& z) const {
    Tape tape;
    return tape.val(decode(tape, tape.constant(z)));
}

Tensor InvAutoencoder::reconstruct(const Tensor& x) const {
    Tape tape;
    return tape.val(reconstruct(tape, tape.constant(x)));
}

BaselineAe::BaselineAe(std::size_t full_dim, std::size_t latent_dim,
                       std::vector<std::size_t> hidden_widths, std::uint64_t seed)
    : mask_{full_dim, latent_dim} {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> enc{full_dim};
    enc.insert(enc.end(), hidden_widths.begin(), hidden_widths.end());
    enc.push_back(latent_dim);
    std::vector<std::size_t> dec(enc.rbegin(), enc.rend());
    encoder_ = Mlp::make(enc, rng);
    decoder_ = Mlp::make(dec, rng);
}

Tensor BaselineAe::reconstruct(const Tensor& x) const {
    Tape tape;
    return tape.val(reconstruct(tape, tape.constant(x)));
}

Tensor gather_columns(const SnapshotMatrix& m, const std::size_t* idx,
                      std::size_t count) {
    Tensor batch(count, m.rows);
    for (std::size_t i = 0; i < count; ++i)
        std::memcpy(batch.data.data() + i * m.rows, m.col(idx[i]),
                    m.rows * sizeof(double));
    return batch;
}

TrainHistory run_training(
    std::vector<Tensor*> params,
    const std::function<int(Tape&, const std::size_t*, std::size_t)>& batch_loss,
    std::size_t n_train, const TrainConfig& cfg,
    const std::function<double()>& valid_loss,
    const std::function<void()>& pre_step) {
    TrainHistory hist;
    if (cfg.epochs == 0) return hist;
    if (cfg.patience > cfg.epochs)
        throw std::invalid_argument("train: patience exceeds epoch count");

    AdamW opt(params, cfg.lr, cfg.weight_decay);
    std::mt19937_64 shuffle_rng(cfg.seed);

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::vector<double>> best_params;
    auto snapshot = [&]() {
        best_params.clear();
        for (const Tensor* p : params) best_params.push_back(p->data);
    };
    auto restore = [&]() {
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i]->data = best_params[i];
    };

    Tape tape;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::size_t n_batches = (n_train + cfg.batch_size - 1) / cfg.batch_size;
        if (cfg.max_batches_per_epoch > 0)
            n_batches = std::min(n_batches, cfg.max_batches_per_epoch);

        double train_loss_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t count = std::min(cfg.batch_size, n_train - lo);
            if (pre_step) pre_step();
            int loss = batch_loss(tape, order.data() + lo, count);
            const double loss_value = tape.val(loss).data[0];
            if (!std::isfinite(loss_value))
                throw NumericalError("train: non-finite loss at epoch " +
                                     std::to_string(epoch) + " batch " +
                                     std::to_string(b));
            auto grads = tape.backward(loss);
            try {
                opt.step(grads);
            } catch (const NumericalError& e) {
                throw NumericalError("train: epoch " + std::to_string(epoch) + ": " +
                                     e.what());
            }
            train_loss_sum += loss_value;
        }
        const double train_loss = train_loss_sum / (double)n_batches;

        double vloss = hist.rows.empty() ? std::numeric_limits<double>::infinity()
                                         : hist.rows.back().valid_loss;
        if (epoch % std::max<std::size_t>(cfg.eval_every, 1) == 0 ||
            epoch + 1 == cfg.epochs)
            vloss = valid_loss();
        hist.rows.push_back({epoch, train_loss, vloss});
        hist.epochs_trained = epoch + 1;

        if (vloss < hist.best_valid) {
            hist.best_valid = vloss;
            hist.best_epoch = epoch;
            snapshot();
        }
        if (cfg.verbose && epoch % 50 == 0)
            std::cerr << "epoch " << epoch << " train " << train_loss << " valid "
                      << vloss << "\n";
        if (epoch - hist.best_epoch >= cfg.patience) break;  // early stop
    }
    if (!best_params.empty()) restore();
    return hist;
}

namespace {

/// Shared reconstruction-loss wiring for both autoencoder flavours.
template <class Model>
TrainHistory train_recon(Model& model, const SnapshotMatrix& x_train,
                         const SnapshotMatrix& x_valid, const TrainConfig& cfg,
                         const std::function<void()>& pre_step) {
    std::vector<Tensor*> params;
    model.collect_params(params);

    auto batch_loss = [&](Tape& tape, const std::size_t* idx, std::size_t count) {
        int x = tape.constant(gather_columns(x_train, idx, count));
        int xr = model.reconstruct(tape, x);
        return tape.scale(tape.sum_sq(tape.sub(x, xr)), 1.0 / (double)count);
    };

    // Deterministic validation subset, drawn once.
    std::vector<std::size_t> vidx(x_valid.cols);
    std::iota(vidx.begin(), vidx.end(), 0);
    if (cfg.valid_subset > 0 && cfg.valid_subset < vidx.size()) {
        std::mt19937_64 vrng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(vidx.begin(), vidx.end(), vrng);
        vidx.resize(cfg.valid_subset);
        std::sort(vidx.begin(), vidx.end());
    }
    auto valid_loss = [&]() {
        double total = 0.0;
        Tape tape;
        for (std::size_t lo = 0; lo < vidx.size(); lo += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, vidx.size() - lo);
            int x = tape.constant(gather_columns(x_valid, vidx.data() + lo, count));
            int xr = model.reconstruct(tape, x);
            total += tape.val(tape.sum_sq(tape.sub(x, xr))).data[0];
            tape.reset();
        }
        return vidx.empty() ? 0.0 : total / (double)vidx.size();
    };

    return run_training(std::move(params), batch_loss, x_train.cols, cfg, valid_loss,
                        pre_step);
}

}  // namespace

TrainHistory train_autoencoder(InvAutoencoder& model, const SnapshotMatrix& x_train,
                               const SnapshotMatrix& x_valid, const TrainConfig& cfg) {
    std::function<void()> pre_step;
    if (model.net().spectral_norm_enabled())
        pre_step = [&model]() { model.net().power_iterate(1); };
    return train_recon(model, x_train, x_valid, cfg, pre_step);
}

TrainHistory train_autoencoder(BaselineAe& model, const SnapshotMatrix& x_train,
                               const SnapshotMatrix& x_valid, const TrainConfig& cfg) {
    return train_recon(model, x_train, x_valid, cfg, {});
}

}  // namespace invrom
