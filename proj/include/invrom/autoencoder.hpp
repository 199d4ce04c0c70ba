#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "invrom/dataset.hpp"
#include "invrom/invnet.hpp"

namespace invrom {

/// Keep-first-n zero masking.
struct MaskSpec {
    std::size_t full_dim = 0;
    std::size_t n = 0;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    std::size_t patience = 500;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    double alpha = 0.5;  // DL-ROM loss weight; unused by plain autoencoders
    // Desk-scale knobs: 0 means "use everything".
    std::size_t max_batches_per_epoch = 0;  // minibatch steps per epoch
    std::size_t valid_subset = 0;           // validation columns sampled once
    std::size_t eval_every = 1;             // epochs between validation evals
    bool verbose = false;
};

struct TrainHistory {
    struct Row {
        std::size_t epoch;
        double train_loss;
        double valid_loss;
    };
    std::vector<Row> rows;
    std::size_t epochs_trained = 0;
    std::size_t best_epoch = 0;
    double best_valid = std::numeric_limits<double>::infinity();
};

/// Invertible autoencoder: encoder = net forward + zero masking, decoder =
/// exact net inverse. Encoder and decoder share the same parameter storage.
class InvAutoencoder {
public:
    InvAutoencoder() = default;
    InvAutoencoder(std::size_t full_dim, std::size_t latent_dim,
                   std::size_t n_layers = 5, std::size_t hidden = 512,
                   std::uint64_t seed = 0);

    int encode(Tape& tape, int x) const;   // z = mask(net_forward(x))
    int decode(Tape& tape, int z) const;   // x_hat = net_inverse(z)
    int reconstruct(Tape& tape, int x) const { return decode(tape, encode(tape, x)); }

    Tensor encode(const Tensor& x) const;
    Tensor decode(const Tensor& z) const;
    Tensor reconstruct(const Tensor& x) const;

    void collect_params(std::vector<Tensor*>& out) { net_.collect_params(out); }
    std::size_t param_count() const { return net_.param_count(); }

    InvertibleNet& net() { return net_; }
    const InvertibleNet& net() const { return net_; }
    const MaskSpec& mask() const { return mask_; }
    void set_latent_dim(std::size_t n);

private:
    InvertibleNet net_;
    MaskSpec mask_;
};

/// Dense baseline autoencoder with separate encoder/decoder parameters.
class BaselineAe {
public:
    BaselineAe() = default;
    /// Hidden widths default to {256, 128, 64}, mirrored in the decoder.
    BaselineAe(std::size_t full_dim, std::size_t latent_dim,
               std::vector<std::size_t> hidden_widths, std::uint64_t seed);

    int encode(Tape& tape, int x) const { return encoder_.forward(tape, x); }
    int decode(Tape& tape, int z) const { return decoder_.forward(tape, z); }
    int reconstruct(Tape& tape, int x) const { return decode(tape, encode(tape, x)); }

    Tensor reconstruct(const Tensor& x) const;

    void collect_params(std::vector<Tensor*>& out) {
        encoder_.collect_params(out);
        decoder_.collect_params(out);
    }
    std::size_t param_count() const {
        return encoder_.param_count() + decoder_.param_count();
    }
    Mlp& encoder() { return encoder_; }
    Mlp& decoder() { return decoder_; }
    const MaskSpec& mask() const { return mask_; }

private:
    Mlp encoder_, decoder_;
    MaskSpec mask_;
};

/// Copy one column per sample into a [count x rows] row-major batch.
Tensor gather_columns(const SnapshotMatrix& m, const std::size_t* idx,
                      std::size_t count);

/// Generic minibatch AdamW loop with per-epoch validation and early stopping
/// that restores the best-validation parameters. `batch_loss` records the
/// scalar loss for the given column indices on the tape; `pre_step` runs
/// before each optimizer step (spectral-norm power iteration).
TrainHistory run_training(
    std::vector<Tensor*> params,
    const std::function<int(Tape&, const std::size_t*, std::size_t)>& batch_loss,
    std::size_t n_train, const TrainConfig& cfg,
    const std::function<double()>& valid_loss,
    const std::function<void()>& pre_step = {});

/// Reconstruction-loss training (Eq. mean ||x - x_hat||^2) on normalized data.
TrainHistory train_autoencoder(InvAutoencoder& model, const SnapshotMatrix& x_train,
                               const SnapshotMatrix& x_valid, const TrainConfig& cfg);
TrainHistory train_autoencoder(BaselineAe& model, const SnapshotMatrix& x_train,
                               const SnapshotMatrix& x_valid, const TrainConfig& cfg);

}  // namespace invrom
