#pragma once

#include <array>
#include <optional>
#include <string>

#include "invrom/autoencoder.hpp"
#include "invrom/pod.hpp"

namespace invrom {

enum class RomVariant { Dlrom, PodDlrom, InvDlrom, PodInvDlrom };

std::string variant_name(RomVariant v);
RomVariant variant_from_name(const std::string& name);
bool variant_uses_pod(RomVariant v);
bool variant_uses_invnet(RomVariant v);

/// Feedforward map (t, mu) -> latent coordinates, with affine input
/// normalization to [0,1] fitted on the training ranges.
struct LatentRegressor {
    Mlp mlp;
    std::vector<double> in_lo, in_hi;  // per input component (t first)

    /// widths exclude the input layer; default {128,128,128,128, n}.
    static LatentRegressor make(std::size_t param_dim, std::size_t latent_dim,
                                const std::vector<std::size_t>& hidden,
                                std::uint64_t seed);
    /// Row (t, mu...) mapped into [0,1]^d by the stored ranges.
    void normalize_input(double t, const std::vector<double>& mu, double* out) const;
    std::size_t in_dim() const { return in_lo.size(); }
};

/// A trained (or trainable) reduced-order model: optional POD pre-reduction,
/// an invertible or dense autoencoder, and the latent regressor.
struct RomModel {
    RomVariant variant = RomVariant::InvDlrom;
    MaskSpec mask;                    // over the AE's full_dim (N or r)
    std::optional<PodBasis> pod;
    InvAutoencoder inv_ae;            // active when variant_uses_invnet
    BaselineAe base_ae;               // active otherwise
    LatentRegressor regressor;
    Normalizer norm;                  // fitted on what the AE consumes
    bool trained = false;

    void collect_params(std::vector<Tensor*>& out);
    /// AE round trip on a normalized batch (tape ids), used by the loss.
    int reconstruct(Tape& tape, int x) const;
    /// First n components of the encoder output.
    int encode_latent(Tape& tape, int x) const;
    /// Decoder applied to a zero-padded latent batch.
    int decode_padded(Tape& tape, int z_lat) const;
};

/// Two-term DL-ROM loss over the given columns of a normalized matrix:
/// mean of alpha/2 ||x - psi(xi)||^2 + (1-alpha)/2 ||phi(x)_latent - xi||^2.
/// Throws std::invalid_argument when alpha is outside [0, 1].
int rom_loss_node(RomModel& model, Tape& tape, const SnapshotMatrix& x_norm,
                  const std::size_t* idx, std::size_t count, double alpha);
double rom_loss(RomModel& model, const SnapshotMatrix& x_norm,
                const std::vector<std::size_t>& idx, double alpha);

/// Joint AdamW optimization of AE and regressor parameters on the DL-ROM
/// loss. For POD variants the matrices must already be POD coefficients;
/// `model.norm` must be fitted on the training matrix beforehand and both
/// inputs normalized with it.
TrainHistory train_rom(RomModel& model, const SnapshotMatrix& x_train_norm,
                       const SnapshotMatrix& x_valid_norm, const TrainConfig& cfg);

/// Online phase: physical-units prediction at (t, mu). Never touches the
/// FOM, the encoder, or any training matrix.
std::vector<double> rom_infer(const RomModel& model, double t,
                              const std::vector<double>& mu);

}  // namespace invrom
