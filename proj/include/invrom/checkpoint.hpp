#pragma once

#include <string>

#include "invrom/dlrom.hpp"

namespace invrom {

/// INVAE001: invertible-autoencoder checkpoint. Payload holds the flat f64
/// parameters layer-major (s1, s2, t1, t2; weight then bias per linear). The
/// header carries the architecture plus the data normalizer used in training
/// so the checkpoint evaluates standalone.
void save_inv_ae(const std::string& path, const InvAutoencoder& model,
                 const Normalizer& norm = {});
InvAutoencoder load_inv_ae(const std::string& path, Normalizer* norm_out = nullptr);

/// DAE00001: dense baseline autoencoder checkpoint (encoder then decoder).
void save_baseline_ae(const std::string& path, const BaselineAe& model,
                      const Normalizer& norm = {});
BaselineAe load_baseline_ae(const std::string& path, Normalizer* norm_out = nullptr);

/// ROMBDL01: full ROM bundle (optional POD basis + autoencoder + regressor
/// + normalizer constants) in one container.
void save_rom(const std::string& path, const RomModel& model);
RomModel load_rom(const std::string& path);

}  // namespace invrom
