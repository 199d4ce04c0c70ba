#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invrom/checkpoint.hpp"
#include "invrom/container.hpp"
#include "invrom/metrics.hpp"

namespace invrom {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed experiment configuration (see README for the JSON schema). Unknown
/// keys anywhere in the document are rejected.
struct ExperimentConfig {
    // fom
    std::string fom_kind = "burgers";  // "burgers" | "file"
    std::string data_dir;              // dataset directory (train/valid/test.snap)
    std::string train_path, valid_path, test_path;  // "file" mode overrides
    BurgersConfig burgers;
    // split
    std::uint64_t split_seed = 0;
    // pod
    std::size_t pod_r = 0;
    // model
    std::string model_kind = "inv_ae";
    std::size_t latent_dim = 0;
    bool spectral_norm = false;
    double alpha = 0.5;
    std::size_t n_layers = 5;
    std::size_t hidden = 512;
    std::vector<std::size_t> baseline_widths{256, 128, 64};
    std::vector<std::size_t> regressor_widths{128, 128, 128, 128};
    // train
    TrainConfig train;
    // output
    std::string output_dir = "out";

    std::string raw_dump;  // canonical JSON of the loaded file (hash input)
};

/// Load + schema-validate a config file. INVROM_SEED (env), when set,
/// overrides train.seed.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// FNV-1a hash of the canonical config document, 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

bool model_kind_uses_pod(const std::string& kind);
bool model_kind_is_rom(const std::string& kind);
bool model_kind_is_inv(const std::string& kind);

struct Dataset {
    SnapshotMatrix train, valid, test;  // physical units
};
Dataset load_dataset(const ExperimentConfig& cfg);

struct RunResult {
    std::string model_kind;
    std::string family;  // "inv" | "dense" (+"+sn")
    std::size_t manifold_dim = 0;
    std::uint64_t seed = 0;
    double projection_error = -1.0;  // < 0 means not applicable
    double reduction_error = -1.0;
    std::size_t epochs_trained = 0;
    double wall_seconds = 0.0;
    std::string checkpoint_path;
};

/// Train one model at latent dimension n, evaluate it on the test split,
/// write its checkpoint under output.dir and return the row data.
RunResult run_single(const ExperimentConfig& cfg, const Dataset& data, std::size_t n);

// errors.csv plumbing (append-only; completed rows are never rewritten).
std::string csv_header();
std::string csv_row(const RunResult& r, const std::string& hash);
bool csv_has_row(const std::string& csv_path, const std::string& model_kind,
                 std::size_t n, std::uint64_t seed, const std::string& hash);
void csv_append(const std::string& csv_path, const std::string& row);

/// Sweep over manifold dimensions; completed (model, n, seed, hash) rows are
/// skipped. Per-dimension failures are recorded and the sweep continues.
/// Returns the number of failed dimensions.
int run_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& dims,
              int jobs);

struct EvalResult {
    std::string kind;
    std::size_t manifold_dim = 0;
    double projection_error = -1.0;
    double reduction_error = -1.0;
};

/// Evaluate a checkpoint (dispatch on its magic) against a test snapshot
/// file. `pod_path` supplies the basis for POD-prefixed autoencoder
/// checkpoints.
EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& test_path,
                               const std::string& pod_path = "");

}  // namespace invrom
