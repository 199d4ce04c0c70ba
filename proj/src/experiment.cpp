#include "invrom/experiment.hpp"

#include <cblas.h>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace invrom {

namespace {

namespace fs = std::filesystem;

void check_known_keys(const nlohmann::json& obj, const std::string& section,
                      const std::vector<std::string>& known) {
    if (!obj.is_object())
        throw ConfigError("config section '" + section + "' must be an object");
    std::string offending;
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            offending += (offending.empty() ? "" : ", ") + section + "." + key;
    }
    if (!offending.empty())
        throw ConfigError("unknown config keys: " + offending);
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, T def) {
    if (!obj.contains(key)) return def;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    check_known_keys(doc, "", {"fom", "split", "pod", "model", "train", "output"});
    ExperimentConfig cfg;
    cfg.raw_dump = doc.dump();

    if (doc.contains("fom")) {
        const auto& fom = doc["fom"];
        check_known_keys(fom, "fom",
                         {"kind", "path", "train", "valid", "test", "n_cells", "dt",
                          "t_final", "domain_length", "source_scale", "newton_tol",
                          "newton_max_iters"});
        cfg.fom_kind = get_or<std::string>(fom, "kind", "burgers");
        if (cfg.fom_kind != "burgers" && cfg.fom_kind != "file")
            throw ConfigError("fom.kind must be 'burgers' or 'file'");
        cfg.data_dir = get_or<std::string>(fom, "path", "");
        cfg.train_path = get_or<std::string>(fom, "train", "");
        cfg.valid_path = get_or<std::string>(fom, "valid", "");
        cfg.test_path = get_or<std::string>(fom, "test", "");
        cfg.burgers.n_cells = get_or<std::size_t>(fom, "n_cells", 256);
        cfg.burgers.dt = get_or<double>(fom, "dt", 0.07);
        cfg.burgers.t_final = get_or<double>(fom, "t_final", 35.0);
        cfg.burgers.domain_length = get_or<double>(fom, "domain_length", 100.0);
        cfg.burgers.source_scale = get_or<double>(fom, "source_scale", 0.02);
        cfg.burgers.newton_tol = get_or<double>(fom, "newton_tol", 1e-10);
        cfg.burgers.newton_max_iters = get_or<int>(fom, "newton_max_iters", 50);
    }
    if (doc.contains("split")) {
        check_known_keys(doc["split"], "split", {"seed"});
        cfg.split_seed = get_or<std::uint64_t>(doc["split"], "seed", 0);
    }
    if (doc.contains("pod")) {
        check_known_keys(doc["pod"], "pod", {"r"});
        cfg.pod_r = get_or<std::size_t>(doc["pod"], "r", 0);
    }
    if (doc.contains("model")) {
        const auto& model = doc["model"];
        check_known_keys(model, "model",
                         {"variant", "n", "spectral_norm", "alpha", "n_layers",
                          "hidden", "baseline_widths", "regressor_widths"});
        cfg.model_kind = get_or<std::string>(model, "variant", "inv_ae");
        static const std::vector<std::string> kinds{
            "inv_ae", "ae", "pod_inv_ae", "pod_ae",
            "dlrom",  "pod_dlrom", "inv_dlrom", "pod_inv_dlrom"};
        if (std::find(kinds.begin(), kinds.end(), cfg.model_kind) == kinds.end())
            throw ConfigError("unknown model.variant: " + cfg.model_kind);
        cfg.latent_dim = get_or<std::size_t>(model, "n", 0);
        cfg.spectral_norm = get_or<bool>(model, "spectral_norm", false);
        cfg.alpha = get_or<double>(model, "alpha", 0.5);
        if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
            throw ConfigError("model.alpha must lie in [0,1]");
        cfg.n_layers = get_or<std::size_t>(model, "n_layers", 5);
        cfg.hidden = get_or<std::size_t>(model, "hidden", 512);
        cfg.baseline_widths = get_or<std::vector<std::size_t>>(
            model, "baseline_widths", cfg.baseline_widths);
        cfg.regressor_widths = get_or<std::vector<std::size_t>>(
            model, "regressor_widths", cfg.regressor_widths);
    }
    if (doc.contains("train")) {
        const auto& train = doc["train"];
        check_known_keys(train, "train",
                         {"epochs", "lr", "weight_decay", "patience", "batch_size",
                          "seed", "max_batches_per_epoch", "valid_subset",
                          "eval_every", "verbose"});
        cfg.train.epochs = get_or<std::size_t>(train, "epochs", 1000);
        cfg.train.lr = get_or<double>(train, "lr", 1e-4);
        cfg.train.weight_decay = get_or<double>(train, "weight_decay", 1e-4);
        cfg.train.patience = get_or<std::size_t>(train, "patience", 500);
        cfg.train.batch_size = get_or<std::size_t>(train, "batch_size", 128);
        cfg.train.seed = get_or<std::uint64_t>(train, "seed", 0);
        cfg.train.max_batches_per_epoch =
            get_or<std::size_t>(train, "max_batches_per_epoch", 0);
        cfg.train.valid_subset = get_or<std::size_t>(train, "valid_subset", 0);
        cfg.train.eval_every = get_or<std::size_t>(train, "eval_every", 1);
        cfg.train.verbose = get_or<bool>(train, "verbose", false);
        if (cfg.train.patience > cfg.train.epochs && cfg.train.epochs > 0)
            throw ConfigError("train.patience exceeds train.epochs");
    }
    if (doc.contains("output")) {
        check_known_keys(doc["output"], "output", {"dir"});
        cfg.output_dir = get_or<std::string>(doc["output"], "dir", "out");
    }
    cfg.train.alpha = cfg.alpha;

    if (const char* env_seed = std::getenv("INVROM_SEED")) {
        cfg.train.seed = std::strtoull(env_seed, nullptr, 10);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(doc);
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : cfg.raw_dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

bool model_kind_uses_pod(const std::string& kind) {
    return kind.rfind("pod_", 0) == 0;
}
bool model_kind_is_rom(const std::string& kind) {
    return kind.size() >= 5 && kind.substr(kind.size() - 5) == "dlrom";
}
bool model_kind_is_inv(const std::string& kind) {
    return kind.find("inv") != std::string::npos;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    Dataset d;
    if (cfg.fom_kind == "file") {
        if (cfg.train_path.empty() || cfg.valid_path.empty() || cfg.test_path.empty())
            throw ConfigError("fom.kind=file requires fom.train/valid/test paths");
        d.train = read_snap(cfg.train_path);
        d.valid = read_snap(cfg.valid_path);
        d.test = read_snap(cfg.test_path);
        return d;
    }
    if (cfg.data_dir.empty())
        throw ConfigError("fom.path (dataset directory) is required");
    d.train = read_snap(cfg.data_dir + "/train.snap");
    d.valid = read_snap(cfg.data_dir + "/valid.snap");
    d.test = read_snap(cfg.data_dir + "/test.snap");
    return d;
}

namespace {

/// POD basis cache in the output directory: recomputing is deterministic,
/// loading is faster on sweep resume.
PodBasis pod_for_run(const ExperimentConfig& cfg, const SnapshotMatrix& train) {
    if (cfg.pod_r == 0)
        throw ConfigError("pod.r must be set for POD-prefixed models");
    const fs::path cache =
        fs::path(cfg.output_dir) / ("pod_r" + std::to_string(cfg.pod_r) + ".podb");
    if (fs::exists(cache)) {
        try {
            PodBasis basis = read_pod(cache.string());
            if (basis.n == train.rows && basis.r == cfg.pod_r) return basis;
        } catch (const IoError&) { /* recompute below */ }
    }
    PodBasis basis = compute_pod(train, cfg.pod_r);
    write_pod(cache.string(), basis);
    return basis;
}

/// Physical-units AE round trip used by the projection error.
BatchReconstructFn make_reconstruct_fn(const std::function<Tensor(const Tensor&)>& ae,
                                       const Normalizer& norm, const PodBasis* pod) {
    return [ae, norm, pod](const Tensor& batch) {
        Tensor work = batch;
        if (pod) {
            // u is column-major n x r, i.e. a row-major r x n buffer (ld n).
            Tensor coeffs((std::size_t)batch.rows(), pod->r);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)batch.rows(),
                        (int)pod->r, (int)pod->n, 1.0, batch.data.data(), (int)pod->n,
                        pod->u.data(), (int)pod->n, 0.0, coeffs.data.data(),
                        (int)pod->r);
            work = std::move(coeffs);
        }
        for (auto& v : work.data) v = norm.scale(v);
        Tensor rec = ae(work);
        for (auto& v : rec.data) v = norm.unscale(v);
        if (pod) {
            Tensor out((std::size_t)batch.rows(), pod->n);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)batch.rows(),
                        (int)pod->n, (int)pod->r, 1.0, rec.data.data(), (int)pod->r,
                        pod->u.data(), (int)pod->n, 0.0, out.data.data(), (int)pod->n);
            return out;
        }
        return rec;
    };
}

}  // namespace

RunResult run_single(const ExperimentConfig& cfg, const Dataset& data, std::size_t n) {
    const auto t_start = std::chrono::steady_clock::now();
    RunResult result;
    result.model_kind = cfg.model_kind;
    result.manifold_dim = n;
    result.seed = cfg.train.seed;
    result.family = model_kind_is_inv(cfg.model_kind) ? "inv" : "dense";
    if (cfg.spectral_norm) result.family += "+sn";

    fs::create_directories(cfg.output_dir);

    const bool use_pod = model_kind_uses_pod(cfg.model_kind);
    const bool is_rom = model_kind_is_rom(cfg.model_kind);
    const bool is_inv = model_kind_is_inv(cfg.model_kind);

    std::optional<PodBasis> basis;
    SnapshotMatrix train_m, valid_m;
    if (use_pod) {
        basis = pod_for_run(cfg, data.train);
        train_m = pod_project_matrix(*basis, data.train);
        valid_m = pod_project_matrix(*basis, data.valid);
    } else {
        train_m = data.train;
        valid_m = data.valid;
    }
    const std::size_t full_dim = train_m.rows;
    if (n > full_dim)
        throw ConfigError("model.n=" + std::to_string(n) + " exceeds dimension " +
                          std::to_string(full_dim));

    Normalizer norm = Normalizer::fit(train_m);
    norm.normalize(train_m);
    norm.normalize(valid_m);

    TrainConfig tcfg = cfg.train;
    const std::string tag = cfg.model_kind + "_n" + std::to_string(n) + "_seed" +
                            std::to_string(cfg.train.seed);
    const std::string ckpt = (fs::path(cfg.output_dir) / (tag + ".ckpt")).string();

    if (!is_rom) {
        TrainHistory hist;
        BatchReconstructFn recon_fn;
        if (is_inv) {
            InvAutoencoder model(full_dim, n, cfg.n_layers, cfg.hidden, cfg.train.seed);
            if (cfg.spectral_norm) model.net().set_spectral_norm(true);
            hist = train_autoencoder(model, train_m, valid_m, tcfg);
            save_inv_ae(ckpt, model, norm);
            recon_fn = make_reconstruct_fn(
                [model = std::move(model)](const Tensor& b) { return model.reconstruct(b); },
                norm, basis ? &*basis : nullptr);
        } else {
            BaselineAe model(full_dim, n, cfg.baseline_widths, cfg.train.seed);
            hist = train_autoencoder(model, train_m, valid_m, tcfg);
            save_baseline_ae(ckpt, model, norm);
            recon_fn = make_reconstruct_fn(
                [model = std::move(model)](const Tensor& b) { return model.reconstruct(b); },
                norm, basis ? &*basis : nullptr);
        }
        result.projection_error = projection_error(data.test, recon_fn).mean;
        result.epochs_trained = hist.epochs_trained;
    } else {
        RomModel model;
        model.variant = variant_from_name(cfg.model_kind);
        model.mask = {full_dim, n};
        model.norm = norm;
        if (use_pod) model.pod = *basis;
        if (is_inv) {
            model.inv_ae =
                InvAutoencoder(full_dim, n, cfg.n_layers, cfg.hidden, cfg.train.seed);
            if (cfg.spectral_norm) model.inv_ae.net().set_spectral_norm(true);
        } else {
            model.base_ae =
                BaselineAe(full_dim, n, cfg.baseline_widths, cfg.train.seed);
        }
        model.regressor = LatentRegressor::make(
            train_m.param_dim, n, cfg.regressor_widths, cfg.train.seed ^ 0x5bd1e995u);
        TrainHistory hist = train_rom(model, train_m, valid_m, tcfg);
        save_rom(ckpt, model);

        result.reduction_error =
            reduction_error(data.test, [&](double t, const std::vector<double>& mu) {
                return rom_infer(model, t, mu);
            }).mean;
        auto recon_fn = make_reconstruct_fn(
            [&model](const Tensor& b) {
                Tape tape;
                return tape.val(model.reconstruct(tape, tape.constant(b)));
            },
            norm, basis ? &*basis : nullptr);
        result.projection_error = projection_error(data.test, recon_fn).mean;
        result.epochs_trained = hist.epochs_trained;
    }

    result.checkpoint_path = ckpt;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
}

std::string csv_header() {
    return "model,variant,manifold_dim,seed,projection_error,reduction_error,"
           "epochs_trained,wall_seconds,config_hash";
}

namespace {
std::string fmt_err(double v) {
    if (v < 0.0) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
}  // namespace

std::string csv_row(const RunResult& r, const std::string& hash) {
    std::ostringstream out;
    out << r.model_kind << ',' << r.family << ',' << r.manifold_dim << ',' << r.seed
        << ',' << fmt_err(r.projection_error) << ',' << fmt_err(r.reduction_error)
        << ',' << r.epochs_trained << ',' << std::fixed << std::setprecision(3)
        << r.wall_seconds << ',' << hash;
    return out.str();
}

bool csv_has_row(const std::string& csv_path, const std::string& model_kind,
                 std::size_t n, std::uint64_t seed, const std::string& hash) {
    std::ifstream f(csv_path);
    if (!f) return false;
    const std::string prefix = model_kind + ",";
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind(prefix, 0) != 0) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 9) continue;
        if (fields[2] == std::to_string(n) && fields[3] == std::to_string(seed) &&
            fields[8] == hash)
            return true;
    }
    return false;
}

void csv_append(const std::string& csv_path, const std::string& row) {
    const bool fresh = !fs::exists(csv_path);
    std::ofstream f(csv_path, std::ios::app);
    if (!f) throw IoError("cannot append to " + csv_path);
    if (fresh) f << csv_header() << "\n";
    f << row << "\n";
}

int run_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& dims,
              int jobs) {
    fs::create_directories(cfg.output_dir);
    const std::string csv_path = (fs::path(cfg.output_dir) / "errors.csv").string();
    const std::string hash = config_hash(cfg);
    const Dataset data = load_dataset(cfg);

    std::vector<std::size_t> todo;
    for (std::size_t n : dims) {
        if (csv_has_row(csv_path, cfg.model_kind, n, cfg.train.seed, hash)) {
            std::cout << "skip " << cfg.model_kind << " n=" << n
                      << " (already in errors.csv)\n";
            continue;
        }
        todo.push_back(n);
    }

    std::mutex csv_mutex;
    std::atomic<int> failures{0};
    std::atomic<std::size_t> next{0};
    if (jobs > 1) openblas_set_num_threads(1);

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) break;
            const std::size_t n = todo[i];
            try {
                RunResult r = run_single(cfg, data, n);
                std::lock_guard<std::mutex> lock(csv_mutex);
                csv_append(csv_path, csv_row(r, hash));
                std::cout << cfg.model_kind << " n=" << n
                          << " proj=" << fmt_err(r.projection_error)
                          << " red=" << fmt_err(r.reduction_error) << " ("
                          << r.wall_seconds << " s)\n";
            } catch (const std::exception& e) {
                ++failures;
                std::lock_guard<std::mutex> lock(csv_mutex);
                std::cerr << "sweep: n=" << n << " failed: " << e.what() << "\n";
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return failures.load();
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& test_path,
                               const std::string& pod_path) {
    EvalResult result;
    const SnapshotMatrix test = read_snap(test_path);
    const std::string magic = peek_magic(checkpoint_path);

    std::optional<PodBasis> basis;
    if (!pod_path.empty()) basis = read_pod(pod_path);

    if (magic == "PODBAS01") {
        PodBasis pod = read_pod(checkpoint_path);
        result.kind = "pod";
        result.manifold_dim = pod.r;
        auto fn = make_reconstruct_fn([](const Tensor& b) { return b; }, Normalizer{},
                                      &pod);
        result.projection_error = projection_error(test, fn).mean;
        return result;
    }
    if (magic == "INVAE001") {
        Normalizer norm;
        InvAutoencoder model = load_inv_ae(checkpoint_path, &norm);
        result.kind = "inv_ae";
        result.manifold_dim = model.mask().n;
        auto fn = make_reconstruct_fn(
            [&model](const Tensor& b) { return model.reconstruct(b); }, norm,
            basis ? &*basis : nullptr);
        result.projection_error = projection_error(test, fn).mean;
        return result;
    }
    if (magic == "DAE00001") {
        Normalizer norm;
        BaselineAe model = load_baseline_ae(checkpoint_path, &norm);
        result.kind = "ae";
        result.manifold_dim = model.mask().n;
        auto fn = make_reconstruct_fn(
            [&model](const Tensor& b) { return model.reconstruct(b); }, norm,
            basis ? &*basis : nullptr);
        result.projection_error = projection_error(test, fn).mean;
        return result;
    }
    if (magic == "ROMBDL01") {
        RomModel model = load_rom(checkpoint_path);
        result.kind = variant_name(model.variant);
        result.manifold_dim = model.mask.n;
        result.reduction_error =
            reduction_error(test, [&](double t, const std::vector<double>& mu) {
                return rom_infer(model, t, mu);
            }).mean;
        auto fn = make_reconstruct_fn(
            [&model](const Tensor& b) {
                Tape tape;
                return tape.val(model.reconstruct(tape, tape.constant(b)));
            },
            model.norm, model.pod ? &*model.pod : nullptr);
        result.projection_error = projection_error(test, fn).mean;
        return result;
    }
    throw BadMagicError("unrecognized checkpoint magic: " + magic);
}

}  // namespace invrom
