#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "invrom/experiment.hpp"

namespace fs = std::filesystem;
using namespace invrom;

namespace {

std::vector<Trajectory> solve_many(const std::vector<std::array<double, 2>>& params,
                                   const BurgersConfig& cfg, int jobs) {
    std::vector<Trajectory> out(params.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= params.size() || failed.load()) break;
            try {
                out[i] = burgers_solve(params[i][0], params[i][1], cfg);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const int n_jobs = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int j = 0; j < n_jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load()) throw NumericalError(first_error);
    return out;
}

int cmd_simulate(const std::string& out_path, bool grid, const std::string& mu_str,
                 const BurgersConfig& cfg, int jobs) {
    std::vector<std::array<double, 2>> params;
    if (grid) {
        params = build_burgers_grid();
        params.push_back({4.3, 0.021});
        params.push_back({5.15, 0.0285});
    } else {
        const auto comma = mu_str.find(',');
        if (comma == std::string::npos)
            throw ConfigError("--mu expects 'mu1,mu2', got: " + mu_str);
        params.push_back({std::stod(mu_str.substr(0, comma)),
                          std::stod(mu_str.substr(comma + 1))});
    }
    std::cout << "solving " << params.size() << " trajectories (" << cfg.n_cells
              << " cells, " << cfg.n_steps() << " steps)...\n";
    auto trajectories = solve_many(params, cfg, jobs);
    int max_newton = 0;
    for (const auto& tr : trajectories)
        max_newton = std::max(max_newton, tr.max_newton_iters);
    write_snap(out_path, assemble(trajectories));
    std::cout << "wrote " << out_path << " (" << trajectories.size()
              << " trajectories, max Newton iters " << max_newton << ")\n";
    return 0;
}

int cmd_make_dataset(const std::string& in_path, const std::string& out_dir,
                     std::uint64_t seed, std::size_t valid_count,
                     std::size_t test_count) {
    SnapshotMatrix all = read_snap(in_path);
    if (all.nt == 0 || all.cols % all.nt != 0)
        throw ConfigError("input file lacks trajectory structure (nt)");
    std::vector<std::array<double, 2>> traj_params;
    std::vector<std::vector<double>> traj_params_full;
    for (std::size_t j = 0; j < all.cols; j += all.nt) {
        traj_params_full.push_back(all.meta[j].mu);
        if (all.meta[j].mu.size() == 2)
            traj_params.push_back({all.meta[j].mu[0], all.meta[j].mu[1]});
    }

    // The Burgers protocol applies when the file holds exactly the 10x8 grid
    // plus the two held-out test parameters.
    const auto grid = build_burgers_grid();
    bool burgers_layout = traj_params.size() == 82;
    if (burgers_layout) {
        for (std::size_t i = 0; i < 80 && burgers_layout; ++i)
            burgers_layout = traj_params[i] == grid[i];
        if (burgers_layout)
            burgers_layout = traj_params[80] == std::array<double, 2>{4.3, 0.021} &&
                             traj_params[81] == std::array<double, 2>{5.15, 0.0285};
    }

    std::vector<std::array<double, 2>> train_p, valid_p, test_p;
    if (burgers_layout) {
        SplitSpec spec = split_burgers(grid, seed);
        train_p = spec.train_params;
        valid_p = spec.valid_params;
        test_p = spec.test_params;
        std::cout << "burgers layout detected: 72 train / 8 valid / 2 test\n";
    } else {
        if (traj_params_full.size() < valid_count + test_count + 1)
            throw ConfigError("not enough trajectories to split");
        std::vector<std::size_t> idx(traj_params_full.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        auto as_pair = [&](std::size_t i) {
            const auto& mu = traj_params_full[i];
            return std::array<double, 2>{mu[0], mu.size() > 1 ? mu[1] : 0.0};
        };
        (void)as_pair;
        std::vector<std::size_t> v_idx(idx.begin(), idx.begin() + (std::ptrdiff_t)valid_count);
        std::vector<std::size_t> t_idx(idx.begin() + (std::ptrdiff_t)valid_count,
                                       idx.begin() + (std::ptrdiff_t)(valid_count + test_count));
        std::vector<std::size_t> tr_idx(idx.begin() + (std::ptrdiff_t)(valid_count + test_count),
                                        idx.end());
        // Select columns trajectory-wise below using full parameter vectors.
        auto pick = [&](const std::vector<std::size_t>& which) {
            SnapshotMatrix out;
            out.rows = all.rows;
            out.nt = all.nt;
            out.param_dim = all.param_dim;
            out.dt = all.dt;
            out.t0 = all.t0;
            out.cols = which.size() * all.nt;
            out.data.resize(out.rows * out.cols);
            std::size_t jj = 0;
            for (std::size_t w : which)
                for (std::size_t k = 0; k < all.nt; ++k, ++jj) {
                    const std::size_t src = w * all.nt + k;
                    std::copy(all.col(src), all.col(src) + all.rows, out.col(jj));
                    out.meta.push_back(all.meta[src]);
                }
            return out;
        };
        std::sort(tr_idx.begin(), tr_idx.end());
        std::sort(v_idx.begin(), v_idx.end());
        std::sort(t_idx.begin(), t_idx.end());
        fs::create_directories(out_dir);
        write_snap(out_dir + "/train.snap", pick(tr_idx));
        write_snap(out_dir + "/valid.snap", pick(v_idx));
        write_snap(out_dir + "/test.snap", pick(t_idx));
        std::cout << "generic split: " << tr_idx.size() << " train / " << v_idx.size()
                  << " valid / " << t_idx.size() << " test trajectories\n";
        return 0;
    }

    fs::create_directories(out_dir);
    write_snap(out_dir + "/train.snap", select_by_params(all, train_p));
    write_snap(out_dir + "/valid.snap", select_by_params(all, valid_p));
    write_snap(out_dir + "/test.snap", select_by_params(all, test_p));
    return 0;
}

int cmd_pod(const std::string& train_path, std::size_t r, const std::string& out_path,
            const std::string& test_path) {
    SnapshotMatrix train = read_snap(train_path);
    PodBasis basis = compute_pod(train, r);
    write_pod(out_path, basis);
    std::cout << "wrote " << out_path << " (r=" << r
              << ", sigma_max=" << basis.singular_values.front() << ")\n";
    if (!test_path.empty()) {
        EvalResult ev = evaluate_checkpoint(out_path, test_path);
        std::cout << "pod r=" << r << " projection_error=" << ev.projection_error
                  << "\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, std::size_t n_override) {
    ExperimentConfig cfg = load_config(config_path);
    if (n_override > 0) cfg.latent_dim = n_override;
    if (cfg.latent_dim == 0) throw ConfigError("model.n must be positive");
    const Dataset data = load_dataset(cfg);
    const std::string hash = config_hash(cfg);
    fs::create_directories(cfg.output_dir);
    const std::string csv_path = cfg.output_dir + "/errors.csv";
    RunResult r = run_single(cfg, data, cfg.latent_dim);
    csv_append(csv_path, csv_row(r, hash));
    std::cout << csv_header() << "\n" << csv_row(r, hash) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& dims_str, int jobs) {
    ExperimentConfig cfg = load_config(config_path);
    std::vector<std::size_t> dims;
    std::stringstream ss(dims_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) dims.push_back(std::stoull(tok));
    if (dims.empty()) throw ConfigError("--dims is empty");
    const int failures = run_sweep(cfg, dims, jobs);
    if (failures > 0)
        std::cerr << failures << " dimension(s) failed; see errors above\n";
    return 0;  // per-row failures are recorded, the sweep itself succeeded
}

int cmd_evaluate(const std::string& ckpt, const std::string& test_path,
                 const std::string& pod_path, const std::string& csv_path) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalResult ev = evaluate_checkpoint(ckpt, test_path, pod_path);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << ev.kind << " n=" << ev.manifold_dim;
    if (ev.projection_error >= 0) std::cout << " projection_error=" << ev.projection_error;
    if (ev.reduction_error >= 0) std::cout << " reduction_error=" << ev.reduction_error;
    std::cout << " (" << wall << " s)\n";
    if (!csv_path.empty()) {
        RunResult r;
        r.model_kind = ev.kind;
        r.family = "eval";
        r.manifold_dim = ev.manifold_dim;
        r.projection_error = ev.projection_error;
        r.reduction_error = ev.reduction_error;
        r.wall_seconds = wall;
        ExperimentConfig pseudo;
        pseudo.raw_dump = ckpt + "|" + test_path;
        csv_append(csv_path, csv_row(r, config_hash(pseudo)));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invrom: invertible-autoencoder model reduction experiments"};
    app.require_subcommand(1);

    // simulate-burgers
    auto* sim = app.add_subcommand("simulate-burgers", "solve Burgers trajectories");
    std::string sim_out, sim_mu;
    bool sim_grid = false;
    int sim_jobs = (int)std::thread::hardware_concurrency();
    BurgersConfig bcfg;
    sim->add_option("--out", sim_out, "output snapshot file")->required();
    sim->add_flag("--grid", sim_grid, "solve the 80-parameter grid plus both test points");
    sim->add_option("--mu", sim_mu, "single parameter pair 'mu1,mu2'");
    sim->add_option("--jobs", sim_jobs, "parallel trajectory solves");
    sim->add_option("--n-cells", bcfg.n_cells);
    sim->add_option("--dt", bcfg.dt);
    sim->add_option("--t-final", bcfg.t_final);
    sim->add_option("--source-scale", bcfg.source_scale);

    // make-dataset
    auto* mk = app.add_subcommand("make-dataset", "split snapshots into train/valid/test");
    std::string mk_in, mk_out;
    std::uint64_t mk_seed = 0;
    std::size_t mk_valid = 8, mk_test = 2;
    mk->add_option("--in", mk_in, "input snapshot file")->required();
    mk->add_option("--out", mk_out, "output dataset directory")->required();
    mk->add_option("--seed", mk_seed, "validation-split seed");
    mk->add_option("--valid-count", mk_valid, "validation trajectories (generic layout)");
    mk->add_option("--test-count", mk_test, "test trajectories (generic layout)");

    // pod
    auto* pod = app.add_subcommand("pod", "compute a POD basis");
    std::string pod_train, pod_out, pod_test;
    std::size_t pod_r = 0;
    pod->add_option("--train", pod_train, "training snapshot file")->required();
    pod->add_option("--r", pod_r, "number of modes")->required();
    pod->add_option("--out", pod_out, "output basis file")->required();
    pod->add_option("--test", pod_test, "optional test file to report projection error");

    // train
    auto* train = app.add_subcommand("train", "train one model from a config");
    std::string train_cfg;
    std::size_t train_n = 0;
    train->add_option("--config", train_cfg, "experiment config JSON")->required();
    train->add_option("--n", train_n, "override model.n");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train across manifold dimensions");
    std::string sweep_cfg, sweep_dims;
    int sweep_jobs = 1;
    sweep->add_option("--config", sweep_cfg, "experiment config JSON")->required();
    sweep->add_option("--dims", sweep_dims, "comma-separated manifold dimensions")
        ->required();
    sweep->add_option("--jobs", sweep_jobs, "concurrent training jobs");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on a test file");
    std::string ev_ckpt, ev_test, ev_pod, ev_csv;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--test", ev_test)->required();
    ev->add_option("--pod", ev_pod, "POD basis for POD-prefixed AE checkpoints");
    ev->add_option("--csv", ev_csv, "append an ErrorReport row here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints help/error
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            if (!sim_grid && sim_mu.empty())
                throw ConfigError("simulate-burgers needs --grid or --mu");
            return cmd_simulate(sim_out, sim_grid, sim_mu, bcfg, sim_jobs);
        }
        if (mk->parsed()) return cmd_make_dataset(mk_in, mk_out, mk_seed, mk_valid, mk_test);
        if (pod->parsed()) return cmd_pod(pod_train, pod_r, pod_out, pod_test);
        if (train->parsed()) return cmd_train(train_cfg, train_n);
        if (sweep->parsed()) return cmd_sweep(sweep_cfg, sweep_dims, sweep_jobs);
        if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_test, ev_pod, ev_csv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
