#include "invrom/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "invrom/tensor.hpp"

namespace invrom {

namespace {

double flux(double u) { return 0.5 * u * u; }

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Solve the tridiagonal system (lo, di, up) z = r in place (Thomas).
void solve_tridiag(std::vector<double>& lo, std::vector<double>& di,
                   std::vector<double>& up, std::vector<double>& r) {
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lo[i] / di[i - 1];
        di[i] -= w * up[i - 1];
        r[i] -= w * r[i - 1];
    }
    r[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) r[i] = (r[i] - up[i] * r[i + 1]) / di[i];
}

}  // namespace

double godunov_flux(double u_left, double u_right) {
    if (u_left <= u_right) {
        // Rarefaction: minimum of f over [u_left, u_right].
        if (u_left >= 0.0) return flux(u_left);
        if (u_right <= 0.0) return flux(u_right);
        return 0.0;  // transonic, minimum at u = 0
    }
    // Shock: maximum of the endpoint fluxes.
    return std::max(flux(u_left), flux(u_right));
}

void godunov_flux_jac(double u_left, double u_right, double& d_left, double& d_right) {
    d_left = 0.0;
    d_right = 0.0;
    if (u_left <= u_right) {
        if (u_left > 0.0)
            d_left = u_left;
        else if (u_right < 0.0)
            d_right = u_right;
        // transonic case: both stay 0 (kink subgradient)
    } else {
        if (flux(u_left) >= flux(u_right))
            d_left = u_left;
        else
            d_right = u_right;
    }
}

std::vector<double> implicit_residual(const std::vector<double>& x_next,
                                      const std::vector<double>& x_prev, double mu1,
                                      double mu2, const BurgersConfig& cfg) {
    const std::size_t n = cfg.n_cells;
    const double inv_dt = 1.0 / cfg.dt;
    const double inv_dx = 1.0 / cfg.dx();
    std::vector<double> res(n);
    double f_left = godunov_flux(mu1, x_next[0]);  // inflow ghost
    for (std::size_t i = 0; i < n; ++i) {
        const double u_r = (i + 1 < n) ? x_next[i + 1] : x_next[i];  // outflow ghost
        const double f_right = godunov_flux(x_next[i], u_r);
        res[i] = (x_next[i] - x_prev[i]) * inv_dt + (f_right - f_left) * inv_dx -
                 cfg.source_scale * std::exp(mu2 * cfg.y_center(i));
        f_left = f_right;
    }
    return res;
}

std::vector<double> burgers_step(const std::vector<double>& x_prev, double mu1,
                                 double mu2, const BurgersConfig& cfg, int* iters_out) {
    const std::size_t n = cfg.n_cells;
    const double inv_dt = 1.0 / cfg.dt;
    const double inv_dx = 1.0 / cfg.dx();

    std::vector<double> x = x_prev;
    std::vector<double> res = implicit_residual(x, x_prev, mu1, mu2, cfg);
    double rnorm = inf_norm(res);

    std::vector<double> lo(n), di(n), up(n), rhs(n), trial(n);
    int it = 0;
    for (; it < cfg.newton_max_iters && rnorm >= cfg.newton_tol; ++it) {
        // Tridiagonal Jacobian of the residual at x.
        double dl_l, dl_r;  // d F_{i-1/2} / d (left, right) state
        godunov_flux_jac(mu1, x[0], dl_l, dl_r);
        for (std::size_t i = 0; i < n; ++i) {
            double dr_l, dr_r;
            if (i + 1 < n) {
                godunov_flux_jac(x[i], x[i + 1], dr_l, dr_r);
            } else {
                godunov_flux_jac(x[i], x[i], dr_l, dr_r);
                dr_l += dr_r;  // ghost equals the last cell
                dr_r = 0.0;
            }
            lo[i] = (i > 0) ? -dl_l * inv_dx : 0.0;
            di[i] = inv_dt + (dr_l - dl_r) * inv_dx;
            up[i] = (i + 1 < n) ? dr_r * inv_dx : 0.0;
            dl_l = dr_l;
            dl_r = dr_r;
        }
        rhs = res;
        solve_tridiag(lo, di, up, rhs);  // rhs <- J^{-1} res

        // Backtracking damping: halve until the residual norm decreases.
        double step_scale = 1.0;
        double new_norm = rnorm;
        for (int h = 0; h <= 10; ++h) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - step_scale * rhs[i];
            auto trial_res = implicit_residual(trial, x_prev, mu1, mu2, cfg);
            new_norm = inf_norm(trial_res);
            if (new_norm < rnorm) {
                x.swap(trial);
                res = std::move(trial_res);
                break;
            }
            step_scale *= 0.5;
        }
        if (new_norm >= rnorm) {
            // No damped step reduced the residual; take the full step anyway
            // and let the convergence check decide.
            for (std::size_t i = 0; i < n; ++i) x[i] -= rhs[i];
            res = implicit_residual(x, x_prev, mu1, mu2, cfg);
        }
        rnorm = inf_norm(res);
    }
    if (iters_out) *iters_out = it;
    if (rnorm >= cfg.newton_tol)
        throw NumericalError("burgers: Newton stalled at residual " +
                             std::to_string(rnorm) + " after " + std::to_string(it) +
                             " iterations");
    return x;
}

Trajectory burgers_solve(double mu1, double mu2, const BurgersConfig& cfg) {
    if (mu1 < 4.25 || mu1 > 5.5 || mu2 < 0.015 || mu2 > 0.03)
        std::cerr << "warning: mu=(" << mu1 << "," << mu2
                  << ") outside the calibrated parameter box\n";

    Trajectory traj;
    traj.parameter = {mu1, mu2};
    traj.n_cells = cfg.n_cells;
    const std::size_t n_steps = cfg.n_steps();
    traj.states.reserve(n_steps);
    traj.times.reserve(n_steps);

    std::vector<double> x(cfg.n_cells, 1.0);  // u(y, 0) = 1
    for (std::size_t k = 0; k < n_steps; ++k) {
        int iters = 0;
        try {
            x = burgers_step(x, mu1, mu2, cfg, &iters);
        } catch (const NumericalError& e) {
            throw NumericalError("burgers: step " + std::to_string(k + 1) + " of " +
                                 std::to_string(n_steps) + ": " + e.what());
        }
        traj.max_newton_iters = std::max(traj.max_newton_iters, iters);
        traj.states.push_back(x);
        traj.times.push_back((double)(k + 1) * cfg.dt);
    }
    return traj;
}

}  // namespace invrom
