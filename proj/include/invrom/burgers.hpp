#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace invrom {

/// Parametric 1-D inviscid Burgers problem: flux 0.5 u^2, Dirichlet inflow
/// u(0,t) = mu1, source 0.02 exp(mu2 y), u(y,0) = 1 on y in [0, L].
struct BurgersConfig {
    std::size_t n_cells = 256;
    double domain_length = 100.0;
    double dt = 0.07;
    double t_final = 35.0;
    double source_scale = 0.02;  // 0 turns the source off (constant-state tests)
    double newton_tol = 1e-10;
    int newton_max_iters = 50;

    double dx() const { return domain_length / (double)n_cells; }
    std::size_t n_steps() const { return (std::size_t)(t_final / dt + 0.5); }
    /// Cell-center coordinate.
    double y_center(std::size_t i) const { return ((double)i + 0.5) * dx(); }
};

struct Trajectory {
    std::array<double, 2> parameter{};        // (mu1, mu2)
    std::size_t n_cells = 0;
    std::vector<std::vector<double>> states;  // states[k] after k+1 implicit steps
    std::vector<double> times;                // t_k = (k+1) dt
    int max_newton_iters = 0;                 // diagnostic over the whole solve
};

/// Exact Godunov flux for the convex flux f(u) = 0.5 u^2.
double godunov_flux(double u_left, double u_right);

/// d godunov_flux / d u_left and / d u_right; subgradient 0 at the kink u = 0.
void godunov_flux_jac(double u_left, double u_right, double& d_left, double& d_right);

/// Implicit-Euler residual of one step: (x - x_prev)/dt + flux divergence - source.
/// Left ghost value mu1 (inflow), right ghost by zero-gradient extrapolation.
std::vector<double> implicit_residual(const std::vector<double>& x_next,
                                      const std::vector<double>& x_prev, double mu1,
                                      double mu2, const BurgersConfig& cfg);

/// One implicit-Euler step by damped Newton with an analytic tridiagonal
/// Jacobian. Throws NumericalError with the final residual norm on failure.
/// If iters_out is non-null, receives the Newton iteration count.
std::vector<double> burgers_step(const std::vector<double>& x_prev, double mu1,
                                 double mu2, const BurgersConfig& cfg,
                                 int* iters_out = nullptr);

/// Full trajectory: n_steps() stored states; the t=0 initial condition is not
/// stored. Warns (stderr) when mu is outside the paper's parameter box.
Trajectory burgers_solve(double mu1, double mu2, const BurgersConfig& cfg = {});

}  // namespace invrom
