#ifndef GMLAB_SCHEDULE_HPP
#define GMLAB_SCHEDULE_HPP

#include "gmlab/common.hpp"
#include "gmlab/quadrature.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gmlab {

// Interpolation parameterization of the corruption process:
// z_t = alpha(t) * x + sigma(t) * eps, with alpha(0) = 1, sigma(0) = 0
// (t = 0 is clean data, t = 1 is noise). All built-in schedules carry
// analytic derivatives.
struct NoiseSchedule {
    ScalarFn alpha;
    ScalarFn sigma;
    ScalarFn alpha_dot;
    ScalarFn sigma_dot;
    std::string name;
};

// SDE parameterization of the same process: dz = f_t z dt + g_t dW, with
// eta_t the inference-time churn multiplier on the reverse-step noise.
struct DiffusionSchedule {
    ScalarFn f;
    ScalarFn g;
    ScalarFn eta;
};

// Flow-side stochasticity level; when derived from a DiffusionSchedule,
// epsilon(t) = eta(t) * g(t).
struct StochasticityLevel {
    ScalarFn epsilon;
};

StochasticityLevel constant_stochasticity(double value);

// Built-in schedules.
NoiseSchedule flow_matching_schedule();                       // alpha = 1-t, sigma = t
NoiseSchedule variance_preserving_schedule(double beta = 2.0);  // alpha = e^{-beta t/2}
NoiseSchedule variance_exploding_schedule(double scale = 1.0);  // alpha = 1, sigma = scale*sqrt(t)

// Custom schedule from (t, alpha, sigma) triples, PCHIP-interpolated, with
// derivatives from the interpolant.
NoiseSchedule tabulated_schedule(const std::vector<double>& ts,
                                 const std::vector<double>& alphas,
                                 const std::vector<double>& sigmas);

// Schedule from bare alpha/sigma callables; derivatives are filled with
// 5-point central differences (h = 1e-4), one-sided near the ends of [0, 1].
NoiseSchedule make_schedule(ScalarFn alpha, ScalarFn sigma, std::string name);

// alpha_t = exp(integral of f over [0, t]).
double alpha_from_drift(const ScalarFn& f, double t);

// Effective noise std after evolving the SDE from 0 to t:
// sigma_t = alpha_t * sqrt(integral of g_r^2 exp(-2 integral_0^r f) dr).
// The inner antiderivative is cached on a 1024-node grid (PCHIP).
double sigma_from_diffusion(const ScalarFn& f, const ScalarFn& g, double t);

// epsilon_t = eta_t * g_t.
double epsilon_from_churn(const DiffusionSchedule& ds, double t);

// Inverse map, interpolation form to SDE form:
//   f = alpha_dot / alpha
//   g = sqrt(2 (sigma_dot sigma - f sigma^2))
//   eta = epsilon / g where g > 0, else 0.
// The returned callables are defined on [0, 1 - delta]; querying beyond
// throws std::domain_error (flow-matching f blows up at t = 1).
DiffusionSchedule diffusion_from_interpolation(const NoiseSchedule& ns,
                                               const StochasticityLevel& eps,
                                               double delta = kTimeMargin);

// Converts ns -> DiffusionSchedule -> back by quadrature and returns
// max over the grid of |alpha - alpha_hat| + |sigma - sigma_hat|.
double round_trip_check(const NoiseSchedule& ns, const std::vector<double>& t_grid);

}  // namespace gmlab

#endif
