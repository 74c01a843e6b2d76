#ifndef GMLAB_KFE_HPP
#define GMLAB_KFE_HPP

#include "gmlab/analytic.hpp"
#include "gmlab/common.hpp"
#include "gmlab/generator.hpp"
#include "gmlab/quadrature.hpp"
#include "gmlab/schedule.hpp"

#include <string>
#include <vector>

namespace gmlab {

// 1-D density sampled on a uniform node grid.
struct DensityGrid {
    double lo = -8.0;
    double hi = 8.0;
    std::vector<double> values;  // one per node
    double t = 0.0;

    int n() const { return static_cast<int>(values.size()); }
    double dx() const { return (hi - lo) / (n() - 1); }
    double node(int j) const { return lo + j * dx(); }
    double trapezoid_integral() const;

    static DensityGrid from_mixture(const GaussianMixture& gm, const NoiseSchedule& ns,
                                    double t, double lo = -8.0, double hi = 8.0, int n = 801);
    double l1_distance(const DensityGrid& other) const;
};

struct KfeEntry {
    std::string f_name;
    double t = 0.0;
    double residual = 0.0;
};

struct KfeReport {
    std::vector<KfeEntry> entries;
    double max_residual = 0.0;
    int gh_order = 0;
    double h_t = 0.0;

    void add(std::string f_name, double t, double residual);
};

// <p, f> against a grid density (trapezoid). Validation error when the grid
// integral strays from 1 by more than 1e-2.
double pairing(const DensityGrid& p, const TestFunction& f);

// <p_t, f> against the analytic mixture marginal via Gauss-Hermite
// (tensorized across dimensions, closed-form-accurate for the battery).
double pairing(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
               const TestFunction& f, int gh_order = 64);

// Same quadrature applied to an arbitrary integrand (used for <p, Lf>).
double mixture_expectation(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
                           const std::function<double(const VecD&)>& fn, int gh_order = 64);

// | d/dt <p_t, f> (central difference) - <p_t, L_t f> (quadrature) |.
double kfe_residual(const GaussianMixture& gm, const NoiseSchedule& ns,
                    const ContinuousGenerator& gen, const TestFunction& f, double t,
                    double h_t = 1e-4, int gh_order = 64);
double kfe_residual(const GaussianMixture& gm, const NoiseSchedule& ns,
                    const SuperposedGenerator& gen, const TestFunction& f, double t,
                    double h_t = 1e-4, int gh_order = 64);

KfeReport kfe_report(const GaussianMixture& gm, const NoiseSchedule& ns,
                     const ContinuousGenerator& gen, const std::vector<TestFunction>& battery,
                     const std::vector<double>& t_grid);

struct EvolveResult {
    DensityGrid grid;
    double clamped_mass = 0.0;  // total negative mass clamped to zero
    double mass_drift = 0.0;    // |cell-sum mass - initial|
};

// Explicit 1-D finite-volume step of the Fokker-Planck / continuity equation
// for the generator's flow (upwind) and diffusion (central) parts, zero-flux
// boundaries. Enforces h_t <= c h_x^2 / sigma^2_max and h_t <= c h_x / |u|_max
// with c = 0.4; violations raise ConfigError with a suggested n_steps.
EvolveResult fokker_planck_evolve(const DensityGrid& p0, const ContinuousGenerator& gen,
                                  double t0, double t1, int n_steps);

// Residuals of a*genA + b*genB on the path, with the per-part preconditions
// reported (not raised).
struct SuperpositionCheck {
    KfeReport combined;
    double max_residual_a = 0.0;
    double max_residual_b = 0.0;
    bool parts_pass = false;
};

SuperpositionCheck superposition_marginal_check(const ContinuousGenerator& genA,
                                                const ContinuousGenerator& genB, double a,
                                                double b, const GaussianMixture& gm,
                                                const NoiseSchedule& ns,
                                                const std::vector<TestFunction>& battery,
                                                const std::vector<double>& t_grid,
                                                double part_tol = 1e-3);

// Matched forward-in-t generators for the mixture path (each satisfies the
// KFE for the corruption path by construction).
ContinuousGenerator make_flow_generator(const GaussianMixture& gm, const NoiseSchedule& ns);
// Flow + score-corrected form: velocity u + 1/2 eps^2 score, coefficient eps.
ContinuousGenerator make_flow_score_generator(const GaussianMixture& gm, const NoiseSchedule& ns,
                                              double eps);
// Converted-diffusion form: velocity f_t x, coefficient g_t.
ContinuousGenerator make_converted_diffusion_generator(const GaussianMixture& gm,
                                                       const NoiseSchedule& ns);
// Deliberately wrong field (velocity scaled by `factor`) for detection-power checks.
ContinuousGenerator make_scaled_flow_generator(const GaussianMixture& gm, const NoiseSchedule& ns,
                                               double factor);
// State-dependent coefficient sigma(x): velocity u + 1/2 d(sigma^2)/dx +
// 1/2 sigma^2 score, the drift correction that keeps the KFE satisfied.
ContinuousGenerator make_state_dependent_generator(
    const GaussianMixture& gm, const NoiseSchedule& ns, const DiffusionCoeffFn& sigma,
    const std::function<VecD(const VecD&, double)>& grad_sigma2);

}  // namespace gmlab

#endif
