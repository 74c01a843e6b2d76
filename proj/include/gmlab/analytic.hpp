#ifndef GMLAB_ANALYTIC_HPP
#define GMLAB_ANALYTIC_HPP

#include "gmlab/common.hpp"
#include "gmlab/rng.hpp"
#include "gmlab/schedule.hpp"

#include <vector>

namespace gmlab {

// Isotropic Gaussian mixture; the closed-form oracle for everything built on
// the path z_t = alpha_t x + sigma_t eps.
struct GaussianMixture {
    std::vector<double> weights;   // > 0, sum to 1
    std::vector<VecD> means;
    std::vector<double> variances; // isotropic, > 0

    int dim() const { return static_cast<int>(means.front().size()); }
    int components() const { return static_cast<int>(weights.size()); }

    static GaussianMixture create(std::vector<double> weights, std::vector<VecD> means,
                                  std::vector<double> variances);
};

// The mixture pushed through the path at time t: same weights, means
// alpha*mu_i, isotropic variances alpha^2 v_i + sigma^2.
struct MarginalLaw {
    std::vector<double> weights;
    std::vector<VecD> means;
    std::vector<double> variances;
};

MarginalLaw marginal_law(const GaussianMixture& gm, const NoiseSchedule& ns, double t);

// Log-space responsibilities for arbitrary per-component (weight, mean,
// variance >= 0) tuples; shared by the mixture posterior and the train
// module's point-atom posterior. Throws NumericError when every component
// underflows (log density < log(1e-300)).
std::vector<double> component_responsibilities(const std::vector<double>& weights,
                                               const std::vector<VecD>& means,
                                               const std::vector<double>& variances,
                                               const VecD& x, double* log_density = nullptr);

double marginal_density(const GaussianMixture& gm, const NoiseSchedule& ns,
                        const VecD& x, double t);

// Gradient of log marginal density.
VecD score(const GaussianMixture& gm, const NoiseSchedule& ns, const VecD& x, double t);

// Responsibilities w_i ~ weight_i * N(x; alpha mu_i, (alpha^2 v_i + sigma^2) I).
std::vector<double> posterior_weights(const GaussianMixture& gm, const NoiseSchedule& ns,
                                      const VecD& x, double t);

// u_t(x) = alpha_dot E[x0 | z_t = x] + sigma_dot E[eps | z_t = x], both
// conditional expectations in closed form. Satisfies
// u = (alpha_dot/alpha) x + ((alpha_dot/alpha) sigma^2 - sigma_dot sigma) * score.
VecD marginal_velocity(const GaussianMixture& gm, const NoiseSchedule& ns,
                       const VecD& x, double t);

// The conditional velocity given component index: the same posterior-mean
// formula restricted to one component.
VecD component_velocity(const GaussianMixture& gm, const NoiseSchedule& ns, int component,
                        const VecD& x, double t);

// Draw from the data mixture.
VecD sample_data(const GaussianMixture& gm, CounterRng& rng);

// Draw from the marginal law at time t via the forward corruption
// z = alpha x0 + sigma eps (exact for any t).
VecD sample_marginal(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
                     CounterRng& rng);

}  // namespace gmlab

#endif
