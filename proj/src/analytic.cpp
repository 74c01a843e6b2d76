#include "gmlab/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace gmlab {

GaussianMixture GaussianMixture::create(std::vector<double> weights, std::vector<VecD> means,
                                        std::vector<double> variances) {
    const std::size_t k = weights.size();
    if (k == 0 || means.size() != k || variances.size() != k)
        throw std::invalid_argument("GaussianMixture: component lists must match and be non-empty");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0)) throw std::invalid_argument("GaussianMixture: weights must be > 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    const Eigen::Index d = means.front().size();
    for (const VecD& m : means)
        if (m.size() != d) throw std::invalid_argument("GaussianMixture: mean dimensions differ");
    for (double v : variances)
        if (!(v > 0)) throw std::invalid_argument("GaussianMixture: variances must be > 0");
    return {std::move(weights), std::move(means), std::move(variances)};
}

MarginalLaw marginal_law(const GaussianMixture& gm, const NoiseSchedule& ns, double t) {
    const double a = ns.alpha(t);
    const double s = ns.sigma(t);
    MarginalLaw law;
    law.weights = gm.weights;
    law.means.reserve(gm.means.size());
    law.variances.reserve(gm.variances.size());
    for (std::size_t i = 0; i < gm.means.size(); ++i) {
        law.means.push_back(a * gm.means[i]);
        law.variances.push_back(a * a * gm.variances[i] + s * s);
    }
    return law;
}

std::vector<double> component_responsibilities(const std::vector<double>& weights,
                                               const std::vector<VecD>& means,
                                               const std::vector<double>& variances,
                                               const VecD& x, double* log_density) {
    const std::size_t k = weights.size();
    const double d = static_cast<double>(x.size());
    std::vector<double> logp(k);
    double max_logp = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const double v = variances[i];
        if (!(v > 0))
            throw NumericError("component_responsibilities: component variance is 0");
        const double sq = (x - means[i]).squaredNorm();
        logp[i] = std::log(weights[i]) - 0.5 * d * std::log(2.0 * M_PI * v) - 0.5 * sq / v;
        max_logp = std::max(max_logp, logp[i]);
    }
    if (!std::isfinite(max_logp))
        throw NumericError("component_responsibilities: all components underflow");

    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += std::exp(logp[i] - max_logp);
    const double lse = max_logp + std::log(acc);
    if (lse < std::log(1e-300))
        throw NumericError(
            "density underflow (< 1e-300); relocate the probe point toward the support");

    std::vector<double> resp(k);
    for (std::size_t i = 0; i < k; ++i) resp[i] = std::exp(logp[i] - lse);
    if (log_density) *log_density = lse;
    return resp;
}

double marginal_density(const GaussianMixture& gm, const NoiseSchedule& ns,
                        const VecD& x, double t) {
    const MarginalLaw law = marginal_law(gm, ns, t);
    double logp = 0.0;
    component_responsibilities(law.weights, law.means, law.variances, x, &logp);
    return std::exp(logp);
}

VecD score(const GaussianMixture& gm, const NoiseSchedule& ns, const VecD& x, double t) {
    const MarginalLaw law = marginal_law(gm, ns, t);
    const std::vector<double> resp =
        component_responsibilities(law.weights, law.means, law.variances, x);
    VecD out = VecD::Zero(x.size());
    for (std::size_t i = 0; i < resp.size(); ++i)
        out -= resp[i] / law.variances[i] * (x - law.means[i]);
    return out;
}

std::vector<double> posterior_weights(const GaussianMixture& gm, const NoiseSchedule& ns,
                                      const VecD& x, double t) {
    const MarginalLaw law = marginal_law(gm, ns, t);
    return component_responsibilities(law.weights, law.means, law.variances, x);
}

namespace {

// alpha_dot*(mu_i + alpha v_i/s_i (x - m_i)) + sigma_dot*sigma/s_i (x - m_i),
// the posterior-mean velocity of one component.
VecD one_component_velocity(const GaussianMixture& gm, const NoiseSchedule& ns, std::size_t i,
                            const VecD& x, double t, const MarginalLaw& law) {
    const double a = ns.alpha(t);
    const double s = ns.sigma(t);
    const double a_dot = ns.alpha_dot(t);
    const double s_dot = ns.sigma_dot(t);
    const double total_var = law.variances[i];
    const VecD dev = x - law.means[i];
    const VecD x0_mean = gm.means[i] + (a * gm.variances[i] / total_var) * dev;
    const VecD eps_mean = (s / total_var) * dev;
    return a_dot * x0_mean + s_dot * eps_mean;
}

}  // namespace

VecD marginal_velocity(const GaussianMixture& gm, const NoiseSchedule& ns,
                       const VecD& x, double t) {
    const MarginalLaw law = marginal_law(gm, ns, t);
    const std::vector<double> resp =
        component_responsibilities(law.weights, law.means, law.variances, x);
    VecD out = VecD::Zero(x.size());
    for (std::size_t i = 0; i < resp.size(); ++i)
        out += resp[i] * one_component_velocity(gm, ns, i, x, t, law);
    return out;
}

VecD component_velocity(const GaussianMixture& gm, const NoiseSchedule& ns, int component,
                        const VecD& x, double t) {
    if (component < 0 || component >= gm.components())
        throw std::invalid_argument("component_velocity: index out of range");
    const MarginalLaw law = marginal_law(gm, ns, t);
    return one_component_velocity(gm, ns, static_cast<std::size_t>(component), x, t, law);
}

VecD sample_data(const GaussianMixture& gm, CounterRng& rng) {
    const double u = rng.next_uniform();
    double acc = 0.0;
    std::size_t pick = gm.weights.size() - 1;
    for (std::size_t i = 0; i < gm.weights.size(); ++i) {
        acc += gm.weights[i];
        if (u <= acc) {
            pick = i;
            break;
        }
    }
    return gm.means[pick] + std::sqrt(gm.variances[pick]) * rng.gaussian_vector(gm.dim());
}

VecD sample_marginal(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
                     CounterRng& rng) {
    const VecD x0 = sample_data(gm, rng);
    const VecD eps = rng.gaussian_vector(gm.dim());
    return ns.alpha(t) * x0 + ns.sigma(t) * eps;
}

}  // namespace gmlab
