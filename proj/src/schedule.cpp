#include "gmlab/schedule.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace gmlab {

StochasticityLevel constant_stochasticity(double value) {
    if (value < 0) throw std::invalid_argument("stochasticity level must be >= 0");
    return {[value](double) { return value; }};
}

NoiseSchedule flow_matching_schedule() {
    return {[](double t) { return 1.0 - t; },
            [](double t) { return t; },
            [](double) { return -1.0; },
            [](double) { return 1.0; },
            "flow_matching"};
}

NoiseSchedule variance_preserving_schedule(double beta) {
    if (beta <= 0) throw std::invalid_argument("variance_preserving: beta must be > 0");
    return {[beta](double t) { return std::exp(-0.5 * beta * t); },
            [beta](double t) { return std::sqrt(std::max(0.0, 1.0 - std::exp(-beta * t))); },
            [beta](double t) { return -0.5 * beta * std::exp(-0.5 * beta * t); },
            [beta](double t) {
                // d/dt sqrt(1 - e^{-beta t}); unbounded at t = 0.
                const double e = std::exp(-beta * t);
                return 0.5 * beta * e / std::sqrt(std::max(1e-300, 1.0 - e));
            },
            "variance_preserving"};
}

NoiseSchedule variance_exploding_schedule(double scale) {
    if (scale <= 0) throw std::invalid_argument("variance_exploding: scale must be > 0");
    return {[](double) { return 1.0; },
            [scale](double t) { return scale * std::sqrt(t); },
            [](double) { return 0.0; },
            [scale](double t) { return 0.5 * scale / std::sqrt(std::max(1e-300, t)); },
            "variance_exploding"};
}

NoiseSchedule tabulated_schedule(const std::vector<double>& ts,
                                 const std::vector<double>& alphas,
                                 const std::vector<double>& sigmas) {
    auto alpha = std::make_shared<PchipInterpolant>(ts, alphas);
    auto sigma = std::make_shared<PchipInterpolant>(ts, sigmas);
    return {[alpha](double t) { return (*alpha)(t); },
            [sigma](double t) { return (*sigma)(t); },
            [alpha](double t) { return alpha->derivative(t); },
            [sigma](double t) { return sigma->derivative(t); },
            "custom_tabulated"};
}

namespace {

// 5-point central difference on [0, 1], stencil shifted inward near the ends.
ScalarFn numeric_derivative(ScalarFn fn) {
    return [fn = std::move(fn)](double t) {
        const double h = 1e-4;
        if (t >= 2 * h && t <= 1.0 - 2 * h) {
            return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h);
        }
        if (t < 2 * h) return (fn(t + h) - fn(std::max(0.0, t))) / h;
        return (fn(t) - fn(t - h)) / h;
    };
}

}  // namespace

NoiseSchedule make_schedule(ScalarFn alpha, ScalarFn sigma, std::string name) {
    NoiseSchedule ns;
    ns.alpha_dot = numeric_derivative(alpha);
    ns.sigma_dot = numeric_derivative(sigma);
    ns.alpha = std::move(alpha);
    ns.sigma = std::move(sigma);
    ns.name = std::move(name);
    return ns;
}

double alpha_from_drift(const ScalarFn& f, double t) {
    if (t < 0 || t > 1) throw std::domain_error("alpha_from_drift: t outside [0, 1]");
    if (t == 0) return 1.0;
    return std::exp(integrate(f, 0.0, t));
}

double sigma_from_diffusion(const ScalarFn& f, const ScalarFn& g, double t) {
    if (t < 0 || t > 1) throw std::domain_error("sigma_from_diffusion: t outside [0, 1]");
    if (t == 0) return 0.0;

    const Antiderivative drift_int(f, 0.0, t);  // A(r) = integral of f over [0, r]
    const double value = integrate(
        [&](double r) {
            const double gr = g(r);
            return gr * gr * std::exp(-2.0 * drift_int(r));
        },
        0.0, t);

    if (value < 0) {
        if (value > -1e-12) return 0.0;
        throw NumericError("sigma_from_diffusion: negative variance integral");
    }
    return std::exp(drift_int.total()) * std::sqrt(value);
}

double epsilon_from_churn(const DiffusionSchedule& ds, double t) {
    const double value = ds.eta(t) * ds.g(t);
    if (!std::isfinite(value))
        throw NumericError("epsilon_from_churn: non-finite eta*g");
    return value;
}

DiffusionSchedule diffusion_from_interpolation(const NoiseSchedule& ns,
                                               const StochasticityLevel& eps,
                                               double delta) {
    const double t_max = 1.0 - delta;
    auto guard = [t_max](double t) {
        if (t < 0 || t > t_max)
            throw std::domain_error("converted schedule queried outside [0, 1 - delta]");
    };

    auto drift = [ns, guard](double t) {
        guard(t);
        const double a = ns.alpha(t);
        if (a <= 0) throw std::domain_error("diffusion_from_interpolation: alpha(t) <= 0");
        return ns.alpha_dot(t) / a;
    };
    auto noise = [ns, guard](double t) {
        guard(t);
        const double a = ns.alpha(t);
        if (a <= 0) throw std::domain_error("diffusion_from_interpolation: alpha(t) <= 0");
        const double s = ns.sigma(t);
        const double g2 = 2.0 * (ns.sigma_dot(t) * s - (ns.alpha_dot(t) / a) * s * s);
        if (g2 < -1e-12)
            throw NumericError("diffusion_from_interpolation: inconsistent schedule (g^2 < 0)");
        return std::sqrt(std::max(0.0, g2));
    };
    auto churn = [eps, noise](double t) {
        const double g = noise(t);
        return g > 0 ? eps.epsilon(t) / g : 0.0;
    };
    return {std::move(drift), std::move(noise), std::move(churn)};
}

double round_trip_check(const NoiseSchedule& ns, const std::vector<double>& t_grid) {
    for (double t : t_grid)
        if (t < 0 || t > 1.0 - kTimeMargin + 1e-12)
            throw std::domain_error("round_trip_check: grid point outside [0, 1 - delta]");

    const DiffusionSchedule ds =
        diffusion_from_interpolation(ns, constant_stochasticity(0.0));
    double worst = 0.0;
    for (double t : t_grid) {
        const double a_hat = alpha_from_drift(ds.f, t);
        const double s_hat = sigma_from_diffusion(ds.f, ds.g, t);
        const double err = std::abs(ns.alpha(t) - a_hat) + std::abs(ns.sigma(t) - s_hat);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace gmlab
