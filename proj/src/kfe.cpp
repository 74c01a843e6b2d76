#include "gmlab/kfe.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace gmlab {

double DensityGrid::trapezoid_integral() const {
    const double h = dx();
    double acc = 0.5 * (values.front() + values.back());
    for (int j = 1; j + 1 < n(); ++j) acc += values[j];
    return acc * h;
}

DensityGrid DensityGrid::from_mixture(const GaussianMixture& gm, const NoiseSchedule& ns,
                                      double t, double lo, double hi, int n) {
    if (gm.dim() != 1) throw std::invalid_argument("DensityGrid: 1-D mixtures only");
    if (n < 3) throw std::invalid_argument("DensityGrid: need >= 3 nodes");
    DensityGrid grid;
    grid.lo = lo;
    grid.hi = hi;
    grid.t = t;
    grid.values.resize(n);
    VecD x(1);
    for (int j = 0; j < n; ++j) {
        x[0] = lo + j * (hi - lo) / (n - 1);
        grid.values[j] = marginal_density(gm, ns, x, t);
    }
    return grid;
}

double DensityGrid::l1_distance(const DensityGrid& other) const {
    if (other.n() != n() || other.lo != lo || other.hi != hi)
        throw std::invalid_argument("l1_distance: grids differ");
    double acc = 0.0;
    for (int j = 0; j < n(); ++j) acc += std::abs(values[j] - other.values[j]);
    return acc * dx();
}

void KfeReport::add(std::string f_name, double t, double residual) {
    entries.push_back({std::move(f_name), t, residual});
    max_residual = std::max(max_residual, residual);
}

double pairing(const DensityGrid& p, const TestFunction& f) {
    const double mass = p.trapezoid_integral();
    if (std::abs(mass - 1.0) > 1e-2)
        throw NumericError("pairing: grid density is not normalized (integral = " +
                           std::to_string(mass) + ")");
    const double h = p.dx();
    VecD x(1);
    auto weighted = [&](int j) {
        x[0] = p.node(j);
        return f.eval(x) * p.values[j];
    };
    double acc = 0.5 * (weighted(0) + weighted(p.n() - 1));
    for (int j = 1; j + 1 < p.n(); ++j) acc += weighted(j);
    return acc * h;
}

namespace {

// Tensorized Gauss-Hermite expectation of fn under one isotropic component.
double component_expectation(const VecD& mean, double var, const QuadratureRule& rule,
                             const std::function<double(const VecD&)>& fn) {
    const int d = static_cast<int>(mean.size());
    const double scale = std::sqrt(2.0 * var);
    const double norm = std::pow(M_PI, -0.5 * d);
    VecD x(d);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    const std::size_t m = rule.nodes.size();
    double acc = 0.0;
    while (true) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            w *= rule.weights[idx[static_cast<std::size_t>(k)]];
            x[k] = mean[k] + scale * rule.nodes[idx[static_cast<std::size_t>(k)]];
        }
        acc += w * fn(x);
        int k = 0;
        for (; k < d; ++k) {
            if (++idx[static_cast<std::size_t>(k)] < m) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k == d) break;
    }
    return acc * norm;
}

}  // namespace

double mixture_expectation(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
                           const std::function<double(const VecD&)>& fn, int gh_order) {
    if (gm.dim() > 3)
        throw std::invalid_argument("mixture_expectation: tensorized rule supports d <= 3");
    const MarginalLaw law = marginal_law(gm, ns, t);
    const QuadratureRule rule = gauss_hermite(gh_order);
    double acc = 0.0;
    for (std::size_t i = 0; i < law.weights.size(); ++i)
        acc += law.weights[i] * component_expectation(law.means[i], law.variances[i], rule, fn);
    return acc;
}

double pairing(const GaussianMixture& gm, const NoiseSchedule& ns, double t,
               const TestFunction& f, int gh_order) {
    return mixture_expectation(gm, ns, t, f.eval, gh_order);
}

namespace {

template <typename Gen>
double kfe_residual_impl(const GaussianMixture& gm, const NoiseSchedule& ns, const Gen& gen,
                         const TestFunction& f, double t, double h_t, int gh_order) {
    if (!(t - h_t > 0.0 && t + h_t < 1.0))
        throw std::invalid_argument("kfe_residual: t too close to the endpoints");
    const double lhs =
        (pairing(gm, ns, t + h_t, f, gh_order) - pairing(gm, ns, t - h_t, f, gh_order)) /
        (2.0 * h_t);
    const double rhs = mixture_expectation(
        gm, ns, t, [&](const VecD& x) { return apply_generator(gen, f, x, t); }, gh_order);
    return std::abs(lhs - rhs);
}

}  // namespace

double kfe_residual(const GaussianMixture& gm, const NoiseSchedule& ns,
                    const ContinuousGenerator& gen, const TestFunction& f, double t,
                    double h_t, int gh_order) {
    return kfe_residual_impl(gm, ns, gen, f, t, h_t, gh_order);
}

double kfe_residual(const GaussianMixture& gm, const NoiseSchedule& ns,
                    const SuperposedGenerator& gen, const TestFunction& f, double t,
                    double h_t, int gh_order) {
    return kfe_residual_impl(gm, ns, gen, f, t, h_t, gh_order);
}

KfeReport kfe_report(const GaussianMixture& gm, const NoiseSchedule& ns,
                     const ContinuousGenerator& gen, const std::vector<TestFunction>& battery,
                     const std::vector<double>& t_grid) {
    KfeReport report;
    report.gh_order = 64;
    report.h_t = 1e-4;
    for (const TestFunction& f : battery)
        for (double t : t_grid)
            report.add(f.name, t, kfe_residual(gm, ns, gen, f, t, report.h_t, report.gh_order));
    return report;
}

EvolveResult fokker_planck_evolve(const DensityGrid& p0, const ContinuousGenerator& gen,
                                  double t0, double t1, int n_steps) {
    if (!(t1 > t0)) throw std::invalid_argument("fokker_planck_evolve: need t1 > t0");
    if (n_steps < 1) throw ConfigError("fokker_planck_evolve: n_steps must be >= 1");

    const int n = p0.n();
    const double dx = p0.dx();
    const double h = (t1 - t0) / n_steps;

    // CFL scan of |u| and sigma^2 over the grid at a few times.
    double u_max = 0.0, sig2_max = 0.0;
    VecD x(1);
    for (double ts : {t0, 0.5 * (t0 + t1), t1}) {
        for (int j = 0; j < n; ++j) {
            x[0] = p0.node(j);
            if (gen.velocity) u_max = std::max(u_max, std::abs((*gen.velocity)(x, ts)[0]));
            if (gen.diffusion_coeff) {
                const double s = (*gen.diffusion_coeff)(x, ts);
                sig2_max = std::max(sig2_max, s * s);
            }
        }
    }
    constexpr double kCfl = 0.4;
    double h_limit = std::numeric_limits<double>::infinity();
    if (sig2_max > 0) h_limit = std::min(h_limit, kCfl * dx * dx / sig2_max);
    if (u_max > 0) h_limit = std::min(h_limit, kCfl * dx / u_max);
    if (h > h_limit) {
        const int needed = static_cast<int>(std::ceil((t1 - t0) / h_limit));
        throw ConfigError("fokker_planck_evolve: CFL violation; need n_steps >= " +
                          std::to_string(needed));
    }

    EvolveResult result;
    result.grid = p0;
    result.grid.t = t1;
    std::vector<double>& v = result.grid.values;
    const double initial_mass = dx * std::accumulate(v.begin(), v.end(), 0.0);

    std::vector<double> flux(static_cast<std::size_t>(n) + 1, 0.0);  // flux[j] at x_{j-1/2}
    std::vector<double> q(static_cast<std::size_t>(n), 0.0);         // sigma^2 * p at nodes

    for (int step = 0; step < n_steps; ++step) {
        const double t = t0 + step * h;

        if (gen.diffusion_coeff) {
            for (int j = 0; j < n; ++j) {
                x[0] = p0.node(j);
                const double s = (*gen.diffusion_coeff)(x, t);
                q[static_cast<std::size_t>(j)] = s * s * v[static_cast<std::size_t>(j)];
            }
        }

        flux.front() = flux.back() = 0.0;  // zero-flux boundaries
        for (int j = 1; j < n; ++j) {
            double fl = 0.0;
            if (gen.velocity) {
                x[0] = 0.5 * (p0.node(j - 1) + p0.node(j));
                const double u = (*gen.velocity)(x, t)[0];
                fl += u >= 0 ? u * v[static_cast<std::size_t>(j - 1)]
                             : u * v[static_cast<std::size_t>(j)];
            }
            if (gen.diffusion_coeff)
                fl -= 0.5 * (q[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j - 1)]) / dx;
            flux[static_cast<std::size_t>(j)] = fl;
        }

        for (int j = 0; j < n; ++j) {
            v[static_cast<std::size_t>(j)] -=
                h / dx * (flux[static_cast<std::size_t>(j) + 1] - flux[static_cast<std::size_t>(j)]);
            if (v[static_cast<std::size_t>(j)] < 0) {
                result.clamped_mass += -v[static_cast<std::size_t>(j)] * dx;
                v[static_cast<std::size_t>(j)] = 0.0;
            }
        }
    }

    const double final_mass = dx * std::accumulate(v.begin(), v.end(), 0.0);
    result.mass_drift = std::abs(final_mass - initial_mass);
    return result;
}

SuperpositionCheck superposition_marginal_check(const ContinuousGenerator& genA,
                                                const ContinuousGenerator& genB, double a,
                                                double b, const GaussianMixture& gm,
                                                const NoiseSchedule& ns,
                                                const std::vector<TestFunction>& battery,
                                                const std::vector<double>& t_grid,
                                                double part_tol) {
    SuperpositionCheck check;
    for (const TestFunction& f : battery) {
        for (double t : t_grid) {
            check.max_residual_a = std::max(check.max_residual_a,
                                            kfe_residual(gm, ns, genA, f, t));
            check.max_residual_b = std::max(check.max_residual_b,
                                            kfe_residual(gm, ns, genB, f, t));
        }
    }
    check.parts_pass = check.max_residual_a < part_tol && check.max_residual_b < part_tol;

    const SuperposedGenerator mix = superpose({{a, genA}, {b, genB}});
    check.combined.gh_order = 64;
    check.combined.h_t = 1e-4;
    for (const TestFunction& f : battery)
        for (double t : t_grid)
            check.combined.add(f.name, t, kfe_residual(gm, ns, mix, f, t));
    return check;
}

ContinuousGenerator make_flow_generator(const GaussianMixture& gm, const NoiseSchedule& ns) {
    return ContinuousGenerator::flow(
        [gm, ns](const VecD& x, double t) { return marginal_velocity(gm, ns, x, t); });
}

ContinuousGenerator make_flow_score_generator(const GaussianMixture& gm, const NoiseSchedule& ns,
                                              double eps) {
    return ContinuousGenerator::flow_diffusion(
        [gm, ns, eps](const VecD& x, double t) {
            return VecD(marginal_velocity(gm, ns, x, t) +
                        0.5 * eps * eps * score(gm, ns, x, t));
        },
        [eps](const VecD&, double) { return eps; });
}

ContinuousGenerator make_converted_diffusion_generator(const GaussianMixture&,
                                                       const NoiseSchedule& ns) {
    const auto ds = std::make_shared<DiffusionSchedule>(
        diffusion_from_interpolation(ns, constant_stochasticity(0.0)));
    return ContinuousGenerator::flow_diffusion(
        [ds](const VecD& x, double t) { return VecD(ds->f(t) * x); },
        [ds](const VecD&, double t) { return ds->g(t); });
}

ContinuousGenerator make_scaled_flow_generator(const GaussianMixture& gm, const NoiseSchedule& ns,
                                               double factor) {
    return ContinuousGenerator::flow([gm, ns, factor](const VecD& x, double t) {
        return VecD(factor * marginal_velocity(gm, ns, x, t));
    });
}

ContinuousGenerator make_state_dependent_generator(
    const GaussianMixture& gm, const NoiseSchedule& ns, const DiffusionCoeffFn& sigma,
    const std::function<VecD(const VecD&, double)>& grad_sigma2) {
    return ContinuousGenerator::flow_diffusion(
        [gm, ns, sigma, grad_sigma2](const VecD& x, double t) {
            const double s = sigma(x, t);
            return VecD(marginal_velocity(gm, ns, x, t) + 0.5 * grad_sigma2(x, t) +
                        0.5 * s * s * score(gm, ns, x, t));
        },
        sigma);
}

}  // namespace gmlab
