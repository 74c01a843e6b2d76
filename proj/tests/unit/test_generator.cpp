#include "gmlab/generator.hpp"

#include "gmlab/analytic.hpp"
#include "gmlab/quadrature.hpp"
#include "gmlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace gmlab;

namespace {

VecD vec1(double x) {
    VecD v(1);
    v[0] = x;
    return v;
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("battery derivatives match finite differences") {
    for (int dim : {1, 2, 3}) {
        CAPTURE(dim);
        CounterRng rng(31, static_cast<std::uint64_t>(dim));
        for (const TestFunction& f : test_function_battery(dim)) {
            CAPTURE(f.name);
            for (int probe = 0; probe < 10; ++probe) {
                const VecD x = 2.0 * rng.gaussian_vector(dim);
                const double h = 1e-5;
                const VecD g = f.grad(x);
                const MatD hess = f.hessian(x);
                for (int k = 0; k < dim; ++k) {
                    VecD xp = x, xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    const double fd = (f.eval(xp) - f.eval(xm)) / (2 * h);
                    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(std::abs(fd) + 1e-2));
                    const VecD gfd = (f.grad(xp) - f.grad(xm)) / (2 * h);
                    for (int l = 0; l < dim; ++l)
                        CHECK(hess(k, l) ==
                              doctest::Approx(gfd[l]).epsilon(1e-4).scale(std::abs(gfd[l]) + 1e-2));
                }
            }
        }
    }
}

TEST_CASE("apply_generator hand values") {
    const auto battery = test_function_battery(1);
    // Zero generator annihilates everything.
    const ContinuousGenerator zero =
        ContinuousGenerator::flow([](const VecD& x, double) { return VecD(VecD::Zero(x.size())); });
    for (const TestFunction& f : battery)
        CHECK(apply_generator(zero, f, vec1(0.3), 0.5) == doctest::Approx(0.0));

    // d=1, f(x)=x (affine with unit slope), velocity 3x at x=2 -> 6.
    const TestFunction coord{"x", [](const VecD& x) { return x[0]; },
                             [](const VecD&) { return vec1(1.0); },
                             [](const VecD&) { return MatD::Zero(1, 1); }};
    const ContinuousGenerator scale3 =
        ContinuousGenerator::flow([](const VecD& x, double) { return VecD(3.0 * x); });
    CHECK(apply_generator(scale3, coord, vec1(2.0), 0.1) == doctest::Approx(6.0));

    // d=1, f(x)=x^2, u(x)=x, sigma^2=2 at x=1 -> 2*1*1 + 0.5*2*2 = 4.
    const TestFunction quad{"x2", [](const VecD& x) { return x[0] * x[0]; },
                            [](const VecD& x) { return VecD(2.0 * x); },
                            [](const VecD&) { return MatD(2.0 * MatD::Identity(1, 1)); }};
    const ContinuousGenerator drift_diff = ContinuousGenerator::flow_diffusion(
        [](const VecD& x, double) { return x; },
        [](const VecD&, double) { return std::sqrt(2.0); });
    CHECK(apply_generator(drift_diff, quad, vec1(1.0), 0.0) == doctest::Approx(4.0));
}

TEST_CASE("generator action matches the transition-kernel derivative") {
    // Independent oracle: for an Euler-Maruyama step X = x + h u + sqrt(h) sigma xi,
    // (E[f(X)] - f(x))/h -> Lf(x) as h -> 0; the Gaussian expectation is
    // evaluated with Gauss-Hermite so only the h->0 bias remains.
    const ContinuousGenerator gen = ContinuousGenerator::flow_diffusion(
        [](const VecD& x, double) { return VecD(x.array() * 1.0); },
        [](const VecD&, double) { return std::sqrt(2.0); });
    const QuadratureRule rule = gauss_hermite(40);
    const auto battery = test_function_battery(1);
    for (const TestFunction& f : battery) {
        CAPTURE(f.name);
        const VecD x = vec1(1.0);
        const double h = 1e-5;
        const double u = x[0];  // velocity at x
        const double mean = x[0] + h * u;
        const double var = h * 2.0;
        const double ef = gauss_hermite_expectation(
            rule, [&](double y) { return f.eval(vec1(y)); }, mean, var);
        const double kernel_derivative = (ef - f.eval(x)) / h;
        CHECK(apply_generator(gen, f, x, 0.0) ==
              doctest::Approx(kernel_derivative).epsilon(5e-4).scale(
                  std::abs(kernel_derivative) + 1e-2));
    }
}

TEST_CASE("diffusion term vanishes on affine functions") {
    const ContinuousGenerator diff =
        ContinuousGenerator::diffusion([](const VecD&, double) { return 1.7; });
    const auto battery = test_function_battery(2);
    CHECK(apply_generator(diff, battery[0], VecD::Zero(2), 0.2) == doctest::Approx(0.0));
}

TEST_CASE("superpose validation") {
    const ContinuousGenerator g =
        ContinuousGenerator::flow([](const VecD& x, double) { return x; });
    CHECK_THROWS_AS(superpose({{0.5, g}, {0.6, g}}), std::invalid_argument);
    CHECK_THROWS_AS(superpose({{-0.1, g}, {1.1, g}}), std::invalid_argument);
    CHECK_THROWS_AS(superpose({}), std::invalid_argument);
}

TEST_CASE("superposition: hand value and trivial cases") {
    const TestFunction quad{"x2", [](const VecD& x) { return x[0] * x[0]; },
                            [](const VecD& x) { return VecD(2.0 * x); },
                            [](const VecD&) { return MatD(2.0 * MatD::Identity(1, 1)); }};
    const ContinuousGenerator flow_u1 =
        ContinuousGenerator::flow([](const VecD& x, double) { return VecD(VecD::Ones(x.size())); });
    const ContinuousGenerator diff2 =
        ContinuousGenerator::diffusion([](const VecD&, double) { return std::sqrt(2.0); });

    // Single part acts identically.
    const SuperposedGenerator single = superpose({{1.0, flow_u1}});
    CHECK(apply_generator(single, quad, vec1(1.0), 0.0) ==
          apply_generator(flow_u1, quad, vec1(1.0), 0.0));

    // Equal halves of the same generator are idempotent.
    const SuperposedGenerator halves = superpose({{0.5, flow_u1}, {0.5, flow_u1}});
    CHECK(apply_generator(halves, quad, vec1(1.0), 0.0) ==
          doctest::Approx(apply_generator(flow_u1, quad, vec1(1.0), 0.0)));

    // 0.3 flow(u=1) + 0.7 diffusion(sigma^2=2) on f=x^2 at x=1:
    // 0.3*(2*1*1) + 0.7*(0.5*2*2) = 2.0.
    const SuperposedGenerator mix = superpose({{0.3, flow_u1}, {0.7, diff2}});
    CHECK(apply_generator(mix, quad, vec1(1.0), 0.0) == doctest::Approx(2.0));
}

TEST_CASE("superposition linearity over random inputs") {
    const ContinuousGenerator g1 = ContinuousGenerator::flow_diffusion(
        [](const VecD& x, double t) { return VecD(std::sin(t + 1.0) * x); },
        [](const VecD& x, double) { return 0.5 + 0.1 * x.squaredNorm(); });
    const ContinuousGenerator g2 = ContinuousGenerator::flow(
        [](const VecD& x, double t) { return VecD((x.array() * x.array() - t).matrix()); });

    CounterRng rng(17, 0);
    const auto battery = test_function_battery(2);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.next_uniform();
        const double b = 1.0 - a;
        const VecD x = 2.0 * rng.gaussian_vector(2);
        const double t = rng.next_uniform();
        const TestFunction& f = battery[i % battery.size()];
        const double combined = apply_generator(superpose({{a, g1}, {b, g2}}), f, x, t);
        const double split = a * apply_generator(g1, f, x, t) + b * apply_generator(g2, f, x, t);
        CHECK(combined == doctest::Approx(split).epsilon(1e-12).scale(std::abs(split) + 1e-9));
    }
}

TEST_CASE("flatten reproduces the superposed action") {
    const ContinuousGenerator g1 = ContinuousGenerator::flow_diffusion(
        [](const VecD& x, double) { return VecD(2.0 * x); },
        [](const VecD&, double) { return 1.0; });
    const ContinuousGenerator g2 =
        ContinuousGenerator::diffusion([](const VecD&, double) { return 2.0; });
    const SuperposedGenerator mix = superpose({{0.25, g1}, {0.75, g2}});
    const ContinuousGenerator flat = flatten(mix);
    const auto battery = test_function_battery(1);
    for (const TestFunction& f : battery)
        CHECK(apply_generator(flat, f, vec1(0.7), 0.3) ==
              doctest::Approx(apply_generator(mix, f, vec1(0.7), 0.3)).epsilon(1e-14));
}

TEST_CASE("marginal_from_conditional: degenerate and weighted cases") {
    const ConditionalVelocityFn cond = [](const VecD& x, double t, int z) {
        return VecD(VecD::Constant(x.size(), static_cast<double>(z) + t));
    };
    const VecD x = vec1(0.0);

    // Single atom.
    PosteriorFn single = [](const VecD&, double) {
        return std::vector<std::pair<double, int>>{{1.0, 3}};
    };
    CHECK(marginal_from_conditional(cond, single, x, 0.25)[0] == doctest::Approx(3.25));

    // Two atoms with weights (1, 0): first atom wins.
    PosteriorFn degenerate = [](const VecD&, double) {
        return std::vector<std::pair<double, int>>{{1.0, 1}, {0.0, 5}};
    };
    CHECK(marginal_from_conditional(cond, degenerate, x, 0.0)[0] == doctest::Approx(1.0));

    // Weights must sum to 1.
    PosteriorFn broken = [](const VecD&, double) {
        return std::vector<std::pair<double, int>>{{0.7, 0}, {0.2, 1}};
    };
    CHECK_THROWS_AS(marginal_from_conditional(cond, broken, x, 0.0), NumericError);
}

TEST_CASE("marginal_from_conditional reproduces the analytic marginal velocity") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm =
        GaussianMixture::create({0.5, 0.5}, {vec1(-2.0), vec1(2.0)}, {0.3, 0.3});

    const ConditionalVelocityFn cond = [&](const VecD& x, double t, int z) {
        return component_velocity(gm, fm, z, x, t);
    };
    const PosteriorFn post = [&](const VecD& x, double t) {
        const auto w = posterior_weights(gm, fm, x, t);
        std::vector<std::pair<double, int>> atoms;
        for (std::size_t i = 0; i < w.size(); ++i)
            atoms.emplace_back(w[i], static_cast<int>(i));
        return atoms;
    };

    // Symmetry: marginal velocity vanishes along the mean axis at x = 0.
    CHECK(marginal_from_conditional(cond, post, vec1(0.0), 0.5)[0] ==
          doctest::Approx(0.0).epsilon(1e-12));

    // Relative L2 agreement with the analytic marginal velocity on a grid.
    double num = 0.0, den = 0.0;
    for (double t : {0.2, 0.5, 0.8}) {
        for (double x = -4.0; x <= 4.0; x += 0.25) {
            const double via_posterior = marginal_from_conditional(cond, post, vec1(x), t)[0];
            const double direct = marginal_velocity(gm, fm, vec1(x), t)[0];
            num += (via_posterior - direct) * (via_posterior - direct);
            den += direct * direct;
        }
    }
    CHECK(std::sqrt(num / den) < 1e-6);
}

}  // TEST_SUITE
