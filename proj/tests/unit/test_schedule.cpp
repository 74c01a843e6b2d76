#include "gmlab/schedule.hpp"

#include <doctest.h>

#include <cmath>

using namespace gmlab;

namespace {

std::vector<double> grid_01_to(double hi, int points) {
    std::vector<double> ts;
    for (int i = 0; i < points; ++i) ts.push_back(hi * i / (points - 1));
    return ts;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("built-in schedules satisfy the endpoint convention") {
    for (const NoiseSchedule& ns :
         {flow_matching_schedule(), variance_preserving_schedule(2.0),
          variance_exploding_schedule()}) {
        CAPTURE(ns.name);
        CHECK(ns.alpha(0.0) == doctest::Approx(1.0));
        CHECK(ns.sigma(0.0) == doctest::Approx(0.0));
        // alpha nonincreasing, sigma nondecreasing.
        double a_prev = ns.alpha(0.0), s_prev = ns.sigma(0.0);
        for (double t = 0.05; t <= 1.0; t += 0.05) {
            CHECK(ns.alpha(t) <= a_prev + 1e-12);
            CHECK(ns.sigma(t) >= s_prev - 1e-12);
            a_prev = ns.alpha(t);
            s_prev = ns.sigma(t);
        }
    }
}

TEST_CASE("analytic derivatives match central differences at interior points") {
    const double h = 1e-6;
    for (const NoiseSchedule& ns :
         {flow_matching_schedule(), variance_preserving_schedule(2.0),
          variance_exploding_schedule()}) {
        CAPTURE(ns.name);
        for (double t : {0.2, 0.5, 0.8}) {
            const double fd_a = (ns.alpha(t + h) - ns.alpha(t - h)) / (2 * h);
            const double fd_s = (ns.sigma(t + h) - ns.sigma(t - h)) / (2 * h);
            CHECK(ns.alpha_dot(t) ==
                  doctest::Approx(fd_a).epsilon(1e-6).scale(std::abs(fd_a) + 1.0));
            CHECK(ns.sigma_dot(t) ==
                  doctest::Approx(fd_s).epsilon(1e-6).scale(std::abs(fd_s) + 1.0));
        }
    }
}

TEST_CASE("alpha_from_drift closed forms") {
    // f == 0 -> alpha = 1 for any t.
    CHECK(alpha_from_drift([](double) { return 0.0; }, 0.7) == doctest::Approx(1.0));
    // empty integral at t = 0.
    CHECK(alpha_from_drift([](double t) { return std::sin(t); }, 0.0) == doctest::Approx(1.0));
    // f = -beta/2, beta = 2 -> alpha(0.5) = e^{-0.5}.
    CHECK(alpha_from_drift([](double) { return -1.0; }, 0.5) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
}

TEST_CASE("alpha_from_drift is multiplicative in time") {
    auto f = [](double t) { return -0.8 - 0.5 * std::sin(3.0 * t); };
    for (double s : {0.2, 0.45}) {
        for (double t : {0.6, 0.9}) {
            const double whole = alpha_from_drift(f, t);
            const double split = alpha_from_drift(f, s) * std::exp(integrate(f, s, t));
            CHECK(whole == doctest::Approx(split).epsilon(1e-8));
        }
    }
}

TEST_CASE("sigma_from_diffusion closed forms") {
    auto zero = [](double) { return 0.0; };
    auto one = [](double) { return 1.0; };
    // g == 0 -> sigma = 0.
    CHECK(sigma_from_diffusion([](double) { return -0.3; }, zero, 0.8) == doctest::Approx(0.0));
    // f = 0, g = 1 -> sigma = sqrt(t).
    CHECK(sigma_from_diffusion(zero, one, 0.25) == doctest::Approx(0.5).epsilon(1e-10));
    // Variance preserving, beta = 2: sigma(0.5) = sqrt(1 - e^{-1}).
    const double beta = 2.0;
    CHECK(sigma_from_diffusion([beta](double) { return -0.5 * beta; },
                               [beta](double) { return std::sqrt(beta); }, 0.5) ==
          doctest::Approx(std::sqrt(1.0 - std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("sigma_from_diffusion is nondecreasing in t when f <= 0") {
    auto f = [](double t) { return -0.5 - t; };
    auto g = [](double t) { return 0.3 + 0.2 * t; };
    double prev = 0.0;
    for (double t = 0.1; t <= 0.9; t += 0.1) {
        const double s = sigma_from_diffusion(f, g, t);
        CHECK(s >= prev - 1e-12);
        prev = s;
    }
}

TEST_CASE("epsilon_from_churn is the pointwise product") {
    DiffusionSchedule ds;
    ds.f = [](double) { return 0.0; };
    ds.g = [](double) { return std::sqrt(2.0); };
    ds.eta = [](double) { return 1.0; };
    CHECK(epsilon_from_churn(ds, 0.4) == doctest::Approx(std::sqrt(2.0)));

    ds.eta = [](double) { return 0.0; };
    CHECK(epsilon_from_churn(ds, 0.4) == doctest::Approx(0.0));

    ds.g = [](double) { return 1.0; };
    ds.eta = [](double t) { return t; };
    CHECK(epsilon_from_churn(ds, 0.3) == doctest::Approx(0.3));

    // Bilinearity: doubling eta doubles eps exactly.
    ds.g = [](double t) { return 0.7 + t; };
    ds.eta = [](double t) { return 0.2 + 0.1 * t; };
    DiffusionSchedule doubled = ds;
    doubled.eta = [](double t) { return 2.0 * (0.2 + 0.1 * t); };
    for (double t : {0.1, 0.5, 0.9})
        CHECK(epsilon_from_churn(doubled, t) == 2.0 * epsilon_from_churn(ds, t));
}

TEST_CASE("diffusion_from_interpolation closed forms") {
    // alpha == 1, sigma = sqrt(t) -> f = 0, g = 1.
    const NoiseSchedule ve = variance_exploding_schedule();
    const DiffusionSchedule ds = diffusion_from_interpolation(ve, constant_stochasticity(0.0));
    for (double t : {0.1, 0.5, 0.9}) {
        CHECK(ds.f(t) == doctest::Approx(0.0));
        CHECK(ds.g(t) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(ds.eta(t) == doctest::Approx(0.0));
    }

    // Flow matching at t = 0.5: f = -2, g = sqrt(2).
    const DiffusionSchedule fm =
        diffusion_from_interpolation(flow_matching_schedule(), constant_stochasticity(0.0));
    CHECK(fm.f(0.5) == doctest::Approx(-2.0));
    CHECK(fm.g(0.5) == doctest::Approx(std::sqrt(2.0)));

    // Nonzero stochasticity: eta = eps / g.
    const DiffusionSchedule churned =
        diffusion_from_interpolation(flow_matching_schedule(), constant_stochasticity(1.0));
    CHECK(churned.eta(0.5) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("conversion is guarded at the singularity") {
    const DiffusionSchedule fm =
        diffusion_from_interpolation(flow_matching_schedule(), constant_stochasticity(0.0));
    CHECK_THROWS_AS(fm.f(0.9995), std::domain_error);
    CHECK_THROWS_AS(fm.g(1.0), std::domain_error);
}

TEST_CASE("negative alpha raises a domain error") {
    const NoiseSchedule bad = make_schedule([](double t) { return 0.5 - t; },
                                            [](double t) { return t; }, "bad");
    const DiffusionSchedule ds = diffusion_from_interpolation(bad, constant_stochasticity(0.0));
    CHECK_THROWS_AS(ds.f(0.7), std::domain_error);
}

TEST_CASE("round trip: flow matching") {
    CHECK(round_trip_check(flow_matching_schedule(), grid_01_to(0.99, 10)) < 1e-6);
}

TEST_CASE("round trip: variance preserving beta = 2") {
    CHECK(round_trip_check(variance_preserving_schedule(2.0), grid_01_to(0.99, 10)) < 1e-6);
}

TEST_CASE("round trip: variance exploding") {
    CHECK(round_trip_check(variance_exploding_schedule(), grid_01_to(0.99, 10)) < 1e-6);
}

TEST_CASE("round trip: identity corruption is exact") {
    const NoiseSchedule identity = {[](double) { return 1.0; }, [](double) { return 0.0; },
                                    [](double) { return 0.0; }, [](double) { return 0.0; },
                                    "identity"};
    CHECK(round_trip_check(identity, grid_01_to(0.9, 5)) < 1e-14);
}

TEST_CASE("tabulated schedule reproduces the flow-matching closed form") {
    std::vector<double> ts, alphas, sigmas;
    for (int i = 0; i <= 32; ++i) {
        const double t = i / 32.0;
        ts.push_back(t);
        alphas.push_back(1.0 - t);
        sigmas.push_back(t);
    }
    const NoiseSchedule tab = tabulated_schedule(ts, alphas, sigmas);
    for (double t : {0.05, 0.37, 0.81}) {
        CHECK(tab.alpha(t) == doctest::Approx(1.0 - t).epsilon(1e-10));
        CHECK(tab.sigma(t) == doctest::Approx(t).epsilon(1e-10));
        CHECK(tab.alpha_dot(t) == doctest::Approx(-1.0).epsilon(1e-8));
        CHECK(tab.sigma_dot(t) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("make_schedule fills derivatives numerically") {
    const NoiseSchedule ns = make_schedule(
        [](double t) { return std::exp(-t); },
        [](double t) { return std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * t))); }, "numeric");
    for (double t : {0.25, 0.5, 0.75}) {
        CHECK(ns.alpha_dot(t) == doctest::Approx(-std::exp(-t)).epsilon(1e-6));
        const double sd = std::exp(-2.0 * t) / std::sqrt(1.0 - std::exp(-2.0 * t));
        CHECK(ns.sigma_dot(t) == doctest::Approx(sd).epsilon(1e-6));
    }
}

}  // TEST_SUITE
