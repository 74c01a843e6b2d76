#include "gmlab/analytic.hpp"

#include <doctest.h>

#include <cmath>

using namespace gmlab;

namespace {

VecD vec1(double x) {
    VecD v(1);
    v[0] = x;
    return v;
}

VecD vec2(double x, double y) {
    VecD v(2);
    v[0] = x;
    v[1] = y;
    return v;
}

GaussianMixture standard_1d() {
    return GaussianMixture::create({1.0}, {vec1(0.0)}, {1.0});
}

GaussianMixture symmetric_pair(double mu, double v) {
    return GaussianMixture::create({0.5, 0.5}, {vec1(-mu), vec1(mu)}, {v, v});
}

}  // namespace

TEST_SUITE("analytic") {

TEST_CASE("mixture validation") {
    CHECK_THROWS_AS(GaussianMixture::create({0.5, 0.6}, {vec1(0), vec1(1)}, {1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture::create({1.0}, {vec1(0)}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture::create({1.0}, {vec1(0)}, {-1.0}), std::invalid_argument);
}

TEST_CASE("marginal density closed forms") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm = standard_1d();
    // t = 0.5: variance alpha^2 v + sigma^2 = 0.25 + 0.25 = 0.5;
    // density at 0 is 1/sqrt(2 pi 0.5) = 1/sqrt(pi).
    CHECK(marginal_density(gm, fm, vec1(0.0), 0.5) ==
          doctest::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-12));
    // t = 0: exactly the data density.
    CHECK(marginal_density(gm, fm, vec1(0.7), 0.0) ==
          doctest::Approx(std::exp(-0.5 * 0.49) / std::sqrt(2 * M_PI)).epsilon(1e-12));
    // Far tails decay to zero.
    CHECK(marginal_density(gm, fm, vec1(12.0), 0.5) < 1e-50);
}

TEST_CASE("marginal density integrates to 1 (1-D grid quadrature)") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm = symmetric_pair(2.0, 0.5);
    for (double t : {0.1, 0.5, 0.9}) {
        double acc = 0.0;
        const int n = 4001;
        const double lo = -12.0, hi = 12.0, dx = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            acc += w * marginal_density(gm, fm, vec1(lo + i * dx), t);
        }
        CHECK(acc * dx == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("marginal density integrates to 1 (2-D grid quadrature)") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm =
        GaussianMixture::create({0.6, 0.4}, {vec2(-1.0, 0.5), vec2(1.5, -0.5)}, {0.4, 0.7});
    const int n = 301;
    const double lo = -8.0, hi = 8.0, dx = (hi - lo) / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double w = ((i == 0 || i == n - 1) ? 0.5 : 1.0) *
                             ((j == 0 || j == n - 1) ? 0.5 : 1.0);
            acc += w * marginal_density(gm, fm, vec2(lo + i * dx, lo + j * dx), 0.4);
        }
    }
    CHECK(acc * dx * dx == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("score closed form and symmetry") {
    const NoiseSchedule fm = flow_matching_schedule();
    // Single component: score = -(x - alpha mu) / (alpha^2 v + sigma^2).
    CHECK(score(standard_1d(), fm, vec1(1.0), 0.5)[0] == doctest::Approx(-2.0).epsilon(1e-12));
    // Symmetric mixture at its mean: zero score.
    CHECK(score(symmetric_pair(1.5, 0.3), fm, vec1(0.0), 0.3)[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("score equals the finite-difference gradient of log density") {
    const GaussianMixture gm = symmetric_pair(1.0, 0.2);
    const double h = 1e-5;
    for (const NoiseSchedule& ns :
         {flow_matching_schedule(), variance_preserving_schedule(2.0)}) {
        CAPTURE(ns.name);
        CounterRng rng(7, 0);
        for (int i = 0; i < 100; ++i) {
            const double t = 0.1 + 0.8 * rng.next_uniform();
            const double x = 4.0 * rng.next_gaussian();
            const double fd = (std::log(marginal_density(gm, ns, vec1(x + h), t)) -
                               std::log(marginal_density(gm, ns, vec1(x - h), t))) /
                              (2 * h);
            const double s = score(gm, ns, vec1(x), t)[0];
            CHECK(s == doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1e-3));
        }
    }
}

TEST_CASE("score raises on density underflow") {
    const NoiseSchedule fm = flow_matching_schedule();
    CHECK_THROWS_AS(score(standard_1d(), fm, vec1(1e6), 0.5), NumericError);
}

TEST_CASE("posterior weights") {
    const NoiseSchedule fm = flow_matching_schedule();
    // Single component.
    CHECK(posterior_weights(standard_1d(), fm, vec1(0.3), 0.5) == std::vector<double>{1.0});
    // Symmetry plane of a two-component mixture.
    const auto w = posterior_weights(symmetric_pair(1.0, 0.1), fm, vec1(0.0), 0.4);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
    // Tight components near t = 0: x = 0.9 belongs to the +1 mode.
    const auto sharp = posterior_weights(symmetric_pair(1.0, 0.01), fm, vec1(0.9), 1e-6);
    CHECK(sharp[1] > 0.999);
    // Weights always sum to 1.
    CounterRng rng(11, 0);
    for (int i = 0; i < 50; ++i) {
        const auto ws = posterior_weights(symmetric_pair(1.3, 0.5), fm,
                                          vec1(3.0 * rng.next_gaussian()),
                                          0.05 + 0.9 * rng.next_uniform());
        double sum = 0.0;
        for (double v : ws) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("marginal velocity: closed-form spot values") {
    const NoiseSchedule fm = flow_matching_schedule();
    // Single standard Gaussian at t=0.5, x=1: u = 0 by the velocity-score identity.
    CHECK(marginal_velocity(standard_1d(), fm, vec1(1.0), 0.5)[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
    // Symmetric stationary point.
    CHECK(marginal_velocity(standard_1d(), fm, vec1(0.0), 1e-3)[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
    // Mixture at the symmetry plane: velocity vanishes there.
    CHECK(marginal_velocity(symmetric_pair(2.0, 0.1), fm, vec1(0.0), 0.5)[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("velocity-score identity holds on probe sets") {
    // u = (alpha_dot/alpha) x + ((alpha_dot/alpha) sigma^2 - sigma_dot sigma) score.
    const GaussianMixture gm = symmetric_pair(1.5, 0.4);
    for (const NoiseSchedule& ns :
         {flow_matching_schedule(), variance_preserving_schedule(2.0),
          variance_exploding_schedule()}) {
        CAPTURE(ns.name);
        CounterRng rng(3, 0);
        for (int i = 0; i < 100; ++i) {
            const double t = 0.1 + 0.8 * rng.next_uniform();
            const VecD x = vec1(3.0 * rng.next_gaussian());
            const double a = ns.alpha(t), s = ns.sigma(t);
            const double a_dot = ns.alpha_dot(t), s_dot = ns.sigma_dot(t);
            const VecD u = marginal_velocity(gm, ns, x, t);
            const VecD rhs =
                (a_dot / a) * x + ((a_dot / a) * s * s - s_dot * s) * score(gm, ns, x, t);
            CHECK(u[0] == doctest::Approx(rhs[0]).epsilon(1e-8).scale(std::abs(rhs[0]) + 1.0));
        }
    }
}

TEST_CASE("component velocity averages to the marginal velocity") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm =
        GaussianMixture::create({0.3, 0.7}, {vec1(-1.0), vec1(2.0)}, {0.2, 0.5});
    CounterRng rng(5, 0);
    for (int i = 0; i < 20; ++i) {
        const double t = 0.1 + 0.8 * rng.next_uniform();
        const VecD x = vec1(2.5 * rng.next_gaussian());
        const auto w = posterior_weights(gm, fm, x, t);
        VecD mix = VecD::Zero(1);
        for (int c = 0; c < gm.components(); ++c)
            mix += w[static_cast<std::size_t>(c)] * component_velocity(gm, fm, c, x, t);
        CHECK(mix[0] == doctest::Approx(marginal_velocity(gm, fm, x, t)[0]).epsilon(1e-12));
    }
}

TEST_CASE("data sampling moments (CLT bands)") {
    const GaussianMixture gm = standard_1d();
    CounterRng rng(99, 0);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_data(gm, rng)[0];
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);       // 3 sigma = 0.0095
    CHECK(std::abs(var - 1.0) < 0.02);  // 3 sigma ~ 0.0134
}

TEST_CASE("forward marginal sampling matches the marginal law") {
    const NoiseSchedule fm = flow_matching_schedule();
    const GaussianMixture gm = symmetric_pair(2.0, 0.25);
    const double t = 0.6;
    CounterRng rng(123, 0);
    const int n = 50000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_marginal(gm, fm, t, rng)[0];
        sum += x;
        sum2 += x * x;
    }
    // Law: mean 0; var = alpha^2 (mu^2 + v) + sigma^2.
    const double a = fm.alpha(t), s = fm.sigma(t);
    const double want_var = a * a * (4.0 + 0.25) + s * s;
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(sum2 / n == doctest::Approx(want_var).epsilon(0.03));
}

}  // TEST_SUITE
