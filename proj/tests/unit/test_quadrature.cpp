#include "gmlab/quadrature.hpp"
#include "gmlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace gmlab;

TEST_SUITE("quadrature") {

TEST_CASE("integrate matches closed forms") {
    CHECK(integrate([](double) { return 0.0; }, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    // Mildly sharp integrand: the adaptive subdivision has to work.
    CHECK(integrate([](double x) { return 1.0 / (1e-3 + x * x); }, -1.0, 1.0) ==
          doctest::Approx(2.0 / std::sqrt(1e-3) * std::atan(1.0 / std::sqrt(1e-3)))
              .epsilon(1e-10));
    // Reversed bounds integrate with a sign flip.
    CHECK(integrate([](double x) { return x; }, 1.0, 0.0) == doctest::Approx(-0.5));
}

TEST_CASE("integrate rejects non-finite integrands") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, -1.0, 1.0), NumericError);
}

TEST_CASE("pchip interpolates nodes exactly and preserves monotonicity") {
    std::vector<double> xs{0.0, 0.3, 0.5, 0.9, 1.0};
    std::vector<double> ys{0.0, 0.1, 0.6, 0.95, 1.0};
    PchipInterpolant p(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(p(xs[i]) == doctest::Approx(ys[i]));
    double prev = p(0.0);
    for (double x = 0.0; x <= 1.0; x += 1e-3) {
        const double v = p(x);
        CHECK(v >= prev - 1e-12);  // monotone data stays monotone
        prev = v;
    }
}

TEST_CASE("pchip derivative matches finite differences") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 64; ++i) {
        const double x = i / 64.0;
        xs.push_back(x);
        ys.push_back(std::sin(2.0 * x) + 0.5 * x);
    }
    PchipInterpolant p(xs, ys);
    for (double x : {0.11, 0.43, 0.77}) {
        const double h = 1e-6;
        const double fd = (p(x + h) - p(x - h)) / (2 * h);
        CHECK(p.derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("antiderivative cache tracks the true antiderivative") {
    Antiderivative a([](double x) { return std::cos(3.0 * x); }, 0.0, 1.0);
    for (double x : {0.0, 0.123, 0.5, 0.987, 1.0})
        CHECK(a(x) == doctest::Approx(std::sin(3.0 * x) / 3.0).epsilon(1e-10));
}

TEST_CASE("gauss-hermite integrates Gaussian moments") {
    const QuadratureRule rule = gauss_hermite(64);
    // Standard normal: E[1]=1, E[x]=0, E[x^2]=1, E[x^4]=3.
    CHECK(gauss_hermite_expectation(rule, [](double) { return 1.0; }, 0.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation(rule, [](double x) { return x; }, 0.0, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation(rule, [](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation(rule, [](double x) { return x * x * x * x; }, 0.0, 1.0) ==
          doctest::Approx(3.0).epsilon(1e-10));
    // Shifted/scaled: E[x^2] under N(m, v) = m^2 + v.
    CHECK(gauss_hermite_expectation(rule, [](double x) { return x * x; }, 1.5, 0.25) ==
          doctest::Approx(1.5 * 1.5 + 0.25).epsilon(1e-12));
    // Oscillatory: E[cos(kx)] under N(0,1) = exp(-k^2/2).
    CHECK(gauss_hermite_expectation(rule, [](double x) { return std::cos(2.1 * x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(-2.1 * 2.1 / 2.0)).epsilon(1e-10));
}

TEST_CASE("counter rng: streams are deterministic and independent of order") {
    CounterRng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    CounterRng c(42, 8);
    CHECK(c.next_u64() != CounterRng(42, 7).next_u64());

    // Gaussian moments sanity at 1e5 draws.
    CounterRng g(123, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = g.next_gaussian();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sum2 / n - 1.0) < 0.03);
}

}  // TEST_SUITE
