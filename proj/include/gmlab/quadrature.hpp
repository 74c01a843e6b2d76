#ifndef GMLAB_QUADRATURE_HPP
#define GMLAB_QUADRATURE_HPP

#include "gmlab/common.hpp"

#include <functional>
#include <vector>

namespace gmlab {

using ScalarFn = std::function<double(double)>;

// Adaptive Gauss-Kronrod 7/15 panel integration of f over [a, b].
// Panels are bisected until the local Kronrod-Gauss discrepancy meets its
// share of abs_tol. Throws NumericError on non-finite integrand values or
// when the subdivision budget is exhausted.
double integrate(const ScalarFn& f, double a, double b, double abs_tol = 1e-9);

// Shape-preserving cubic interpolation (Fritsch-Carlson PCHIP) through
// strictly increasing abscissae.
class PchipInterpolant {
public:
    PchipInterpolant() = default;
    PchipInterpolant(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }

private:
    std::size_t interval(double x) const;

    std::vector<double> xs_, ys_, slopes_;
};

// Cached antiderivative A(x) = integral of f over [a, x]. Node values are
// accumulated with a single Gauss-Kronrod 15 panel per subinterval and
// interpolated with cubic Hermite pieces whose slopes are the exact
// derivative values f(x_j) (A' = f is known, so no slope estimation is
// needed); node values are the accumulated panel sums themselves.
class Antiderivative {
public:
    Antiderivative(const ScalarFn& f, double a, double b, int n_intervals = 1024);

    double operator()(double x) const;
    double upper() const { return b_; }
    double total() const { return total_; }

private:
    double a_, b_, h_, total_;
    std::vector<double> values_, slopes_;
};

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule for the weight exp(-u^2) on (-inf, inf), computed via
// the Golub-Welsch eigendecomposition of the Jacobi matrix. Expectation of g
// under N(mean, var): sum_i w_i g(mean + sqrt(2 var) u_i) / sqrt(pi).
QuadratureRule gauss_hermite(int n);

// E[g(X)] for X ~ N(mean, var) using the rule above.
double gauss_hermite_expectation(const QuadratureRule& rule, const ScalarFn& g,
                                 double mean, double var);

}  // namespace gmlab

#endif
