#include "gmlab/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <utility>

namespace gmlab {

namespace {

// QUADPACK dqk15 abscissae/weights on [-1, 1]. Gauss-7 nodes are the
// odd-indexed Kronrod abscissae plus the midpoint.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
    double kronrod;
    double error;
};

PanelResult gk15(const ScalarFn& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    double fv[15];
    // index i < 7 covers +/- kXgk[i]; the midpoint is last.
    double kronrod = 0.0, gauss = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double lo = f(center - half * kXgk[i]);
        const double hi = f(center + half * kXgk[i]);
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw NumericError("integrate: non-finite integrand value");
        fv[i] = lo;
        fv[7 + i] = hi;
        kronrod += kWgk[i] * (lo + hi);
        if (i % 2 == 1) gauss += kWg[(i - 1) / 2] * (lo + hi);
    }
    const double mid = f(center);
    if (!std::isfinite(mid)) throw NumericError("integrate: non-finite integrand value");
    fv[14] = mid;
    kronrod += kWgk[7] * mid;
    gauss += kWg[3] * mid;

    return {kronrod * half, std::abs(kronrod - gauss) * std::abs(half)};
}

}  // namespace

double integrate(const ScalarFn& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;

    struct Panel {
        double a, b, tol;
        int depth;
    };

    double total = 0.0;
    std::vector<Panel> stack{{a, b, abs_tol, 0}};
    constexpr int kMaxDepth = 52;
    std::size_t evals = 0;
    constexpr std::size_t kMaxPanels = 200000;

    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        if (++evals > kMaxPanels)
            throw NumericError("integrate: panel budget exhausted");

        const PanelResult r = gk15(f, p.a, p.b);
        if (r.error <= p.tol || p.depth >= kMaxDepth) {
            if (p.depth >= kMaxDepth && r.error > 1e3 * p.tol)
                throw NumericError("integrate: failed to converge (singular integrand?)");
            total += r.kronrod;
            continue;
        }
        const double mid = 0.5 * (p.a + p.b);
        stack.push_back({p.a, mid, 0.5 * p.tol, p.depth + 1});
        stack.push_back({mid, p.b, 0.5 * p.tol, p.depth + 1});
    }
    return total;
}

PchipInterpolant::PchipInterpolant(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    const std::size_t n = xs_.size();
    if (n < 2 || ys_.size() != n)
        throw std::invalid_argument("PchipInterpolant: need >= 2 matching nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(xs_[i] < xs_[i + 1]))
            throw std::invalid_argument("PchipInterpolant: abscissae must be strictly increasing");

    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs_[i + 1] - xs_[i];
        delta[i] = (ys_[i + 1] - ys_[i]) / h[i];
    }

    slopes_.assign(n, 0.0);
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
    } else {
        // Fritsch-Carlson weighted harmonic mean at interior nodes.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                slopes_[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        auto endpoint = [](double h0, double h1, double d0, double d1) {
            double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (d * d0 <= 0.0) return 0.0;
            if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
            return d;
        };
        slopes_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
        slopes_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
}

std::size_t PchipInterpolant::interval(double x) const {
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t idx = static_cast<std::size_t>(it - xs_.begin());
    if (idx == 0) return 0;
    return std::min(idx - 1, xs_.size() - 2);
}

double PchipInterpolant::operator()(double x) const {
    const std::size_t i = interval(x);
    const double h = xs_[i + 1] - xs_[i];
    const double s = (x - xs_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * ys_[i] + h10 * h * slopes_[i] + h01 * ys_[i + 1] + h11 * h * slopes_[i + 1];
}

double PchipInterpolant::derivative(double x) const {
    const std::size_t i = interval(x);
    const double h = xs_[i + 1] - xs_[i];
    const double s = (x - xs_[i]) / h;
    const double s2 = s * s;
    const double dh00 = (6 * s2 - 6 * s) / h;
    const double dh10 = (3 * s2 - 4 * s + 1);
    const double dh01 = (-6 * s2 + 6 * s) / h;
    const double dh11 = (3 * s2 - 2 * s);
    return dh00 * ys_[i] + dh10 * slopes_[i] + dh01 * ys_[i + 1] + dh11 * slopes_[i + 1];
}

Antiderivative::Antiderivative(const ScalarFn& f, double a, double b, int n_intervals)
    : a_(a), b_(b), h_((b - a) / n_intervals) {
    if (!(b > a)) throw std::invalid_argument("Antiderivative: need b > a");
    if (n_intervals < 2) throw std::invalid_argument("Antiderivative: need >= 2 intervals");

    values_.resize(static_cast<std::size_t>(n_intervals) + 1);
    slopes_.resize(values_.size());
    values_[0] = 0.0;
    slopes_[0] = f(a);
    double acc = 0.0;
    for (int i = 0; i < n_intervals; ++i) {
        const double lo = a + i * h_;
        const double hi = (i + 1 == n_intervals) ? b : a + (i + 1) * h_;
        acc += gk15(f, lo, hi).kronrod;
        values_[static_cast<std::size_t>(i) + 1] = acc;
        slopes_[static_cast<std::size_t>(i) + 1] = f(hi);
    }
    if (!std::isfinite(slopes_[0]) || !std::isfinite(acc))
        throw NumericError("Antiderivative: non-finite integrand");
    total_ = acc;
}

double Antiderivative::operator()(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return total_;
    const auto i = std::min(values_.size() - 2,
                            static_cast<std::size_t>((x - a_) / h_));
    const double s = (x - (a_ + static_cast<double>(i) * h_)) / h_;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * values_[i] + (s3 - 2 * s2 + s) * h_ * slopes_[i] +
           (-2 * s3 + 3 * s2) * values_[i + 1] + (s3 - s2) * h_ * slopes_[i + 1];
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    MatD jacobi = MatD::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<MatD> solver(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::sqrt(M_PI);  // integral of exp(-u^2)
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()[i];
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

double gauss_hermite_expectation(const QuadratureRule& rule, const ScalarFn& g,
                                 double mean, double var) {
    if (var < 0) throw std::invalid_argument("gauss_hermite_expectation: negative variance");
    const double scale = std::sqrt(2.0 * var);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * g(mean + scale * rule.nodes[i]);
    return acc / std::sqrt(M_PI);
}

}  // namespace gmlab
