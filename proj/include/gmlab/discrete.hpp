#ifndef GMLAB_DISCRETE_HPP
#define GMLAB_DISCRETE_HPP

#include "gmlab/common.hpp"
#include "gmlab/quadrature.hpp"
#include "gmlab/rng.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace gmlab {

// Rate matrix of a CTMC on n states. rates(x, y) for y != x is the rate of
// jumping FROM x TO y (the kernel argument order Q(dy; x)); the diagonal is
// minus the row sum, so rows sum to zero. The master equation reads
// dp/dt = Q^T p.
struct RateMatrix {
    MatD rates;

    int n() const { return static_cast<int>(rates.rows()); }
    double exit_rate(int x) const { return -rates(x, x); }

    // Validates sign structure and zero row sums (1e-12).
    static RateMatrix create(MatD rates);
    static RateMatrix zero(int n);
};

using RateFn = std::function<RateMatrix(double)>;

// Mixture conditional path p_t(x | z) = (1 - kappa_t) p0(x) + kappa_t [x = z].
struct MixturePath {
    ScalarFn kappa;
    ScalarFn kappa_dot;
    VecD p0;  // distribution over n states
    int z = 0;

    int n() const { return static_cast<int>(p0.size()); }
    VecD distribution(double t) const;

    static MixturePath linear(VecD p0, int z);          // kappa = t
    static MixturePath cosine(VecD p0, int z);          // kappa = (1 - cos(pi t))/2
};

struct DiscreteDistribution {
    VecD probs;

    static DiscreteDistribution create(VecD probs);
    double tv_distance(const DiscreteDistribution& other) const;
};

// The conditional generator of the mixture path: every state x != z jumps
// toward z with rate kappa_dot/(1 - kappa). Satisfies d/dt p_t = Q^T p_t
// exactly. Throws NumericError once kappa_t >= 1 - 1e-9.
RateMatrix conditional_rates(const MixturePath& path, double t);

// sum_{y != x} Q(y; x) (f(y) - f(x)).
double apply_jump_generator(const RateMatrix& q, const VecD& f, int x);

// Marginal generator of a finite mixture of conditional paths: row x of the
// result averages the conditional rate rows under the posterior over the
// conditioning variable given the current state,
//   w_j(x, t) ~ weight_j * p_t^j(x).
// By construction Q^T evolves the mixed marginal path sum_j w_j p_t^j.
RateMatrix marginal_mixture_rates(const std::vector<MixturePath>& paths,
                                  const std::vector<double>& weights, double t);

struct MasterSolution {
    DiscreteDistribution terminal;
    double renormalization_drift = 0.0;  // |mass - 1| accumulated before renormalizing
};

// Explicit Euler evolution of dp/dt = Q^T p. Requires h * max|diagonal| < 0.5
// over the horizon (ConfigError with a suggested n_steps otherwise).
MasterSolution master_equation_solve(const RateFn& q_of_t, const DiscreteDistribution& p0,
                                     double t0, double t1, int n_steps);

enum class CtmcScheme { exact_clock, euler_h };

struct CtmcOptions {
    CtmcScheme scheme = CtmcScheme::exact_clock;
    int euler_steps = 1000;                      // euler_h only
    std::optional<double> rate_bound;            // exact_clock; scanned when absent
};

// Simulates one path and returns the terminal state. exact_clock thins
// candidate events against a rate upper bound; euler_h jumps with probability
// h * Q(y; x) per step. Requires t1 <= 1 - kTimeMargin (rates of the mixture
// path diverge at t = 1).
int ctmc_simulate(const RateFn& q_of_t, int x0, double t0, double t1, CounterRng& rng,
                  const CtmcOptions& opts = {});

// Terminal histogram over n_runs simulations with per-run RNG streams.
DiscreteDistribution ctmc_terminal_histogram(const RateFn& q_of_t, int n_states, int x0,
                                             double t0, double t1, int n_runs,
                                             std::uint64_t seed, const CtmcOptions& opts = {},
                                             int threads = 1);

}  // namespace gmlab

#endif
