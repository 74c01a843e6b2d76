#include "gmlab/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace gmlab {

RateMatrix RateMatrix::create(MatD rates) {
    if (rates.rows() != rates.cols() || rates.rows() < 1)
        throw std::invalid_argument("RateMatrix: square matrix required");
    const int n = static_cast<int>(rates.rows());
    for (int x = 0; x < n; ++x) {
        double row = 0.0;
        for (int y = 0; y < n; ++y) {
            if (y != x && rates(x, y) < 0)
                throw std::invalid_argument("RateMatrix: negative off-diagonal entry");
            row += rates(x, y);
        }
        if (std::abs(row) > 1e-12)
            throw std::invalid_argument("RateMatrix: row sums must be 0");
    }
    return {std::move(rates)};
}

RateMatrix RateMatrix::zero(int n) { return {MatD::Zero(n, n)}; }

VecD MixturePath::distribution(double t) const {
    const double k = kappa(t);
    VecD p = (1.0 - k) * p0;
    p[z] += k;
    return p;
}

MixturePath MixturePath::linear(VecD p0, int z) {
    return {[](double t) { return t; }, [](double) { return 1.0; }, std::move(p0), z};
}

MixturePath MixturePath::cosine(VecD p0, int z) {
    return {[](double t) { return 0.5 * (1.0 - std::cos(M_PI * t)); },
            [](double t) { return 0.5 * M_PI * std::sin(M_PI * t); }, std::move(p0), z};
}

DiscreteDistribution DiscreteDistribution::create(VecD probs) {
    if (probs.size() < 1) throw std::invalid_argument("DiscreteDistribution: empty");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0) throw std::invalid_argument("DiscreteDistribution: negative mass");
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("DiscreteDistribution: mass must sum to 1");
    return {std::move(probs)};
}

double DiscreteDistribution::tv_distance(const DiscreteDistribution& other) const {
    if (other.probs.size() != probs.size())
        throw std::invalid_argument("tv_distance: size mismatch");
    return 0.5 * (probs - other.probs).cwiseAbs().sum();
}

RateMatrix conditional_rates(const MixturePath& path, double t) {
    const double k = path.kappa(t);
    if (k >= 1.0 - 1e-9)
        throw NumericError("conditional_rates: kappa(t) too close to 1 (rate singularity)");
    const double rate = path.kappa_dot(t) / (1.0 - k);
    if (rate < 0)
        throw NumericError("conditional_rates: kappa must be nondecreasing");
    const int n = path.n();
    MatD q = MatD::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        if (x == path.z) continue;
        q(x, path.z) = rate;
        q(x, x) = -rate;
    }
    return RateMatrix::create(std::move(q));
}

double apply_jump_generator(const RateMatrix& q, const VecD& f, int x) {
    if (f.size() != q.n()) throw std::invalid_argument("apply_jump_generator: size mismatch");
    if (x < 0 || x >= q.n()) throw std::invalid_argument("apply_jump_generator: bad state");
    double acc = 0.0;
    for (int y = 0; y < q.n(); ++y)
        if (y != x) acc += q.rates(x, y) * (f[y] - f[x]);
    return acc;
}

RateMatrix marginal_mixture_rates(const std::vector<MixturePath>& paths,
                                  const std::vector<double>& weights, double t) {
    if (paths.empty() || paths.size() != weights.size())
        throw std::invalid_argument("marginal_mixture_rates: bad path/weight lists");
    const int n = paths.front().n();
    double wsum = 0.0;
    for (std::size_t j = 0; j < paths.size(); ++j) {
        if (paths[j].n() != n)
            throw std::invalid_argument("marginal_mixture_rates: state counts differ");
        if (weights[j] < 0)
            throw std::invalid_argument("marginal_mixture_rates: negative weight");
        wsum += weights[j];
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("marginal_mixture_rates: weights must sum to 1");

    std::vector<RateMatrix> conditionals;
    std::vector<VecD> marginals;
    conditionals.reserve(paths.size());
    marginals.reserve(paths.size());
    for (const MixturePath& path : paths) {
        conditionals.push_back(conditional_rates(path, t));
        marginals.push_back(path.distribution(t));
    }

    MatD q = MatD::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        double mass = 0.0;
        for (std::size_t j = 0; j < paths.size(); ++j) mass += weights[j] * marginals[j][x];
        if (mass <= 0) continue;  // unreachable state: any row works; leave frozen
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const double post = weights[j] * marginals[j][x] / mass;
            q.row(x) += post * conditionals[j].rates.row(x);
        }
    }
    return RateMatrix::create(std::move(q));
}

MasterSolution master_equation_solve(const RateFn& q_of_t, const DiscreteDistribution& p0,
                                     double t0, double t1, int n_steps) {
    if (!(t1 > t0)) throw std::invalid_argument("master_equation_solve: need t1 > t0");
    if (n_steps < 1) throw ConfigError("master_equation_solve: n_steps must be >= 1");
    const double h = (t1 - t0) / n_steps;

    // Stability scan: h * max |diagonal| < 0.5.
    double max_diag = 0.0;
    for (int i = 0; i <= 32; ++i) {
        const double ts = t0 + (t1 - t0) * i / 32.0;
        const RateMatrix q = q_of_t(ts);
        for (int x = 0; x < q.n(); ++x) max_diag = std::max(max_diag, q.exit_rate(x));
    }
    if (h * max_diag >= 0.5) {
        const int needed = static_cast<int>(std::ceil((t1 - t0) * max_diag / 0.49));
        throw ConfigError("master_equation_solve: stability bound violated; need n_steps >= " +
                          std::to_string(needed));
    }

    VecD p = p0.probs;
    for (int step = 0; step < n_steps; ++step) {
        const double t = t0 + step * h;
        const RateMatrix q = q_of_t(t);
        p += h * (q.rates.transpose() * p);
    }

    MasterSolution sol;
    const double mass = p.sum();
    sol.renormalization_drift = std::abs(mass - 1.0);
    if (sol.renormalization_drift >= 1e-6)
        throw NumericError("master_equation_solve: renormalization drift exceeds 1e-6");
    p = p.cwiseMax(0.0);
    p /= p.sum();
    sol.terminal = DiscreteDistribution{std::move(p)};
    return sol;
}

namespace {

double scan_rate_bound(const RateFn& q_of_t, double t0, double t1) {
    double bound = 0.0;
    const int kScan = 2048;
    for (int i = 0; i <= kScan; ++i) {
        const double t = t0 + (t1 - t0) * i / kScan;
        const RateMatrix q = q_of_t(t);
        for (int x = 0; x < q.n(); ++x) bound = std::max(bound, q.exit_rate(x));
    }
    return bound * 1.05;  // margin; built-in paths attain the max at t1
}

}  // namespace

int ctmc_simulate(const RateFn& q_of_t, int x0, double t0, double t1, CounterRng& rng,
                  const CtmcOptions& opts) {
    if (!(t1 > t0)) throw std::invalid_argument("ctmc_simulate: need t1 > t0");
    if (t1 > 1.0 - kTimeMargin + 1e-12)
        throw std::invalid_argument("ctmc_simulate: require t1 <= 1 - delta (rates diverge at 1)");

    int x = x0;
    if (opts.scheme == CtmcScheme::exact_clock) {
        const double bound =
            opts.rate_bound ? *opts.rate_bound : scan_rate_bound(q_of_t, t0, t1);
        if (bound <= 0) return x;  // frozen process
        double t = t0;
        while (true) {
            t += rng.next_exponential(bound);
            if (t >= t1) break;
            const RateMatrix q = q_of_t(t);
            const double exit = q.exit_rate(x);
            if (rng.next_uniform() * bound < exit) {
                // Accepted event: pick the destination proportionally.
                double u = rng.next_uniform() * exit;
                for (int y = 0; y < q.n(); ++y) {
                    if (y == x) continue;
                    u -= q.rates(x, y);
                    if (u <= 0) {
                        x = y;
                        break;
                    }
                }
            }
        }
        return x;
    }

    // euler_h: jump with probability h * Q(y; x) per step.
    const int steps = opts.euler_steps;
    if (steps < 1) throw ConfigError("ctmc_simulate: euler_steps must be >= 1");
    const double h = (t1 - t0) / steps;
    for (int k = 0; k < steps; ++k) {
        const double t = t0 + k * h;
        const RateMatrix q = q_of_t(t);
        if (h * q.exit_rate(x) > 1.0)
            throw ConfigError("ctmc_simulate: euler step too large (h * exit rate > 1)");
        double u = rng.next_uniform();
        for (int y = 0; y < q.n(); ++y) {
            if (y == x) continue;
            u -= h * q.rates(x, y);
            if (u <= 0) {
                x = y;
                break;
            }
        }
    }
    return x;
}

DiscreteDistribution ctmc_terminal_histogram(const RateFn& q_of_t, int n_states, int x0,
                                             double t0, double t1, int n_runs,
                                             std::uint64_t seed, const CtmcOptions& opts,
                                             int threads) {
    if (n_runs < 1) throw ConfigError("ctmc_terminal_histogram: need >= 1 runs");
    if (threads < 1) threads = 1;

    CtmcOptions shared = opts;
    if (shared.scheme == CtmcScheme::exact_clock && !shared.rate_bound)
        shared.rate_bound = scan_rate_bound(q_of_t, t0, t1);

    std::vector<int> terminal(static_cast<std::size_t>(n_runs), 0);
    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            CounterRng rng(seed, static_cast<std::uint64_t>(i));
            terminal[static_cast<std::size_t>(i)] = ctmc_simulate(q_of_t, x0, t0, t1, rng, shared);
        }
    };
    if (threads == 1) {
        worker(0, n_runs);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_runs + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(n_runs, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    VecD hist = VecD::Zero(n_states);
    for (int s : terminal) {
        if (s < 0 || s >= n_states) throw NumericError("ctmc_terminal_histogram: state range");
        hist[s] += 1.0;
    }
    hist /= static_cast<double>(n_runs);
    return DiscreteDistribution{std::move(hist)};
}

}  // namespace gmlab
