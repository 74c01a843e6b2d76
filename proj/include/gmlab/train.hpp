#ifndef GMLAB_TRAIN_HPP
#define GMLAB_TRAIN_HPP

#include "gmlab/analytic.hpp"
#include "gmlab/common.hpp"
#include "gmlab/mlp.hpp"
#include "gmlab/rng.hpp"
#include "gmlab/schedule.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace gmlab {

// D(a, b) = phi(a) - phi(b) - <a - b, grad phi(b)> for strictly convex phi.
// hess_phi backs the gradient of D with respect to its second argument:
// dD/db = Hphi(b) (b - a).
struct BregmanDivergence {
    std::string name;
    std::function<double(const VecD&)> phi;
    std::function<VecD(const VecD&)> grad_phi;
    std::function<MatD(const VecD&)> hess_phi;
};

BregmanDivergence squared_euclidean_divergence();  // phi = |x|^2, D = |a-b|^2
BregmanDivergence exp_divergence();                // phi = sum exp(x_i)

double bregman(const BregmanDivergence& d, const VecD& a, const VecD& b);

enum class TargetHead { velocity, x_prediction };

TargetHead target_head_from_string(const std::string& name);
std::string to_string(TargetHead head);

// Either a closed-form mixture or an empirical sample matrix (rows = points).
using DataSource = std::variant<GaussianMixture, MatD>;

int data_dim(const DataSource& data);
VecD draw_data_point(const DataSource& data, CounterRng& rng);

// Conditional target given the drawn data point and noise:
// velocity head: alpha_dot z + sigma_dot eps; x-prediction head: z.
VecD conditional_target(const NoiseSchedule& ns, TargetHead head, const VecD& z,
                        const VecD& eps, double t);

struct BatchResult {
    double loss = 0.0;
    Mlp::Gradients grads;
};

// One CGM batch: draws (t, z, eps), forms x = alpha z + sigma eps, returns the
// mean divergence between the conditional target and the model output plus
// the exact reverse-mode parameter gradient. t ~ Unif[delta, 1 - delta].
BatchResult cgm_loss_batch(const Mlp& model, const BregmanDivergence& d, const DataSource& data,
                           const NoiseSchedule& ns, TargetHead head, int batch_size,
                           CounterRng& rng, double delta = kTimeMargin);

// Compares the parameter gradient of the exact-marginal GM objective with the
// exact conditional expectation of the CGM gradient on a finite atom set
// (posterior computed in closed form, nothing sampled). Returns the max
// relative deviation; the equal-gradients identity makes it ~0 for any
// Bregman divergence.
double gm_vs_cgm_gradient_check(const Mlp& model, const BregmanDivergence& d,
                                const std::vector<VecD>& atoms,
                                const std::vector<double>& atom_weights,
                                const NoiseSchedule& ns, TargetHead head, double t_fixed,
                                const std::vector<VecD>& x_grid);

struct TrainConfig {
    int batch_size = 64;
    int iterations = 1000;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::vector<int> hidden = {64, 64, 64};
    TargetHead head = TargetHead::velocity;
    std::string divergence = "squared_euclidean";
    int loss_record_stride = 20;
};

struct TrainReport {
    std::vector<double> loss_iterations;  // iteration index per recorded loss
    std::vector<double> loss_curve;
    double final_loss = 0.0;
    double relative_field_error = -1.0;  // vs analytic oracle; -1 when no oracle
    bool diverged = false;
    double wall_clock_seconds = 0.0;     // volatile; excluded from primary outputs
};

// Runs Adam on the CGM objective. Deterministic given cfg.seed (single
// threaded, fixed reduction order). When the data source is a mixture the
// report carries the relative L2 error of the learned field against the
// analytic marginal velocity on a fixed probe set.
std::pair<Mlp, TrainReport> train_model(const TrainConfig& cfg, const DataSource& data,
                                        const NoiseSchedule& ns);

// Relative L2 error of a field against the analytic marginal velocity over
// probe points drawn from the marginal law (200 per t in {0.1,...,0.9},
// fixed internal seed).
double relative_field_error(const Mlp& model, TargetHead head, const GaussianMixture& gm,
                            const NoiseSchedule& ns);

}  // namespace gmlab

#endif
