#ifndef GMLAB_SAMPLER_HPP
#define GMLAB_SAMPLER_HPP

#include "gmlab/analytic.hpp"
#include "gmlab/common.hpp"
#include "gmlab/mlp.hpp"
#include "gmlab/rng.hpp"
#include "gmlab/schedule.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gmlab {

enum class StepKind { ddim, flow_euler, reverse_sde, pf_ode, interpolant_sde };

StepKind step_kind_from_string(const std::string& name);
std::string to_string(StepKind kind);

struct SamplerConfig {
    int steps = 100;
    double t_start = 1.0 - kTimeMargin;
    double t_end = 0.0;
    std::uint64_t seed = 0;
    StepKind kind = StepKind::flow_euler;
    double eta = 0.0;  // reverse_sde / diffusion-form pf_ode churn
    double eps = 0.0;  // flow-form pf_ode / interpolant_sde stochasticity level
    // pf_ode only: the flow form steps z - h (u - 1/2 eps^2 score) with the
    // source's velocity head; the diffusion form steps the converted-schedule
    // drift f z - 1/2 (g^2 + (eta g)^2) score, i.e. the score correction
    // enters through the schedule. Note the eps/eta terms contract the law
    // unless paired with matching noise (see interpolant_sde/reverse_sde).
    bool pf_ode_diffusion_form = false;

    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<VecD> states;  // one per time
    std::uint64_t seed = 0;
};

// Prediction heads at (z, t). The heads are interconvertible through the
// schedule: eps_hat = (z - alpha x_hat)/sigma, u = alpha_dot x_hat +
// sigma_dot eps_hat, score = -eps_hat/sigma; models freely switch
// parameterizations, so samplers accept all of them behind one interface.
class FieldSource {
public:
    virtual ~FieldSource() = default;
    virtual VecD x_hat(const VecD& z, double t) const = 0;
    virtual VecD velocity(const VecD& z, double t) const = 0;
    virtual VecD score(const VecD& z, double t) const = 0;
    virtual int dim() const = 0;
};

// Closed-form heads from the Gaussian-mixture oracle.
class OracleFieldSource final : public FieldSource {
public:
    OracleFieldSource(GaussianMixture gm, NoiseSchedule ns);
    VecD x_hat(const VecD& z, double t) const override;
    VecD velocity(const VecD& z, double t) const override;
    VecD score(const VecD& z, double t) const override;
    int dim() const override { return gm_.dim(); }
    const GaussianMixture& mixture() const { return gm_; }

private:
    GaussianMixture gm_;
    NoiseSchedule ns_;
};

// Heads derived from a trained network with a single native head.
class ModelFieldSource final : public FieldSource {
public:
    enum class Head { velocity, x_prediction };
    ModelFieldSource(std::shared_ptr<const Mlp> model, NoiseSchedule ns, Head head);
    VecD x_hat(const VecD& z, double t) const override;
    VecD velocity(const VecD& z, double t) const override;
    VecD score(const VecD& z, double t) const override;
    int dim() const override;

private:
    VecD native(const VecD& z, double t) const;
    std::shared_ptr<const Mlp> model_;
    NoiseSchedule ns_;
    Head head_;
};

// Additive perturbation of an existing source's heads (sensitivity studies).
class PerturbedFieldSource final : public FieldSource {
public:
    using BumpFn = std::function<VecD(const VecD&, double)>;
    enum class Target { velocity, score };
    PerturbedFieldSource(const FieldSource& base, Target target, BumpFn bump, double magnitude);
    VecD x_hat(const VecD& z, double t) const override;
    VecD velocity(const VecD& z, double t) const override;
    VecD score(const VecD& z, double t) const override;
    int dim() const override { return base_.dim(); }

private:
    const FieldSource& base_;
    Target target_;
    BumpFn bump_;
    double magnitude_;
};

// One DDIM recursion step: z_r = alpha_r x_hat + sigma_r eps_hat with
// eps_hat = (z_t - alpha_t x_hat)/sigma_t. Requires sigma_t > 0.
VecD ddim_step(const VecD& z_t, const VecD& x_hat, double t, double r, const NoiseSchedule& ns);

// z_r = z_t + (r - t) v_hat.
VecD flow_euler_step(const VecD& z_t, const VecD& v_hat, double t, double r);

// Shared reverse drift f z - 1/2 (g^2 + eps^2) score; written this way so the
// eta = 0 reverse SDE and the eps = 0 probability-flow ODE produce identical
// arithmetic (acceptance demands bitwise agreement).
VecD reverse_drift(double f_t, double g_t, double eps_t, const VecD& z, const VecD& score_val);

// Euler-Maruyama step of dz = (f z - (1+eta^2)/2 g^2 score) dt + eta g dW
// integrated backwards over h = t - r.
VecD reverse_sde_step(const VecD& z_t, const DiffusionSchedule& ds, const VecD& score_val,
                      double t, double r, CounterRng& rng);

// Deterministic Euler step of dz = (u - 1/2 eps^2 score) dt backwards in time.
VecD pf_ode_step(const VecD& z_t, const VecD& u_val, const VecD& score_val, double eps_t,
                 double t, double r);

// Diffusion-side variant: u is derived from the schedule as f z - 1/2 g^2 score
// and the churn level as eps = eta g.
VecD pf_ode_step(const VecD& z_t, const DiffusionSchedule& ds, const VecD& score_val,
                 double t, double r);

// Euler-Maruyama step of dz = (u - 1/2 eps^2 score) dt + eps dW backwards.
VecD interpolant_sde_step(const VecD& z_t, const VecD& u_val, const VecD& score_val,
                          double eps_t, double t, double r, CounterRng& rng);

// Runs the configured recursion on a uniform grid from t_start down to t_end.
// Bit-identical for fixed (seed, stream, cfg).
Trajectory sample_trajectory(const FieldSource& fs, const NoiseSchedule& ns,
                             const SamplerConfig& cfg, VecD initial, std::uint64_t stream = 0);

using InitialSampler = std::function<VecD(CounterRng&)>;

// Draws initial states per trajectory (stream = trajectory index) and runs
// them, optionally across threads; results are stored by index so the output
// does not depend on the thread count.
std::vector<Trajectory> sample_batch(const FieldSource& fs, const NoiseSchedule& ns,
                                     const SamplerConfig& cfg, int n_trajectories,
                                     const InitialSampler& init, int threads = 1);

InitialSampler mixture_forward_initializer(const GaussianMixture& gm, const NoiseSchedule& ns,
                                           double t);
InitialSampler standard_normal_initializer(int dim);

}  // namespace gmlab

#endif
