#include "gmlab/sampler.hpp"

#include <cmath>
#include <mutex>
#include <thread>

namespace gmlab {

StepKind step_kind_from_string(const std::string& name) {
    if (name == "ddim") return StepKind::ddim;
    if (name == "flow_euler") return StepKind::flow_euler;
    if (name == "reverse_sde") return StepKind::reverse_sde;
    if (name == "pf_ode") return StepKind::pf_ode;
    if (name == "interpolant_sde") return StepKind::interpolant_sde;
    throw ConfigError("unknown step kind '" + name + "'");
}

std::string to_string(StepKind kind) {
    switch (kind) {
        case StepKind::ddim: return "ddim";
        case StepKind::flow_euler: return "flow_euler";
        case StepKind::reverse_sde: return "reverse_sde";
        case StepKind::pf_ode: return "pf_ode";
        case StepKind::interpolant_sde: return "interpolant_sde";
    }
    return "?";
}

void SamplerConfig::validate() const {
    if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
    if (!(t_end >= 0.0 && t_end < t_start && t_start <= 1.0 - kTimeMargin + 1e-12))
        throw ConfigError("sampler: need 0 <= t_end < t_start <= 1 - delta");
    if (eta < 0) throw ConfigError("sampler: eta must be >= 0");
    if (eps < 0) throw ConfigError("sampler: eps must be >= 0");
}

OracleFieldSource::OracleFieldSource(GaussianMixture gm, NoiseSchedule ns)
    : gm_(std::move(gm)), ns_(std::move(ns)) {}

VecD OracleFieldSource::score(const VecD& z, double t) const {
    return gmlab::score(gm_, ns_, z, t);
}

VecD OracleFieldSource::velocity(const VecD& z, double t) const {
    return marginal_velocity(gm_, ns_, z, t);
}

VecD OracleFieldSource::x_hat(const VecD& z, double t) const {
    // E[x0 | z] = (z + sigma^2 score) / alpha
    const double a = ns_.alpha(t);
    if (a <= 0) throw std::domain_error("x_hat: alpha(t) <= 0");
    const double s = ns_.sigma(t);
    return (z + s * s * score(z, t)) / a;
}

ModelFieldSource::ModelFieldSource(std::shared_ptr<const Mlp> model, NoiseSchedule ns, Head head)
    : model_(std::move(model)), ns_(std::move(ns)), head_(head) {
    if (!model_) throw std::invalid_argument("ModelFieldSource: null model");
}

int ModelFieldSource::dim() const { return model_->field_dim(); }

VecD ModelFieldSource::native(const VecD& z, double t) const {
    return model_->eval_field(z, t);
}

VecD ModelFieldSource::x_hat(const VecD& z, double t) const {
    if (head_ == Head::x_prediction) return native(z, t);
    // Solve z = alpha x + sigma e, u = alpha_dot x + sigma_dot e for x.
    const VecD u = native(z, t);
    const double det = ns_.alpha(t) * ns_.sigma_dot(t) - ns_.sigma(t) * ns_.alpha_dot(t);
    if (std::abs(det) < 1e-14) throw NumericError("head conversion: degenerate schedule");
    return (ns_.sigma_dot(t) * z - ns_.sigma(t) * u) / det;
}

VecD ModelFieldSource::velocity(const VecD& z, double t) const {
    if (head_ == Head::velocity) return native(z, t);
    const VecD xh = native(z, t);
    const double sg = ns_.sigma(t);
    if (sg <= 0) throw std::domain_error("head conversion: sigma(t) = 0");
    const VecD eps_hat = (z - ns_.alpha(t) * xh) / sg;
    return ns_.alpha_dot(t) * xh + ns_.sigma_dot(t) * eps_hat;
}

VecD ModelFieldSource::score(const VecD& z, double t) const {
    const double sg = ns_.sigma(t);
    if (sg <= 0) throw std::domain_error("head conversion: sigma(t) = 0");
    const VecD eps_hat = (z - ns_.alpha(t) * x_hat(z, t)) / sg;
    return -eps_hat / sg;
}

PerturbedFieldSource::PerturbedFieldSource(const FieldSource& base, Target target, BumpFn bump,
                                           double magnitude)
    : base_(base), target_(target), bump_(std::move(bump)), magnitude_(magnitude) {}

VecD PerturbedFieldSource::x_hat(const VecD& z, double t) const { return base_.x_hat(z, t); }

VecD PerturbedFieldSource::velocity(const VecD& z, double t) const {
    VecD u = base_.velocity(z, t);
    if (target_ == Target::velocity && magnitude_ != 0.0) u += magnitude_ * bump_(z, t);
    return u;
}

VecD PerturbedFieldSource::score(const VecD& z, double t) const {
    VecD s = base_.score(z, t);
    if (target_ == Target::score && magnitude_ != 0.0) s += magnitude_ * bump_(z, t);
    return s;
}

VecD ddim_step(const VecD& z_t, const VecD& x_hat, double t, double r, const NoiseSchedule& ns) {
    if (r > t) throw std::invalid_argument("ddim_step: need r <= t");
    const double sigma_t = ns.sigma(t);
    if (sigma_t <= 0) throw std::domain_error("ddim_step: sigma(t) = 0, step undefined");
    const VecD eps_hat = (z_t - ns.alpha(t) * x_hat) / sigma_t;
    return ns.alpha(r) * x_hat + ns.sigma(r) * eps_hat;
}

VecD flow_euler_step(const VecD& z_t, const VecD& v_hat, double t, double r) {
    return z_t + (r - t) * v_hat;
}

VecD reverse_drift(double f_t, double g_t, double eps_t, const VecD& z, const VecD& score_val) {
    return f_t * z - 0.5 * (g_t * g_t + eps_t * eps_t) * score_val;
}

VecD reverse_sde_step(const VecD& z_t, const DiffusionSchedule& ds, const VecD& score_val,
                      double t, double r, CounterRng& rng) {
    const double h = t - r;
    if (h <= 0) throw std::invalid_argument("reverse_sde_step: need r < t");
    const double f_t = ds.f(t);
    const double g_t = ds.g(t);
    const double eps_t = ds.eta(t) * g_t;
    VecD z_r = z_t - h * reverse_drift(f_t, g_t, eps_t, z_t, score_val);
    if (eps_t != 0.0) z_r += std::sqrt(h) * eps_t * rng.gaussian_vector(z_t.size());
    return z_r;
}

VecD pf_ode_step(const VecD& z_t, const VecD& u_val, const VecD& score_val, double eps_t,
                 double t, double r) {
    const double h = t - r;
    if (h <= 0) throw std::invalid_argument("pf_ode_step: need r < t");
    if (eps_t == 0.0) return z_t - h * u_val;
    return z_t - h * (u_val - 0.5 * eps_t * eps_t * score_val);
}

VecD pf_ode_step(const VecD& z_t, const DiffusionSchedule& ds, const VecD& score_val,
                 double t, double r) {
    const double h = t - r;
    if (h <= 0) throw std::invalid_argument("pf_ode_step: need r < t");
    const double g_t = ds.g(t);
    const double eps_t = ds.eta(t) * g_t;
    return z_t - h * reverse_drift(ds.f(t), g_t, eps_t, z_t, score_val);
}

VecD interpolant_sde_step(const VecD& z_t, const VecD& u_val, const VecD& score_val,
                          double eps_t, double t, double r, CounterRng& rng) {
    const double h = t - r;
    if (h <= 0) throw std::invalid_argument("interpolant_sde_step: need r < t");
    VecD z_r = z_t - h * (u_val - 0.5 * eps_t * eps_t * score_val);
    if (eps_t != 0.0) z_r += std::sqrt(h) * eps_t * rng.gaussian_vector(z_t.size());
    return z_r;
}

Trajectory sample_trajectory(const FieldSource& fs, const NoiseSchedule& ns,
                             const SamplerConfig& cfg, VecD initial, std::uint64_t stream) {
    cfg.validate();
    CounterRng rng(cfg.seed, stream);

    // The schedule-converted kinds need the diffusion form only when used.
    DiffusionSchedule ds;
    if (cfg.kind == StepKind::reverse_sde ||
        (cfg.kind == StepKind::pf_ode && cfg.pf_ode_diffusion_form)) {
        ds = diffusion_from_interpolation(ns, constant_stochasticity(0.0));
        const double eta = cfg.eta;
        ds.eta = [eta](double) { return eta; };
    }

    Trajectory traj;
    traj.seed = cfg.seed;
    traj.times.reserve(cfg.steps + 1);
    traj.states.reserve(cfg.steps + 1);
    traj.times.push_back(cfg.t_start);
    traj.states.push_back(std::move(initial));

    const double dt = (cfg.t_end - cfg.t_start) / cfg.steps;
    for (int k = 0; k < cfg.steps; ++k) {
        const double t = cfg.t_start + k * dt;
        const double r = (k + 1 == cfg.steps) ? cfg.t_end : cfg.t_start + (k + 1) * dt;
        const VecD& z = traj.states.back();
        VecD next;
        switch (cfg.kind) {
            case StepKind::ddim:
                next = ddim_step(z, fs.x_hat(z, t), t, r, ns);
                break;
            case StepKind::flow_euler:
                next = flow_euler_step(z, fs.velocity(z, t), t, r);
                break;
            case StepKind::reverse_sde:
                next = reverse_sde_step(z, ds, fs.score(z, t), t, r, rng);
                break;
            case StepKind::pf_ode:
                if (cfg.pf_ode_diffusion_form) {
                    next = pf_ode_step(z, ds, fs.score(z, t), t, r);
                } else {
                    next = pf_ode_step(z, fs.velocity(z, t),
                                       cfg.eps != 0.0 ? fs.score(z, t)
                                                      : VecD(VecD::Zero(z.size())),
                                       cfg.eps, t, r);
                }
                break;
            case StepKind::interpolant_sde:
                next = interpolant_sde_step(z, fs.velocity(z, t),
                                            cfg.eps != 0.0 ? fs.score(z, t)
                                                           : VecD(VecD::Zero(z.size())),
                                            cfg.eps, t, r, rng);
                break;
        }
        if (!next.allFinite()) throw NumericError("sample_trajectory: non-finite state");
        traj.times.push_back(r);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

std::vector<Trajectory> sample_batch(const FieldSource& fs, const NoiseSchedule& ns,
                                     const SamplerConfig& cfg, int n_trajectories,
                                     const InitialSampler& init, int threads) {
    if (n_trajectories < 1) throw ConfigError("sample_batch: need >= 1 trajectories");
    if (threads < 1) threads = 1;

    std::vector<Trajectory> out(static_cast<std::size_t>(n_trajectories));
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&](int begin, int end) {
        try {
            for (int i = begin; i < end; ++i) {
                // Stream i: the initial draw and the path noise share one
                // per-trajectory stream, so results are independent of the
                // thread partition.
                CounterRng init_rng(cfg.seed, 0x100000000ULL + static_cast<std::uint64_t>(i));
                VecD z0 = init(init_rng);
                out[static_cast<std::size_t>(i)] =
                    sample_trajectory(fs, ns, cfg, std::move(z0), static_cast<std::uint64_t>(i));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (threads == 1) {
        worker(0, n_trajectories);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_trajectories + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(n_trajectories, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

InitialSampler mixture_forward_initializer(const GaussianMixture& gm, const NoiseSchedule& ns,
                                           double t) {
    return [gm, ns, t](CounterRng& rng) { return sample_marginal(gm, ns, t, rng); };
}

InitialSampler standard_normal_initializer(int dim) {
    return [dim](CounterRng& rng) { return rng.gaussian_vector(dim); };
}

}  // namespace gmlab
