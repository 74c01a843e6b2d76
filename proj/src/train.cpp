#include "gmlab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace gmlab {

BregmanDivergence squared_euclidean_divergence() {
    return {"squared_euclidean",
            [](const VecD& x) { return x.squaredNorm(); },
            [](const VecD& x) { return VecD(2.0 * x); },
            [](const VecD& x) { return MatD(2.0 * MatD::Identity(x.size(), x.size())); }};
}

BregmanDivergence exp_divergence() {
    return {"exp",
            [](const VecD& x) { return x.array().exp().sum(); },
            [](const VecD& x) { return VecD(x.array().exp()); },
            [](const VecD& x) { return MatD(VecD(x.array().exp()).asDiagonal()); }};
}

double bregman(const BregmanDivergence& d, const VecD& a, const VecD& b) {
    if (a.size() != b.size()) throw std::invalid_argument("bregman: size mismatch");
    if (!a.allFinite() || !b.allFinite()) throw std::invalid_argument("bregman: non-finite input");
    const double value = d.phi(a) - d.phi(b) - (a - b).dot(d.grad_phi(b));
    if (value < -1e-12)
        throw NumericError("bregman: negative divergence (phi not convex here?)");
    return value;
}

TargetHead target_head_from_string(const std::string& name) {
    if (name == "velocity") return TargetHead::velocity;
    if (name == "x_prediction") return TargetHead::x_prediction;
    throw ConfigError("unknown target head '" + name + "'");
}

std::string to_string(TargetHead head) {
    return head == TargetHead::velocity ? "velocity" : "x_prediction";
}

int data_dim(const DataSource& data) {
    if (const auto* gm = std::get_if<GaussianMixture>(&data)) return gm->dim();
    const MatD& samples = std::get<MatD>(data);
    if (samples.rows() < 1 || samples.cols() < 1)
        throw std::invalid_argument("data_dim: empty sample matrix");
    return static_cast<int>(samples.cols());
}

VecD draw_data_point(const DataSource& data, CounterRng& rng) {
    if (const auto* gm = std::get_if<GaussianMixture>(&data)) return sample_data(*gm, rng);
    const MatD& samples = std::get<MatD>(data);
    const auto rows = static_cast<std::uint64_t>(samples.rows());
    const auto idx = static_cast<Eigen::Index>(
        std::min<std::uint64_t>(rows - 1, static_cast<std::uint64_t>(rng.next_uniform() * rows)));
    return samples.row(idx).transpose();
}

VecD conditional_target(const NoiseSchedule& ns, TargetHead head, const VecD& z,
                        const VecD& eps, double t) {
    if (head == TargetHead::x_prediction) return z;
    return ns.alpha_dot(t) * z + ns.sigma_dot(t) * eps;
}

BatchResult cgm_loss_batch(const Mlp& model, const BregmanDivergence& d, const DataSource& data,
                           const NoiseSchedule& ns, TargetHead head, int batch_size,
                           CounterRng& rng, double delta) {
    if (batch_size < 1) throw std::invalid_argument("cgm_loss_batch: batch_size must be >= 1");

    BatchResult result;
    result.grads = model.zero_gradients();
    Mlp::Workspace ws;
    const double inv_b = 1.0 / batch_size;

    for (int i = 0; i < batch_size; ++i) {
        const double t = delta + (1.0 - 2.0 * delta) * rng.next_uniform();
        const VecD z = draw_data_point(data, rng);
        const VecD eps = rng.gaussian_vector(z.size());
        const VecD x = ns.alpha(t) * z + ns.sigma(t) * eps;
        const VecD target = conditional_target(ns, head, z, eps, t);

        const VecD out = model.forward(Mlp::embed(x, t), ws);
        const double sample_loss = bregman(d, target, out);
        if (!std::isfinite(sample_loss))
            throw NumericError("cgm_loss_batch: non-finite loss at sample " + std::to_string(i));
        result.loss += inv_b * sample_loss;

        const VecD dl_dout = inv_b * (d.hess_phi(out) * (out - target));
        model.backward(ws, dl_dout, result.grads);
    }
    return result;
}

double gm_vs_cgm_gradient_check(const Mlp& model, const BregmanDivergence& d,
                                const std::vector<VecD>& atoms,
                                const std::vector<double>& atom_weights,
                                const NoiseSchedule& ns, TargetHead head, double t_fixed,
                                const std::vector<VecD>& x_grid) {
    if (atoms.empty() || atoms.size() != atom_weights.size())
        throw std::invalid_argument("gm_vs_cgm_gradient_check: bad atom set");
    if (atoms.size() > 8)
        throw std::invalid_argument("gm_vs_cgm_gradient_check: exact check limited to <= 8 atoms");

    const double alpha = ns.alpha(t_fixed);
    const double sigma = ns.sigma(t_fixed);
    if (sigma <= 0) throw std::invalid_argument("gm_vs_cgm_gradient_check: sigma(t) must be > 0");

    // Atom posterior: point masses pushed through the path have marginal
    // means alpha*z and variance sigma^2.
    std::vector<VecD> pushed;
    pushed.reserve(atoms.size());
    std::vector<double> vars(atoms.size(), sigma * sigma);
    for (const VecD& z : atoms) pushed.push_back(alpha * z);

    auto conditional_field = [&](const VecD& z, const VecD& x) {
        if (head == TargetHead::x_prediction) return z;
        const VecD eps = (x - alpha * z) / sigma;
        return VecD(ns.alpha_dot(t_fixed) * z + ns.sigma_dot(t_fixed) * eps);
    };

    Mlp::Gradients gm_grads = model.zero_gradients();
    Mlp::Gradients cgm_grads = model.zero_gradients();
    Mlp::Workspace ws;
    const double weight = 1.0 / static_cast<double>(x_grid.size());

    for (const VecD& x : x_grid) {
        const std::vector<double> resp =
            component_responsibilities(atom_weights, pushed, vars, x);
        const VecD out = model.forward(Mlp::embed(x, t_fixed), ws);
        const MatD hess = d.hess_phi(out);

        VecD marginal_target = VecD::Zero(out.size());
        for (std::size_t j = 0; j < atoms.size(); ++j)
            marginal_target += resp[j] * conditional_field(atoms[j], x);
        model.backward(ws, VecD(weight * (hess * (out - marginal_target))), gm_grads);

        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const VecD target = conditional_field(atoms[j], x);
            model.backward(ws, VecD(weight * resp[j] * (hess * (out - target))), cgm_grads);
        }
    }

    const VecD flat_gm = Mlp::flatten_gradients(gm_grads);
    const VecD flat_cgm = Mlp::flatten_gradients(cgm_grads);
    const double scale = flat_gm.cwiseAbs().maxCoeff();
    if (scale == 0.0) return (flat_gm - flat_cgm).cwiseAbs().maxCoeff();
    return (flat_gm - flat_cgm).cwiseAbs().maxCoeff() / scale;
}

double relative_field_error(const Mlp& model, TargetHead head, const GaussianMixture& gm,
                            const NoiseSchedule& ns) {
    double num = 0.0, den = 0.0;
    const std::vector<double> probe_ts = {0.1, 0.3, 0.5, 0.7, 0.9};
    for (std::size_t ti = 0; ti < probe_ts.size(); ++ti) {
        const double t = probe_ts[ti];
        CounterRng rng(0x9a0b5e11, ti);  // fixed probe set
        for (int i = 0; i < 200; ++i) {
            const VecD x = sample_marginal(gm, ns, t, rng);
            const VecD oracle = marginal_velocity(gm, ns, x, t);
            VecD learned = model.eval_field(x, t);
            if (head == TargetHead::x_prediction) {
                // Convert x-prediction to velocity through the schedule.
                const double sg = ns.sigma(t);
                const VecD eps_hat = (x - ns.alpha(t) * learned) / sg;
                learned = ns.alpha_dot(t) * learned + ns.sigma_dot(t) * eps_hat;
            }
            num += (learned - oracle).squaredNorm();
            den += oracle.squaredNorm();
        }
    }
    return std::sqrt(num / den);
}

std::pair<Mlp, TrainReport> train_model(const TrainConfig& cfg, const DataSource& data,
                                        const NoiseSchedule& ns) {
    if (cfg.batch_size < 1 || cfg.iterations < 0 || cfg.learning_rate <= 0)
        throw ConfigError("train: batch size, iterations and learning rate must be positive");

    const auto start = std::chrono::steady_clock::now();
    const int d = data_dim(data);
    Mlp model = Mlp::create(d, cfg.hidden, cfg.seed);
    const BregmanDivergence divergence = cfg.divergence == "exp"
                                             ? exp_divergence()
                                             : squared_euclidean_divergence();

    // Adam state, one slot per parameter tensor.
    std::vector<MatD> mw, vw;
    std::vector<VecD> mb, vb;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        mw.push_back(MatD::Zero(model.weights[l].rows(), model.weights[l].cols()));
        vw.push_back(MatD::Zero(model.weights[l].rows(), model.weights[l].cols()));
        mb.push_back(VecD::Zero(model.biases[l].size()));
        vb.push_back(VecD::Zero(model.biases[l].size()));
    }

    TrainReport report;
    CounterRng batch_rng(cfg.seed, /*stream=*/0x2);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const BatchResult batch =
            cgm_loss_batch(model, divergence, data, ns, cfg.head, cfg.batch_size, batch_rng);

        if (iter % cfg.loss_record_stride == 0 || iter + 1 == cfg.iterations) {
            report.loss_iterations.push_back(iter);
            report.loss_curve.push_back(batch.loss);
        }
        report.final_loss = batch.loss;
        if (batch.loss > 1e6) {
            report.diverged = true;
            break;
        }

        const double bias1 = 1.0 - std::pow(cfg.adam_beta1, iter + 1);
        const double bias2 = 1.0 - std::pow(cfg.adam_beta2, iter + 1);
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
                m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
                v = cfg.adam_beta2 * v.array().matrix() +
                    (1.0 - cfg.adam_beta2) * g.array().square().matrix();
                param.array() -= cfg.learning_rate * (m.array() / bias1) /
                                 ((v.array() / bias2).sqrt() + cfg.adam_eps);
            };
            update(model.weights[l], mw[l], vw[l], batch.grads.weights[l]);
            update(model.biases[l], mb[l], vb[l], batch.grads.biases[l]);
        }
    }

    if (const auto* gm = std::get_if<GaussianMixture>(&data))
        report.relative_field_error = relative_field_error(model, cfg.head, *gm, ns);

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(report)};
}

}  // namespace gmlab
