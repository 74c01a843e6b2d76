#include "gmlab/config.hpp"

#include <fstream>

namespace gmlab {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

namespace {

double require_number(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw ConfigError(where + ": missing numeric '" + std::string(key) + "'");
    return obj[key].get<double>();
}

double number_or(const Json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return obj[key].get<double>();
}

}  // namespace

NoiseSchedule parse_schedule(const Json& section) {
    check_keys(section, {"kind", "beta", "scale", "points"}, "schedule");
    if (!section.contains("kind") || !section["kind"].is_string())
        throw ConfigError("schedule: missing string 'kind'");
    const std::string kind = section["kind"].get<std::string>();

    if (kind == "flow_matching") {
        check_keys(section, {"kind"}, "schedule(flow_matching)");
        return flow_matching_schedule();
    }
    if (kind == "variance_preserving") {
        check_keys(section, {"kind", "beta"}, "schedule(variance_preserving)");
        return variance_preserving_schedule(number_or(section, "beta", 2.0));
    }
    if (kind == "variance_exploding") {
        check_keys(section, {"kind", "scale"}, "schedule(variance_exploding)");
        return variance_exploding_schedule(number_or(section, "scale", 1.0));
    }
    if (kind == "custom_tabulated") {
        check_keys(section, {"kind", "points"}, "schedule(custom_tabulated)");
        if (!section.contains("points") || !section["points"].is_array())
            throw ConfigError("schedule(custom_tabulated): missing 'points' array");
        std::vector<double> ts, alphas, sigmas;
        for (const auto& row : section["points"]) {
            if (!row.is_array() || row.size() != 3)
                throw ConfigError("schedule(custom_tabulated): points must be [t, alpha, sigma]");
            ts.push_back(row[0].get<double>());
            alphas.push_back(row[1].get<double>());
            sigmas.push_back(row[2].get<double>());
        }
        if (ts.size() < 2)
            throw ConfigError("schedule(custom_tabulated): need >= 2 points");
        return tabulated_schedule(ts, alphas, sigmas);
    }
    throw ConfigError("schedule: unknown kind '" + kind + "'");
}

GaussianMixture parse_mixture(const Json& section) {
    check_keys(section, {"components"}, "mixture");
    if (!section.contains("components") || !section["components"].is_array() ||
        section["components"].empty())
        throw ConfigError("mixture: missing non-empty 'components' array");

    std::vector<double> weights, variances;
    std::vector<VecD> means;
    for (const auto& comp : section["components"]) {
        check_keys(comp, {"weight", "mean", "variance"}, "mixture component");
        weights.push_back(require_number(comp, "weight", "mixture component"));
        variances.push_back(require_number(comp, "variance", "mixture component"));
        if (!comp.contains("mean") || !comp["mean"].is_array() || comp["mean"].empty())
            throw ConfigError("mixture component: 'mean' must be a non-empty array");
        VecD mean(comp["mean"].size());
        for (std::size_t i = 0; i < comp["mean"].size(); ++i)
            mean[static_cast<Eigen::Index>(i)] = comp["mean"][i].get<double>();
        means.push_back(std::move(mean));
    }
    try {
        return GaussianMixture::create(std::move(weights), std::move(means), std::move(variances));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mixture: ") + e.what());
    }
}

DatasetSpec parse_dataset(const Json& section, std::uint64_t default_seed) {
    check_keys(section, {"kind", "count", "seed", "mixture", "noise", "path"}, "dataset");
    if (!section.contains("kind") || !section["kind"].is_string())
        throw ConfigError("dataset: missing string 'kind'");
    const std::string kind = section["kind"].get<std::string>();

    DatasetSpec spec;
    spec.count = static_cast<int>(number_or(section, "count", 1));
    spec.seed = section.contains("seed")
                    ? section["seed"].get<std::uint64_t>()
                    : default_seed;
    if (kind == "gaussian_mixture") {
        if (!section.contains("mixture"))
            throw ConfigError("dataset(gaussian_mixture): missing 'mixture' section");
        spec.kind = DatasetKind::gaussian_mixture;
        spec.mixture = parse_mixture(section["mixture"]);
    } else if (kind == "checkerboard") {
        spec.kind = DatasetKind::checkerboard;
    } else if (kind == "two_moons") {
        spec.kind = DatasetKind::two_moons;
        spec.moons_noise = number_or(section, "noise", 0.0);
    } else if (kind == "csv_file") {
        if (!section.contains("path") || !section["path"].is_string())
            throw ConfigError("dataset(csv_file): missing string 'path'");
        spec.kind = DatasetKind::csv_file;
        spec.csv_path = section["path"].get<std::string>();
    } else {
        throw ConfigError("dataset: unknown kind '" + kind + "'");
    }
    return spec;
}

SamplerConfig parse_sampler(const Json& section, std::uint64_t seed) {
    check_keys(section,
               {"kind", "steps", "t_start", "t_end", "eta", "eps", "form", "trajectories",
                "record_trajectories", "init"},
               "sampler");
    SamplerConfig cfg;
    cfg.seed = seed;
    if (!section.contains("kind") || !section["kind"].is_string())
        throw ConfigError("sampler: missing string 'kind'");
    cfg.kind = step_kind_from_string(section["kind"].get<std::string>());
    const double steps = number_or(section, "steps", 100);
    if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
    cfg.steps = static_cast<int>(steps);
    cfg.t_start = number_or(section, "t_start", 1.0 - kTimeMargin);
    cfg.t_end = number_or(section, "t_end", 0.0);
    cfg.eta = number_or(section, "eta", 0.0);
    cfg.eps = number_or(section, "eps", 0.0);
    if (section.contains("form")) {
        const std::string form = section["form"].get<std::string>();
        if (cfg.kind != StepKind::pf_ode)
            throw ConfigError("sampler: 'form' applies to pf_ode only");
        if (form == "diffusion") cfg.pf_ode_diffusion_form = true;
        else if (form != "flow") throw ConfigError("sampler: form must be 'flow' or 'diffusion'");
    }
    cfg.validate();
    return cfg;
}

TrainConfig parse_train(const Json& section, std::uint64_t seed) {
    check_keys(section,
               {"batch_size", "iterations", "learning_rate", "adam_beta1", "adam_beta2",
                "adam_eps", "hidden", "head", "divergence", "loss_record_stride"},
               "train");
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = static_cast<int>(number_or(section, "batch_size", 64));
    cfg.iterations = static_cast<int>(number_or(section, "iterations", 1000));
    cfg.learning_rate = number_or(section, "learning_rate", 1e-3);
    cfg.adam_beta1 = number_or(section, "adam_beta1", 0.9);
    cfg.adam_beta2 = number_or(section, "adam_beta2", 0.999);
    cfg.adam_eps = number_or(section, "adam_eps", 1e-8);
    cfg.loss_record_stride =
        static_cast<int>(number_or(section, "loss_record_stride", 20));
    if (cfg.batch_size < 1 || cfg.iterations < 0 || cfg.learning_rate <= 0 ||
        cfg.loss_record_stride < 1)
        throw ConfigError("train: invalid sizes or rates");
    if (section.contains("hidden")) {
        if (!section["hidden"].is_array()) throw ConfigError("train: 'hidden' must be an array");
        cfg.hidden.clear();
        for (const auto& h : section["hidden"]) cfg.hidden.push_back(h.get<int>());
    }
    if (section.contains("head"))
        cfg.head = target_head_from_string(section["head"].get<std::string>());
    if (section.contains("divergence")) {
        cfg.divergence = section["divergence"].get<std::string>();
        if (cfg.divergence != "squared_euclidean" && cfg.divergence != "exp")
            throw ConfigError("train: divergence must be 'squared_euclidean' or 'exp'");
    }
    return cfg;
}

std::vector<double> parse_time_grid(const Json& section, const std::string& where) {
    if (section.is_array()) {
        std::vector<double> ts;
        for (const auto& v : section) ts.push_back(v.get<double>());
        if (ts.empty()) throw ConfigError(where + ": empty time grid");
        return ts;
    }
    check_keys(section, {"start", "stop", "count"}, where);
    const double start = require_number(section, "start", where);
    const double stop = require_number(section, "stop", where);
    const int count = static_cast<int>(require_number(section, "count", where));
    if (count < 1) throw ConfigError(where + ": count must be >= 1");
    std::vector<double> ts(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        ts[static_cast<std::size_t>(i)] =
            count == 1 ? start : start + (stop - start) * i / (count - 1);
    return ts;
}

Json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    Json config;
    try {
        is >> config;
    } catch (const Json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config;
}

}  // namespace gmlab
