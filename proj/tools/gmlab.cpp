#include "gmlab/ops.hpp"
#include "gmlab/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int threads = 1;
};

void add_common(CLI::App* sub, CliArgs& args) {
    sub->add_option("--config", args.config_path, "JSON experiment config")->required();
    sub->add_option("--out", args.out_dir, "output directory (default: $GMLAB_OUT/<subcommand>)");
    sub->add_option("--seed", args.seed, "seed override (defaults to config 'seed' or 0)");
    sub->add_option("--threads", args.threads, "worker threads for trajectory batches")
        ->check(CLI::PositiveNumber);
}

int dispatch(const std::string& name, const CliArgs& args,
             const std::function<int(const gmlab::RunContext&)>& op) {
    using gmlab::Json;
    const auto start = std::chrono::steady_clock::now();

    gmlab::RunContext ctx;
    ctx.config = gmlab::load_config_file(args.config_path);
    if (!ctx.config.is_object()) throw gmlab::ConfigError("config root must be a JSON object");

    ctx.seed = 0;
    if (ctx.config.contains("seed")) {
        if (!ctx.config["seed"].is_number_unsigned() && !ctx.config["seed"].is_number_integer())
            throw gmlab::ConfigError("config 'seed' must be an integer");
        ctx.seed = ctx.config["seed"].get<std::uint64_t>();
    }
    if (args.seed >= 0) ctx.seed = static_cast<std::uint64_t>(args.seed);

    if (!args.out_dir.empty()) {
        ctx.out_dir = args.out_dir;
    } else if (ctx.config.contains("output_dir")) {
        ctx.out_dir = ctx.config["output_dir"].get<std::string>();
    } else if (const char* root = std::getenv("GMLAB_OUT")) {
        ctx.out_dir = std::filesystem::path(root) / name;
    } else {
        ctx.out_dir = std::filesystem::path("gmlab_out") / name;
    }
    ctx.threads = args.threads;

    std::filesystem::create_directories(ctx.out_dir);
    gmlab::write_config_echo(ctx, name);
    const int code = op(ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    gmlab::write_run_meta(ctx, wall);
    return code;
}

void print_json_error(const char* kind, const std::string& message) {
    gmlab::Json err{{"error", kind}, {"message", message}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gmlab: a Generator Matching numerical laboratory"};
    app.set_version_flag("--version", gmlab::kVersion);
    app.require_subcommand(1);

    struct SubSpec {
        const char* name;
        const char* help;
        int (*op)(const gmlab::RunContext&);
    };
    const SubSpec subs[] = {
        {"convert", "schedule conversion table (t, alpha, sigma, f, g, eps)", gmlab::run_convert},
        {"sample", "run a sampler against an oracle or checkpoint", gmlab::run_sample},
        {"train", "train a field model on the conditional objective", gmlab::run_train},
        {"verify-kfe", "check d<p,f> = <p,Lf> for a matched generator", gmlab::run_verify_kfe},
        {"sensitivity", "field-perturbation robustness experiment", gmlab::run_sensitivity},
        {"superpose", "superposition KFE check and sampling", gmlab::run_superpose},
        {"discrete-demo", "mixture-path CTMC vs master equation", gmlab::run_discrete},
    };

    CliArgs args;
    int exit_code = 0;
    for (const SubSpec& spec : subs) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        add_common(sub, args);
        sub->callback([&args, &spec, &exit_code]() {
            exit_code = dispatch(spec.name, args, spec.op);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints usage / help text
        return code == 0 ? 0 : gmlab::kExitConfig;
    } catch (const gmlab::ConfigError& e) {
        print_json_error("config", e.what());
        return gmlab::kExitConfig;
    } catch (const gmlab::NumericError& e) {
        print_json_error("numeric", e.what());
        return gmlab::kExitNumeric;
    } catch (const std::exception& e) {
        print_json_error("internal", e.what());
        return gmlab::kExitNumeric;
    }
    return exit_code;
}
