#ifndef GMLAB_OPS_HPP
#define GMLAB_OPS_HPP

#include "gmlab/common.hpp"
#include "gmlab/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace gmlab {

// Exit codes shared by the CLI and the drivers.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitThreshold = 2;
inline constexpr int kExitNumeric = 3;

struct RunContext {
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    Json config;
};

// Writes config_echo.json (subcommand, tool version, seed, config). The echo
// deliberately excludes the output directory and thread count so reruns into
// fresh directories stay byte-identical; operational details go to
// run_meta.json, which is outside the reproducibility contract.
void write_config_echo(const RunContext& ctx, const std::string& subcommand);
void write_run_meta(const RunContext& ctx, double wall_clock_seconds);

int run_convert(const RunContext& ctx);
int run_sample(const RunContext& ctx);
int run_train(const RunContext& ctx);
int run_verify_kfe(const RunContext& ctx);
int run_sensitivity(const RunContext& ctx);
int run_superpose(const RunContext& ctx);
int run_discrete(const RunContext& ctx);

}  // namespace gmlab

#endif
