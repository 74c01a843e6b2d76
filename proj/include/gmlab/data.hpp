#ifndef GMLAB_DATA_HPP
#define GMLAB_DATA_HPP

#include "gmlab/analytic.hpp"
#include "gmlab/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gmlab {

enum class DatasetKind { gaussian_mixture, checkerboard, two_moons, csv_file };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussian_mixture;
    int count = 1;
    std::uint64_t seed = 0;
    std::optional<GaussianMixture> mixture;  // gaussian_mixture
    double moons_noise = 0.0;                // two_moons
    std::filesystem::path csv_path;          // csv_file
};

// Rows = samples. Deterministic in the seed (bitwise).
MatD generate_dataset(const DatasetSpec& spec);

// Strict numeric CSV: one point per line, comma separated, no headers.
// Blank lines are skipped; ragged or non-numeric rows raise ConfigError
// naming the 1-based line.
MatD load_csv(const std::filesystem::path& path);

void save_csv(const std::filesystem::path& path, const MatD& rows);

}  // namespace gmlab

#endif
