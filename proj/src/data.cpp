#include "gmlab/data.hpp"

#include "gmlab/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace gmlab {

namespace {

MatD generate_checkerboard(int count, CounterRng& rng) {
    // 4x4 board on [-2, 2]^2, uniform within the 8 active cells.
    struct Cell {
        double x0, y0;
    };
    std::vector<Cell> active;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if ((i + j) % 2 == 0) active.push_back({-2.0 + i, -2.0 + j});

    MatD out(count, 2);
    for (int r = 0; r < count; ++r) {
        const auto pick = static_cast<std::size_t>(
            std::min<double>(active.size() - 1.0, rng.next_uniform() * active.size()));
        out(r, 0) = active[pick].x0 + rng.next_uniform();
        out(r, 1) = active[pick].y0 + rng.next_uniform();
    }
    return out;
}

MatD generate_two_moons(int count, double noise, CounterRng& rng) {
    // Outer arc: unit circle around (0, 0), theta in [0, pi].
    // Inner arc: unit circle around (1, 0.5), reflected.
    MatD out(count, 2);
    for (int r = 0; r < count; ++r) {
        const double theta = M_PI * rng.next_uniform();
        double x, y;
        if (r % 2 == 0) {
            x = std::cos(theta);
            y = std::sin(theta);
        } else {
            x = 1.0 - std::cos(theta);
            y = 0.5 - std::sin(theta);
        }
        if (noise > 0) {
            x += noise * rng.next_gaussian();
            y += noise * rng.next_gaussian();
        }
        out(r, 0) = x;
        out(r, 1) = y;
    }
    return out;
}

}  // namespace

MatD generate_dataset(const DatasetSpec& spec) {
    if (spec.count < 1) throw ConfigError("dataset: sample count must be >= 1");
    CounterRng rng(spec.seed, /*stream=*/0x0);

    switch (spec.kind) {
        case DatasetKind::gaussian_mixture: {
            if (!spec.mixture) throw ConfigError("dataset: gaussian_mixture needs a mixture");
            MatD out(spec.count, spec.mixture->dim());
            for (int r = 0; r < spec.count; ++r)
                out.row(r) = sample_data(*spec.mixture, rng).transpose();
            return out;
        }
        case DatasetKind::checkerboard:
            return generate_checkerboard(spec.count, rng);
        case DatasetKind::two_moons:
            return generate_two_moons(spec.count, spec.moons_noise, rng);
        case DatasetKind::csv_file:
            return load_csv(spec.csv_path);
    }
    throw ConfigError("dataset: unknown kind");
}

MatD load_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("load_csv: cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    Eigen::Index dim = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<double> row;
        std::size_t begin = 0;
        while (begin <= line.size()) {
            std::size_t end = line.find(',', begin);
            if (end == std::string::npos) end = line.size();
            const char* first = line.data() + begin;
            const char* last = line.data() + end;
            while (first < last && (*first == ' ' || *first == '\t')) ++first;
            const char* trimmed_last = last;
            while (trimmed_last > first &&
                   (*(trimmed_last - 1) == ' ' || *(trimmed_last - 1) == '\t'))
                --trimmed_last;
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(first, trimmed_last, value);
            if (ec != std::errc() || ptr != trimmed_last)
                throw ConfigError("load_csv: non-numeric field at line " +
                                  std::to_string(line_no) + " in " + path.string());
            row.push_back(value);
            begin = end + 1;
            if (end == line.size()) break;
        }
        if (dim < 0) dim = static_cast<Eigen::Index>(row.size());
        if (static_cast<Eigen::Index>(row.size()) != dim)
            throw ConfigError("load_csv: ragged row at line " + std::to_string(line_no) +
                              " in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("load_csv: no data rows in " + path.string());

    MatD out(static_cast<Eigen::Index>(rows.size()), dim);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            out(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return out;
}

void save_csv(const std::filesystem::path& path, const MatD& rows) {
    std::ofstream os(path);
    if (!os) throw ConfigError("save_csv: cannot open " + path.string());
    char buf[64];
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", rows(r, c));
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
}

}  // namespace gmlab
