#include "gmlab/data.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace gmlab;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream os(path);
    os << content;
    return path;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("gaussian mixture generation: CLT moment bands") {
    DatasetSpec spec;
    spec.kind = DatasetKind::gaussian_mixture;
    spec.count = 100000;
    spec.seed = 17;
    VecD mean(1);
    mean << 0.0;
    spec.mixture = GaussianMixture::create({1.0}, {mean}, {1.0});
    const MatD rows = generate_dataset(spec);
    REQUIRE(rows.rows() == 100000);
    const double m = rows.col(0).mean();
    const double var = (rows.col(0).array() - m).square().sum() / (rows.rows() - 1);
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("generation is bitwise deterministic under a fixed seed") {
    DatasetSpec spec;
    spec.kind = DatasetKind::two_moons;
    spec.count = 257;
    spec.seed = 5;
    spec.moons_noise = 0.05;
    const MatD a = generate_dataset(spec);
    const MatD b = generate_dataset(spec);
    REQUIRE(a.rows() == 257);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) CHECK(a(i, j) == b(i, j));
}

TEST_CASE("n = 1 produces one row") {
    DatasetSpec spec;
    spec.kind = DatasetKind::checkerboard;
    spec.count = 1;
    spec.seed = 0;
    CHECK(generate_dataset(spec).rows() == 1);
}

TEST_CASE("two moons with zero noise sit exactly on the arcs") {
    DatasetSpec spec;
    spec.kind = DatasetKind::two_moons;
    spec.count = 400;
    spec.seed = 9;
    spec.moons_noise = 0.0;
    const MatD rows = generate_dataset(spec);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double x = rows(i, 0), y = rows(i, 1);
        // Outer arc: unit circle around (0,0); inner: unit circle around (1, 0.5).
        const double d_outer = std::abs(std::hypot(x, y) - 1.0);
        const double d_inner = std::abs(std::hypot(x - 1.0, y - 0.5) - 1.0);
        CHECK(std::min(d_outer, d_inner) < 1e-12);
    }
}

TEST_CASE("checkerboard samples stay in active cells") {
    DatasetSpec spec;
    spec.kind = DatasetKind::checkerboard;
    spec.count = 2000;
    spec.seed = 2;
    const MatD rows = generate_dataset(spec);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double x = rows(i, 0), y = rows(i, 1);
        CHECK(x >= -2.0);
        CHECK(x <= 2.0);
        CHECK(y >= -2.0);
        CHECK(y <= 2.0);
        const int cx = static_cast<int>(std::floor(x + 2.0));
        const int cy = static_cast<int>(std::floor(y + 2.0));
        CHECK((std::min(cx, 3) + std::min(cy, 3)) % 2 == 0);
    }
}

TEST_CASE("csv load: happy path") {
    const auto path = write_temp("gmlab_ok.csv", "1.0,2.0\n3.0,4.0\n");
    const MatD m = load_csv(path);
    std::filesystem::remove(path);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == doctest::Approx(1.0));
    CHECK(m(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("csv load: blank lines are skipped") {
    const auto path = write_temp("gmlab_blank.csv", "1.0,2.0\n\n3.0,4.0\n\n");
    const MatD m = load_csv(path);
    std::filesystem::remove(path);
    CHECK(m.rows() == 2);
}

TEST_CASE("csv load: error paths name the line") {
    const auto empty = write_temp("gmlab_empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty), ConfigError);
    std::filesystem::remove(empty);

    const auto header = write_temp("gmlab_header.csv", "x,y\n1.0,2.0\n");
    CHECK_THROWS_WITH_AS(load_csv(header), doctest::Contains("line 1"), ConfigError);
    std::filesystem::remove(header);

    const auto ragged = write_temp("gmlab_ragged.csv", "1.0,2.0\n3.0\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged), doctest::Contains("line 2"), ConfigError);
    std::filesystem::remove(ragged);

    CHECK_THROWS_AS(load_csv("/nonexistent/gmlab.csv"), ConfigError);
}

TEST_CASE("csv round trip") {
    MatD m(2, 3);
    m << 0.1, -2.5, 3.14159, 1e-12, 7.0, -0.0;
    const auto path = std::filesystem::temp_directory_path() / "gmlab_rt.csv";
    save_csv(path, m);
    const MatD back = load_csv(path);
    std::filesystem::remove(path);
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) CHECK(back(i, j) == m(i, j));
}

}  // TEST_SUITE
