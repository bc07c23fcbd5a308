#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "dnmc/kernel.hpp"
#include "test_support.hpp"

using namespace dnmc;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "dnmc_kernel_test";
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("build_kernel rbf on identical rows gives all-ones") {
    Eigen::MatrixXd X(2, 3);
    X << 1, 2, 3, 1, 2, 3;
    KernelMatrix K = build_kernel(X, RbfKernel{1.0});
    REQUIRE(K.values.isApprox(Eigen::MatrixXd::Ones(2, 2), 1e-14));
}

TEST_CASE("build_kernel linear on identity is identity") {
    KernelMatrix K = build_kernel(Eigen::MatrixXd::Identity(2, 2), LinearKernel{});
    REQUIRE(K.values.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-14));
}

TEST_CASE("build_kernel rbf matches the definitional formula") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd X = test::random_matrix(5, 3, rng);
    const double gamma = 0.5;
    KernelMatrix K = build_kernel(X, RbfKernel{gamma});
    for (int i = 0; i < 5; ++i) {
        REQUIRE(K.values(i, i) == 1.0);
        for (int j = 0; j < 5; ++j) {
            const double expected =
                std::exp(-gamma * (X.row(i) - X.row(j)).squaredNorm());
            REQUIRE(K.values(i, j) == Catch::Approx(expected).margin(1e-12));
            if (i != j) {
                REQUIRE(K.values(i, j) > 0.0);
                REQUIRE(K.values(i, j) <= 1.0);
            }
        }
    }
    REQUIRE(K.is_symmetric());
    REQUIRE(K.is_psd());
}

TEST_CASE("build_kernel rejects non-finite features") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, 2);
    X(1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(build_kernel(X, LinearKernel{}), InputError);
}

TEST_CASE("center_and_normalize rejects the all-ones kernel") {
    KernelMatrix K{Eigen::MatrixXd::Ones(3, 3)};
    REQUIRE_THROWS_AS(center_and_normalize(K), NumericError);
}

TEST_CASE("center_and_normalize fixes diagonal and keeps PSD") {
    std::mt19937_64 rng(7);
    KernelMatrix K{test::random_psd(6, rng)};
    KernelMatrix N = center_and_normalize(K);
    for (int i = 0; i < 6; ++i) REQUIRE(N.values(i, i) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(N.is_symmetric());
    REQUIRE(N.is_psd());
}

TEST_CASE("center_and_normalize keeps a centered unit-diagonal kernel fixed") {
    // K = u u^T with u a balanced sign vector: rows sum to zero and the
    // diagonal is already 1, so both passes must leave it unchanged.
    Eigen::VectorXd u(4);
    u << 1, 1, -1, -1;
    KernelMatrix K{u * u.transpose()};
    KernelMatrix once = center_and_normalize(K);
    REQUIRE((once.values - K.values).cwiseAbs().maxCoeff() <= 1e-12);
    KernelMatrix twice = center_and_normalize(once);
    REQUIRE((twice.values - once.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("binary kernel round trip is exact") {
    KernelMatrix K{Eigen::MatrixXd::Identity(3, 3)};
    const auto path = temp_dir() / "id.mkck";
    save_kernel(K, path);
    KernelMatrix L = load_kernel(path);
    REQUIRE(L.values == K.values);
}

TEST_CASE("binary round trip is bit-exact on random kernels") {
    std::mt19937_64 rng(3);
    KernelMatrix K{test::random_psd(7, rng)};
    const auto path = temp_dir() / "rand.mkck";
    save_kernel(K, path);
    KernelMatrix L = load_kernel(path);
    REQUIRE(L.values == K.values);
}

TEST_CASE("csv variant agrees with binary") {
    std::mt19937_64 rng(4);
    KernelMatrix K{test::random_psd(5, rng)};
    const auto bin = temp_dir() / "k.mkck";
    const auto csv = temp_dir() / "k.csv";
    save_kernel(K, bin);
    save_kernel_csv(K, csv);
    KernelMatrix A = load_kernel(bin);
    KernelMatrix B = load_kernel(csv);
    REQUIRE((A.values - B.values).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("header and payload size mismatch is a format error") {
    const auto path = temp_dir() / "bad.mkck";
    {
        std::ofstream f(path, std::ios::binary);
        f.write("MKCK", 4);
        std::uint32_t version = 1, n = 2;
        f.write(reinterpret_cast<const char*>(&version), 4);
        f.write(reinterpret_cast<const char*>(&n), 4);
        // 3x3 payload against an n=2 header.
        for (int i = 0; i < 9; ++i) {
            double v = 1.0;
            f.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
    REQUIRE_THROWS_AS(load_kernel(path), InputError);
}

TEST_CASE("csv with ragged rows is a format error") {
    const auto path = temp_dir() / "ragged.csv";
    {
        std::ofstream f(path);
        f << "1,0\n0,1,0\n";
    }
    REQUIRE_THROWS_AS(load_kernel(path), InputError);
}

TEST_CASE("asymmetric file content is rejected") {
    const auto path = temp_dir() / "asym.csv";
    {
        std::ofstream f(path);
        f << "1,0.5\n0.1,1\n";
    }
    REQUIRE_THROWS_AS(load_kernel(path), InputError);
}

TEST_CASE("labels file round trip") {
    LabelVector lv;
    lv.labels = {1, 2, 2, 3, 1};
    lv.k = 3;
    const auto path = temp_dir() / "labels.txt";
    save_labels(lv, path);
    LabelVector back = load_labels(path);
    REQUIRE(back.labels == lv.labels);
    REQUIRE(back.k == 3);
}

TEST_CASE("built kernels keep symmetry and PSD over random draws") {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 20; ++it) {
        const Eigen::MatrixXd X = test::random_matrix(6, 4, rng);
        for (const KernelSpec& spec :
             {KernelSpec{LinearKernel{}}, KernelSpec{RbfKernel{0.3}},
              KernelSpec{PolynomialKernel{2.0, 1.0}}}) {
            KernelMatrix K = build_kernel(X, spec);
            REQUIRE(K.is_symmetric());
            REQUIRE(K.is_psd());
        }
    }
}
