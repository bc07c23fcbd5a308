#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "dnmc/noise.hpp"
#include "dnmc/synth.hpp"
#include "test_support.hpp"

using namespace dnmc;

namespace {

/// View sharing col(H) exactly, padded with extra orthogonal columns: pure
/// N-noise by construction.
FeatureMatrix pure_n_noise_view(const PartitionMatrix& H, Eigen::Index extra,
                                std::mt19937_64& rng) {
    const Eigen::Index n = H.n(), k = H.k();
    Eigen::MatrixXd W = test::random_matrix(n, extra, rng);
    W -= H.values * (H.values.transpose() * W);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    Eigen::MatrixXd Wq = qr.householderQ() * Eigen::MatrixXd::Identity(n, extra);
    FeatureMatrix U;
    U.values.resize(n, k + extra);
    U.values << H.values, Wq;
    return U;
}

}  // namespace

TEST_CASE("zero noise when col(U) = col(H)") {
    std::mt19937_64 rng(1);
    PartitionMatrix H = test::random_partition(12, 3, rng);
    // Same span, rotated basis.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(test::random_matrix(3, 3, rng));
    Eigen::MatrixXd R = qr.householderQ();
    FeatureMatrix U{H.values * R};
    NoiseDecomposition dec = decompose_noise(U, H);
    REQUIRE(dec.E_N.cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE(dec.E_C.cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE(dec.R.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pure N-noise construction") {
    std::mt19937_64 rng(2);
    PartitionMatrix H = test::random_partition(15, 3, rng);
    FeatureMatrix U = pure_n_noise_view(H, 4, rng);
    NoiseDecomposition dec = decompose_noise(U, H);
    REQUIRE(dec.E_C.cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE(dec.R.cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE(dec.tr_N == Catch::Approx(4.0).margin(1e-10));
    REQUIRE(check_lemma1(dec, H) <= 1e-10);
    REQUIRE(check_lemma2(dec, H) <= 1e-10);
    Lemma3Result l3 = check_lemma3(dec);
    REQUIRE(l3.min_eig_N >= -1e-10);
    REQUIRE(std::abs(l3.max_eig_C) <= 1e-10);
}

TEST_CASE("tilted subspace matches the principal-angle formula") {
    // Rotate each basis vector of H by a known angle into the orthogonal
    // complement: tr(E_C) = sum(cos^2 theta - 1), and cos^2 theta_max - 1 is
    // the most negative C-noise eigenvalue.
    std::mt19937_64 rng(3);
    const Eigen::Index n = 20, k = 3;
    PartitionMatrix H = test::random_partition(n, k, rng);
    const std::vector<double> angles = {0.3, 0.7, 1.1};
    FeatureMatrix U = make_noisy_view(H, 0, angles, 99);
    NoiseDecomposition dec = decompose_noise(U, H);

    double expected_trC = 0.0;
    for (double a : angles) expected_trC += std::cos(a) * std::cos(a) - 1.0;
    REQUIRE(dec.tr_C == Catch::Approx(expected_trC).margin(1e-8));
    REQUIRE(dec.tr_C < 0.0);

    Lemma3Result l3 = check_lemma3(dec);
    REQUIRE(l3.min_eig_N >= -1e-8);
    const double theta_max = 1.1;
    REQUIRE(l3.max_eig_C <= 1e-8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dec.E_C, Eigen::EigenvaluesOnly);
    REQUIRE(es.eigenvalues().minCoeff() ==
            Catch::Approx(std::cos(theta_max) * std::cos(theta_max) - 1.0).margin(1e-8));
}

TEST_CASE("lemmas hold on random draws") {
    std::mt19937_64 rng(4);
    for (int it = 0; it < 30; ++it) {
        const Eigen::Index n = 10 + static_cast<Eigen::Index>(rng() % 31);
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index d = k + static_cast<Eigen::Index>(rng() % (n - k + 1));
        PartitionMatrix H = test::random_partition(n, k, rng);
        FeatureMatrix U = test::random_features(n, d, rng);
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(check_lemma1(dec, H) <= 1e-8);
        REQUIRE(check_lemma2(dec, H) <= 1e-8);
        Lemma3Result l3 = check_lemma3(dec);
        REQUIRE(l3.min_eig_N >= -1e-8);
        REQUIRE(l3.max_eig_C <= 1e-8);
        // Trace bookkeeping: R is traceless.
        REQUIRE(dec.tr_E == Catch::Approx(dec.tr_N + dec.tr_C).margin(1e-8));
    }
}

TEST_CASE("theorem 1 alignment scores") {
    std::mt19937_64 rng(5);
    const Eigen::Index n = 24, k = 3;
    PartitionMatrix H = test::random_partition(n, k, rng);

    SECTION("identical views score their dimension") {
        FeatureMatrix U = test::random_features(n, 5, rng);
        Eigen::MatrixXd scores = check_theorem1({U, U});
        REQUIRE(scores(0, 1) == Catch::Approx(5.0).margin(1e-8));
        REQUIRE(scores(0, 0) == Catch::Approx(5.0).margin(1e-8));
    }

    SECTION("views containing col(H) all score at least k") {
        std::vector<FeatureMatrix> views;
        for (int p = 0; p < 3; ++p)
            views.push_back(pure_n_noise_view(H, 2 + p, rng));
        Eigen::MatrixXd scores = check_theorem1(views);
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q)
                REQUIRE(scores(p, q) >= static_cast<double>(k) - 1e-8);
        // Symmetric with view dimensions on the diagonal.
        REQUIRE(scores.isApprox(scores.transpose(), 1e-12));
        REQUIRE(scores(0, 0) == Catch::Approx(5.0).margin(1e-8));
    }

    SECTION("orthogonal views certify C-noise") {
        Eigen::MatrixXd full = test::random_orthonormal(n, 6, rng);
        FeatureMatrix A{full.leftCols(3)};
        FeatureMatrix B{full.rightCols(3)};
        Eigen::MatrixXd scores = check_theorem1({A, B});
        REQUIRE(scores(0, 1) <= 1e-10);
        REQUIRE(scores(0, 1) < static_cast<double>(k));
    }
}

TEST_CASE("theorem 2 trace identity") {
    std::mt19937_64 rng(6);
    const Eigen::Index n = 30, k = 3;
    PartitionMatrix H = test::random_partition(n, k, rng);

    SECTION("single zero-noise view") {
        FeatureMatrix U{H.values};
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(check_theorem2({dec}, {k}, k) <= 1e-10);
    }

    SECTION("pure N-noise with d = k + 2") {
        FeatureMatrix U = pure_n_noise_view(H, 2, rng);
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(dec.tr_N == Catch::Approx(2.0).margin(1e-10));
        REQUIRE(check_theorem2({dec}, {k + 2}, k) <= 1e-10);
    }

    SECTION("three random views") {
        std::vector<NoiseDecomposition> decs;
        std::vector<Eigen::Index> dims;
        double total_d = 0.0;
        for (int p = 0; p < 3; ++p) {
            const Eigen::Index d = k + static_cast<Eigen::Index>(rng() % 6);
            decs.push_back(decompose_noise(test::random_features(n, d, rng), H));
            dims.push_back(d);
            total_d += static_cast<double>(d);
        }
        REQUIRE(check_theorem2(decs, dims, k) <= 1e-6 * total_d);
    }
}

TEST_CASE("denoise_kernel modes") {
    std::mt19937_64 rng(7);
    const Eigen::Index n = 18, k = 3;
    PartitionMatrix H = test::random_partition(n, k, rng);

    SECTION("none returns the raw projector") {
        FeatureMatrix U = test::random_features(n, 5, rng);
        REQUIRE(denoise_kernel(U, H, DenoiseMode::None) == U.projector());
    }

    SECTION("remove_both with R = 0 gives exactly H H^T") {
        FeatureMatrix U = pure_n_noise_view(H, 3, rng);
        Eigen::MatrixXd out = denoise_kernel(U, H, DenoiseMode::RemoveBoth);
        REQUIRE((out - H.values * H.values.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    }

    SECTION("outputs are symmetric") {
        FeatureMatrix U = test::random_features(n, 6, rng);
        for (DenoiseMode mode : {DenoiseMode::RemoveN, DenoiseMode::RemoveC,
                                 DenoiseMode::RemoveBoth}) {
            Eigen::MatrixXd out = denoise_kernel(U, H, mode);
            REQUIRE((out - out.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("make_noisy_view noise accounting") {
    std::mt19937_64 rng(8);
    const Eigen::Index n = 25, k = 3;
    PartitionMatrix H = test::random_partition(n, k, rng);

    SECTION("zero profile is a zero-noise view") {
        FeatureMatrix U = make_noisy_view(H, 0, {}, 1);
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(dec.E.cwiseAbs().maxCoeff() <= 1e-10);
    }

    SECTION("extras only") {
        FeatureMatrix U = make_noisy_view(H, 2, {}, 2);
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(dec.tr_N == Catch::Approx(2.0).margin(1e-8));
        REQUIRE(std::abs(dec.tr_C) <= 1e-8);
    }

    SECTION("single 45-degree tilt") {
        FeatureMatrix U = make_noisy_view(H, 0, {M_PI / 4}, 3);
        NoiseDecomposition dec = decompose_noise(U, H);
        REQUIRE(dec.tr_C == Catch::Approx(-0.5).margin(1e-8));
        REQUIRE(dec.tr_N == Catch::Approx(0.5).margin(1e-8));
    }

    SECTION("dimension overflow is rejected") {
        REQUIRE_THROWS_AS(make_noisy_view(H, n, {}, 4), InputError);
    }
}
