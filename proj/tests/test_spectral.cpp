#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "dnmc/metrics.hpp"
#include "dnmc/spectral.hpp"
#include "dnmc/synth.hpp"
#include "test_support.hpp"

using namespace dnmc;

TEST_CASE("symmetric_eig on the identity") {
    EigenSystem es = symmetric_eig(Eigen::MatrixXd::Identity(3, 3));
    REQUIRE(es.eigenvalues.isApprox(Eigen::VectorXd::Ones(3)));
}

TEST_CASE("symmetric_eig on diag(3,1)") {
    Eigen::MatrixXd A = Eigen::Vector2d(3, 1).asDiagonal();
    EigenSystem es = symmetric_eig(A);
    REQUIRE(es.eigenvalues(0) == Catch::Approx(3.0));
    REQUIRE(es.eigenvalues(1) == Catch::Approx(1.0));
    REQUIRE(std::abs(es.eigenvectors(0, 0)) == Catch::Approx(1.0));
    REQUIRE(std::abs(es.eigenvectors(1, 1)) == Catch::Approx(1.0));
}

TEST_CASE("symmetric_eig reconstruction and orthonormality") {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 10; ++it) {
        const Eigen::MatrixXd A = test::random_symmetric(10, rng);
        EigenSystem es = symmetric_eig(A);
        const Eigen::MatrixXd V = es.eigenvectors;
        REQUIRE((V.transpose() * V - Eigen::MatrixXd::Identity(10, 10))
                    .cwiseAbs()
                    .maxCoeff() <= 1e-8);
        const Eigen::MatrixXd rec = V * es.eigenvalues.asDiagonal() * V.transpose();
        const double scale = std::max(1.0, es.eigenvalues.cwiseAbs().maxCoeff());
        REQUIRE((rec - A).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        for (int i = 0; i + 1 < 10; ++i)
            REQUIRE(es.eigenvalues(i) >= es.eigenvalues(i + 1));
    }
}

TEST_CASE("symmetric_eig rejects asymmetric input") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 2, 0, 1;
    REQUIRE_THROWS_AS(symmetric_eig(A), InputError);
}

TEST_CASE("truncate_features prefix property and projectors") {
    std::mt19937_64 rng(5);
    EigenSystem es = symmetric_eig(test::random_psd(8, rng));
    const Eigen::Index rank = es.numerical_rank();
    for (Eigen::Index d = 1; d + 1 <= rank; ++d) {
        FeatureMatrix a = truncate_features(es, d);
        FeatureMatrix b = truncate_features(es, d + 1);
        REQUIRE(a.values == b.values.leftCols(d));
        REQUIRE(a.is_orthonormal());
    }
    FeatureMatrix full = truncate_features(es, es.n());
    REQUIRE((full.projector() - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <=
            1e-8);
}

TEST_CASE("truncate_features reports the feasible rank on overflow") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    A(0, 0) = 1.0;
    A(1, 1) = 0.5;
    EigenSystem es = symmetric_eig(A);
    REQUIRE(es.numerical_rank() == 2);
    REQUIRE_THROWS_WITH(truncate_features(es, 3),
                        Catch::Matchers::ContainsSubstring("rank 2"));
}

TEST_CASE("block kernel projector matches the analytic block projector") {
    // Two 3-sample blocks: K = blockdiag(J/3, J/3); its range is spanned by
    // the two normalized block indicators.
    const Eigen::Index n = 6;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    K.topLeftCorner(3, 3).setConstant(1.0 / 3.0);
    K.bottomRightCorner(3, 3).setConstant(1.0 / 3.0);
    EigenSystem es = symmetric_eig(K);
    FeatureMatrix U = truncate_features(es, 2);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(n, n);
    expected.topLeftCorner(3, 3).setConstant(1.0 / 3.0);
    expected.bottomRightCorner(3, 3).setConstant(1.0 / 3.0);
    REQUIRE((U.projector() - expected).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("kernel_kmeans separates perfect blocks") {
    const Eigen::Index n = 10;
    KernelMatrix K{Eigen::MatrixXd::Zero(n, n)};
    K.values.topLeftCorner(5, 5).setConstant(0.2);
    K.values.bottomRightCorner(5, 5).setConstant(0.2);
    KernelKMeansResult res = kernel_kmeans(K, 2, 10, 123);
    LabelVector truth;
    truth.k = 2;
    truth.labels = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
    REQUIRE(accuracy(res.labels, truth) == 1.0);
    REQUIRE(res.objective >= -1e-8);
}

TEST_CASE("kernel_kmeans objective on identity with k=n is zero") {
    KernelMatrix K{Eigen::MatrixXd::Identity(4, 4)};
    KernelKMeansResult res = kernel_kmeans(K, 4, 3, 7);
    REQUIRE(res.objective == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("kernel_kmeans objective equals Tr(K) - Tr(H^T K H)") {
    std::mt19937_64 rng(31);
    KernelMatrix K{test::random_psd(9, rng)};
    KernelKMeansResult res = kernel_kmeans(K, 3, 5, 19);
    const Eigen::MatrixXd& H = res.partition.values;
    const double direct = K.values.trace() - (H.transpose() * K.values * H).trace();
    REQUIRE(res.objective == Catch::Approx(direct).margin(1e-8));
}

TEST_CASE("kernel_kmeans recovers well-separated rbf blobs") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 0.05);
    const Eigen::Index n = 30, k = 3;
    Eigen::MatrixXd X(n, 2);
    LabelVector truth;
    truth.k = 3;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = static_cast<int>(i / 10);
        truth.labels.push_back(c + 1);
        X(i, 0) = 5.0 * c + gauss(rng);
        X(i, 1) = -3.0 * c + gauss(rng);
    }
    KernelMatrix K = build_kernel(X, RbfKernel{0.5});
    KernelKMeansResult res = kernel_kmeans(K, k, 50, 5);
    REQUIRE(accuracy(res.labels, truth) == 1.0);
}

TEST_CASE("lloyd keeps the best of restarts and is monotone") {
    std::mt19937_64 rng(50);
    const Eigen::MatrixXd X = test::random_matrix(40, 3, rng);
    KMeansResult res = kmeans_rows(X, 4, 20, 99);
    for (double w : res.restart_wcss) REQUIRE(w >= res.wcss);
    REQUIRE(res.restart_wcss.size() == 20);
}

TEST_CASE("average_kernel_kmeans of one kernel equals kernel_kmeans") {
    std::mt19937_64 rng(61);
    KernelMatrix K{test::random_psd(8, rng)};
    AverageKernelResult avg = average_kernel_kmeans({K}, 2, 8, 42);
    KernelKMeansResult single = kernel_kmeans(K, 2, 8, 42);
    REQUIRE(avg.labels.labels == single.labels.labels);
    REQUIRE(avg.objective == Catch::Approx(single.objective));
}

TEST_CASE("average_kernel_kmeans of two identical kernels equals one") {
    std::mt19937_64 rng(62);
    KernelMatrix K{test::random_psd(8, rng)};
    AverageKernelResult one = average_kernel_kmeans({K}, 2, 8, 42);
    AverageKernelResult two = average_kernel_kmeans({K, K}, 2, 8, 42);
    REQUIRE(one.labels.labels == two.labels.labels);
}

TEST_CASE("average_kernel_kmeans rejects size mismatch") {
    KernelMatrix A{Eigen::MatrixXd::Identity(3, 3)};
    KernelMatrix B{Eigen::MatrixXd::Identity(4, 4)};
    REQUIRE_THROWS_AS(average_kernel_kmeans({A, B}, 2, 1, 0), InputError);
}
