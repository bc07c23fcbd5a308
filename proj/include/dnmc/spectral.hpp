#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/kernel.hpp"

namespace dnmc {

inline constexpr double kOrthoTol = 1e-8;
inline constexpr double kRankTol = 1e-10;

/// Full spectral decomposition of a symmetric matrix, eigenvalues descending.
/// Ties keep ascending original (ascending-order) index, so runs are
/// reproducible for a fixed eigensolver.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalue i

    Eigen::Index n() const { return eigenvectors.rows(); }

    /// Largest d with lambda_d > kRankTol * lambda_1.
    Eigen::Index numerical_rank() const {
        const double cutoff = kRankTol * std::max(1e-300, eigenvalues(0));
        Eigen::Index r = 0;
        while (r < eigenvalues.size() && eigenvalues(r) > cutoff) ++r;
        return r;
    }
};

/// n x k matrix with orthonormal columns (relaxed cluster assignment).
struct PartitionMatrix {
    Eigen::MatrixXd values;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index k() const { return values.cols(); }

    bool is_orthonormal(double tol = kOrthoTol) const {
        const Eigen::MatrixXd G = values.transpose() * values;
        return (G - Eigen::MatrixXd::Identity(k(), k())).cwiseAbs().maxCoeff() <= tol;
    }
};

/// n x d matrix with orthonormal columns; the per-view data representation
/// whose dimension d is what the optimizer tunes.
struct FeatureMatrix {
    Eigen::MatrixXd values;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index d() const { return values.cols(); }

    bool is_orthonormal(double tol = kOrthoTol) const {
        const Eigen::MatrixXd G = values.transpose() * values;
        return (G - Eigen::MatrixXd::Identity(d(), d())).cwiseAbs().maxCoeff() <= tol;
    }

    Eigen::MatrixXd projector() const { return values * values.transpose(); }
};

inline EigenSystem symmetric_eig(const Eigen::MatrixXd& A) {
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InputError("symmetric_eig: input asymmetric beyond tolerance");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    if (es.info() != Eigen::Success)
        throw NumericError("symmetric_eig: eigensolver failed to converge");

    // Eigen returns ascending order; reverse to descending. Reversal of a
    // stable ascending sort keeps tied eigenvalues in ascending original
    // index after mapping i -> n-1-i, which is the documented tie rule.
    EigenSystem out;
    out.eigenvalues = es.eigenvalues().reverse();
    out.eigenvectors = es.eigenvectors().rowwise().reverse();
    return out;
}

/// First d eigenvector columns. Prefix property: truncate(es, d) is exactly
/// the leading d-column block of truncate(es, d+1).
inline FeatureMatrix truncate_features(const EigenSystem& es, Eigen::Index d) {
    if (d < 1 || d > es.n())
        throw InputError("truncate_features: d out of [1, n]");
    const Eigen::Index rank = es.numerical_rank();
    if (d > rank)
        throw NumericError("truncate_features: d=" + std::to_string(d) +
                           " exceeds numerical rank " + std::to_string(rank));
    return FeatureMatrix{es.eigenvectors.leftCols(d)};
}

// ---------------------------------------------------------------------------
// Lloyd's k-means on matrix rows, with seeded restarts.
// ---------------------------------------------------------------------------

struct KMeansResult {
    LabelVector labels;
    double wcss = 0.0;  // within-cluster sum of squares of the kept run
    std::vector<double> restart_wcss;
    std::vector<LabelVector> restart_labels;
};

namespace detail {

inline double assign_points(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids,
                            std::vector<int>& assign) {
    const Eigen::Index n = X.rows(), k = centroids.rows();
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        int best_c = 0;
        for (Eigen::Index c = 0; c < k; ++c) {
            double dist = (X.row(i) - centroids.row(c)).squaredNorm();
            if (dist < best) {
                best = dist;
                best_c = static_cast<int>(c);
            }
        }
        assign[static_cast<std::size_t>(i)] = best_c;
        wcss += best;
    }
    return wcss;
}

inline double lloyd_once(const Eigen::MatrixXd& X, Eigen::Index k, std::mt19937_64& rng,
                         std::vector<int>& assign, int max_iters = 300) {
    const Eigen::Index n = X.rows();
    // Forgy init: k distinct sample rows.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd centroids(k, X.cols());
    for (Eigen::Index c = 0; c < k; ++c)
        centroids.row(c) = X.row(perm[static_cast<std::size_t>(c)]);

    assign.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> prev;
    double wcss = 0.0;
    double prev_wcss = std::numeric_limits<double>::max();
    for (int iter = 0; iter < max_iters; ++iter) {
        wcss = assign_points(X, centroids, assign);
        if (wcss > prev_wcss * (1.0 + 1e-12) + 1e-12)
            throw NumericError("kmeans: within-cluster objective increased");
        prev_wcss = wcss;
        if (assign == prev) break;
        prev = assign;

        centroids.setZero();
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            centroids.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // Empty cluster: re-seed at the point farthest from its centroid.
                Eigen::Index far_i = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double dist =
                        (X.row(i) - centroids.row(assign[static_cast<std::size_t>(i)]))
                            .squaredNorm();
                    if (dist > far_d) {
                        far_d = dist;
                        far_i = i;
                    }
                }
                centroids.row(c) = X.row(far_i);
            }
        }
    }
    return wcss;
}

}  // namespace detail

/// Lloyd's k-means with `restarts` independent seeded initializations,
/// keeping the lowest within-cluster sum of squares. Restart r draws its RNG
/// stream from (seed, r), so results are independent of evaluation order.
inline KMeansResult kmeans_rows(const Eigen::MatrixXd& X, Eigen::Index k, int restarts,
                                std::uint64_t seed) {
    if (restarts < 1) throw InputError("kmeans_rows: restarts must be >= 1");
    if (k < 1 || k > X.rows()) throw InputError("kmeans_rows: k out of [1, n]");

    KMeansResult result;
    result.wcss = std::numeric_limits<double>::max();
    std::vector<int> assign, best_assign;
    for (int r = 0; r < restarts; ++r) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(r)};
        std::mt19937_64 rng(seq);
        double wcss = detail::lloyd_once(X, k, rng, assign);
        result.restart_wcss.push_back(wcss);
        LabelVector lv;
        lv.k = static_cast<int>(k);
        lv.labels.resize(assign.size());
        for (std::size_t i = 0; i < assign.size(); ++i) lv.labels[i] = assign[i] + 1;
        result.restart_labels.push_back(std::move(lv));
        if (wcss < result.wcss) {
            result.wcss = wcss;
            best_assign = assign;
        }
    }
    result.labels.k = static_cast<int>(k);
    result.labels.labels.resize(best_assign.size());
    for (std::size_t i = 0; i < best_assign.size(); ++i)
        result.labels.labels[i] = best_assign[i] + 1;
    return result;
}

struct KernelKMeansResult {
    PartitionMatrix partition;
    LabelVector labels;
    double objective = 0.0;  // Tr((I - H H^T) K)
    std::vector<double> restart_wcss;
    std::vector<LabelVector> restart_labels;
};

/// Spectral relaxation of kernel k-means: H = top-k eigenvectors of K, then
/// Lloyd's k-means on the rows of H.
inline KernelKMeansResult kernel_kmeans(const KernelMatrix& K, Eigen::Index k, int restarts,
                                        std::uint64_t seed) {
    const EigenSystem es = symmetric_eig(K.values);
    if (k > es.numerical_rank())
        throw NumericError("kernel_kmeans: k exceeds numerical rank " +
                           std::to_string(es.numerical_rank()));

    KernelKMeansResult out;
    out.partition.values = es.eigenvectors.leftCols(k);
    KMeansResult km = kmeans_rows(out.partition.values, k, restarts, seed);
    out.labels = std::move(km.labels);
    out.restart_wcss = std::move(km.restart_wcss);
    out.restart_labels = std::move(km.restart_labels);
    out.objective = K.values.trace() - es.eigenvalues.head(k).sum();
    return out;
}

/// Same as kernel_kmeans, but relaxes the rank precondition to n; used for
/// diagnostic runs on denoised (possibly indefinite) matrices.
inline KernelKMeansResult kernel_kmeans_relaxed(const Eigen::MatrixXd& S, Eigen::Index k,
                                                int restarts, std::uint64_t seed) {
    const EigenSystem es = symmetric_eig(S);
    KernelKMeansResult out;
    out.partition.values = es.eigenvectors.leftCols(k);
    KMeansResult km = kmeans_rows(out.partition.values, k, restarts, seed);
    out.labels = std::move(km.labels);
    out.restart_wcss = std::move(km.restart_wcss);
    out.restart_labels = std::move(km.restart_labels);
    out.objective = S.trace() - es.eigenvalues.head(k).sum();
    return out;
}

struct AverageKernelResult {
    LabelVector labels;
    double objective = 0.0;
    std::vector<double> restart_wcss;
    std::vector<LabelVector> restart_labels;
};

/// Kernel k-means in the unweighted average kernel space.
inline AverageKernelResult average_kernel_kmeans(const std::vector<KernelMatrix>& kernels,
                                                 Eigen::Index k, int restarts,
                                                 std::uint64_t seed) {
    if (kernels.empty()) throw InputError("average_kernel_kmeans: empty kernel list");
    const Eigen::Index n = kernels.front().n();
    KernelMatrix mean;
    mean.values = Eigen::MatrixXd::Zero(n, n);
    for (const auto& K : kernels) {
        if (K.n() != n) throw InputError("average_kernel_kmeans: kernel size mismatch");
        mean.values += K.values;
    }
    mean.values /= static_cast<double>(kernels.size());

    KernelKMeansResult kk = kernel_kmeans(mean, k, restarts, seed);
    return AverageKernelResult{std::move(kk.labels), kk.objective, std::move(kk.restart_wcss),
                               std::move(kk.restart_labels)};
}

}  // namespace dnmc
