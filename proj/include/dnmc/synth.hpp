#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/kernel.hpp"
#include "dnmc/noise.hpp"
#include "dnmc/spectral.hpp"

namespace dnmc {

/// Balanced ground-truth labels in contiguous blocks (block-diagonal kernels
/// when samples keep this order).
inline LabelVector balanced_labels(Eigen::Index n, Eigen::Index k) {
    if (n < k) throw InputError("balanced_labels: n < k");
    LabelVector lv;
    lv.k = static_cast<int>(k);
    lv.labels.resize(static_cast<std::size_t>(n));
    const Eigen::Index base = n / k, extra = n % k;
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::Index size = base + (r < extra ? 1 : 0);
        for (Eigen::Index i = 0; i < size; ++i)
            lv.labels[static_cast<std::size_t>(pos++)] = static_cast<int>(r) + 1;
    }
    return lv;
}

/// Exact orthonormal partition matrix for a labeling: column r is the
/// normalized indicator of cluster r. Its span contains the all-ones vector.
inline PartitionMatrix indicator_partition(const LabelVector& lv) {
    const Eigen::Index n = static_cast<Eigen::Index>(lv.n());
    PartitionMatrix H;
    H.values = Eigen::MatrixXd::Zero(n, lv.k);
    std::vector<double> counts(static_cast<std::size_t>(lv.k), 0.0);
    for (int id : lv.labels) counts[static_cast<std::size_t>(id - 1)] += 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int r = lv.labels[static_cast<std::size_t>(i)] - 1;
        H.values(i, r) = 1.0 / std::sqrt(counts[static_cast<std::size_t>(r)]);
    }
    return H;
}

/// Orthonormal n x k cluster basis whose span avoids the all-ones vector, so
/// feature-space centering leaves it intact. Columns 1..k-1 span the
/// centered indicator space (piecewise constant per cluster); column k is a
/// unit vector orthogonal to the whole indicator span, hence mean-zero
/// within every cluster and irrelevant to the row clustering.
inline PartitionMatrix centered_cluster_basis(const LabelVector& lv, std::uint64_t seed) {
    const Eigen::Index n = static_cast<Eigen::Index>(lv.n());
    const Eigen::Index k = lv.k;
    if (k < 2) throw InputError("centered_cluster_basis: need k >= 2");

    const PartitionMatrix ind = indicator_partition(lv);
    const Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));

    // Centered indicator columns span the (k-1)-dim piecewise-constant
    // subspace orthogonal to 1; QR of the first k-1 of them is full rank.
    Eigen::MatrixXd centered = ind.values.leftCols(k - 1);
    centered -= ones * (ones.transpose() * centered);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(centered);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k - 1);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = gauss(rng);
    w -= ind.values * (ind.values.transpose() * w);
    w -= ind.values * (ind.values.transpose() * w);
    w.normalize();

    PartitionMatrix H;
    H.values.resize(n, k);
    H.values.leftCols(k - 1) = Q;
    H.values.col(k - 1) = w;
    if (!H.is_orthonormal(1e-8))
        throw NumericError("centered_cluster_basis: lost orthonormality");
    return H;
}

/// Per-view noise injection parameters for make_noisy_view.
struct ViewNoise {
    Eigen::Index n_extra = 0;
    std::vector<double> tilt_angles;
};

struct SynthSpec {
    Eigen::Index n = 60;
    Eigen::Index k = 3;
    std::vector<ViewNoise> profile;  // one entry per view
    std::uint64_t seed = 0;
};

struct SynthDataset {
    LabelVector labels;
    PartitionMatrix H_true;
    std::vector<FeatureMatrix> views;
    std::vector<KernelMatrix> kernels;  // U_p U_p^T
};

/// In-memory synthetic dataset: a centered cluster basis plus per-view
/// projector kernels with known injected N- and C-noise.
inline SynthDataset make_synthetic(const SynthSpec& spec) {
    if (spec.profile.empty()) throw InputError("make_synthetic: empty noise profile");
    if (spec.n < 4 * spec.k) throw InputError("make_synthetic: need n >= 4k");

    SynthDataset ds;
    ds.labels = balanced_labels(spec.n, spec.k);
    ds.H_true = centered_cluster_basis(ds.labels, spec.seed);
    for (std::size_t p = 0; p < spec.profile.size(); ++p) {
        const auto& vn = spec.profile[p];
        FeatureMatrix U = make_noisy_view(ds.H_true, vn.n_extra, vn.tilt_angles,
                                          spec.seed * 1000003ULL + p + 1);
        KernelMatrix K;
        K.values = U.projector();
        K.values = 0.5 * (K.values + K.values.transpose()).eval();
        ds.views.push_back(std::move(U));
        ds.kernels.push_back(std::move(K));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Blob generator: per-view Gaussian blob features where every view carries
// the shared cluster geometry weakly and its own strong distractor
// partition. The average kernel is dominated by the distractors while the
// shared subspace survives in each view's deeper spectrum.
// ---------------------------------------------------------------------------

struct BlobProfile {
    Eigen::Index m = 3;
    double true_scale = 1.2;        // separation of the shared blob centers
    double distractor_scale = 4.0;  // separation of the per-view distractors
    Eigen::Index distractor_k = 4;  // clusters in each view's distractor
    double noise_sigma = 0.35;
    double rbf_gamma = 0.05;
};

struct BlobDataset {
    LabelVector labels;
    std::vector<KernelMatrix> kernels;  // rbf kernels, one per view
};

inline BlobDataset make_blob_views(Eigen::Index n, Eigen::Index k, const BlobProfile& prof,
                                   std::uint64_t seed) {
    if (n < 4 * k) throw InputError("make_blob_views: need n >= 4k");
    BlobDataset ds;
    ds.labels = balanced_labels(n, k);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> dist_label(1, static_cast<int>(prof.distractor_k));

    const Eigen::Index dim_true = k;
    const Eigen::Index dim_dist = prof.distractor_k;

    // Shared blob centers, common to all views.
    Eigen::MatrixXd centers_true(k, dim_true);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index j = 0; j < dim_true; ++j)
            centers_true(r, j) = prof.true_scale * gauss(rng);

    for (Eigen::Index p = 0; p < prof.m; ++p) {
        // View-specific distractor partition and centers.
        std::vector<int> dlabel(static_cast<std::size_t>(n));
        for (auto& v : dlabel) v = dist_label(rng);
        Eigen::MatrixXd centers_dist(prof.distractor_k, dim_dist);
        for (Eigen::Index r = 0; r < prof.distractor_k; ++r)
            for (Eigen::Index j = 0; j < dim_dist; ++j)
                centers_dist(r, j) = prof.distractor_scale * gauss(rng);

        Eigen::MatrixXd X(n, dim_true + dim_dist);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int r = ds.labels.labels[static_cast<std::size_t>(i)] - 1;
            const int s = dlabel[static_cast<std::size_t>(i)] - 1;
            for (Eigen::Index j = 0; j < dim_true; ++j)
                X(i, j) = centers_true(r, j) + prof.noise_sigma * gauss(rng);
            for (Eigen::Index j = 0; j < dim_dist; ++j)
                X(i, dim_true + j) = centers_dist(s, j) + prof.noise_sigma * gauss(rng);
        }
        ds.kernels.push_back(build_kernel(X, RbfKernel{prof.rbf_gamma}));
    }
    return ds;
}

}  // namespace dnmc
