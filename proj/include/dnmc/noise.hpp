#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/spectral.hpp"

namespace dnmc {

/// Split of the per-view noise E = U U^T - H H^T into the null-space part
/// E_N (PSD, lives in null(H^T)), the column-space part E_C (NSD, lives in
/// col(H)), and the cross residual R. With projectors P = H H^T, Q = I - P:
///   E_C = P E P,  E_N = Q E Q,  R = P E Q + Q E P,  E = E_N + E_C + R.
struct NoiseDecomposition {
    Eigen::MatrixXd E;
    Eigen::MatrixXd E_N;
    Eigen::MatrixXd E_C;
    Eigen::MatrixXd R;
    double tr_E = 0.0;
    double tr_N = 0.0;
    double tr_C = 0.0;
};

inline NoiseDecomposition decompose_noise(const FeatureMatrix& U, const PartitionMatrix& H) {
    if (U.n() != H.n()) throw InputError("decompose_noise: U and H disagree on n");
    if (!U.is_orthonormal()) throw InputError("decompose_noise: U columns not orthonormal");
    if (!H.is_orthonormal()) throw InputError("decompose_noise: H columns not orthonormal");

    const Eigen::Index n = U.n();
    const Eigen::MatrixXd P = H.values * H.values.transpose();
    const Eigen::MatrixXd UUt = U.projector();

    NoiseDecomposition dec;
    dec.E = UUt - P;
    dec.E_C = P * dec.E * P;
    // Q E Q expanded via E = UU^T - P and QP = 0: Q UU^T Q.
    const Eigen::MatrixXd QU = U.values - H.values * (H.values.transpose() * U.values);
    dec.E_N = QU * QU.transpose();
    dec.R = dec.E - dec.E_N - dec.E_C;

    dec.E = 0.5 * (dec.E + dec.E.transpose()).eval();
    dec.E_N = 0.5 * (dec.E_N + dec.E_N.transpose()).eval();
    dec.E_C = 0.5 * (dec.E_C + dec.E_C.transpose()).eval();
    dec.R = 0.5 * (dec.R + dec.R.transpose()).eval();

    dec.tr_E = dec.E.trace();
    dec.tr_N = dec.E_N.trace();
    dec.tr_C = dec.E_C.trace();

    if ((dec.E_N + dec.E_C + dec.R - dec.E).cwiseAbs().maxCoeff() > 1e-10)
        throw NumericError("decompose_noise: split does not reassemble E");
    if ((H.values.transpose() * dec.E_N).cwiseAbs().maxCoeff() > 1e-8)
        throw NumericError("decompose_noise: E_N leaks out of null(H^T)");
    const Eigen::MatrixXd Q_EC =
        dec.E_C - H.values * (H.values.transpose() * dec.E_C);
    if (Q_EC.cwiseAbs().maxCoeff() > 1e-8)
        throw NumericError("decompose_noise: E_C leaks out of col(H)");
    (void)n;
    return dec;
}

/// |Tr(E_N H H^T)|; zero in exact arithmetic.
inline double check_lemma1(const NoiseDecomposition& dec, const PartitionMatrix& H) {
    return std::abs((H.values.transpose() * dec.E_N * H.values).trace());
}

/// |Tr(E_C H H^T) - Tr(E_C)|; zero in exact arithmetic.
inline double check_lemma2(const NoiseDecomposition& dec, const PartitionMatrix& H) {
    const double lhs = (H.values.transpose() * dec.E_C * H.values).trace();
    return std::abs(lhs - dec.tr_C);
}

struct Lemma3Result {
    double min_eig_N;
    double max_eig_C;
};

/// E_N must be PSD and E_C NSD (within tolerance).
inline Lemma3Result check_lemma3(const NoiseDecomposition& dec) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esN(dec.E_N, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esC(dec.E_C, Eigen::EigenvaluesOnly);
    return Lemma3Result{esN.eigenvalues().minCoeff(), esC.eigenvalues().maxCoeff()};
}

/// Pairwise alignment scores ||U_p^T U_q||_F^2. When every view carries the
/// consensus subspace (E_C = 0 for all), every score is >= k.
inline Eigen::MatrixXd check_theorem1(const std::vector<FeatureMatrix>& views) {
    const std::size_t m = views.size();
    Eigen::MatrixXd scores(m, m);
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = p; q < m; ++q) {
            if (views[p].n() != views[q].n())
                throw InputError("check_theorem1: views disagree on n");
            const double s = (views[p].values.transpose() * views[q].values).squaredNorm();
            scores(p, q) = s;
            scores(q, p) = s;
        }
    return scores;
}

/// Residual of the trace identity
/// sum_p Tr(E_p^N) = sum_p d_p - sum_p (k + Tr(E_p^C)).
inline double check_theorem2(const std::vector<NoiseDecomposition>& decs,
                             const std::vector<Eigen::Index>& dims, Eigen::Index k) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t p = 0; p < decs.size(); ++p) {
        lhs += decs[p].tr_N;
        rhs += static_cast<double>(dims[p]) - (static_cast<double>(k) + decs[p].tr_C);
    }
    return std::abs(lhs - rhs);
}

enum class DenoiseMode { None, RemoveN, RemoveC, RemoveBoth };

/// Rebuild the view's similarity matrix with selected noise parts removed.
inline Eigen::MatrixXd denoise_kernel(const FeatureMatrix& U, const PartitionMatrix& H,
                                      DenoiseMode mode) {
    const Eigen::MatrixXd UUt = U.projector();
    if (mode == DenoiseMode::None) return UUt;
    const NoiseDecomposition dec = decompose_noise(U, H);
    switch (mode) {
        case DenoiseMode::RemoveN: return UUt - dec.E_N;
        case DenoiseMode::RemoveC: return UUt - dec.E_C;
        default: return UUt - dec.E_N - dec.E_C;  // = H H^T + R
    }
}

/// Test-data generator: an orthonormal U built from H_true by tilting the
/// first `tilt_angles.size()` consensus directions by known angles (C-noise
/// with tr(E_C) = sum(cos^2 theta - 1)) and appending n_extra columns
/// orthogonal to everything (N-noise of trace n_extra + sum sin^2 theta).
inline FeatureMatrix make_noisy_view(const PartitionMatrix& H_true, Eigen::Index n_extra,
                                     const std::vector<double>& tilt_angles,
                                     std::uint64_t seed) {
    const Eigen::Index n = H_true.n();
    const Eigen::Index k = H_true.k();
    const Eigen::Index t = static_cast<Eigen::Index>(tilt_angles.size());
    if (n_extra < 0) throw InputError("make_noisy_view: n_extra must be >= 0");
    if (t > k) throw InputError("make_noisy_view: more tilt angles than columns");
    for (double a : tilt_angles)
        if (a < 0.0 || a >= M_PI / 2)
            throw InputError("make_noisy_view: angles must lie in [0, pi/2)");
    if (k + t + n_extra > n)
        throw InputError("make_noisy_view: requested dimension exceeds n");

    // Orthonormal basis W of a (t + n_extra)-dim subspace of null(H^T),
    // drawn from the seeded RNG via QR of a Gaussian block.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index w_cols = t + n_extra;
    Eigen::MatrixXd W(n, std::max<Eigen::Index>(w_cols, 1));
    if (w_cols > 0) {
        Eigen::MatrixXd G(n, w_cols);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < w_cols; ++j) G(i, j) = gauss(rng);
        // Project out col(H), then orthonormalize.
        G -= H_true.values * (H_true.values.transpose() * G);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
        W = qr.householderQ() * Eigen::MatrixXd::Identity(n, w_cols);
    }

    FeatureMatrix U;
    U.values.resize(n, k + n_extra);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (j < t) {
            const double a = tilt_angles[static_cast<std::size_t>(j)];
            U.values.col(j) =
                std::cos(a) * H_true.values.col(j) + std::sin(a) * W.col(j);
        } else {
            U.values.col(j) = H_true.values.col(j);
        }
    }
    for (Eigen::Index e = 0; e < n_extra; ++e)
        U.values.col(k + e) = W.col(t + e);
    return U;
}

}  // namespace dnmc
