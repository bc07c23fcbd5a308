#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/spectral.hpp"

namespace dnmc {

/// Integer dimension vectors d and d_hat plus the penalty constant M that
/// drive the alternating minimization.
struct DimensionState {
    std::vector<Eigen::Index> d;
    std::vector<Eigen::Index> d_hat;
    double M = 0.5;
    int iteration = 0;
};

struct TraceRecord {
    std::vector<Eigen::Index> d;
    std::vector<Eigen::Index> d_hat;
    double M = 0.0;
    double objective = 0.0;  // G_M(d, d_hat)
    bool feasible = true;
};

struct OptimizerTrace {
    std::vector<TraceRecord> records;
};

struct OptimizerConfig {
    double initial_M = 0.5;
    int max_outer_iters = 200;
    double alignment_tolerance = 1e-8;
};

/// ||U^T V||_F^2, the subspace alignment score; symmetric in its arguments
/// and bounded by min(d_U, d_V).
inline double alignment(const FeatureMatrix& U, const FeatureMatrix& V) {
    if (U.n() != V.n()) throw InputError("alignment: dimension mismatch");
    return (U.values.transpose() * V.values).squaredNorm();
}

/// G_M(d, d_hat) = 1/2 (d + d_hat)^T 1 + (M/2) ||d - d_hat||^2.
inline double big_m_objective(const DimensionState& s) {
    double linear = 0.0, quad = 0.0;
    for (std::size_t p = 0; p < s.d.size(); ++p) {
        linear += 0.5 * static_cast<double>(s.d[p] + s.d_hat[p]);
        const double diff = static_cast<double>(s.d[p] - s.d_hat[p]);
        quad += diff * diff;
    }
    return linear + 0.5 * s.M * quad;
}

namespace detail {

/// Cumulative alignment of prefixes of es_p's eigenbasis against a fixed
/// partner: entry d-1 is ||U_p(d)^T V||_F^2 = sum_{i<=d} ||u_i^T V||^2.
/// Non-decreasing in d, which is what makes the binary searches exact.
inline Eigen::VectorXd cumulative_alignment(const EigenSystem& es_p, Eigen::Index d_max,
                                            const FeatureMatrix& partner) {
    const Eigen::MatrixXd A = es_p.eigenvectors.leftCols(d_max).transpose() * partner.values;
    Eigen::VectorXd cum(d_max);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d_max; ++i) {
        acc += A.row(i).squaredNorm();
        cum(i) = acc;
    }
    return cum;
}

}  // namespace detail

/// Smallest d in [k, d_max] whose truncated features align to every partner
/// with score >= k; discrete binary search over the monotone constraint.
inline Eigen::Index min_feasible_dim(const EigenSystem& es_p,
                                     const std::vector<FeatureMatrix>& partners,
                                     Eigen::Index k, Eigen::Index d_max,
                                     double tol = 1e-8) {
    if (partners.empty()) throw InputError("min_feasible_dim: no partners");
    if (d_max > es_p.numerical_rank())
        throw InputError("min_feasible_dim: d_max exceeds rank");

    std::vector<Eigen::VectorXd> cums;
    cums.reserve(partners.size());
    for (const auto& V : partners)
        cums.push_back(detail::cumulative_alignment(es_p, d_max, V));

    const double threshold = static_cast<double>(k) - tol;
    auto feasible = [&](Eigen::Index d) {
        for (const auto& cum : cums)
            if (cum(d - 1) < threshold) return false;
        return true;
    };

    if (!feasible(d_max)) {
        std::size_t worst = 0;
        for (std::size_t q = 0; q < cums.size(); ++q)
            if (cums[q](d_max - 1) < cums[worst](d_max - 1)) worst = q;
        throw InfeasibleError("min_feasible_dim: infeasible at d_max=" +
                              std::to_string(d_max) + ", partner " + std::to_string(worst) +
                              " aligns only " + std::to_string(cums[worst](d_max - 1)));
    }

    Eigen::Index lo = k, hi = d_max;
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo) / 2;
        if (feasible(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

/// argmin over integers d in [d_min, d_max] of
/// 1/2 (d + d_hat) + (M/2) (d - d_hat)^2. The unconstrained real minimizer is
/// d_hat - 1/(2M); only its floor and ceiling (clamped) can win. Ties go to
/// the smaller d.
inline Eigen::Index solve_coordinate(Eigen::Index d_hat_p, Eigen::Index d_min,
                                     Eigen::Index d_max, double M) {
    if (d_min > d_max) throw NumericError("solve_coordinate: empty range");
    const double star = static_cast<double>(d_hat_p) - 1.0 / (2.0 * M);
    auto clamp = [&](double v) {
        return std::min<Eigen::Index>(
            d_max, std::max<Eigen::Index>(d_min, static_cast<Eigen::Index>(v)));
    };
    const Eigen::Index lo = clamp(std::floor(star));
    const Eigen::Index hi = clamp(std::ceil(star));
    auto f = [&](Eigen::Index d) {
        const double diff = static_cast<double>(d - d_hat_p);
        return 0.5 * static_cast<double>(d + d_hat_p) + 0.5 * M * diff * diff;
    };
    if (lo == hi) return lo;
    return f(lo) <= f(hi) ? lo : hi;
}

namespace detail {

/// One half-sweep: update `target` coordinate-wise against the fixed
/// counterpart dimensions. The m sub-problems are independent.
inline void half_sweep(std::vector<Eigen::Index>& target,
                       const std::vector<Eigen::Index>& counterpart,
                       const std::vector<const EigenSystem*>& eigs,
                       const std::vector<Eigen::Index>& ranks, Eigen::Index k, double M,
                       double tol) {
    const std::size_t m = eigs.size();
    std::vector<FeatureMatrix> partners;
    partners.reserve(m);
    for (std::size_t q = 0; q < m; ++q)
        partners.push_back(truncate_features(*eigs[q], counterpart[q]));

    for (std::size_t p = 0; p < m; ++p) {
        const Eigen::Index d_min =
            min_feasible_dim(*eigs[p], partners, k, ranks[p], tol);
        target[p] = solve_coordinate(counterpart[p], d_min, ranks[p], M);
    }
}

}  // namespace detail

/// Eq.-style d-update: every d_p solves its own constrained scalar problem
/// against the counterpart features truncated at d_hat.
inline DimensionState update_d(DimensionState state,
                               const std::vector<EigenSystem>& eig_systems,
                               Eigen::Index k, double tol = 1e-8) {
    std::vector<const EigenSystem*> eigs;
    std::vector<Eigen::Index> ranks;
    for (const auto& es : eig_systems) {
        eigs.push_back(&es);
        ranks.push_back(es.numerical_rank());
    }
    detail::half_sweep(state.d, state.d_hat, eigs, ranks, k, state.M, tol);
    return state;
}

inline DimensionState update_d_hat(DimensionState state,
                                   const std::vector<EigenSystem>& eig_systems,
                                   Eigen::Index k, double tol = 1e-8) {
    std::vector<const EigenSystem*> eigs;
    std::vector<Eigen::Index> ranks;
    for (const auto& es : eig_systems) {
        eigs.push_back(&es);
        ranks.push_back(es.numerical_rank());
    }
    detail::half_sweep(state.d_hat, state.d, eigs, ranks, k, state.M, tol);
    return state;
}

struct Algorithm1Result {
    DimensionState state;
    std::vector<FeatureMatrix> features;
    OptimizerTrace trace;
};

/// Alternating Big-M minimization over the per-view dimensions: repeat
/// (update d | update d_hat), doubling M until d = d_hat. Initialization is
/// the smallest uniform feasible value c (binary search), so the run is
/// deterministic and parameter-free.
inline Algorithm1Result run_algorithm1(const std::vector<EigenSystem>& eig_systems,
                                       Eigen::Index k,
                                       const OptimizerConfig& config = {}) {
    if (eig_systems.empty()) throw InputError("run_algorithm1: no views");
    const std::size_t m = eig_systems.size();

    std::vector<Eigen::Index> ranks;
    Eigen::Index min_rank = eig_systems.front().numerical_rank();
    for (const auto& es : eig_systems) {
        ranks.push_back(es.numerical_rank());
        min_rank = std::min(min_rank, es.numerical_rank());
    }
    if (k > min_rank)
        throw InfeasibleError("run_algorithm1: k exceeds the smallest view rank " +
                              std::to_string(min_rank));

    const double tol = config.alignment_tolerance;
    const double threshold = static_cast<double>(k) - tol;

    // Uniform feasibility is monotone in c: growing every view's basis only
    // adds nonnegative alignment terms.
    auto uniform_feasible = [&](Eigen::Index c) {
        std::vector<FeatureMatrix> views;
        views.reserve(m);
        for (const auto& es : eig_systems) views.push_back(truncate_features(es, c));
        for (std::size_t p = 0; p < m; ++p)
            for (std::size_t q = p + 1; q < m; ++q)
                if (alignment(views[p], views[q]) < threshold) return false;
        return true;
    };

    if (!uniform_feasible(min_rank))
        throw InfeasibleError(
            "run_algorithm1: no uniform dimension in [k, min_rank] satisfies the "
            "pairwise alignment constraints");
    Eigen::Index lo = k, hi = min_rank;
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo) / 2;
        if (uniform_feasible(mid))
            hi = mid;
        else
            lo = mid + 1;
    }

    Algorithm1Result result;
    DimensionState& s = result.state;
    s.d.assign(m, lo);
    s.d_hat.assign(m, lo);
    s.M = config.initial_M;

    std::vector<const EigenSystem*> eigs;
    for (const auto& es : eig_systems) eigs.push_back(&es);

    auto record = [&](bool feasible_flag) {
        result.trace.records.push_back(
            TraceRecord{s.d, s.d_hat, s.M, big_m_objective(s), feasible_flag});
    };
    for (int outer = 0; outer < config.max_outer_iters; ++outer) {
        s.iteration = outer + 1;
        // Sweep-start record carries the current M so within-sweep
        // monotonicity of G_M is checkable from the trace alone.
        record(true);
        detail::half_sweep(s.d, s.d_hat, eigs, ranks, k, s.M, tol);
        record(true);
        detail::half_sweep(s.d_hat, s.d, eigs, ranks, k, s.M, tol);
        record(true);
        if (s.d == s.d_hat) {
            result.features.reserve(m);
            for (std::size_t p = 0; p < m; ++p)
                result.features.push_back(truncate_features(eig_systems[p], s.d[p]));
            return result;
        }
        s.M *= 2.0;
    }
    throw NumericError("run_algorithm1: no convergence within " +
                       std::to_string(config.max_outer_iters) + " M-doublings");
}

}  // namespace dnmc
