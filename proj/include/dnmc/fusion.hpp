#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/spectral.hpp"

namespace dnmc {

struct ConsensusResult {
    PartitionMatrix partition;  // H*, n x k orthonormal
    LabelVector labels;
    std::vector<double> restart_wcss;
    std::vector<LabelVector> restart_labels;
};

/// Fuse the per-view feature matrices into the consensus partition H* and
/// cluster its rows. H* is the top-k left singular subspace of the
/// concatenation [U_1 ... U_m]; equivalently the top-k eigenvectors of
/// sum_p U_p U_p^T. The cheaper route is picked by total width, both agree
/// on the projector H* H*^T.
inline ConsensusResult consensus_partition(const std::vector<FeatureMatrix>& views,
                                           Eigen::Index k, int restarts,
                                           std::uint64_t seed) {
    if (views.empty()) throw InputError("consensus_partition: no views");
    const Eigen::Index n = views.front().n();
    Eigen::Index total_d = 0;
    for (const auto& U : views) {
        if (U.n() != n) throw InputError("consensus_partition: views disagree on n");
        total_d += U.d();
    }
    if (k > total_d) throw InputError("consensus_partition: k exceeds total width");

    ConsensusResult out;
    if (total_d <= n) {
        Eigen::MatrixXd concat(n, total_d);
        Eigen::Index col = 0;
        for (const auto& U : views) {
            concat.middleCols(col, U.d()) = U.values;
            col += U.d();
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(concat, Eigen::ComputeThinU);
        if (svd.rank() < k)
            throw NumericError("consensus_partition: concatenation rank below k");
        out.partition.values = svd.matrixU().leftCols(k);
    } else {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
        for (const auto& U : views) sum += U.projector();
        const EigenSystem es = symmetric_eig(sum);
        if (es.numerical_rank() < k)
            throw NumericError("consensus_partition: projector sum rank below k");
        out.partition.values = es.eigenvectors.leftCols(k);
    }

    KMeansResult km = kmeans_rows(out.partition.values, k, restarts, seed);
    out.labels = std::move(km.labels);
    out.restart_wcss = std::move(km.restart_wcss);
    out.restart_labels = std::move(km.restart_labels);
    return out;
}

}  // namespace dnmc
