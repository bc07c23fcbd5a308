#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/kernel.hpp"

namespace dnmc {

/// Minimum-cost assignment on a square cost matrix (Jonker-Volgenant style
/// shortest augmenting paths, O(k^3)). assignment[row] = column.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int dim = static_cast<int>(cost.size());
    std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
    std::vector<int> p(dim + 1, 0), way(dim + 1, 0);
    for (int i = 1; i <= dim; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(dim + 1, std::numeric_limits<double>::max());
        std::vector<char> used(dim + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = std::numeric_limits<double>::max();
            for (int j = 1; j <= dim; ++j)
                if (!used[j]) {
                    double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (int j = 0; j <= dim; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assignment(dim, -1);
    for (int j = 1; j <= dim; ++j)
        if (p[j] > 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

/// k_pred x k_true contingency table; entries sum to n.
inline std::vector<std::vector<long>> confusion_matrix(const LabelVector& pred,
                                                       const LabelVector& truth) {
    if (pred.n() != truth.n()) throw InputError("metrics: label length mismatch");
    std::vector<std::vector<long>> c(static_cast<std::size_t>(pred.k),
                                     std::vector<long>(static_cast<std::size_t>(truth.k), 0));
    for (std::size_t i = 0; i < pred.n(); ++i)
        ++c[static_cast<std::size_t>(pred.labels[i] - 1)]
          [static_cast<std::size_t>(truth.labels[i] - 1)];
    return c;
}

/// Best-matching accuracy: optimal assignment on the (zero-padded) negated
/// confusion matrix.
inline double accuracy(const LabelVector& pred, const LabelVector& truth) {
    const auto conf = confusion_matrix(pred, truth);
    const int dim = std::max(pred.k, truth.k);
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(dim),
                                          std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    for (int i = 0; i < pred.k; ++i)
        for (int j = 0; j < truth.k; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                -static_cast<double>(conf[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    const std::vector<int> match = hungarian(cost);
    long correct = 0;
    for (int i = 0; i < pred.k; ++i)
        if (match[static_cast<std::size_t>(i)] < truth.k)
            correct += conf[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
    return static_cast<double>(correct) / static_cast<double>(pred.n());
}

/// Whether two labelings induce the same set partition of the samples.
inline bool same_partition(const LabelVector& a, const LabelVector& b) {
    const auto conf = confusion_matrix(a, b);
    for (const auto& row : conf) {
        int nonzero = 0;
        for (long v : row)
            if (v) ++nonzero;
        if (nonzero > 1) return false;
    }
    const auto conf_t = confusion_matrix(b, a);
    for (const auto& row : conf_t) {
        int nonzero = 0;
        for (long v : row)
            if (v) ++nonzero;
        if (nonzero > 1) return false;
    }
    return true;
}

/// NMI with geometric normalization: I(pred; truth) / sqrt(H(pred) H(truth)),
/// natural log, 0 log 0 = 0. Degenerate entropies: 1 if the partitions are
/// identical as set partitions, else 0.
inline double nmi(const LabelVector& pred, const LabelVector& truth) {
    const auto conf = confusion_matrix(pred, truth);
    const double n = static_cast<double>(pred.n());
    std::vector<double> a(static_cast<std::size_t>(pred.k), 0.0);
    std::vector<double> b(static_cast<std::size_t>(truth.k), 0.0);
    for (int i = 0; i < pred.k; ++i)
        for (int j = 0; j < truth.k; ++j) {
            a[static_cast<std::size_t>(i)] +=
                static_cast<double>(conf[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            b[static_cast<std::size_t>(j)] +=
                static_cast<double>(conf[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        }
    double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
    for (double ai : a)
        if (ai > 0) h_pred -= (ai / n) * std::log(ai / n);
    for (double bj : b)
        if (bj > 0) h_truth -= (bj / n) * std::log(bj / n);
    for (int i = 0; i < pred.k; ++i)
        for (int j = 0; j < truth.k; ++j) {
            const double nij =
                static_cast<double>(conf[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            if (nij > 0)
                mi += (nij / n) *
                      std::log(nij * n /
                               (a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)]));
        }
    if (h_pred <= 0.0 || h_truth <= 0.0)
        return same_partition(pred, truth) ? 1.0 : 0.0;
    return mi / std::sqrt(h_pred * h_truth);
}

/// (1/n) sum over predicted clusters of the max overlap with a true cluster.
inline double purity(const LabelVector& pred, const LabelVector& truth) {
    const auto conf = confusion_matrix(pred, truth);
    long total = 0;
    for (const auto& row : conf) total += *std::max_element(row.begin(), row.end());
    return static_cast<double>(total) / static_cast<double>(pred.n());
}

/// Hubert-Arabie adjusted Rand index via pair counting. Degenerate
/// denominator: 1 if the partitions are identical, else 0.
inline double ari(const LabelVector& pred, const LabelVector& truth) {
    const auto conf = confusion_matrix(pred, truth);
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    const double n = static_cast<double>(pred.n());
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    std::vector<double> b(static_cast<std::size_t>(truth.k), 0.0);
    for (int i = 0; i < pred.k; ++i) {
        double ai = 0.0;
        for (int j = 0; j < truth.k; ++j) {
            const double nij =
                static_cast<double>(conf[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            sum_ij += choose2(nij);
            ai += nij;
            b[static_cast<std::size_t>(j)] += nij;
        }
        sum_a += choose2(ai);
    }
    for (double bj : b) sum_b += choose2(bj);
    const double expected = sum_a * sum_b / choose2(n);
    const double denom = 0.5 * (sum_a + sum_b) - expected;
    if (std::abs(denom) < 1e-15)
        return same_partition(pred, truth) ? 1.0 : 0.0;
    return (sum_ij - expected) / denom;
}

struct ClusteringReport {
    double acc = 0.0;
    double nmi = 0.0;
    double purity = 0.0;
    double ari = 0.0;
    std::vector<std::vector<long>> confusion;
};

inline ClusteringReport evaluate(const LabelVector& pred, const LabelVector& truth) {
    ClusteringReport r;
    r.acc = accuracy(pred, truth);
    r.nmi = nmi(pred, truth);
    r.purity = purity(pred, truth);
    r.ari = ari(pred, truth);
    r.confusion = confusion_matrix(pred, truth);
    return r;
}

}  // namespace dnmc
