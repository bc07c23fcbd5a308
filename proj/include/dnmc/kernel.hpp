#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dnmc/errors.hpp"

namespace dnmc {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdTol = 1e-8;

/// n x n symmetric positive-semidefinite similarity matrix for one view.
struct KernelMatrix {
    Eigen::MatrixXd values;

    Eigen::Index n() const { return values.rows(); }

    /// Symmetry check: |K(i,j) - K(j,i)| <= tol * max|K|.
    bool is_symmetric(double tol = kSymmetryTol) const {
        double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
        return (values - values.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
    }

    /// PSD within tolerance: smallest eigenvalue >= -tol * largest eigenvalue.
    bool is_psd(double tol = kPsdTol) const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(values, Eigen::EigenvaluesOnly);
        double lmax = es.eigenvalues().maxCoeff();
        double lmin = es.eigenvalues().minCoeff();
        return lmin >= -tol * std::max(1.0, lmax);
    }

    void validate() const {
        if (values.rows() != values.cols())
            throw InputError("kernel matrix must be square");
        if (!values.allFinite())
            throw InputError("kernel matrix has non-finite entries");
        if (!is_symmetric())
            throw InputError("kernel matrix asymmetric beyond tolerance");
        if (!is_psd())
            throw NumericError("kernel matrix fails PSD tolerance");
    }
};

/// Cluster assignment in compact id form, ids in {1..k}.
struct LabelVector {
    std::vector<int> labels;
    int k = 0;

    std::size_t n() const { return labels.size(); }

    void validate() const {
        if (k < 1 || labels.size() < static_cast<std::size_t>(k))
            throw InputError("label vector: need n >= k >= 1");
        for (int id : labels)
            if (id < 1 || id > k)
                throw InputError("label id out of range {1..k}");
    }
};

struct LinearKernel {};
struct RbfKernel {
    double gamma;
};
struct PolynomialKernel {
    double degree;
    double coef;
};
using KernelSpec = std::variant<LinearKernel, RbfKernel, PolynomialKernel>;

/// Build a kernel from an n x dim feature matrix.
inline KernelMatrix build_kernel(const Eigen::MatrixXd& features, const KernelSpec& spec) {
    if (features.rows() < 2) throw InputError("build_kernel: need n >= 2 samples");
    if (!features.allFinite()) throw InputError("build_kernel: non-finite feature entries");

    KernelMatrix out;
    const Eigen::MatrixXd gram = features * features.transpose();

    if (std::holds_alternative<LinearKernel>(spec)) {
        out.values = gram;
    } else if (const auto* rbf = std::get_if<RbfKernel>(&spec)) {
        if (rbf->gamma <= 0) throw InputError("build_kernel: rbf gamma must be > 0");
        const Eigen::VectorXd sq = gram.diagonal();
        Eigen::MatrixXd d2 = sq.replicate(1, features.rows()) +
                             sq.transpose().replicate(features.rows(), 1) - 2.0 * gram;
        d2 = d2.cwiseMax(0.0);
        out.values = (-rbf->gamma * d2).array().exp();
        out.values.diagonal().setOnes();
    } else {
        const auto& poly = std::get<PolynomialKernel>(spec);
        out.values = (gram.array() + poly.coef).pow(poly.degree);
    }
    // Exact symmetry regardless of floating-point evaluation order.
    out.values = 0.5 * (out.values + out.values.transpose()).eval();
    return out;
}

/// Center in feature space, then normalize to unit diagonal.
/// K_c = K - (1/n) 1 1^T K - (1/n) K 1 1^T + (1/n^2) 1 1^T K 1 1^T,
/// K_n(i,j) = K_c(i,j) / sqrt(K_c(i,i) K_c(j,j)).
inline KernelMatrix center_and_normalize(const KernelMatrix& K) {
    const Eigen::Index n = K.n();
    const Eigen::RowVectorXd col_mean = K.values.colwise().mean();
    const double total_mean = col_mean.mean();

    Eigen::MatrixXd Kc = K.values;
    Kc.rowwise() -= col_mean;
    Kc.colwise() -= col_mean.transpose();
    Kc.array() += total_mean;

    Eigen::VectorXd diag = Kc.diagonal();
    for (Eigen::Index i = 0; i < n; ++i)
        if (diag(i) <= 1e-12)
            throw NumericError("center_and_normalize: sample " + std::to_string(i) +
                               " identical to dataset mean (degenerate diagonal)");

    const Eigen::VectorXd inv_sqrt = diag.cwiseSqrt().cwiseInverse();
    KernelMatrix out;
    out.values = inv_sqrt.asDiagonal() * Kc * inv_sqrt.asDiagonal();
    out.values = 0.5 * (out.values + out.values.transpose()).eval();
    out.values.diagonal().setOnes();
    return out;
}

// ---------------------------------------------------------------------------
// Serialization. Binary format: magic "MKCK", uint32 version=1, uint32 n,
// then n*n little-endian float64 row-major. CSV: n rows of n decimals.
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr char kMagic[4] = {'M', 'K', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;
}  // namespace detail

inline void save_kernel(const KernelMatrix& K, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("save_kernel: cannot open " + path.string());
    f.write(detail::kMagic, 4);
    std::uint32_t version = detail::kVersion;
    std::uint32_t n = static_cast<std::uint32_t>(K.n());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&n), 4);
    // Eigen default storage is column-major; emit row-major as specified.
    for (Eigen::Index i = 0; i < K.n(); ++i)
        for (Eigen::Index j = 0; j < K.n(); ++j) {
            double v = K.values(i, j);
            f.write(reinterpret_cast<const char*>(&v), 8);
        }
    if (!f) throw InputError("save_kernel: write failed for " + path.string());
}

inline KernelMatrix load_kernel_binary(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("load_kernel: cannot open " + path.string());
    char magic[4];
    std::uint32_t version = 0, n = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&n), 4);
    if (!f || std::memcmp(magic, detail::kMagic, 4) != 0)
        throw InputError("load_kernel: bad magic in " + path.string());
    if (version != detail::kVersion)
        throw InputError("load_kernel: unsupported version " + std::to_string(version));

    KernelMatrix K;
    K.values.resize(n, n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            double v;
            f.read(reinterpret_cast<char*>(&v), 8);
            K.values(i, j) = v;
        }
    if (!f) throw InputError("load_kernel: truncated payload in " + path.string());
    f.peek();
    if (!f.eof()) throw InputError("load_kernel: trailing bytes in " + path.string());
    if (!K.is_symmetric())
        throw InputError("load_kernel: asymmetry beyond tolerance in " + path.string());
    return K;
}

inline KernelMatrix load_kernel_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("load_kernel: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("load_kernel: empty CSV " + path.string());
    const std::size_t n = rows.size();
    KernelMatrix K;
    K.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw InputError("load_kernel: row " + std::to_string(i) + " has " +
                             std::to_string(rows[i].size()) + " cells, expected " +
                             std::to_string(n));
        for (std::size_t j = 0; j < n; ++j)
            K.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    if (!K.is_symmetric())
        throw InputError("load_kernel: asymmetry beyond tolerance in " + path.string());
    return K;
}

inline void save_kernel_csv(const KernelMatrix& K, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InputError("save_kernel: cannot open " + path.string());
    f.precision(17);
    for (Eigen::Index i = 0; i < K.n(); ++i) {
        for (Eigen::Index j = 0; j < K.n(); ++j) {
            if (j) f << ',';
            f << K.values(i, j);
        }
        f << '\n';
    }
}

inline KernelMatrix load_kernel(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_kernel_csv(path);
    return load_kernel_binary(path);
}

/// Labels file: one integer per line, 1-based ids.
inline LabelVector load_labels(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("load_labels: cannot open " + path.string());
    LabelVector lv;
    int v;
    while (f >> v) lv.labels.push_back(v);
    if (!f.eof()) {
        f.clear();
        std::string token;
        f >> token;
        throw InputError("load_labels: non-numeric token '" + token + "' in " +
                         path.string());
    }
    if (lv.labels.empty()) throw InputError("load_labels: empty file " + path.string());
    lv.k = *std::max_element(lv.labels.begin(), lv.labels.end());
    lv.validate();
    return lv;
}

inline void save_labels(const LabelVector& lv, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InputError("save_labels: cannot open " + path.string());
    for (int id : lv.labels) f << id << '\n';
}

}  // namespace dnmc
