#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dnmc/errors.hpp"
#include "dnmc/fusion.hpp"
#include "dnmc/kernel.hpp"
#include "dnmc/metrics.hpp"
#include "dnmc/noise.hpp"
#include "dnmc/optimizer.hpp"
#include "dnmc/spectral.hpp"
#include "dnmc/synth.hpp"

namespace dnmc {

using json = nlohmann::json;

/// Index-range parallel map; falls back to the calling thread for one worker.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

enum class RunMode { Dnm, Akkm, KkmPerView };

struct RunConfig {
    std::filesystem::path dataset_dir;
    Eigen::Index k = 2;
    int restarts = 50;
    std::uint64_t seed = 0;
    double initial_M = 0.5;
    int max_outer_iters = 200;
    RunMode mode = RunMode::Dnm;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
};

struct LoadedDataset {
    std::vector<std::filesystem::path> kernel_paths;
    std::vector<KernelMatrix> kernels;
    std::optional<LabelVector> truth;
};

/// Discover view_* kernel files (lexicographic order) plus an optional
/// labels.txt next to them.
inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw InputError("dataset dir not found: " + dir.string());
    LoadedDataset ds;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("view_", 0) == 0 &&
            (entry.path().extension() == ".mkck" || entry.path().extension() == ".csv"))
            ds.kernel_paths.push_back(entry.path());
    }
    std::sort(ds.kernel_paths.begin(), ds.kernel_paths.end());
    if (ds.kernel_paths.empty())
        throw InputError("no view_*.mkck or view_*.csv kernels in " + dir.string());
    for (const auto& p : ds.kernel_paths) ds.kernels.push_back(load_kernel(p));
    const Eigen::Index n = ds.kernels.front().n();
    for (std::size_t i = 1; i < ds.kernels.size(); ++i)
        if (ds.kernels[i].n() != n)
            throw InputError("kernel " + ds.kernel_paths[i].string() + " has n=" +
                             std::to_string(ds.kernels[i].n()) + ", expected " +
                             std::to_string(n));
    const auto labels_path = dir / "labels.txt";
    if (std::filesystem::exists(labels_path)) {
        ds.truth = load_labels(labels_path);
        if (ds.truth->n() != static_cast<std::size_t>(n))
            throw InputError("labels.txt length disagrees with kernel size");
    }
    return ds;
}

namespace detail {

class StageTimer {
  public:
    explicit StageTimer(json& out) : out_(out) {}

    template <class F>
    auto time(const std::string& stage, F&& f) -> decltype(f()) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                stop(stage, t0);
            } else {
                auto result = f();
                stop(stage, t0);
                return result;
            }
        } catch (std::exception& e) {
            stop(stage, t0);
            throw;
        }
    }

  private:
    void stop(const std::string& stage, std::chrono::steady_clock::time_point t0) {
        const auto dt = std::chrono::steady_clock::now() - t0;
        out_[stage] =
            std::chrono::duration_cast<std::chrono::duration<double>>(dt).count();
    }

    json& out_;
};

inline json metrics_json(const ClusteringReport& r) {
    return json{{"acc", r.acc}, {"nmi", r.nmi}, {"purity", r.purity}, {"ari", r.ari},
                {"confusion", r.confusion}};
}

/// Best-run metrics plus mean/std across the restart labelings.
inline json metrics_block(const LabelVector& best, const std::vector<LabelVector>& restarts,
                          const LabelVector& truth) {
    json out;
    out["best"] = metrics_json(evaluate(best, truth));
    std::vector<double> accs;
    accs.reserve(restarts.size());
    for (const auto& lv : restarts) accs.push_back(accuracy(lv, truth));
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(accs.size());
    out["acc_restart_mean"] = mean;
    out["acc_restart_std"] = std::sqrt(var);
    return out;
}

inline json trace_json(const OptimizerTrace& trace) {
    json arr = json::array();
    for (const auto& rec : trace.records) {
        arr.push_back(json{{"d", rec.d},
                           {"d_hat", rec.d_hat},
                           {"M", rec.M},
                           {"objective", rec.objective},
                           {"feasible", rec.feasible}});
    }
    return arr;
}

}  // namespace detail

/// End-to-end run: load -> preprocess -> eigendecompose -> (mode-specific
/// clustering) -> metrics when labels are present. Deterministic for a fixed
/// (config, input files) pair.
inline json run_pipeline(const RunConfig& config) {
    json report;
    report["k"] = config.k;
    report["seed"] = config.seed;
    report["restarts"] = config.restarts;
    json& timings = report["timings_sec"];
    detail::StageTimer timer(timings);

    LoadedDataset ds = timer.time("load", [&] { return load_dataset(config.dataset_dir); });
    const std::size_t m = ds.kernels.size();
    report["m"] = m;
    report["n"] = ds.kernels.front().n();
    json views = json::array();
    for (const auto& p : ds.kernel_paths) views.push_back(p.filename().string());
    report["views"] = views;

    timer.time("preprocess", [&] {
        parallel_for(m, config.threads, [&](std::size_t p) {
            ds.kernels[p].validate();
            ds.kernels[p] = center_and_normalize(ds.kernels[p]);
        });
    });

    if (config.mode == RunMode::Akkm) {
        report["mode"] = "akkm";
        AverageKernelResult res = timer.time("akkm", [&] {
            return average_kernel_kmeans(ds.kernels, config.k, config.restarts, config.seed);
        });
        report["objective"] = res.objective;
        if (ds.truth)
            report["metrics"] = detail::metrics_block(res.labels, res.restart_labels, *ds.truth);
        report["labels"] = res.labels.labels;
        return report;
    }

    std::vector<EigenSystem> eigs(m);
    timer.time("eigendecompose", [&] {
        parallel_for(m, config.threads,
                     [&](std::size_t p) { eigs[p] = symmetric_eig(ds.kernels[p].values); });
    });

    if (config.mode == RunMode::KkmPerView) {
        report["mode"] = "kkm-per-view";
        json per_view = json::array();
        timer.time("kkm", [&] {
            for (std::size_t p = 0; p < m; ++p) {
                KernelKMeansResult res =
                    kernel_kmeans(ds.kernels[p], config.k, config.restarts, config.seed);
                json entry;
                entry["view"] = ds.kernel_paths[p].filename().string();
                entry["objective"] = res.objective;
                if (ds.truth)
                    entry["metrics"] =
                        detail::metrics_block(res.labels, res.restart_labels, *ds.truth);
                per_view.push_back(entry);
            }
        });
        report["per_view"] = per_view;
        return report;
    }

    report["mode"] = "dnm";
    OptimizerConfig opt_config;
    opt_config.initial_M = config.initial_M;
    opt_config.max_outer_iters = config.max_outer_iters;
    Algorithm1Result opt = timer.time(
        "optimize", [&] { return run_algorithm1(eigs, config.k, opt_config); });
    report["d"] = opt.state.d;
    report["final_M"] = opt.state.M;
    report["outer_iterations"] = opt.state.iteration;
    report["trace"] = detail::trace_json(opt.trace);

    ConsensusResult consensus = timer.time("fuse", [&] {
        return consensus_partition(opt.features, config.k, config.restarts, config.seed);
    });
    if (ds.truth)
        report["metrics"] =
            detail::metrics_block(consensus.labels, consensus.restart_labels, *ds.truth);
    report["labels"] = consensus.labels.labels;
    return report;
}

/// Per-view dual-noise report against the consensus of the current features.
/// Each entry carries the traces, extremal eigenvalues, and the two lemma
/// residuals; `with_heatmaps` adds the dense matrices for plotting.
inline json decompose_report(const RunConfig& config, bool with_heatmaps = false) {
    json report;
    json& timings = report["timings_sec"];
    detail::StageTimer timer(timings);

    LoadedDataset ds = timer.time("load", [&] { return load_dataset(config.dataset_dir); });
    const std::size_t m = ds.kernels.size();

    timer.time("preprocess", [&] {
        parallel_for(m, config.threads, [&](std::size_t p) {
            ds.kernels[p].validate();
            ds.kernels[p] = center_and_normalize(ds.kernels[p]);
        });
    });
    std::vector<EigenSystem> eigs(m);
    timer.time("eigendecompose", [&] {
        parallel_for(m, config.threads,
                     [&](std::size_t p) { eigs[p] = symmetric_eig(ds.kernels[p].values); });
    });

    OptimizerConfig opt_config;
    opt_config.initial_M = config.initial_M;
    opt_config.max_outer_iters = config.max_outer_iters;
    Algorithm1Result opt = timer.time(
        "optimize", [&] { return run_algorithm1(eigs, config.k, opt_config); });
    ConsensusResult consensus = timer.time("fuse", [&] {
        return consensus_partition(opt.features, config.k, config.restarts, config.seed);
    });

    json per_view = json::array();
    timer.time("decompose", [&] {
        for (std::size_t p = 0; p < m; ++p) {
            const NoiseDecomposition dec =
                decompose_noise(opt.features[p], consensus.partition);
            const Lemma3Result l3 = check_lemma3(dec);
            json entry;
            entry["view"] = ds.kernel_paths[p].filename().string();
            entry["d"] = opt.state.d[p];
            entry["tr_E"] = dec.tr_E;
            entry["tr_N"] = dec.tr_N;
            entry["tr_C"] = dec.tr_C;
            entry["tr_R"] = dec.R.trace();
            entry["min_eig_N"] = l3.min_eig_N;
            entry["max_eig_C"] = l3.max_eig_C;
            entry["lemma1_residual"] = check_lemma1(dec, consensus.partition);
            entry["lemma2_residual"] = check_lemma2(dec, consensus.partition);
            if (with_heatmaps) {
                auto dense = [](const Eigen::MatrixXd& M) {
                    std::vector<std::vector<double>> rows;
                    for (Eigen::Index i = 0; i < M.rows(); ++i)
                        rows.emplace_back(M.row(i).begin(), M.row(i).end());
                    return rows;
                };
                entry["E"] = dense(dec.E);
                entry["E_N"] = dense(dec.E_N);
                entry["E_C"] = dense(dec.E_C);
                entry["R"] = dense(dec.R);
            }
            per_view.push_back(entry);
        }
    });
    report["per_view"] = per_view;
    return report;
}

// ---------------------------------------------------------------------------
// Synthetic dataset emission.
// ---------------------------------------------------------------------------

/// Write a synthetic projector-kernel dataset (view_XX.mkck + labels.txt +
/// manifest.json). Regenerating from the manifest reproduces the kernel
/// files byte for byte.
inline json generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const SynthDataset ds = make_synthetic(spec);

    char name[32];
    for (std::size_t p = 0; p < ds.kernels.size(); ++p) {
        std::snprintf(name, sizeof(name), "view_%02zu.mkck", p);
        save_kernel(ds.kernels[p], out_dir / name);
    }
    save_labels(ds.labels, out_dir / "labels.txt");

    json manifest;
    manifest["generator"] = "projector";
    manifest["n"] = spec.n;
    manifest["k"] = spec.k;
    manifest["m"] = spec.profile.size();
    manifest["seed"] = spec.seed;
    json profile = json::array();
    for (const auto& vn : spec.profile)
        profile.push_back(json{{"n_extra", vn.n_extra}, {"tilt_angles", vn.tilt_angles}});
    manifest["profile"] = profile;
    std::ofstream f(out_dir / "manifest.json");
    f << manifest.dump(2) << '\n';
    return manifest;
}

/// Blob variant of generate_synthetic (rbf kernels on per-view features).
inline json generate_blob_dataset(Eigen::Index n, Eigen::Index k, const BlobProfile& prof,
                                  std::uint64_t seed, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const BlobDataset ds = make_blob_views(n, k, prof, seed);
    char name[32];
    for (std::size_t p = 0; p < ds.kernels.size(); ++p) {
        std::snprintf(name, sizeof(name), "view_%02zu.mkck", p);
        save_kernel(ds.kernels[p], out_dir / name);
    }
    save_labels(ds.labels, out_dir / "labels.txt");

    json manifest;
    manifest["generator"] = "blobs";
    manifest["n"] = n;
    manifest["k"] = k;
    manifest["m"] = prof.m;
    manifest["seed"] = seed;
    manifest["true_scale"] = prof.true_scale;
    manifest["distractor_scale"] = prof.distractor_scale;
    manifest["distractor_k"] = prof.distractor_k;
    manifest["noise_sigma"] = prof.noise_sigma;
    manifest["rbf_gamma"] = prof.rbf_gamma;
    std::ofstream f(out_dir / "manifest.json");
    f << manifest.dump(2) << '\n';
    return manifest;
}

inline json regenerate_from_manifest(const std::filesystem::path& manifest_path,
                                     const std::filesystem::path& out_dir) {
    std::ifstream f(manifest_path);
    if (!f) throw InputError("cannot open manifest " + manifest_path.string());
    json manifest = json::parse(f);
    if (manifest.value("generator", "") == "blobs") {
        BlobProfile prof;
        prof.m = manifest["m"].get<Eigen::Index>();
        prof.true_scale = manifest["true_scale"].get<double>();
        prof.distractor_scale = manifest["distractor_scale"].get<double>();
        prof.distractor_k = manifest["distractor_k"].get<Eigen::Index>();
        prof.noise_sigma = manifest["noise_sigma"].get<double>();
        prof.rbf_gamma = manifest["rbf_gamma"].get<double>();
        return generate_blob_dataset(manifest["n"].get<Eigen::Index>(),
                                     manifest["k"].get<Eigen::Index>(), prof,
                                     manifest["seed"].get<std::uint64_t>(), out_dir);
    }
    SynthSpec spec;
    spec.n = manifest["n"].get<Eigen::Index>();
    spec.k = manifest["k"].get<Eigen::Index>();
    spec.seed = manifest["seed"].get<std::uint64_t>();
    for (const auto& vn : manifest["profile"]) {
        ViewNoise noise;
        noise.n_extra = vn["n_extra"].get<Eigen::Index>();
        noise.tilt_angles = vn["tilt_angles"].get<std::vector<double>>();
        spec.profile.push_back(std::move(noise));
    }
    return generate_synthetic(spec, out_dir);
}

}  // namespace dnmc
