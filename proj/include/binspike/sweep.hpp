#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "binspike/analysis.hpp"
#include "binspike/baselines.hpp"
#include "binspike/decoder.hpp"
#include "binspike/errors.hpp"
#include "binspike/fusion.hpp"
#include "binspike/io.hpp"
#include "binspike/metrics.hpp"
#include "binspike/model.hpp"
#include "binspike/rng.hpp"

namespace binspike {

enum class Method { nearest, l1box, fused };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::nearest: return "nearest";
        case Method::l1box: return "l1box";
        case Method::fused: return "fused";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "nearest") return Method::nearest;
    if (s == "l1box") return Method::l1box;
    if (s == "fused") return Method::fused;
    throw config_error("unknown method: " + s);
}

/// Grid experiment configuration. The train length is a target; per cell
/// the largest L <= length with L = (M-1)D + 1 is used (an explicit
/// measurement count overrides this).
struct SweepConfig {
    std::vector<double> alphas{0.5, 0.9};
    std::vector<int> decimations{2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> sigmas{0.0};
    std::vector<double> ps{0.35};
    std::size_t length = 1000;
    std::optional<std::size_t> measurements;
    std::size_t trials = 1000;
    std::size_t t0 = 2;
    double amplitude = 1.0;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::nearest};
    unsigned threads = 1;

    void validate() const {
        if (alphas.empty() || decimations.empty() || sigmas.empty() || ps.empty())
            throw config_error("every parameter grid must be nonempty");
        if (trials < 1) throw config_error("need at least one trial per cell");
        if (methods.empty()) throw config_error("need at least one method");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw config_error("alpha grid entries must lie in (0,1)");
        for (int d : decimations)
            if (d < 1) throw config_error("decimation grid entries must be >= 1");
        for (double s : sigmas)
            if (!(s >= 0.0)) throw config_error("sigma grid entries must be nonnegative");
        for (double p : ps)
            if (!(p >= 0.0 && p <= 1.0)) throw config_error("p grid entries must lie in [0,1]");
        if (!measurements && length < 1) throw config_error("train length must be positive");
    }
};

struct CellSpec {
    double alpha;
    int decimation;
    double sigma;
    double p;
};

/// One result row per (cell, method).
struct SweepRow {
    double alpha;
    int decimation;
    double sigma;
    double p;
    std::size_t measurements;
    std::size_t length;
    std::size_t trials;
    std::size_t t0;
    Method method;
    double f_mean = 0.0;
    double f_std = 0.0;
    double precision_mean = 0.0;
    double recall_mean = 0.0;
    double count_error_mean = 0.0;
    double train_error_rate = 0.0;
    double min_gap = 0.0;
    std::optional<double> cluster_min_gap;
    std::optional<double> bound;
};

namespace detail {

inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(count));
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

struct MethodAccumulator {
    double f_sum = 0.0, f_sq_sum = 0.0, p_sum = 0.0, r_sum = 0.0;
    double count_err_sum = 0.0;
    std::size_t train_errors = 0;

    void add(const MatchResult& match, long long count_err, bool train_exact) {
        f_sum += match.f_score;
        f_sq_sum += match.f_score * match.f_score;
        p_sum += match.precision;
        r_sum += match.recall;
        count_err_sum += static_cast<double>(count_err);
        if (!train_exact) ++train_errors;
    }
};

inline bool trains_equal(const SpikeTrain& a, std::span<const double> b) {
    if (a.values.size() != b.size()) return false;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (a.values[i] != b[i]) return false;
    return true;
}

}  // namespace detail

/// Runs `trials` Monte Carlo trials on each listed cell. Each trial draws
/// one dataset (seed derived from the master seed, the cell values and the
/// trial number) that all methods share; cells execute on a bounded worker
/// pool and rows come back in cell order regardless of scheduling.
inline std::vector<SweepRow> run_cells(std::span<const CellSpec> cells, const SweepConfig& cfg) {
    cfg.validate();
    const std::size_t rows_per_cell = cfg.methods.size();
    std::vector<SweepRow> rows(cells.size() * rows_per_cell);

    detail::parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
        const CellSpec& cell = cells[ci];
        const ArModel model(cell.alpha, cfg.amplitude, cell.decimation);
        std::size_t m;
        if (cfg.measurements) {
            m = *cfg.measurements;
        } else {
            if (cfg.length < 1) throw config_error("train length must be positive");
            m = (cfg.length - 1) / static_cast<std::size_t>(cell.decimation) + 1;
        }
        const std::size_t length = train_length(m, cell.decimation);
        const Codebook cb = build_codebook(model);

        std::vector<detail::MethodAccumulator> acc(rows_per_cell);
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            const std::uint64_t trial_seed = derive_seed(
                cfg.seed, {seed_tag(cell.alpha), static_cast<std::uint64_t>(cell.decimation),
                           seed_tag(cell.sigma), seed_tag(cell.p), m, trial});
            auto [truth, trace] = simulate(model, m, cell.p, cell.sigma, trial_seed);
            const std::vector<std::size_t> truth_idx = spike_indices(truth);
            const std::vector<int> truth_counts = estimate_counts(truth, cell.decimation);

            for (std::size_t mi = 0; mi < rows_per_cell; ++mi) {
                switch (cfg.methods[mi]) {
                    case Method::nearest: {
                        const DecodeReport rep = decode_train(trace, cb, DecodeMode::nearest);
                        acc[mi].add(match_spikes(truth_idx, spike_indices(rep.train), cfg.t0),
                                    count_error(truth_counts, rep.counts),
                                    detail::trains_equal(truth, rep.train.values));
                        break;
                    }
                    case Method::l1box: {
                        double eps = 0.0;
                        if (cell.sigma > 0.0) {
                            const Trace clean = decimate(ar_filter(truth, cell.alpha), model, m);
                            for (std::size_t i = 0; i < m; ++i) {
                                const double w = trace.values[i] - clean.values[i];
                                eps += w * w;
                            }
                            eps = std::sqrt(eps);
                        }
                        const std::vector<double> x = box_l1_noisy(trace, model, eps);
                        const SpikeTrain bin = binarize(x, model);
                        acc[mi].add(match_spikes(truth_idx, spike_indices(bin), cfg.t0),
                                    count_error(truth_counts, estimate_counts(bin, cell.decimation)),
                                    detail::trains_equal(truth, bin.values));
                        break;
                    }
                    case Method::fused: {
                        const DenoiseResult den =
                            denoise_low_rate(trace, default_denoise_lambda(trace));
                        const DecodeReport rep = fused_decode(den, cb);
                        acc[mi].add(match_spikes(truth_idx, spike_indices(rep.train), cfg.t0),
                                    count_error(truth_counts, rep.counts),
                                    detail::trains_equal(truth, rep.train.values));
                        break;
                    }
                }
            }
        }

        for (std::size_t mi = 0; mi < rows_per_cell; ++mi) {
            SweepRow& row = rows[ci * rows_per_cell + mi];
            row.alpha = cell.alpha;
            row.decimation = cell.decimation;
            row.sigma = cell.sigma;
            row.p = cell.p;
            row.measurements = m;
            row.length = length;
            row.trials = cfg.trials;
            row.t0 = cfg.t0;
            row.method = cfg.methods[mi];
            const auto t = static_cast<double>(cfg.trials);
            row.f_mean = acc[mi].f_sum / t;
            row.f_std = std::sqrt(std::max(0.0, acc[mi].f_sq_sum / t - row.f_mean * row.f_mean));
            row.precision_mean = acc[mi].p_sum / t;
            row.recall_mean = acc[mi].r_sum / t;
            row.count_error_mean = acc[mi].count_err_sum / t;
            row.train_error_rate = static_cast<double>(acc[mi].train_errors) / t;
            row.min_gap = min_gap(cb);
            if (in_f_d(cell.alpha, cell.decimation)) {
                const ClusterStats st = cluster_stats(cb);
                if (st.clustered) row.cluster_min_gap = st.cluster_min_gap;
            }
            if (cell.sigma > 0.0) row.bound = error_bound(cb, cell.sigma, m);
        }
    });
    return rows;
}

inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<CellSpec> cells;
    for (double alpha : cfg.alphas)
        for (int d : cfg.decimations)
            for (double sigma : cfg.sigmas)
                for (double p : cfg.ps) cells.push_back({alpha, d, sigma, p});
    return run_cells(cells, cfg);
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "alpha,decimation,sigma,p,measurements,length,trials,t0,method,"
          "f_mean,f_std,precision_mean,recall_mean,count_error_mean,train_error_rate,"
          "min_gap,cluster_min_gap,error_bound\n";
    for (const SweepRow& r : rows) {
        os << format_double(r.alpha) << ',' << r.decimation << ',' << format_double(r.sigma) << ','
           << format_double(r.p) << ',' << r.measurements << ',' << r.length << ',' << r.trials
           << ',' << r.t0 << ',' << method_name(r.method) << ',' << format_double(r.f_mean) << ','
           << format_double(r.f_std) << ',' << format_double(r.precision_mean) << ','
           << format_double(r.recall_mean) << ',' << format_double(r.count_error_mean) << ','
           << format_double(r.train_error_rate) << ',' << format_double(r.min_gap) << ','
           << (r.cluster_min_gap ? format_double(*r.cluster_min_gap) : std::string{}) << ','
           << (r.bound ? format_double(*r.bound) : std::string{}) << '\n';
    }
}

/// Noise level that places the whole-train error bound at `target` for the
/// given codebook and measurement count.
inline double sigma_for_bound(const Codebook& cb, std::size_t m, double target) {
    if (!(target > 0.0 && target < 1.0)) throw parameter_error("bound target must lie in (0,1)");
    const double g = min_gap(cb);
    const double s1sq = g * g / (4.0 * std::log(2.0 * static_cast<double>(m) / target));
    const double ad = std::pow(cb.model.alpha, cb.model.decimation);
    return std::sqrt(s1sq / (1.0 + ad * ad));
}

struct FigureOptions {
    std::size_t trials = 0;  // 0 = figure default
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Reproduces the data behind one of the synthetic-experiment figures and
/// writes it as plot-ready CSV. Figure names: fig2 (noiseless F vs D at
/// t0=0), fig4 (noisy F vs D), fig5 (F vs p), fig6 (F and count error vs
/// sigma), fig7 (whole-train error vs D with the theoretical bound).
inline std::vector<SweepRow> figure_rows(const std::string& name, const FigureOptions& opt = {}) {
    SweepConfig cfg;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    if (name == "fig2") {
        cfg.sigmas = {0.0};
        cfg.t0 = 0;
        cfg.trials = opt.trials ? opt.trials : 100;
        cfg.methods = {Method::nearest, Method::l1box};
        return run_sweep(cfg);
    }
    if (name == "fig4") {
        cfg.sigmas = {0.01};
        cfg.trials = opt.trials ? opt.trials : 100;
        cfg.methods = {Method::nearest, Method::l1box};
        return run_sweep(cfg);
    }
    if (name == "fig5") {
        cfg.alphas = {0.9};
        cfg.decimations = {5};
        cfg.sigmas = {0.01, 0.05};
        cfg.ps = {0.1, 0.2, 0.3, 0.4, 0.5};
        cfg.trials = opt.trials ? opt.trials : 100;
        cfg.methods = {Method::nearest, Method::l1box};
        return run_sweep(cfg);
    }
    if (name == "fig6") {
        cfg.alphas = {0.5, 0.9};
        cfg.decimations = {5};
        cfg.sigmas = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2};
        cfg.trials = opt.trials ? opt.trials : 100;
        cfg.methods = {Method::nearest, Method::l1box};
        return run_sweep(cfg);
    }
    if (name == "fig7") {
        // error_bound only dominates the empirical rate at low spiking
        // rates once it drops below 1; p=0.1 keeps every cell under it.
        cfg.length = 100;
        cfg.decimations = {2, 3, 4, 5, 6, 7, 8};
        cfg.trials = opt.trials ? opt.trials : 10000;
        cfg.methods = {Method::nearest};
        std::vector<CellSpec> cells;
        for (double alpha : cfg.alphas)
            for (int d : cfg.decimations) {
                const Codebook cb = build_codebook(ArModel(alpha, cfg.amplitude, d));
                const std::size_t m = (cfg.length - 1) / static_cast<std::size_t>(d) + 1;
                cells.push_back({alpha, d, sigma_for_bound(cb, m, 0.5), 0.1});
            }
        return run_cells(cells, cfg);
    }
    throw config_error("unknown figure name: " + name +
                       " (expected fig2, fig4, fig5, fig6 or fig7)");
}

inline void write_figure_csv(std::ostream& os, const std::string& name,
                             std::span<const SweepRow> rows) {
    if (name == "fig7") {
        os << "alpha,decimation,sigma,trials,empirical,stderr,bound\n";
        for (const SweepRow& r : rows) {
            const double se = std::sqrt(std::max(r.train_error_rate * (1.0 - r.train_error_rate),
                                                 1.0 / static_cast<double>(r.trials)) /
                                        static_cast<double>(r.trials));
            os << format_double(r.alpha) << ',' << r.decimation << ',' << format_double(r.sigma)
               << ',' << r.trials << ',' << format_double(r.train_error_rate) << ','
               << format_double(se) << ',' << format_double(r.bound.value_or(1.0)) << '\n';
        }
        return;
    }
    write_sweep_csv(os, rows);
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    try {
        if (j.contains("alpha")) cfg.alphas = j.at("alpha").get<std::vector<double>>();
        if (j.contains("decimation"))
            cfg.decimations = j.at("decimation").get<std::vector<int>>();
        if (j.contains("sigma")) cfg.sigmas = j.at("sigma").get<std::vector<double>>();
        if (j.contains("p")) cfg.ps = j.at("p").get<std::vector<double>>();
        if (j.contains("length")) cfg.length = j.at("length").get<std::size_t>();
        if (j.contains("measurements"))
            cfg.measurements = j.at("measurements").get<std::size_t>();
        if (j.contains("trials")) cfg.trials = j.at("trials").get<std::size_t>();
        if (j.contains("t0")) cfg.t0 = j.at("t0").get<std::size_t>();
        if (j.contains("amplitude")) cfg.amplitude = j.at("amplitude").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& s : j.at("methods")) cfg.methods.push_back(parse_method(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed sweep config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace binspike
