#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "binspike/codebook.hpp"
#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

enum class DecodeMode { exact, nearest };

/// Decoding result: the recovered train, per-block spike counts, per-block
/// distances |c_e[n] - theta| to the selected codebook entry, and the
/// amplitude the decoder assumed.
struct DecodeReport {
    SpikeTrain train;
    std::vector<int> counts;
    std::vector<double> residuals;
    double amplitude_used = 0.0;
};

/// Decouples the measurements into per-block equations:
/// c[0] = z[0], c[n] = z[n] - alpha^D * z[n-1].
inline std::vector<double> preprocess(const Trace& trace) {
    if (trace.values.empty()) throw shape_error("trace must hold at least one measurement");
    const double ad = std::pow(trace.model.alpha, trace.model.decimation);
    std::vector<double> c(trace.values.size());
    c[0] = trace.values[0];
    for (std::size_t n = 1; n < c.size(); ++n) c[n] = trace.values[n] - ad * trace.values[n - 1];
    return c;
}

namespace detail {

struct SearchStats {
    std::size_t probes = 0;
};

/// Bracketing binary search for the sorted-list entry nearest to c. Probes
/// at most D+1 list entries for a list of 2^D values: one per bisection
/// step plus at most one endpoint the loop never touched. Exact midpoints
/// resolve to the lower entry.
inline std::size_t nearest_index(std::span<const double> sorted, double c,
                                 SearchStats* stats = nullptr) {
    std::size_t lo = 0, hi = sorted.size() - 1;
    double theta_lo = std::numeric_limits<double>::quiet_NaN();
    double theta_hi = theta_lo;
    std::size_t probes = 0;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        ++probes;
        const double tm = sorted[mid];
        if (tm > c) {
            hi = mid;
            theta_hi = tm;
        } else {
            lo = mid;
            theta_lo = tm;
        }
    }
    if (std::isnan(theta_lo)) {
        ++probes;
        theta_lo = sorted[lo];
    }
    if (std::isnan(theta_hi)) {
        ++probes;
        theta_hi = sorted[hi];
    }
    if (stats) stats->probes = probes;
    return std::abs(c - theta_lo) <= std::abs(c - theta_hi) ? lo : hi;
}

/// Tolerance for declaring an exact codebook match; relative so the check
/// stays meaningful across amplitudes and large D.
inline double exact_match_tolerance(const Codebook& cb) { return 1e-9 * (1.0 + cb.max_theta()); }

inline std::uint64_t decode_bits_exact(double c, const Codebook& cb) {
    if (!cb.collision_free)
        throw degenerate_codebook_error("exact decoding requires a collision-free codebook");
    const std::size_t j = nearest_index(cb.thetas, c);
    if (std::abs(c - cb.thetas[j]) > exact_match_tolerance(cb))
        throw not_in_codebook_error("measurement is not a codebook value (noisy input or wrong model?)");
    return cb.perm[j];
}

inline std::uint64_t decode_bits_nearest(double c, const Codebook& cb, double* residual,
                                         SearchStats* stats = nullptr) {
    const std::size_t j = nearest_index(cb.thetas, c, stats);
    if (residual) *residual = std::abs(c - cb.thetas[j]);
    return cb.perm[j];
}

inline void write_block(std::uint64_t bits, int d, double amplitude, double* out) {
    for (int slot = 1; slot <= d; ++slot)
        out[slot - 1] = ((bits >> (d - slot)) & 1u) ? amplitude : 0.0;
}

}  // namespace detail

using detail::SearchStats;

/// Noiseless block decoding: finds the codebook entry matching c by binary
/// search and returns its spike pattern. Raises not_in_codebook_error when
/// no entry lies within the exact-match tolerance.
inline std::vector<double> decode_block_exact(double c, const Codebook& cb) {
    return codeword(detail::decode_bits_exact(c, cb), cb.model);
}

struct NearestBlock {
    std::vector<double> block;
    double residual = 0.0;
};

/// Noisy block decoding: nearest-neighbor search over the sorted codebook.
/// Total function; the residual is the distance to the chosen entry.
inline NearestBlock decode_block_nn(double c, const Codebook& cb, SearchStats* stats = nullptr) {
    if (!cb.collision_free)
        throw degenerate_codebook_error("nearest-neighbor decoding requires a collision-free codebook");
    double r = 0.0;
    const std::uint64_t bits = detail::decode_bits_nearest(c, cb, &r, stats);
    return {codeword(bits, cb.model), r};
}

/// Decodes a whole trace block by block. Blocks are independent; with
/// threads > 1 they are decoded concurrently with results identical to the
/// sequential order. The scalar first block uses an A/2 threshold in
/// nearest mode and an exact {0, A} match in exact mode.
inline DecodeReport decode_train(const Trace& trace, const Codebook& cb, DecodeMode mode,
                                 unsigned threads = 1) {
    if (!trace.model.same_system(cb.model))
        throw model_mismatch_error("trace and codebook were built for different models");
    if (!cb.collision_free)
        throw degenerate_codebook_error("train decoding requires a collision-free codebook");

    const std::vector<double> c = preprocess(trace);
    const std::size_t m = c.size();
    const int d = cb.model.decimation;
    const double amp = cb.model.amplitude;

    DecodeReport report;
    report.amplitude_used = amp;
    report.train.values.assign(train_length(m, d), 0.0);
    report.counts.assign(m, 0);
    report.residuals.assign(m, 0.0);

    // Scalar first block.
    {
        const double r0 = std::abs(c[0]);
        const double r1 = std::abs(c[0] - amp);
        if (mode == DecodeMode::exact) {
            const double tol = detail::exact_match_tolerance(cb);
            if (r0 <= tol) {
                report.train.values[0] = 0.0;
            } else if (r1 <= tol) {
                report.train.values[0] = amp;
            } else {
                throw not_in_codebook_error("first measurement matches neither 0 nor A", 0);
            }
        } else {
            report.train.values[0] = (r1 < r0) ? amp : 0.0;
        }
        report.residuals[0] = report.train.values[0] == 0.0 ? r0 : r1;
        report.counts[0] = report.train.values[0] != 0.0 ? 1 : 0;
    }

    // failed_block keeps the smallest failing index so the reported error
    // does not depend on thread scheduling.
    std::atomic<std::size_t> failed_block{m};
    auto decode_range = [&](std::size_t first, std::size_t last) {
        for (std::size_t n = first; n < last; ++n) {
            std::uint64_t bits = 0;
            double residual = 0.0;
            if (mode == DecodeMode::exact) {
                const std::size_t j = detail::nearest_index(cb.thetas, c[n]);
                residual = std::abs(c[n] - cb.thetas[j]);
                if (residual > detail::exact_match_tolerance(cb)) {
                    std::size_t expect = failed_block.load();
                    while (n < expect && !failed_block.compare_exchange_weak(expect, n)) {
                    }
                    return;
                }
                bits = cb.perm[j];
            } else {
                bits = detail::decode_bits_nearest(c[n], cb, &residual);
            }
            detail::write_block(bits, d, amp,
                                report.train.values.data() + (n - 1) * static_cast<std::size_t>(d) + 1);
            report.counts[n] = std::popcount(bits);
            report.residuals[n] = residual;
        }
    };

    const std::size_t blocks = m - 1;
    if (threads <= 1 || blocks < 2 * threads) {
        decode_range(1, m);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (blocks + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t first = 1 + t * chunk;
            if (first >= m) break;
            pool.emplace_back(decode_range, first, std::min(m, first + chunk));
        }
        for (auto& th : pool) th.join();
    }
    if (failed_block.load() < m)
        throw not_in_codebook_error("measurement at block " + std::to_string(failed_block.load()) +
                                        " is not a codebook value",
                                    failed_block.load());
    return report;
}

/// Per-block spike counts of a train under decimation D.
inline std::vector<int> estimate_counts(const SpikeTrain& train, int decimation) {
    const std::size_t m = block_count(train.length(), decimation);
    std::vector<int> counts(m, 0);
    counts[0] = train.values[0] != 0.0 ? 1 : 0;
    for (std::size_t n = 1; n < m; ++n) {
        int k = 0;
        const std::size_t base = (n - 1) * static_cast<std::size_t>(decimation) + 1;
        for (int i = 0; i < decimation; ++i)
            if (train.values[base + static_cast<std::size_t>(i)] != 0.0) ++k;
        counts[n] = k;
    }
    return counts;
}

inline std::vector<int> estimate_counts(const DecodeReport& report, int decimation) {
    return estimate_counts(report.train, decimation);
}

struct AmplitudeEstimate {
    double amplitude = 0.0;
    std::vector<double> survivors;
    std::size_t pivot = 0;
};

/// Estimates the unknown spike amplitude from the c-sequence of a trace
/// whose alpha and D are known. Candidates are c[pivot] divided by each
/// nonzero unit-amplitude codebook value; a candidate survives if every
/// other block measurement is within tol of some scaled codebook value.
/// The pivot defaults to the index of the largest |c[n]|, n >= 1; among
/// multiple survivors the one with the smallest total consistency residual
/// is returned, with the full survivor set exposed for ambiguity checks.
inline AmplitudeEstimate estimate_amplitude(std::span<const double> c, double alpha, int decimation,
                                            double tol, std::optional<std::size_t> pivot = {}) {
    if (!(tol >= 0.0)) throw parameter_error("amplitude tolerance must be nonnegative");
    if (c.size() < 2) throw shape_error("amplitude estimation needs at least one block measurement");

    std::size_t n0;
    if (pivot) {
        n0 = *pivot;
        if (n0 < 1 || n0 >= c.size()) throw parameter_error("pivot index out of range");
    } else {
        n0 = 1;
        for (std::size_t n = 2; n < c.size(); ++n)
            if (std::abs(c[n]) > std::abs(c[n0])) n0 = n;
    }
    if (!(c[n0] > 3.0 * tol))
        throw pivot_error("pivot measurement is below the declared noise floor");

    const Codebook unit = build_codebook(ArModel(alpha, 1.0, decimation));

    std::vector<double> candidates;
    candidates.reserve(unit.size() - 1);
    for (std::size_t j = 0; j < unit.size(); ++j) {
        if (unit.thetas[j] <= 0.0) continue;
        const double a = c[n0] / unit.thetas[j];
        // Colliding unit values would duplicate candidates; keep one.
        if (!candidates.empty() && std::abs(candidates.back() - a) <= 1e-12 * (1.0 + std::abs(a)))
            continue;
        candidates.push_back(a);
    }

    AmplitudeEstimate est;
    est.pivot = n0;
    double best_residual = std::numeric_limits<double>::infinity();
    for (double a : candidates) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t n = 1; n < c.size() && ok; ++n) {
            if (n == n0) continue;
            const std::size_t j = detail::nearest_index(unit.thetas, c[n] / a);
            const double r = std::abs(c[n] - a * unit.thetas[j]);
            if (r > tol) ok = false;
            total += r;
        }
        if (!ok) continue;
        est.survivors.push_back(a);
        if (total < best_residual) {
            best_residual = total;
            est.amplitude = a;
        }
    }
    if (est.survivors.empty())
        throw estimation_error("no candidate amplitude is consistent with all measurements");
    std::sort(est.survivors.begin(), est.survivors.end());
    return est;
}

}  // namespace binspike
