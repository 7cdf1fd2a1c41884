#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <utility>
#include <vector>

#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

/// Outcome of tolerance-window spike matching: the one-to-one pairs, the
/// true-positive count, and the derived precision/recall/F-score.
struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (truth index, estimate index)
    std::size_t true_positives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

/// Indices of the nonzero entries of a train; for real-valued estimates use
/// the thresholded overload below.
inline std::vector<std::size_t> spike_indices(std::span<const double> values) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != 0.0) idx.push_back(i);
    return idx;
}

inline std::vector<std::size_t> spike_indices(const SpikeTrain& train) {
    return spike_indices(std::span<const double>(train.values));
}

inline std::vector<std::size_t> spike_indices(std::span<const double> values, double threshold) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= threshold) idx.push_back(i);
    return idx;
}

/// One-to-one matching of estimated to ground-truth spikes within a window
/// of t0 samples, greedy over candidate pairs ordered by distance then by
/// truth index (ties are deterministic). With both sets empty the F-score
/// is 1 by convention; with exactly one empty it is 0.
inline MatchResult match_spikes(std::span<const std::size_t> truth,
                                std::span<const std::size_t> estimate, std::size_t t0) {
    std::vector<std::size_t> tr(truth.begin(), truth.end());
    std::vector<std::size_t> es(estimate.begin(), estimate.end());
    std::sort(tr.begin(), tr.end());
    std::sort(es.begin(), es.end());

    struct Candidate {
        std::size_t dist, ti, ei;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const std::size_t lo = tr[i] >= t0 ? tr[i] - t0 : 0;
        auto first = std::lower_bound(es.begin(), es.end(), lo);
        for (auto it = first; it != es.end() && *it <= tr[i] + t0; ++it) {
            const std::size_t d = *it > tr[i] ? *it - tr[i] : tr[i] - *it;
            cands.push_back({d, i, static_cast<std::size_t>(it - es.begin())});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.ti != b.ti) return a.ti < b.ti;
        return a.ei < b.ei;
    });

    MatchResult r;
    std::vector<bool> t_used(tr.size(), false), e_used(es.size(), false);
    for (const Candidate& c : cands) {
        if (t_used[c.ti] || e_used[c.ei]) continue;
        t_used[c.ti] = e_used[c.ei] = true;
        r.pairs.emplace_back(tr[c.ti], es[c.ei]);
    }
    r.true_positives = r.pairs.size();

    const std::size_t k = tr.size(), kp = es.size();
    if (k == 0 && kp == 0) {
        r.precision = r.recall = r.f_score = 1.0;
        return r;
    }
    r.precision = kp > 0 ? static_cast<double>(r.true_positives) / static_cast<double>(kp) : 0.0;
    r.recall = k > 0 ? static_cast<double>(r.true_positives) / static_cast<double>(k) : 0.0;
    r.f_score = (r.precision + r.recall) > 0.0
                    ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                    : 0.0;
    return r;
}

/// l1 distance between a count vector and its estimate.
inline long long count_error(std::span<const int> gamma, std::span<const int> gamma_hat) {
    if (gamma.size() != gamma_hat.size())
        throw shape_error("count vectors must have equal length");
    long long e = 0;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        e += std::abs(static_cast<long long>(gamma[i]) - static_cast<long long>(gamma_hat[i]));
    return e;
}

}  // namespace binspike
