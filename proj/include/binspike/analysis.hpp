#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>

#include "binspike/codebook.hpp"
#include "binspike/errors.hpp"

namespace binspike {

/// Gaussian tail probability Q(x) = P(N(0,1) > x) = erfc(x/sqrt(2))/2.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Noise levels the recovery guarantees tolerate. exact_recovery_bound is
/// the per-sample bound for exact pattern recovery; count_recovery_bound is
/// the larger bound under which per-block counts stay exact, defined only
/// when the codebook clusters by count; sigma1_sq is the variance
/// (1 + alpha^(2D)) * sigma^2 of the differenced measurement noise.
struct NoiseBudget {
    double exact_recovery_bound = 0.0;
    std::optional<double> count_recovery_bound;
    double sigma1_sq = 0.0;
};

inline double differenced_noise_variance(const ArModel& model, double sigma) {
    const double ad = std::pow(model.alpha, model.decimation);
    return (1.0 + ad * ad) * sigma * sigma;
}

inline NoiseBudget noise_budget(const Codebook& cb, double sigma) {
    NoiseBudget b;
    b.exact_recovery_bound = min_gap(cb) / 4.0;
    b.sigma1_sq = differenced_noise_variance(cb.model, sigma);
    if (in_f_d(cb.model.alpha, cb.model.decimation)) {
        const ClusterStats st = cluster_stats(cb);
        if (st.clustered) b.count_recovery_bound = *st.cluster_min_gap / 4.0;
    }
    return b;
}

/// SNR condition for whole-train recovery with probability >= 1 - delta:
/// min_gap^2 / sigma^2 >= 4 ln(2M / delta).
inline bool snr_condition(const Codebook& cb, double sigma, std::size_t m, double delta) {
    if (!(sigma > 0.0)) throw parameter_error("sigma must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw parameter_error("delta must lie in (0,1)");
    const double g = min_gap(cb);
    return g * g / (sigma * sigma) >= 4.0 * std::log(2.0 * static_cast<double>(m) / delta);
}

/// Union bound on the whole-train error probability,
/// min(1, 2M exp(-min_gap^2 / (4 sigma1^2))).
inline double error_bound(const Codebook& cb, double sigma, std::size_t m) {
    if (!(sigma > 0.0)) throw parameter_error("sigma must be positive");
    const double g = min_gap(cb);
    const double s1sq = differenced_noise_variance(cb.model, sigma);
    return std::min(1.0, 2.0 * static_cast<double>(m) * std::exp(-g * g / (4.0 * s1sq)));
}

/// Exact per-block error probability under iid A*Bern(p) spikes and
/// Gaussian noise: sums the one-sided boundary terms and two-sided interior
/// terms over all 2^D sorted entries, each weighted by the Bernoulli
/// probability of its spike pattern. O(2^D); guarded.
inline double block_error_prob(const Codebook& cb, double sigma, double p, int max_decimation = 20) {
    if (!(sigma > 0.0)) throw parameter_error("sigma must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw parameter_error("spiking probability must lie in [0,1]");
    if (cb.model.decimation > max_decimation)
        throw size_error("block error probability guarded to D <= " + std::to_string(max_decimation));
    if (!cb.collision_free)
        throw degenerate_codebook_error("per-block error probability needs a collision-free codebook");

    const double s1 = std::sqrt(differenced_noise_variance(cb.model, sigma));
    const int d = cb.model.decimation;
    const std::size_t last = cb.size() - 1;

    double pe = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
        double perr = 0.0;
        if (k > 0) perr += q_function((cb.thetas[k] - cb.thetas[k - 1]) / (2.0 * s1));
        if (k < last) perr += q_function((cb.thetas[k + 1] - cb.thetas[k]) / (2.0 * s1));
        const int ones = std::popcount(cb.perm[k]);
        pe += perr * std::pow(p, ones) * std::pow(1.0 - p, d - ones);
    }
    return pe;
}

}  // namespace binspike
