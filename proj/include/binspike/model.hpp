#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "binspike/errors.hpp"
#include "binspike/rng.hpp"

namespace binspike {

/// AR(1) measurement system: filter parameter alpha in (0,1), spike
/// amplitude A > 0, and decimation factor D >= 1 between the high-rate
/// spike grid and the low-rate sample grid.
struct ArModel {
    double alpha;
    double amplitude;
    int decimation;

    ArModel(double alpha_, double amplitude_, int decimation_)
        : alpha(alpha_), amplitude(amplitude_), decimation(decimation_) {
        if (!(alpha > 0.0) || !(alpha < 1.0))
            throw parameter_error("filter parameter alpha must lie in (0,1)");
        if (!(amplitude > 0.0)) throw parameter_error("amplitude must be positive");
        if (decimation < 1) throw parameter_error("decimation factor must be >= 1");
    }

    bool same_system(const ArModel& o, double tol = 0.0) const {
        return decimation == o.decimation && std::abs(alpha - o.alpha) <= tol &&
               std::abs(amplitude - o.amplitude) <= tol;
    }
};

/// High-rate binary train; every entry is exactly 0 or A. Block structure
/// relative to a decimation factor D: block 0 is the single sample
/// values[0], block n >= 1 covers values[(n-1)D+1 .. nD].
struct SpikeTrain {
    std::vector<double> values;

    std::size_t length() const { return values.size(); }
};

/// Low-rate measurement sequence, clean (y_lo) or noisy (z_lo), with the
/// model it was acquired under.
struct Trace {
    std::vector<double> values;
    ArModel model;
    bool noisy = false;
    double noise_sigma = 0.0;

    std::size_t measurements() const { return values.size(); }
};

/// Number of blocks M for a train of length L under decimation D.
/// Rejects lengths with L != 1 (mod D); inputs are not padded.
inline std::size_t block_count(std::size_t length, int decimation) {
    if (length == 0) throw shape_error("train length must be positive");
    const auto d = static_cast<std::size_t>(decimation);
    if ((length - 1) % d != 0)
        throw shape_error("train length must satisfy L = (M-1)*D + 1");
    return (length - 1) / d + 1;
}

inline std::size_t train_length(std::size_t measurements, int decimation) {
    if (measurements == 0) throw shape_error("need at least one measurement");
    return (measurements - 1) * static_cast<std::size_t>(decimation) + 1;
}

/// Causal AR(1) filter at rest: y[0] = x[0], y[n] = alpha*y[n-1] + x[n].
inline std::vector<double> ar_filter(std::span<const double> x, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw parameter_error("filter parameter alpha must lie in (0,1)");
    std::vector<double> y(x.size());
    double prev = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        prev = alpha * prev + x[n];
        y[n] = prev;
    }
    return y;
}

inline std::vector<double> ar_filter(const SpikeTrain& x, double alpha) {
    return ar_filter(std::span<const double>(x.values), alpha);
}

/// D-fold decimation y_lo[n] = y_hi[D*n], taking as many samples as fit.
inline Trace decimate(std::span<const double> y_hi, const ArModel& model) {
    const std::size_t m = block_count(
        y_hi.size() - (y_hi.size() - 1) % static_cast<std::size_t>(model.decimation),
        model.decimation);
    Trace t{std::vector<double>(m), model};
    for (std::size_t n = 0; n < m; ++n)
        t.values[n] = y_hi[n * static_cast<std::size_t>(model.decimation)];
    return t;
}

/// D-fold decimation with an explicit number of output samples.
inline Trace decimate(std::span<const double> y_hi, const ArModel& model, std::size_t m) {
    if (m == 0) throw shape_error("need at least one measurement");
    if (y_hi.size() < train_length(m, model.decimation))
        throw shape_error("input too short for requested number of measurements");
    Trace t{std::vector<double>(m), model};
    for (std::size_t n = 0; n < m; ++n)
        t.values[n] = y_hi[n * static_cast<std::size_t>(model.decimation)];
    return t;
}

/// Draws x_hi ~ iid A*Bern(p) of length (M-1)*D+1 and returns it together
/// with the noisy decimated filter output z_lo = y_lo + N(0, sigma^2).
/// Stream layout for a given seed: the L spike draws come first, then the
/// M noise draws, from a single generator seeded with `seed`.
inline std::pair<SpikeTrain, Trace> simulate(const ArModel& model, std::size_t m, double p,
                                             double sigma, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw parameter_error("spiking probability must lie in [0,1]");
    if (!(sigma >= 0.0)) throw parameter_error("noise level must be nonnegative");
    if (m == 0) throw shape_error("need at least one measurement");

    Rng rng(seed);
    SpikeTrain x;
    x.values.resize(train_length(m, model.decimation));
    for (double& v : x.values) v = rng.bernoulli(p) ? model.amplitude : 0.0;

    Trace z = decimate(ar_filter(x, model.alpha), model, m);
    if (sigma > 0.0) {
        for (double& v : z.values) v += rng.gaussian(sigma);
        z.noisy = true;
    }
    z.noise_sigma = sigma;
    return {std::move(x), std::move(z)};
}

/// Dense system matrices for small instances, used as a test oracle:
/// `filter` is the L-by-L Toeplitz matrix with entries alpha^(i-j) below
/// the diagonal, `select` the M-by-L decimation selector, and `block_map`
/// the M-by-L block measurement matrix (first row e_1, then one shifted
/// copy of [alpha^(D-1), ..., alpha, 1] per block).
struct SystemMatrices {
    Eigen::MatrixXd filter;
    Eigen::MatrixXd select;
    Eigen::MatrixXd block_map;
};

inline SystemMatrices build_system_matrices(const ArModel& model, std::size_t m,
                                            std::size_t max_length = 4096) {
    const std::size_t length = train_length(m, model.decimation);
    if (length > max_length)
        throw size_error("dense system matrices are guarded to L <= " + std::to_string(max_length));
    const auto L = static_cast<Eigen::Index>(length);
    const auto M = static_cast<Eigen::Index>(m);
    const auto D = static_cast<Eigen::Index>(model.decimation);

    SystemMatrices s;
    s.filter = Eigen::MatrixXd::Zero(L, L);
    for (Eigen::Index i = 0; i < L; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            s.filter(i, j) = std::pow(model.alpha, static_cast<double>(i - j));

    s.select = Eigen::MatrixXd::Zero(M, L);
    for (Eigen::Index n = 0; n < M; ++n) s.select(n, n * D) = 1.0;

    s.block_map = Eigen::MatrixXd::Zero(M, L);
    s.block_map(0, 0) = 1.0;
    for (Eigen::Index n = 1; n < M; ++n)
        for (Eigen::Index k = 1; k <= D; ++k)
            s.block_map(n, (n - 1) * D + k) = std::pow(model.alpha, static_cast<double>(D - k));
    return s;
}

}  // namespace binspike
