#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "binspike/codebook.hpp"
#include "binspike/detail/prox_solver.hpp"
#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

/// Per-block measurements computed directly from a train (no filtering):
/// c[0] = x[0], c[n] = h_alpha . x^(n).
inline std::vector<double> block_measurements(const SpikeTrain& x, const ArModel& model) {
    const std::size_t m = block_count(x.length(), model.decimation);
    const std::vector<double> h = block_weights(model);
    std::vector<double> c(m);
    c[0] = x.values[0];
    for (std::size_t n = 1; n < m; ++n) {
        const std::size_t base = (n - 1) * h.size() + 1;
        double s = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * x.values[base + i];
        c[n] = s;
    }
    return c;
}

/// Constructs a real-valued vector v != x with the same block measurements
/// and no more nonzeros than x, strictly fewer whenever a block holds two
/// or more spikes. Per block: empty stays empty; a single spike moves to
/// the last slot as c[n] (or to slot D-1 as c[n]/alpha when it already sat
/// in the last slot); denser blocks collapse to the single entry c[n].
/// Undefined (throws) when x has no spikes outside the scalar first block
/// or when D < 2.
inline std::vector<double> sparse_alternative(const SpikeTrain& x, const ArModel& model) {
    const int d = model.decimation;
    if (d < 2)
        throw not_applicable_error("sparser alternatives require an undersampling factor D >= 2");
    const std::size_t m = block_count(x.length(), d);
    for (double v : x.values)
        if (v != 0.0 && v != model.amplitude)
            throw parameter_error("train entries must be exactly 0 or A");

    const std::vector<double> c = block_measurements(x, model);
    bool any = false;
    for (std::size_t n = 1; n < m; ++n) any = any || c[n] != 0.0;
    if (!any)
        throw not_applicable_error(
            "train has no spikes beyond the scalar block; no distinct solution exists");

    std::vector<double> v(x.length(), 0.0);
    v[0] = c[0];
    for (std::size_t n = 1; n < m; ++n) {
        const std::size_t base = (n - 1) * static_cast<std::size_t>(d) + 1;
        int spikes = 0;
        for (int i = 0; i < d; ++i)
            if (x.values[base + static_cast<std::size_t>(i)] != 0.0) ++spikes;
        if (spikes == 0) continue;
        if (spikes == 1 && x.values[base + static_cast<std::size_t>(d - 1)] != 0.0) {
            v[base + static_cast<std::size_t>(d - 2)] = c[n] / model.alpha;
        } else {
            v[base + static_cast<std::size_t>(d - 1)] = c[n];
        }
    }
    return v;
}

/// Closed-form minimizer of ||v||_1 subject to the block measurements and
/// 0 <= v <= A: each nonzero block packs amplitude-A spikes into its last
/// k_n slots (k_n the largest count whose full response stays below c[n])
/// and places the remainder just before them, so recovered supports are
/// always block suffixes.
inline std::vector<double> box_l1_noiseless(std::span<const double> c, const ArModel& model) {
    if (c.empty()) throw shape_error("measurement sequence must be nonempty");
    const int d = model.decimation;
    const double a = model.amplitude;

    std::vector<double> mu(static_cast<std::size_t>(d));  // mu[k-1] = A(1+...+alpha^(k-1))
    double pw = 1.0, acc = 0.0;
    for (int k = 1; k <= d; ++k) {
        acc += a * pw;
        mu[static_cast<std::size_t>(k - 1)] = acc;
        pw *= model.alpha;
    }
    const double theta_max = mu.back();
    const double ftol = 1e-9 * (1.0 + theta_max);
    if (c[0] < -ftol || c[0] > a + ftol)
        throw infeasibility_error("first measurement outside [0, A]");
    for (std::size_t n = 1; n < c.size(); ++n)
        if (c[n] < -ftol || c[n] > theta_max + ftol)
            throw infeasibility_error("measurement at block " + std::to_string(n) +
                                      " outside the feasible range");

    std::vector<double> v(train_length(c.size(), d), 0.0);
    v[0] = std::clamp(c[0], 0.0, a);
    for (std::size_t n = 1; n < c.size(); ++n) {
        const double cn = c[n];
        if (cn <= 0.0) continue;
        const std::size_t base = (n - 1) * static_cast<std::size_t>(d) + 1;
        if (cn < a) {
            v[base + static_cast<std::size_t>(d - 1)] = cn;
            continue;
        }
        int kn = 1;
        while (kn < d && mu[static_cast<std::size_t>(kn)] <= cn) ++kn;
        for (int i = d - kn; i < d; ++i) v[base + static_cast<std::size_t>(i)] = a;
        if (kn < d) {
            const double rest = (cn - mu[static_cast<std::size_t>(kn - 1)]) /
                                std::pow(model.alpha, kn);
            v[base + static_cast<std::size_t>(d - kn - 1)] = std::clamp(rest, 0.0, a);
        }
    }
    return v;
}

struct BoxL1Options {
    std::size_t max_iterations = 100000;
    /// Per-stage stop: prox-gradient fixed-point residual below
    /// max(penalty * stage_tol_factor, absolute_tol_scale * max|y|).
    double stage_tol_factor = 1e-3;
    double absolute_tol_scale = 1e-15;
};

namespace detail {

inline std::vector<double> decimated_filter_apply(const std::vector<double>& x, double alpha,
                                                  int d, std::size_t m) {
    std::vector<double> y(m);
    double prev = 0.0;
    std::size_t out = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        prev = alpha * prev + x[i];
        if (i % static_cast<std::size_t>(d) == 0 && out < m) y[out++] = prev;
    }
    return y;
}

inline std::vector<double> decimated_filter_adjoint(const std::vector<double>& r, double alpha,
                                                    int d, std::size_t length) {
    std::vector<double> g(length, 0.0);
    for (std::size_t n = 0; n < r.size(); ++n) g[n * static_cast<std::size_t>(d)] = r[n];
    double acc = 0.0;
    for (std::size_t i = length; i-- > 0;) {
        acc = alpha * acc + g[i];
        g[i] = acc;
    }
    return g;
}

}  // namespace detail

/// Iterative box-constrained l1 solver on the raw measurement operator
/// (filter + decimation): approximately minimizes ||x||_1 subject to
/// ||y - S_D G_alpha x||_2 <= epsilon and 0 <= x <= A. Penalized proximal
/// gradient with box clipping each step; the penalty weight is driven down
/// a continuation schedule, for epsilon > 0 until the residual constraint
/// is met (refined by bisection), for epsilon = 0 to a fixed floor so the
/// iterate lands on the minimum-l1 feasible point.
inline std::vector<double> box_l1_noisy(const Trace& trace, const ArModel& model, double epsilon,
                                        const BoxL1Options& options = {}) {
    if (!(epsilon >= 0.0)) throw parameter_error("epsilon must be nonnegative");
    const std::vector<double>& y = trace.values;
    if (y.empty()) throw shape_error("trace must hold at least one measurement");
    const std::size_t m = y.size();
    const std::size_t length = train_length(m, model.decimation);
    const double alpha = model.alpha;
    const int d = model.decimation;

    double y_norm = 0.0, y_max = 0.0;
    for (double v : y) {
        y_norm += v * v;
        y_max = std::max(y_max, std::abs(v));
    }
    y_norm = std::sqrt(y_norm);
    if (y_norm <= epsilon || y_max == 0.0) return std::vector<double>(length, 0.0);

    auto apply = [&](const std::vector<double>& x) {
        return detail::decimated_filter_apply(x, alpha, d, m);
    };
    auto adjoint = [&](const std::vector<double>& r) {
        return detail::decimated_filter_adjoint(r, alpha, d, length);
    };
    auto prox = [&](double v, double threshold) {
        return std::clamp(v - threshold, 0.0, model.amplitude);
    };
    const double lipschitz = 1.01 * detail::operator_norm_sq(length, apply, adjoint);

    const std::vector<double> corr = adjoint(y);
    double lambda0 = 0.0;
    for (double v : corr) lambda0 = std::max(lambda0, std::abs(v));
    lambda0 *= 0.5;

    auto stage_tol = [&](double lambda) {
        return std::max(lambda * options.stage_tol_factor,
                        options.absolute_tol_scale * std::max(1.0, y_max));
    };
    auto residual_norm = [&](const std::vector<double>& x) {
        const std::vector<double> r = apply(x);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += (r[i] - y[i]) * (r[i] - y[i]);
        return std::sqrt(s);
    };

    std::vector<double> x(length, 0.0);
    std::size_t used = 0;
    auto run_stage = [&](double lambda, std::vector<double> x0) {
        detail::ProxRun run =
            detail::fista(y, length, apply, adjoint, prox, lipschitz, std::move(x0), lambda,
                          stage_tol(lambda), options.max_iterations - used);
        used += run.iterations;
        if (!run.converged && used >= options.max_iterations)
            throw convergence_error("box-l1 solver exhausted its iteration cap", used,
                                    run.fixed_point_residual);
        return run.x;
    };

    if (epsilon == 0.0) {
        const double floor = 1e-12 * lambda0;
        double lambda = lambda0;
        while (true) {
            x = run_stage(lambda, std::move(x));
            if (lambda <= floor) break;
            lambda = std::max(lambda * 0.01, floor);
        }
        return x;
    }

    // Discrepancy continuation: the largest penalty whose solution already
    // meets the residual constraint approximates the constrained optimum.
    double hi = lambda0;  // residual too large
    double lambda = lambda0;
    std::vector<double> feasible;
    double lo = 0.0;
    while (true) {
        x = run_stage(lambda, std::move(x));
        if (residual_norm(x) <= epsilon) {
            lo = lambda;
            feasible = x;
            break;
        }
        hi = lambda;
        lambda *= 0.1;
        if (lambda < 1e-14 * lambda0) return x;  // constraint unattainable in budget
    }
    for (int round = 0; round < 12 && hi / std::max(lo, 1e-300) > 1.2; ++round) {
        const double mid = std::sqrt(hi * lo);
        x = run_stage(mid, std::move(x));
        if (residual_norm(x) <= epsilon) {
            lo = mid;
            feasible = x;
        } else {
            hi = mid;
        }
    }
    return feasible;
}

/// Binarizes a relaxed solution at the given threshold (default A/2).
inline SpikeTrain binarize(std::span<const double> values, const ArModel& model,
                           double threshold_fraction = 0.5) {
    SpikeTrain t;
    t.values.resize(values.size());
    const double thr = threshold_fraction * model.amplitude;
    for (std::size_t i = 0; i < values.size(); ++i)
        t.values[i] = values[i] >= thr ? model.amplitude : 0.0;
    return t;
}

struct FirFilter {
    std::vector<double> taps;

    explicit FirFilter(std::vector<double> t) : taps(std::move(t)) {
        if (taps.empty()) throw parameter_error("FIR filter needs at least one tap");
    }

    int length() const { return static_cast<int>(taps.size()); }
};

/// Forward-aligned FIR response z[n] = sum_i u[r-1-i] x[n+i] (zero padded).
inline std::vector<double> fir_response(const FirFilter& u, std::span<const double> x) {
    const std::size_t r = u.taps.size();
    std::vector<double> z(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        double s = 0.0;
        for (std::size_t i = 0; i < r && n + i < x.size(); ++i) s += u.taps[r - 1 - i] * x[n + i];
        z[n] = s;
    }
    return z;
}

/// Two distinct binary trains whose D-fold decimated FIR outputs coincide.
/// When D exceeds the filter length r, the samples at offsets r..D-1 of
/// every block never reach any output sample; the pair differs exactly
/// there. Not applicable when D <= r (identifiability may hold).
inline std::pair<SpikeTrain, SpikeTrain> fir_collision_pair(const FirFilter& u, int decimation,
                                                            std::size_t length,
                                                            double amplitude = 1.0) {
    const int r = u.length();
    if (decimation <= r)
        throw not_applicable_error(
            "collision construction needs the undersampling factor to exceed the filter length");
    if (length < static_cast<std::size_t>(r) + 1)
        throw shape_error("train too short to contain an unseen sample");

    SpikeTrain x0, x1;
    x0.values.assign(length, 0.0);
    x1.values.assign(length, 0.0);
    for (std::size_t n = 0; n < length; ++n) {
        const auto offset = static_cast<int>(n % static_cast<std::size_t>(decimation));
        if (offset >= r) x1.values[n] = amplitude;
    }
    return {std::move(x0), std::move(x1)};
}

}  // namespace binspike
