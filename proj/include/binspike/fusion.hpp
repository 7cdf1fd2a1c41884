#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "binspike/decoder.hpp"
#include "binspike/detail/prox_solver.hpp"
#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

/// Output of the low-rate denoiser: the nonnegative activity estimate
/// x_l1, the denoised trace y_hat rebuilt from it by the low-rate AR
/// recursion, and the penalty that produced it. By construction
/// y_hat[n] - alpha^D * y_hat[n-1] == x_l1[n] holds bitwise.
struct DenoiseResult {
    std::vector<double> x_l1;
    std::vector<double> y_hat;
    double lambda = 0.0;
    ArModel model;
};

struct DenoiseOptions {
    std::size_t max_iterations = 50000;
    double fp_tol_scale = 1e-12;
};

namespace detail {

inline DenoiseResult assemble_denoise_result(std::vector<double> activity, const ArModel& model,
                                             double lambda) {
    const double ad = std::pow(model.alpha, model.decimation);
    DenoiseResult res{std::move(activity), {}, lambda, model};
    res.y_hat.resize(res.x_l1.size());
    double prev = 0.0;
    for (std::size_t n = 0; n < res.y_hat.size(); ++n) {
        prev = ad * prev + res.x_l1[n];
        res.y_hat[n] = prev;
    }
    // Re-derive the activity from y_hat so the recursion identity holds
    // bitwise; this moves each entry by at most one rounding step and
    // cannot make it negative.
    for (std::size_t n = res.y_hat.size(); n-- > 1;)
        res.x_l1[n] = res.y_hat[n] - ad * res.y_hat[n - 1];
    if (!res.x_l1.empty()) res.x_l1[0] = res.y_hat[0];
    return res;
}

}  // namespace detail

/// Universal-threshold default penalty sigma * sqrt(2 ln M), using the
/// noise level recorded on the trace.
inline double default_denoise_lambda(const Trace& trace) {
    const auto m = static_cast<double>(trace.measurements());
    return trace.noise_sigma * std::sqrt(2.0 * std::log(std::max(2.0, m)));
}

/// Nonnegative sparse deconvolution of the low-rate trace: a projected
/// proximal iteration on 1/2 ||z - T s||^2 + lambda ||s||_1 over s >= 0
/// picks the support (T is the low-rate AR(1) response with parameter
/// alpha^D), then a nonnegative least-squares refit on that support
/// removes the shrinkage bias before decoding.
inline DenoiseResult denoise_low_rate(const Trace& trace, double lambda,
                                      const DenoiseOptions& options = {}) {
    if (!(lambda >= 0.0)) throw parameter_error("penalty must be nonnegative");
    const std::size_t m = trace.measurements();
    if (m == 0) throw shape_error("trace must hold at least one measurement");
    const double ad = std::pow(trace.model.alpha, trace.model.decimation);

    double z_max = 0.0;
    for (double v : trace.values) z_max = std::max(z_max, std::abs(v));
    if (z_max == 0.0) return detail::assemble_denoise_result(std::vector<double>(m, 0.0),
                                                             trace.model, lambda);

    auto apply = [&](const std::vector<double>& s) {
        std::vector<double> y(m);
        double prev = 0.0;
        for (std::size_t n = 0; n < m; ++n) {
            prev = ad * prev + s[n];
            y[n] = prev;
        }
        return y;
    };
    auto adjoint = [&](const std::vector<double>& r) {
        std::vector<double> g(m);
        double acc = 0.0;
        for (std::size_t n = m; n-- > 0;) {
            acc = ad * acc + r[n];
            g[n] = acc;
        }
        return g;
    };
    auto prox = [](double v, double threshold) { return std::max(0.0, v - threshold); };

    const double lipschitz = 1.01 * detail::operator_norm_sq(m, apply, adjoint);
    const double fp_tol = std::max(lambda * 1e-6, options.fp_tol_scale * z_max);
    detail::ProxRun run = detail::fista(trace.values, m, apply, adjoint, prox, lipschitz,
                                        std::vector<double>(m, 0.0), lambda, fp_tol,
                                        options.max_iterations);
    if (!run.converged)
        throw convergence_error("low-rate denoiser exhausted its iteration cap", run.iterations,
                                run.fixed_point_residual);

    std::vector<std::size_t> support;
    for (std::size_t n = 0; n < m; ++n)
        if (run.x[n] > 0.0) support.push_back(n);
    if (lambda > 0.0 && !support.empty() && support.size() < m) {
        auto apply_s = [&](const std::vector<double>& s) {
            std::vector<double> full(m, 0.0);
            for (std::size_t i = 0; i < support.size(); ++i) full[support[i]] = s[i];
            return apply(full);
        };
        auto adjoint_s = [&](const std::vector<double>& r) {
            const std::vector<double> g = adjoint(r);
            std::vector<double> out(support.size());
            for (std::size_t i = 0; i < support.size(); ++i) out[i] = g[support[i]];
            return out;
        };
        std::vector<double> warm(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) warm[i] = run.x[support[i]];
        const double lip_s = 1.01 * detail::operator_norm_sq(support.size(), apply_s, adjoint_s);
        detail::ProxRun refit = detail::fista(trace.values, support.size(), apply_s, adjoint_s,
                                              prox, lip_s, std::move(warm), 0.0,
                                              options.fp_tol_scale * z_max,
                                              options.max_iterations);
        if (refit.converged) {
            std::fill(run.x.begin(), run.x.end(), 0.0);
            for (std::size_t i = 0; i < support.size(); ++i) run.x[support[i]] = refit.x[i];
        }
    }
    return detail::assemble_denoise_result(std::move(run.x), trace.model, lambda);
}

/// Wraps an externally produced low-rate activity estimate (e.g. from a
/// dedicated deconvolution package) so it can be fused with the decoder.
inline DenoiseResult denoise_from_external(std::span<const double> activity, const ArModel& model) {
    for (double v : activity)
        if (!(v >= 0.0)) throw parameter_error("external activity estimate must be nonnegative");
    return detail::assemble_denoise_result(std::vector<double>(activity.begin(), activity.end()),
                                           model, 0.0);
}

/// Decodes the denoised trace with the nearest-neighbor decoder. The
/// c-sequence of y_hat is exactly x_l1 by the recursion identity, so this
/// fuses the denoiser's output with the binary prior.
inline DecodeReport fused_decode(const DenoiseResult& denoised, const Codebook& cb,
                                 unsigned threads = 1) {
    if (!denoised.model.same_system(cb.model))
        throw model_mismatch_error("denoised trace and codebook use different models");
    Trace trace{denoised.y_hat, cb.model, true, 0.0};
    return decode_train(trace, cb, DecodeMode::nearest, threads);
}

}  // namespace binspike
