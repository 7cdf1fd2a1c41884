#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace binspike::detail {

/// Largest eigenvalue of A^T A by power iteration; the all-ones start
/// vector always overlaps the Perron vector of our nonnegative operators.
template <class Op, class Adj>
double operator_norm_sq(std::size_t n, Op&& apply, Adj&& adjoint, int iterations = 80) {
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double norm = 1.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> w = adjoint(apply(v));
        norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return norm;
}

struct ProxRun {
    std::vector<double> x;
    std::size_t iterations = 0;
    double fixed_point_residual = 0.0;
    bool converged = false;
};

/// Accelerated proximal gradient (FISTA with objective restarts) for
/// 1/2 ||A x - y||^2 + l1_weight * sum(x) over the set encoded by `prox`.
/// `prox(value, threshold)` must clip into the feasible set after the
/// gradient and shrinkage step. Stops when the prox-gradient fixed-point
/// residual max_i |x_i - prox(x_i - step*grad_i, step*l1_weight)| drops
/// below fp_tol.
template <class Op, class Adj, class Prox>
ProxRun fista(const std::vector<double>& y, std::size_t n, Op&& apply, Adj&& adjoint, Prox&& prox,
              double lipschitz, std::vector<double> x0, double l1_weight, double fp_tol,
              std::size_t max_iterations) {
    const double step = 1.0 / lipschitz;
    ProxRun run;
    run.x = std::move(x0);
    std::vector<double> momentum = run.x;
    double t = 1.0;
    double prev_objective = 0.0;
    bool have_objective = false;

    while (run.iterations < max_iterations) {
        std::vector<double> residual = apply(momentum);
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= y[i];
        const std::vector<double> grad = adjoint(residual);

        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i)
            next[i] = prox(momentum[i] - step * grad[i], step * l1_weight);

        std::vector<double> next_residual = apply(next);
        double objective = 0.0;
        for (std::size_t i = 0; i < next_residual.size(); ++i) {
            next_residual[i] -= y[i];
            objective += next_residual[i] * next_residual[i];
        }
        objective *= 0.5;
        const std::vector<double> next_grad = adjoint(next_residual);
        double fp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            objective += l1_weight * next[i];
            const double mapped = prox(next[i] - step * next_grad[i], step * l1_weight);
            fp = std::max(fp, std::abs(next[i] - mapped));
        }

        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        std::vector<double> momentum_next(n);
        const double beta = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < n; ++i)
            momentum_next[i] = next[i] + beta * (next[i] - run.x[i]);
        if (have_objective && objective > prev_objective) {
            momentum_next = next;
            t_next = 1.0;
        }
        prev_objective = objective;
        have_objective = true;

        run.x = std::move(next);
        momentum = std::move(momentum_next);
        t = t_next;
        ++run.iterations;
        run.fixed_point_residual = fp;
        if (fp <= fp_tol) {
            run.converged = true;
            break;
        }
    }
    return run;
}

}  // namespace binspike::detail
