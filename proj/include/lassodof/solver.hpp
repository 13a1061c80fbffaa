#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"
#include "lassodof/problem.hpp"
#include "lassodof/sets.hpp"

namespace lassodof {

namespace detail {

inline double soft_threshold(double x, double t)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

inline std::vector<Index> column_order(Index p, const SolverOptions& opts)
{
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    if (opts.column_order == ColumnOrder::permuted) {
        std::mt19937_64 rng(opts.rng_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    return order;
}

/// max_i of the stationarity/complementarity violation of the lasso KKT system.
inline double lasso_kkt_residual(const DenseMatrix& X, const Vec& y, double lambda, const Vec& beta)
{
    const Vec corr = X.transpose() * (y - X * beta);
    double worst = 0.0;
    for (Index i = 0; i < corr.size(); ++i) {
        const double v = beta(i) != 0.0 ? std::abs(corr(i) - lambda * (beta(i) > 0.0 ? 1.0 : -1.0))
                                        : std::max(0.0, std::abs(corr(i)) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

inline double genlasso_kkt_residual(const GenLassoProblem& prob, const Vec& beta, const Vec& gamma)
{
    const Vec station = prob.X.transpose() * (prob.y - prob.X * beta) - prob.lambda * (prob.D.transpose() * gamma);
    const double box = gamma.size() ? std::max(0.0, gamma.lpNorm<Eigen::Infinity>() - 1.0) : 0.0;
    return std::max(station.size() ? station.lpNorm<Eigen::Infinity>() : 0.0, prob.lambda * box);
}

inline Solution least_squares_solution(const DenseMatrix& X, const Vec& y, Index gamma_size)
{
    Solution sol;
    sol.beta = pseudoinverse(X) * y;
    sol.fit = X * sol.beta;
    sol.gamma = Vec::Zero(gamma_size);
    const Vec corr = X.transpose() * (y - sol.fit);
    sol.kkt_residual = corr.size() ? corr.lpNorm<Eigen::Infinity>() : 0.0;
    return sol;
}

/// Re-solve exactly on the support of beta with its signs held fixed; nullopt if a sign flips.
inline std::optional<Vec> polish_lasso(const DenseMatrix& X, const Vec& y, double lambda, const Vec& beta)
{
    std::vector<Index> support;
    for (Index i = 0; i < beta.size(); ++i) {
        if (beta(i) != 0.0) support.push_back(i);
    }
    if (support.empty()) return std::nullopt;
    const DenseMatrix XA = select_cols(X, support);
    Vec r(static_cast<Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) r(static_cast<Index>(k)) = beta(support[k]) > 0.0 ? 1.0 : -1.0;
    const DenseMatrix pinv = pseudoinverse(XA);
    const Vec b = pinv * (y - pinv.transpose() * (lambda * r));
    const double bmax = b.lpNorm<Eigen::Infinity>();
    Vec out = Vec::Zero(beta.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
        const double v = b(static_cast<Index>(k));
        if (v * r(static_cast<Index>(k)) < 0.0 && std::abs(v) > 1e-12 * (1.0 + bmax)) return std::nullopt;
        out(support[k]) = v * r(static_cast<Index>(k)) > 0.0 ? v : 0.0;
    }
    return out;
}

struct GenLassoCandidate {
    Vec beta;
    Vec gamma;
    double kkt = 0.0;
};

/**
 * Exact generalized-lasso solution for a guessed active set A with signs r:
 * beta = (X P)^+ (y - (P X^T)^+ D_A^T lambda r), P the projector onto
 * null(D_{-A}); then a subgradient with gamma_A = r and gamma_{-A} solving
 * D_{-A}^T gamma_{-A} = X^T (y - X beta) / lambda - D_A^T r inside the box.
 */
inline std::optional<GenLassoCandidate> polish_genlasso(const GenLassoProblem& prob, const std::vector<Index>& active,
                                                       const std::vector<int>& signs, const Vec& gamma_hint)
{
    const DenseMatrix DA = select_rows(prob.D, active);
    const DenseMatrix DmA = drop_rows(prob.D, active);
    const DenseMatrix P = projector_onto_null(DmA);
    const DenseMatrix XPpinv = pseudoinverse(prob.X * P);
    Vec lam_r(static_cast<Index>(signs.size()));
    for (std::size_t k = 0; k < signs.size(); ++k) lam_r(static_cast<Index>(k)) = prob.lambda * signs[k];
    const Vec shift = DA.transpose() * lam_r;
    Vec beta = XPpinv * (prob.y - XPpinv.transpose() * shift);

    const Vec DAb = DA * beta;
    const double dmax = DAb.size() ? DAb.lpNorm<Eigen::Infinity>() : 0.0;
    for (Index k = 0; k < DAb.size(); ++k) {
        if (DAb(k) * signs[static_cast<std::size_t>(k)] < 0.0 && std::abs(DAb(k)) > 1e-12 * (1.0 + dmax)) {
            return std::nullopt;
        }
    }

    const Vec c = prob.X.transpose() * (prob.y - prob.X * beta) / prob.lambda - DA.transpose() * (lam_r / prob.lambda);
    Vec g(DmA.rows());
    if (DmA.rows() > 0) {
        const DenseMatrix DmAt = DmA.transpose();
        const DenseMatrix solve = pseudoinverse(DmAt);
        g = solve * c;
        if (g.lpNorm<Eigen::Infinity>() > 1.0 + 1e-12 && numeric_rank(DmA) < DmA.rows()) {
            // gamma_{-A} is not unique; look for a box-feasible point on the affine solution set
            Vec h(DmA.rows());
            std::size_t k = 0, row = 0;
            for (Index i = 0; i < prob.m(); ++i) {
                if (k < active.size() && active[k] == i) {
                    ++k;
                    continue;
                }
                h(static_cast<Index>(row++)) = gamma_hint.size() == prob.m() ? gamma_hint(i) : 0.0;
            }
            for (int it = 0; it < 20000; ++it) {
                h = h.cwiseMax(-1.0).cwiseMin(1.0);
                h -= solve * (DmAt * h - c);
                if (h.lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12) break;
            }
            g = h;
        }
    }

    Vec gamma(prob.m());
    std::size_t k = 0, row = 0;
    for (Index i = 0; i < prob.m(); ++i) {
        if (k < active.size() && active[k] == i) {
            gamma(i) = signs[k++];
        } else {
            gamma(i) = g(static_cast<Index>(row++));
        }
    }
    GenLassoCandidate out{std::move(beta), std::move(gamma), 0.0};
    out.kkt = genlasso_kkt_residual(prob, out.beta, out.gamma);
    return out;
}

} // namespace detail

/**
 * Lasso by cyclic coordinate descent with active-set sweeps. Once the
 * full-pass KKT check passes, the iterate is polished on its support.
 * gamma is reported as X^T (y - X beta) / lambda.
 */
inline Solution solve_lasso(const LassoProblem& prob, const SolverOptions& opts = {})
{
    prob.validate();
    opts.validate();
    const DenseMatrix& X = prob.X;
    const Vec& y = prob.y;
    const double lambda = prob.lambda;
    const Index p = prob.p();

    if (lambda == 0.0) return detail::least_squares_solution(X, y, p);

    const Vec xty = X.transpose() * y;
    const double scale = std::max(1.0, xty.lpNorm<Eigen::Infinity>());
    const double target = opts.convergence_tol * scale;
    const double step_tol = opts.convergence_tol * std::max(1.0, y.norm());
    const Vec col_sq = X.colwise().squaredNorm().transpose();
    const std::vector<Index> order = detail::column_order(p, opts);

    Vec beta = Vec::Zero(p);
    Vec resid = y;
    long sweeps = 0;
    double kkt = detail::lasso_kkt_residual(X, y, lambda, beta);

    auto sweep = [&](const std::vector<Index>& cols) {
        double max_delta = 0.0;
        for (Index j : cols) {
            if (col_sq(j) == 0.0) continue;
            const double old = beta(j);
            const double c = X.col(j).dot(resid) + col_sq(j) * old;
            const double updated = detail::soft_threshold(c, lambda) / col_sq(j);
            if (updated != old) {
                resid.noalias() -= (updated - old) * X.col(j);
                beta(j) = updated;
                max_delta = std::max(max_delta, std::abs(updated - old) * std::sqrt(col_sq(j)));
            }
        }
        ++sweeps;
        return max_delta;
    };

    while (kkt > target) {
        if (sweeps >= opts.max_iterations) {
            throw ConvergenceError("lasso coordinate descent hit the iteration limit", sweeps, kkt, 0.0);
        }
        const double delta = sweep(order);
        if (delta < step_tol) {
            resid = y - X * beta;
            kkt = detail::lasso_kkt_residual(X, y, lambda, beta);
            if (kkt <= target) break;
            if (opts.polish) {
                if (auto polished = detail::polish_lasso(X, y, lambda, beta)) {
                    const double pk = detail::lasso_kkt_residual(X, y, lambda, *polished);
                    if (pk <= target) {
                        beta = *polished;
                        kkt = pk;
                        break;
                    }
                }
            }
        }
        std::vector<Index> active;
        for (Index j : order) {
            if (beta(j) != 0.0) active.push_back(j);
        }
        while (!active.empty() && sweeps < opts.max_iterations) {
            if (sweep(active) < step_tol) break;
        }
    }

    Solution sol;
    if (opts.polish) {
        if (auto polished = detail::polish_lasso(X, y, lambda, beta)) {
            const double pk = detail::lasso_kkt_residual(X, y, lambda, *polished);
            if (pk <= kkt) {
                beta = *polished;
                kkt = pk;
                sol.polished = true;
            }
        }
    }
    sol.beta = beta;
    sol.fit = X * beta;
    sol.gamma = X.transpose() * (y - sol.fit) / lambda;
    sol.iterations = sweeps;
    sol.kkt_residual = kkt;
    sol.primal_residual = kkt;
    return sol;
}

/**
 * Generalized lasso by ADMM on the split z = D beta:
 *   beta <- (X^T X + rho D^T D)^+ (X^T y + rho D^T (z - u))
 *   z    <- soft(D beta + u, lambda / rho)
 *   u    <- u + D beta - z
 * gamma = rho u / lambda. Whenever the support of z has been stable for a
 * few iterations the candidate (A, r) is solved exactly and accepted if its
 * KKT residual meets the tolerance.
 */
inline Solution solve_genlasso(const GenLassoProblem& prob, const SolverOptions& opts = {})
{
    prob.validate();
    opts.validate();
    const DenseMatrix& X = prob.X;
    const DenseMatrix& D = prob.D;
    const Vec& y = prob.y;
    const double lambda = prob.lambda;
    const Index p = prob.p();
    const Index m = prob.m();

    if (lambda == 0.0 || m == 0) return detail::least_squares_solution(X, y, m);

    const Vec xty = X.transpose() * y;
    const double scale = std::max(1.0, xty.lpNorm<Eigen::Infinity>());
    const double target = opts.convergence_tol * scale;
    const DenseMatrix XtX = X.transpose() * X;
    const DenseMatrix DtD = D.transpose() * D;

    double rho = opts.penalty_parameter;
    DenseMatrix system_inv;
    bool singular = false;
    auto factor = [&] {
        const DenseMatrix M = XtX + rho * DtD;
        singular = singular || numeric_rank(M) < p;
        system_inv = pseudoinverse(M);
    };
    factor();

    Solution sol;
    std::set<std::vector<int>> tried;
    auto try_polish = [&](const std::vector<Index>& active, const std::vector<int>& signs, const Vec& hint,
                          long it) -> bool {
        std::vector<int> key(static_cast<std::size_t>(m), 0);
        for (std::size_t k = 0; k < active.size(); ++k) key[static_cast<std::size_t>(active[k])] = signs[k];
        if (!tried.insert(key).second) return false;
        auto cand = detail::polish_genlasso(prob, active, signs, hint);
        if (!cand || cand->kkt > target) return false;
        sol.beta = std::move(cand->beta);
        sol.gamma = std::move(cand->gamma);
        sol.kkt_residual = cand->kkt;
        sol.polished = true;
        sol.iterations = it;
        return true;
    };
    auto finish = [&] {
        sol.fit = X * sol.beta;
        sol.normal_matrix_singular = singular;
        sol.final_penalty_parameter = rho;
        return sol;
    };

    // lambda large enough that the fit lives in X(null(D))
    if (opts.polish && try_polish({}, {}, Vec::Zero(m), 0)) return finish();

    Vec beta = system_inv * xty;
    Vec Db = D * beta;
    Vec z = Db.unaryExpr([&](double v) { return detail::soft_threshold(v, lambda / rho); });
    Vec u = Vec::Zero(m);
    std::vector<int> support_signs(static_cast<std::size_t>(m), 0), prev_signs;
    int stable = 0;
    double r_norm = 0.0, s_norm = 0.0;

    for (long it = 1; it <= opts.max_iterations; ++it) {
        beta.noalias() = system_inv * (xty + rho * (D.transpose() * (z - u)));
        Db.noalias() = D * beta;
        const Vec z_old = z;
        const double thresh = lambda / rho;
        for (Index i = 0; i < m; ++i) z(i) = detail::soft_threshold(Db(i) + u(i), thresh);
        u += Db - z;

        r_norm = (Db - z).norm();
        s_norm = rho * (D.transpose() * (z - z_old)).norm();

        prev_signs = support_signs;
        for (Index i = 0; i < m; ++i) support_signs[static_cast<std::size_t>(i)] = z(i) > 0.0 ? 1 : (z(i) < 0.0 ? -1 : 0);
        stable = support_signs == prev_signs ? stable + 1 : 0;

        const double eps_pri = opts.convergence_tol * std::max({1.0, Db.norm(), z.norm()});
        const double eps_dual = opts.convergence_tol * std::max(1.0, rho * (D.transpose() * u).norm());
        const bool converged = r_norm <= eps_pri && s_norm <= eps_dual;

        if (opts.polish && (stable >= 5 || converged)) {
            std::vector<Index> active;
            std::vector<int> signs;
            for (Index i = 0; i < m; ++i) {
                if (support_signs[static_cast<std::size_t>(i)] != 0) {
                    active.push_back(i);
                    signs.push_back(support_signs[static_cast<std::size_t>(i)]);
                }
            }
            if (try_polish(active, signs, rho * u / lambda, it)) {
                sol.primal_residual = r_norm;
                sol.dual_residual = s_norm;
                return finish();
            }
        }
        if (converged) {
            sol.beta = beta;
            sol.gamma = rho * u / lambda;
            sol.kkt_residual = detail::genlasso_kkt_residual(prob, sol.beta, sol.gamma);
            sol.iterations = it;
            sol.primal_residual = r_norm;
            sol.dual_residual = s_norm;
            return finish();
        }

        if (opts.adaptive_penalty && it % 10 == 0) {
            if (r_norm > 10.0 * s_norm) {
                rho *= 2.0;
                u /= 2.0;
                factor();
            } else if (s_norm > 10.0 * r_norm) {
                rho /= 2.0;
                u *= 2.0;
                factor();
            }
        }
    }
    throw ConvergenceError("generalized lasso ADMM hit the iteration limit", opts.max_iterations, r_norm, s_norm);
}

/// Elastic net through the stacked lasso [X; sqrt(lambda2) I], [y; 0] at lambda1.
inline Solution solve_elastic_net(const ElasticNetProblem& prob, const SolverOptions& opts = {})
{
    prob.validate();
    const Index n = prob.X.rows();
    const Index p = prob.X.cols();
    LassoProblem stacked;
    stacked.X.resize(n + p, p);
    stacked.X.topRows(n) = prob.X;
    stacked.X.bottomRows(p) = std::sqrt(prob.lambda2) * DenseMatrix::Identity(p, p);
    stacked.y = Vec::Zero(n + p);
    stacked.y.head(n) = prob.y;
    stacked.lambda = prob.lambda1;
    Solution sol = solve_lasso(stacked, opts);
    sol.fit = prob.X * sol.beta;
    return sol;
}

/// Lasso with an unpenalized intercept, solved on the centered data (M X, M y).
inline Solution solve_lasso_intercept(const LassoProblem& prob, const SolverOptions& opts = {})
{
    prob.validate();
    const Vec x_mean = prob.X.colwise().mean().transpose();
    const double y_mean = prob.y.mean();
    LassoProblem centered{prob.X.rowwise() - x_mean.transpose(), prob.y.array() - y_mean, prob.lambda};
    Solution sol = solve_lasso(centered, opts);
    const double b0 = y_mean - x_mean.dot(sol.beta);
    sol.intercept = b0;
    sol.fit = (prob.X * sol.beta).array() + b0;
    return sol;
}

/**
 * The lasso solution with beta_{-E} = 0 and beta_E = (X_E)^+ (y - (X_E^T)^+ lambda s),
 * built from the equicorrelation set of a converged solve. Throws
 * InconsistencyError if a nonzero entry disagrees with s.
 */
inline Solution equicorrelation_solution(const LassoProblem& prob, const SolverOptions& opts = {},
                                         std::optional<SetTolerance> set_tol = std::nullopt)
{
    prob.validate();
    if (!(prob.lambda > 0.0)) throw InputError("equicorrelation solution needs lambda > 0");
    const SetTolerance tol = set_tol.value_or(SetTolerance::for_lambda(prob.lambda));
    Solution sol = solve_lasso(prob, opts);
    const SignedIndexSet E = equicorrelation_set(prob, sol, tol);

    Vec beta = Vec::Zero(prob.p());
    if (!E.empty()) {
        const DenseMatrix XE = select_cols(prob.X, E.indices);
        const DenseMatrix pinv = pseudoinverse(XE);
        const Vec s = E.sign_vector();
        const Vec bE = pinv * (prob.y - pinv.transpose() * (prob.lambda * s));
        for (std::size_t k = 0; k < E.size(); ++k) {
            const double v = bE(static_cast<Index>(k));
            if (std::abs(v) > tol.zero_tol && (v > 0.0 ? 1 : -1) != E.signs[k]) {
                throw InconsistencyError("equicorrelation solution violates the sign condition at index " +
                                         std::to_string(E.indices[k]));
            }
            beta(E.indices[k]) = v;
        }
    }
    sol.beta = beta;
    sol.fit = prob.X * beta;
    sol.gamma = prob.X.transpose() * (prob.y - sol.fit) / prob.lambda;
    sol.kkt_residual = detail::lasso_kkt_residual(prob.X, prob.y, prob.lambda, beta);
    return sol;
}

} // namespace lassodof
