#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"
#include "lassodof/problem.hpp"
#include "lassodof/sets.hpp"
#include "lassodof/solver.hpp"

namespace lassodof {

struct MembershipVerdict {
    bool inside = false;
    double violation = 0.0;
    std::optional<Vec> certificate;
};

/// u in C = { u : ||X^T u||_inf <= lambda }; violation max(0, ||X^T u||_inf - lambda).
inline MembershipVerdict lasso_poly_membership(const DenseMatrix& X, double lambda, const Vec& u, double tol)
{
    if (X.rows() != u.size()) throw InputError("point dimension does not match design rows");
    const Vec v = X.transpose() * u;
    MembershipVerdict out;
    out.violation = std::max(0.0, (v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0) - lambda);
    out.inside = out.violation <= tol;
    return out;
}

/**
 * u in C = { u : X^T u = D^T w for some ||w||_inf <= lambda }.
 *
 * Minimizes ||X^T u - D^T w||_2 over the box by accelerated projected
 * gradient (with restarts), then re-solves on the free coordinates. The
 * violation is the attained residual and the minimizing w is the certificate.
 */
inline MembershipVerdict genlasso_poly_membership(const DenseMatrix& X, const DenseMatrix& D, double lambda,
                                                  const Vec& u, double tol, long max_iterations = 200000)
{
    if (X.rows() != u.size()) throw InputError("point dimension does not match design rows");
    if (D.cols() != X.cols()) throw InputError("penalty and design column counts differ");
    const Vec v = X.transpose() * u;
    const Index m = D.rows();
    MembershipVerdict out;
    if (m == 0 || lambda == 0.0) {
        out.violation = v.norm();
        out.inside = out.violation <= tol;
        out.certificate = Vec::Zero(m);
        return out;
    }

    const DenseMatrix Dt = D.transpose();
    const DenseMatrix Dt_pinv = pseudoinverse(Dt);
    auto clip = [lambda](const Vec& w) { return Vec(w.cwiseMax(-lambda).cwiseMin(lambda)); };
    auto residual = [&](const Vec& w) { return (Dt * w - v).norm(); };

    Eigen::JacobiSVD<DenseMatrix> dec(D);
    const double L = std::max(dec.singularValues()(0) * dec.singularValues()(0), 1e-300);
    const double stop = 1e-10 * std::max(1.0, v.norm());

    Vec w = clip(Dt_pinv * v);
    double best = residual(w);
    Vec best_w = w;

    // Exact re-solve with the clamped coordinates fixed at the box faces.
    auto refine = [&](const Vec& start) {
        Vec cur = start;
        for (int pass = 0; pass < 8; ++pass) {
            std::vector<Index> free_idx, fixed_idx;
            for (Index i = 0; i < m; ++i) {
                (std::abs(cur(i)) < lambda * (1.0 - 1e-12) ? free_idx : fixed_idx).push_back(i);
            }
            if (free_idx.empty()) break;
            Vec target = v;
            for (Index i : fixed_idx) target -= Dt.col(i) * cur(i);
            const Vec wf = pseudoinverse(select_cols(Dt, free_idx)) * target;
            Vec next = cur;
            for (std::size_t k = 0; k < free_idx.size(); ++k) next(free_idx[k]) = wf(static_cast<Index>(k));
            next = clip(next);
            if (residual(next) >= residual(cur) - 1e-15) break;
            cur = next;
        }
        return cur;
    };

    if (best > stop) {
        Vec y_acc = w, w_prev = w;
        double t = 1.0;
        double f_prev = 0.5 * best * best;
        for (long it = 0; it < max_iterations; ++it) {
            const Vec grad = D * (Dt * y_acc - v);
            const Vec w_next = clip(y_acc - grad / L);
            const double f = 0.5 * std::pow(residual(w_next), 2);
            if (f > f_prev) {
                // restart momentum
                t = 1.0;
                y_acc = w;
                continue;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y_acc = w_next + ((t - 1.0) / t_next) * (w_next - w);
            w_prev = w;
            w = w_next;
            t = t_next;
            f_prev = f;

            const double res = std::sqrt(2.0 * f);
            if (res < best) {
                best = res;
                best_w = w;
            }
            if (best <= stop) break;
            if (it % 50 == 0) {
                const Vec refined = refine(w);
                const double rr = residual(refined);
                if (rr < best) {
                    best = rr;
                    best_w = refined;
                }
                if (best <= stop) break;
            }
            // stationary point of the box-constrained problem
            const Vec pg = (w - clip(w - D * (Dt * w - v) / L)) * L;
            if (pg.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, v.norm()) &&
                (w - w_prev).lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, lambda)) {
                break;
            }
            if (it + 1 == max_iterations) {
                throw ConvergenceError("membership projected gradient did not converge", max_iterations, best,
                                       pg.lpNorm<Eigen::Infinity>());
            }
        }
    }
    out.violation = best;
    out.inside = best <= tol;
    out.certificate = best_w;
    return out;
}

using FeasibleSampler = std::function<Vec(std::mt19937_64&)>;

namespace detail {

inline Vec normal_vec(Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> N;
    Vec z(n);
    for (Index i = 0; i < n; ++i) z(i) = N(rng);
    return z;
}

inline Vec uniform_box(Index m, double half_width, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-half_width, half_width);
    Vec w(m);
    for (Index i = 0; i < m; ++i) w(i) = U(rng);
    return w;
}

/// Scale w into the box; half the time push it onto the box boundary.
inline Vec scale_into_box(Vec w, double lambda, std::mt19937_64& rng)
{
    const double a = w.size() ? w.lpNorm<Eigen::Infinity>() : 0.0;
    if (a == 0.0) return w;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double level = U(rng) < 0.5 ? 1.0 : U(rng);
    return w * (level * lambda / a);
}

} // namespace detail

/**
 * Random points of { u : ||X^T u||_inf <= lambda }: u = (X^T)^+ w for w in the
 * box, rescaled to stay feasible, plus an arbitrary component in null(X^T).
 */
inline FeasibleSampler lasso_feasible_sampler(const DenseMatrix& X, double lambda, double spread)
{
    const DenseMatrix Xt_pinv = pseudoinverse(DenseMatrix(X.transpose()));
    const DenseMatrix left_null = null_basis(DenseMatrix(X.transpose()));
    return [X, lambda, spread, Xt_pinv, left_null](std::mt19937_64& rng) {
        Vec u = Xt_pinv * detail::uniform_box(X.cols(), lambda, rng);
        const double a = (X.transpose() * u).lpNorm<Eigen::Infinity>();
        if (a > 0.0) {
            std::uniform_real_distribution<double> U(0.0, 1.0);
            u *= (U(rng) < 0.5 ? 1.0 : U(rng)) * lambda / a;
        }
        if (left_null.cols() > 0) u += spread * (left_null * detail::normal_vec(left_null.cols(), rng));
        return u;
    };
}

/**
 * Random points of { u : X^T u = D^T w, ||w||_inf <= lambda }. w is drawn in
 * the box after projecting onto { w : D^T w in row(X) }, so that X^T u = D^T w
 * is solvable; the least-squares u is checked to 1e-8.
 */
inline FeasibleSampler genlasso_feasible_sampler(const DenseMatrix& X, const DenseMatrix& D, double lambda,
                                                 double spread)
{
    const DenseMatrix Xt = X.transpose();
    const DenseMatrix Xt_pinv = pseudoinverse(Xt);
    const DenseMatrix row_proj = projector_onto_col(Xt);
    const DenseMatrix K = (DenseMatrix::Identity(X.cols(), X.cols()) - row_proj) * D.transpose();
    const DenseMatrix W = null_basis(K);
    const DenseMatrix left_null = null_basis(Xt);
    return [Xt, Xt_pinv, W, left_null, D, lambda, spread](std::mt19937_64& rng) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Vec w = W * (W.transpose() * detail::uniform_box(D.rows(), lambda, rng));
            w = detail::scale_into_box(w, lambda, rng);
            const Vec target = D.transpose() * w;
            Vec u = Xt_pinv * target;
            if ((Xt * u - target).norm() > 1e-8 * (1.0 + target.norm())) continue;
            if (left_null.cols() > 0) u += spread * (left_null * detail::normal_vec(left_null.cols(), rng));
            return u;
        }
        throw InconsistencyError("could not draw a feasible point for the generalized polyhedron");
    };
}

/**
 * Checks the variational inequality <y - theta, theta - u> >= 0 of the
 * projection theta = y - fit over sampled feasible u. Returns the largest
 * observed value of -<y - theta, theta - u>; <= 0 up to rounding means no
 * sampled point contradicts optimality.
 */
inline double verify_projection_optimality(const Vec& y, const Vec& fit, const FeasibleSampler& sampler, long samples,
                                           std::uint64_t seed = 0)
{
    const Vec theta = y - fit;
    std::mt19937_64 rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < samples; ++k) {
        const Vec u = sampler(rng);
        worst = std::max(worst, -fit.dot(theta - u));
    }
    return worst;
}

template <class F>
concept FitMap = requires(const F& f, const Vec& y) {
    { f(y) } -> std::convertible_to<Vec>;
};

template <FitMap F>
bool check_nonexpansive(const F& fit_map, const Vec& y1, const Vec& y2, double slack = 1e-8)
{
    return (fit_map(y1) - fit_map(y2)).norm() <= (y1 - y2).norm() + slack;
}

/// Fit maps that also expose the local projector and a set signature at y.
template <class M>
concept LocalFitModel = FitMap<M> && requires(const M& m, const Vec& y) {
    { m.local_projector(y) } -> std::convertible_to<DenseMatrix>;
    { m.set_signature(y) } -> std::equality_comparable;
};

/// Lasso fit at fixed lambda, as a function of y. Signature is (E, s).
struct LassoFitModel {
    DenseMatrix X;
    double lambda = 0.0;
    SolverOptions options{};
    std::optional<SetTolerance> set_tol;

    SetTolerance tolerance() const { return set_tol.value_or(SetTolerance::for_lambda(lambda)); }
    Solution solve(const Vec& y) const { return solve_lasso(LassoProblem{X, y, lambda}, options); }
    Vec operator()(const Vec& y) const { return solve(y).fit; }

    DenseMatrix local_projector(const Vec& y) const
    {
        if (lambda == 0.0) return projector_onto_col(X);
        const Solution s = solve(y);
        const SignedIndexSet A = active_set_lasso(s, tolerance());
        if (A.empty()) return DenseMatrix::Zero(X.rows(), X.rows());
        return projector_onto_col(select_cols(X, A.indices));
    }

    SignedIndexSet set_signature(const Vec& y) const
    {
        const LassoProblem prob{X, y, lambda};
        return equicorrelation_set(prob, solve_lasso(prob, options), tolerance());
    }
};

/// Generalized lasso fit at fixed lambda. Signature is (A, r) of the returned solution.
struct GenLassoFitModel {
    DenseMatrix X;
    DenseMatrix D;
    double lambda = 0.0;
    SolverOptions options{};
    std::optional<SetTolerance> set_tol;

    SetTolerance tolerance() const { return set_tol.value_or(SetTolerance::for_lambda(lambda)); }
    GenLassoProblem problem(const Vec& y) const { return GenLassoProblem{X, D, y, lambda}; }
    Solution solve(const Vec& y) const { return solve_genlasso(problem(y), options); }
    Vec operator()(const Vec& y) const { return solve(y).fit; }

    DenseMatrix local_projector(const Vec& y) const
    {
        const GenLassoProblem prob = problem(y);
        const SignedIndexSet A =
            lambda == 0.0 ? detail::full_degenerate(D.rows()) : active_set_genlasso(prob, solve(y), tolerance());
        const DenseMatrix N = null_basis(drop_rows(D, A.indices));
        if (N.cols() == 0) return DenseMatrix::Zero(X.rows(), X.rows());
        return projector_onto_col(X * N);
    }

    SignedIndexSet set_signature(const Vec& y) const
    {
        const GenLassoProblem prob = problem(y);
        return active_set_genlasso(prob, solve(y), tolerance());
    }
};

struct AffineProbeReport {
    long directions = 0;
    long affine_passes = 0;
    long set_passes = 0;
    double step = 0.0;
    double max_affine_error = 0.0;

    double pass_fraction() const { return directions ? static_cast<double>(affine_passes) / directions : 1.0; }
    double set_constancy_fraction() const { return directions ? static_cast<double>(set_passes) / directions : 1.0; }
};

inline double default_probe_step(const Vec& y) { return 1e-4 * (1.0 + y.lpNorm<Eigen::Infinity>()); }

/**
 * Moves y along random unit directions z and checks that the fit moves by
 * exactly P z * step, where P is the local projector at y, and that the set
 * signature does not change.
 */
template <LocalFitModel M>
AffineProbeReport local_affine_probe(const M& model, const Vec& base_y, double step, long directions,
                                     std::uint64_t seed = 0, double affine_tol = 1e-6)
{
    AffineProbeReport rep;
    rep.step = step;
    const Vec f0 = model(base_y);
    const DenseMatrix P = model.local_projector(base_y);
    const auto sig0 = model.set_signature(base_y);
    std::mt19937_64 rng(seed);
    for (long k = 0; k < directions; ++k) {
        Vec z = detail::normal_vec(base_y.size(), rng);
        z.normalize();
        const Vec y1 = base_y + step * z;
        const double err = (model(y1) - f0 - step * (P * z)).norm();
        rep.max_affine_error = std::max(rep.max_affine_error, err);
        ++rep.directions;
        if (err <= affine_tol) ++rep.affine_passes;
        if (model.set_signature(y1) == sig0) ++rep.set_passes;
    }
    return rep;
}

} // namespace lassodof
