#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"
#include "lassodof/problem.hpp"
#include "lassodof/sets.hpp"

namespace lassodof {

enum class DfEstimator { lasso_equi, lasso_active, genlasso_boundary, genlasso_active, elastic_net, lasso_intercept };

inline std::string_view to_string(DfEstimator e)
{
    switch (e) {
    case DfEstimator::lasso_equi: return "lasso_equi";
    case DfEstimator::lasso_active: return "lasso_active";
    case DfEstimator::genlasso_boundary: return "genlasso_boundary";
    case DfEstimator::genlasso_active: return "genlasso_active";
    case DfEstimator::elastic_net: return "elastic_net";
    case DfEstimator::lasso_intercept: return "lasso_intercept";
    }
    return "unknown";
}

struct DfReport {
    double df_value = 0.0;
    DfEstimator estimator = DfEstimator::lasso_active;
    SignedIndexSet set_used;
    std::optional<SetTolerance> set_tolerance;
    RankTolerance rank_tolerance = RankTolerance::automatic();
    bool degenerate_lambda_zero = false;
};

namespace detail {

inline DfReport make_report(double value, DfEstimator est, const SignedIndexSet& set, RankTolerance rtol)
{
    DfReport r;
    r.df_value = value;
    r.estimator = est;
    r.set_used = set;
    r.rank_tolerance = rtol;
    r.degenerate_lambda_zero = set.degenerate;
    return r;
}

inline double rank_of_columns(const DenseMatrix& X, const SignedIndexSet& S, RankTolerance rtol)
{
    S.validate(X.cols());
    if (S.empty()) return 0.0;
    return static_cast<double>(numeric_rank(select_cols(X, S.indices), rtol));
}

} // namespace detail

/// rank(X_E). A degenerate (lambda = 0) set lists every column, so this is rank(X).
inline DfReport df_lasso_equi(const DenseMatrix& X, const SignedIndexSet& E,
                              RankTolerance rtol = RankTolerance::automatic())
{
    return detail::make_report(detail::rank_of_columns(X, E, rtol), DfEstimator::lasso_equi, E, rtol);
}

/// rank(X_A) for the active set of any lasso solution.
inline DfReport df_lasso_active(const DenseMatrix& X, const SignedIndexSet& A,
                                RankTolerance rtol = RankTolerance::automatic())
{
    return detail::make_report(detail::rank_of_columns(X, A, rtol), DfEstimator::lasso_active, A, rtol);
}

/// dim X(null(D_{-S})) for a boundary set or an active set S over the rows of D.
inline DfReport df_genlasso(const DenseMatrix& X, const DenseMatrix& D, const SignedIndexSet& S,
                            RankTolerance rtol = RankTolerance::automatic(),
                            DfEstimator est = DfEstimator::genlasso_boundary)
{
    if (D.cols() != X.cols()) throw InputError("penalty and design column counts differ");
    S.validate(D.rows());
    const DenseMatrix N = null_basis(drop_rows(D, S.indices), rtol);
    const double value = N.cols() == 0 ? 0.0 : static_cast<double>(numeric_rank(X * N, rtol));
    return detail::make_report(value, est, S, rtol);
}

/// sum_i s_i^2 / (s_i^2 + lambda2) over the singular values of X_A.
inline DfReport df_elastic_net(const DenseMatrix& X, const SignedIndexSet& A, double lambda2)
{
    if (!(lambda2 > 0.0)) throw InputError("lambda2 must be positive");
    A.validate(X.cols());
    double value = 0.0;
    if (!A.empty()) {
        Eigen::JacobiSVD<DenseMatrix> dec(select_cols(X, A.indices));
        for (double s : dec.singularValues()) value += s * s / (s * s + lambda2);
    }
    return detail::make_report(value, DfEstimator::elastic_net, A, RankTolerance::automatic());
}

/// 1 + rank(M X_A) with M = I - 11^T/n the centering operator.
inline DfReport df_lasso_intercept(const DenseMatrix& X, const SignedIndexSet& A,
                                   RankTolerance rtol = RankTolerance::automatic())
{
    A.validate(X.cols());
    double value = 1.0;
    if (!A.empty()) {
        DenseMatrix XA = select_cols(X, A.indices);
        XA.rowwise() -= XA.colwise().mean();
        value += static_cast<double>(numeric_rank(XA, rtol));
    }
    return detail::make_report(value, DfEstimator::lasso_intercept, A, rtol);
}

// Closed-form fits. Each has a checked overload that compares against a
// solver fit and throws InconsistencyError beyond 1e-6 (1 + ||y||).

/// X_S (X_S)^+ (y - (X_S^T)^+ lambda s), valid for the equicorrelation pair (E, s) or an active pair (A, r).
inline Vec reconstruct_fit_lasso(const LassoProblem& prob, const SignedIndexSet& S)
{
    S.validate(prob.p());
    if (S.degenerate) return projector_onto_col(prob.X) * prob.y;
    if (S.empty()) return Vec::Zero(prob.n());
    const DenseMatrix XS = select_cols(prob.X, S.indices);
    const DenseMatrix pinv = pseudoinverse(XS);
    return XS * (pinv * (prob.y - pinv.transpose() * (prob.lambda * S.sign_vector())));
}

inline Vec reconstruct_fit_lasso_equi(const LassoProblem& prob, const SignedIndexSet& E)
{
    return reconstruct_fit_lasso(prob, E);
}

inline Vec reconstruct_fit_lasso_active(const LassoProblem& prob, const SignedIndexSet& A)
{
    return reconstruct_fit_lasso(prob, A);
}

/**
 * (X P)(X P)^+ (y - (P X^T)^+ D_S^T lambda s) with P the projector onto
 * null(D_{-S}); valid for a boundary pair (B, s) or an active pair (A, r).
 */
inline Vec reconstruct_fit_genlasso(const GenLassoProblem& prob, const SignedIndexSet& S)
{
    S.validate(prob.m());
    const DenseMatrix P = projector_onto_null(drop_rows(prob.D, S.indices));
    const DenseMatrix XP = prob.X * P;
    if (S.degenerate) return projector_onto_col(XP) * prob.y;
    const DenseMatrix pinv = pseudoinverse(XP);
    Vec shift = Vec::Zero(prob.p());
    if (!S.empty()) shift = select_rows(prob.D, S.indices).transpose() * (prob.lambda * S.sign_vector());
    return XP * (pinv * (prob.y - pinv.transpose() * shift));
}

namespace detail {

inline Vec checked_fit(Vec rebuilt, const Vec& solver_fit, const Vec& y, const char* formula)
{
    const double err = (rebuilt - solver_fit).norm();
    const double bound = 1e-6 * (1.0 + y.norm());
    if (!(err <= bound)) {
        throw InconsistencyError(std::string(formula) + " reconstruction differs from the solver fit by " +
                                 std::to_string(err));
    }
    return rebuilt;
}

} // namespace detail

inline Vec reconstruct_fit_lasso_equi(const LassoProblem& prob, const SignedIndexSet& E, const Vec& solver_fit)
{
    return detail::checked_fit(reconstruct_fit_lasso(prob, E), solver_fit, prob.y, "equicorrelation");
}

inline Vec reconstruct_fit_lasso_active(const LassoProblem& prob, const SignedIndexSet& A, const Vec& solver_fit)
{
    return detail::checked_fit(reconstruct_fit_lasso(prob, A), solver_fit, prob.y, "active-set");
}

inline Vec reconstruct_fit_genlasso(const GenLassoProblem& prob, const SignedIndexSet& S, const Vec& solver_fit)
{
    return detail::checked_fit(reconstruct_fit_genlasso(prob, S), solver_fit, prob.y, "generalized");
}

/// Both set-based estimates for one solve, plus whether they agree as integers.
struct DfPair {
    DfReport primary;  // equicorrelation or boundary
    DfReport active;
    bool agree = false;
};

inline DfPair lasso_df(const LassoProblem& prob, const Solution& sol, const SetTolerance& stol,
                       RankTolerance rtol = RankTolerance::automatic())
{
    DfPair out;
    const SignedIndexSet E = equicorrelation_set(prob, sol, stol);
    out.primary = df_lasso_equi(prob.X, E, rtol);
    if (E.degenerate) {
        out.active = df_lasso_active(prob.X, E, rtol);
    } else {
        out.active = df_lasso_active(prob.X, active_set_lasso(sol, stol), rtol);
    }
    out.primary.set_tolerance = stol;
    out.active.set_tolerance = stol;
    out.agree = out.primary.df_value == out.active.df_value;
    return out;
}

inline DfPair genlasso_df(const GenLassoProblem& prob, const Solution& sol, const SetTolerance& stol,
                          RankTolerance rtol = RankTolerance::automatic())
{
    DfPair out;
    const SignedIndexSet B = boundary_set(prob, sol, stol);
    out.primary = df_genlasso(prob.X, prob.D, B, rtol, DfEstimator::genlasso_boundary);
    const SignedIndexSet A = B.degenerate ? B : active_set_genlasso(prob, sol, stol);
    out.active = df_genlasso(prob.X, prob.D, A, rtol, DfEstimator::genlasso_active);
    out.primary.set_tolerance = stol;
    out.active.set_tolerance = stol;
    out.agree = out.primary.df_value == out.active.df_value;
    return out;
}

} // namespace lassodof
