#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lassodof/linalg.hpp"
#include "lassodof/problem.hpp"

namespace lassodof {

/**
 * Sorted index list with a +/-1 sign per index. Houses the equicorrelation
 * set (E, s), the boundary set (B, s) and the active set (A, r).
 *
 * A degenerate set (lambda = 0) lists every index and carries no signs;
 * df consumers fall back to rank(X) for it.
 */
struct SignedIndexSet {
    std::vector<Index> indices;
    std::vector<int> signs;
    bool degenerate = false;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    bool contains(Index i) const { return std::binary_search(indices.begin(), indices.end(), i); }

    /// Sign attached to index i, 0 if i is absent.
    int sign_of(Index i) const
    {
        const auto it = std::lower_bound(indices.begin(), indices.end(), i);
        if (it == indices.end() || *it != i || signs.empty()) return 0;
        return signs[static_cast<std::size_t>(it - indices.begin())];
    }

    Vec sign_vector() const
    {
        Vec s(static_cast<Index>(signs.size()));
        for (std::size_t k = 0; k < signs.size(); ++k) s(static_cast<Index>(k)) = signs[k];
        return s;
    }

    void validate(Index universe) const
    {
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] < 0 || indices[k] >= universe) throw InputError("set index out of range");
            if (k > 0 && indices[k] <= indices[k - 1]) throw InputError("set indices must be strictly increasing");
        }
        if (degenerate) {
            if (!signs.empty()) throw InputError("degenerate set carries no signs");
            return;
        }
        if (signs.size() != indices.size()) throw InputError("set needs one sign per index");
        for (int s : signs) {
            if (s != 1 && s != -1) throw InputError("set signs must be +1 or -1");
        }
    }

    friend bool operator==(const SignedIndexSet&, const SignedIndexSet&) = default;
};

inline bool is_subset(const SignedIndexSet& a, const SignedIndexSet& b)
{
    return std::includes(b.indices.begin(), b.indices.end(), a.indices.begin(), a.indices.end());
}

struct SetTolerance {
    double membership_tol = 1e-6;
    double zero_tol = 1e-8;

    /// Default tolerances for a given lambda: membership max(1e-6, 1e-6 * lambda).
    static SetTolerance for_lambda(double lambda)
    {
        return SetTolerance{std::max(1e-6, 1e-6 * lambda), 1e-8};
    }

    void validate() const
    {
        if (!(membership_tol > 0.0) || !(zero_tol > 0.0)) throw InputError("set tolerances must be positive");
    }

    /// Membership must dominate the solver's accuracy by at least a factor of ten.
    void validate_against(const SolverOptions& opts) const
    {
        validate();
        if (membership_tol < 10.0 * opts.convergence_tol) {
            throw InputError("membership tolerance must be at least 10x the solver convergence tolerance");
        }
    }
};

namespace detail {

inline int sign_of(double v) { return v > 0.0 ? 1 : -1; }

inline SignedIndexSet full_degenerate(Index count)
{
    SignedIndexSet s;
    s.degenerate = true;
    s.indices.resize(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) s.indices[static_cast<std::size_t>(i)] = i;
    return s;
}

inline SignedIndexSet threshold_set(const Vec& v, double cutoff)
{
    SignedIndexSet s;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > cutoff) {
            s.indices.push_back(i);
            s.signs.push_back(sign_of(v(i)));
        }
    }
    return s;
}

} // namespace detail

/// Indices whose absolute correlation with the residual reaches lambda. Uses the fit only.
inline SignedIndexSet equicorrelation_set(const LassoProblem& prob, const Solution& sol, const SetTolerance& tol)
{
    tol.validate();
    if (prob.lambda == 0.0) return detail::full_degenerate(prob.p());
    const Vec corr = prob.X.transpose() * (prob.y - sol.fit);
    SignedIndexSet s;
    for (Index i = 0; i < corr.size(); ++i) {
        if (std::abs(corr(i)) >= prob.lambda - tol.membership_tol) {
            s.indices.push_back(i);
            s.signs.push_back(detail::sign_of(corr(i)));
        }
    }
    return s;
}

/// Smallest gap between lambda and |X_i^T r| across all i, i.e. how close the set is to changing.
inline double equicorrelation_margin(const LassoProblem& prob, const Solution& sol, const SetTolerance& tol)
{
    const Vec corr = (prob.X.transpose() * (prob.y - sol.fit)).cwiseAbs();
    double margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < corr.size(); ++i) {
        const double gap = std::abs(corr(i) - prob.lambda);
        // members sit at lambda up to solver noise; only outsiders near lambda matter
        if (corr(i) < prob.lambda - tol.membership_tol) margin = std::min(margin, gap);
    }
    return margin;
}

inline SignedIndexSet active_set_lasso(const Solution& sol, const SetTolerance& tol)
{
    tol.validate();
    return detail::threshold_set(sol.beta, tol.zero_tol);
}

/// Indices where the subgradient reaches the box boundary, |gamma_i| >= 1 - tol.
inline SignedIndexSet boundary_set(const GenLassoProblem& prob, const Solution& sol, const SetTolerance& tol)
{
    tol.validate();
    if (prob.lambda == 0.0) return detail::full_degenerate(prob.m());
    if (sol.gamma.size() != prob.m()) throw InputError("solution subgradient does not match penalty rows");
    SignedIndexSet s;
    for (Index i = 0; i < sol.gamma.size(); ++i) {
        if (std::abs(sol.gamma(i)) >= 1.0 - tol.membership_tol) {
            s.indices.push_back(i);
            s.signs.push_back(detail::sign_of(sol.gamma(i)));
        }
    }
    return s;
}

/// Distance of the closest interior |gamma_i| to the box boundary.
inline double boundary_margin(const Solution& sol, const SetTolerance& tol)
{
    double margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < sol.gamma.size(); ++i) {
        const double a = std::abs(sol.gamma(i));
        if (a < 1.0 - tol.membership_tol) margin = std::min(margin, 1.0 - a);
    }
    return margin;
}

inline SignedIndexSet active_set_genlasso(const GenLassoProblem& prob, const Solution& sol, const SetTolerance& tol)
{
    tol.validate();
    return detail::threshold_set(prob.D * sol.beta, tol.zero_tol);
}

} // namespace lassodof
