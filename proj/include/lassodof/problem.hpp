#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"

namespace lassodof {

namespace detail {

inline void check_design(const DenseMatrix& X, const Vec& y)
{
    if (X.rows() < 1 || X.cols() < 1) throw InputError("design matrix must be nonempty");
    if (X.rows() != y.size()) {
        throw InputError("response length " + std::to_string(y.size()) + " does not match " +
                         std::to_string(X.rows()) + " design rows");
    }
    if (!X.allFinite()) throw InputError("design matrix has non-finite entries");
    if (!y.allFinite()) throw InputError("response has non-finite entries");
}

inline void check_lambda(double lambda, const char* name)
{
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw InputError(std::string(name) + " must be finite and nonnegative");
    }
}

} // namespace detail

/// min_b 1/2 ||y - X b||^2 + lambda ||b||_1
struct LassoProblem {
    DenseMatrix X;
    Vec y;
    double lambda = 0.0;

    void validate() const
    {
        detail::check_design(X, y);
        detail::check_lambda(lambda, "lambda");
    }
    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
};

/// min_b 1/2 ||y - X b||^2 + lambda ||D b||_1
struct GenLassoProblem {
    DenseMatrix X;
    DenseMatrix D;
    Vec y;
    double lambda = 0.0;

    void validate() const
    {
        detail::check_design(X, y);
        detail::check_lambda(lambda, "lambda");
        if (D.cols() != X.cols()) {
            throw InputError("penalty matrix has " + std::to_string(D.cols()) + " columns, design has " +
                             std::to_string(X.cols()));
        }
        if (!D.allFinite()) throw InputError("penalty matrix has non-finite entries");
    }
    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    Index m() const { return D.rows(); }
};

/// min_b 1/2 ||y - X b||^2 + lambda1 ||b||_1 + lambda2/2 ||b||^2
struct ElasticNetProblem {
    DenseMatrix X;
    Vec y;
    double lambda1 = 0.0;
    double lambda2 = 1.0;

    void validate() const
    {
        detail::check_design(X, y);
        detail::check_lambda(lambda1, "lambda1");
        if (!std::isfinite(lambda2) || !(lambda2 > 0.0)) throw InputError("lambda2 must be positive");
    }
};

enum class ColumnOrder { natural, permuted };

struct SolverOptions {
    long max_iterations = 200000;
    double convergence_tol = 1e-10;
    double penalty_parameter = 1.0;
    std::uint64_t rng_seed = 0;
    ColumnOrder column_order = ColumnOrder::natural;
    bool adaptive_penalty = true;
    // Re-solve on the detected support to machine precision once the iterate is close.
    bool polish = true;

    void validate() const
    {
        if (max_iterations < 1) throw InputError("max_iterations must be positive");
        if (!(convergence_tol > 0.0)) throw InputError("convergence_tol must be positive");
        if (!(penalty_parameter > 0.0)) throw InputError("penalty_parameter must be positive");
    }
};

struct Solution {
    Vec beta;
    Vec fit;
    Vec gamma;
    std::optional<double> intercept;
    long iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    // Stationarity residual of the KKT system in the units of X^T y.
    double kkt_residual = 0.0;
    bool polished = false;
    bool normal_matrix_singular = false;
    double final_penalty_parameter = 0.0;
};

inline double lasso_objective(const DenseMatrix& X, const Vec& y, double lambda, const Vec& beta)
{
    return 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

inline double genlasso_objective(const DenseMatrix& X, const DenseMatrix& D, const Vec& y, double lambda,
                                 const Vec& beta)
{
    return 0.5 * (y - X * beta).squaredNorm() + lambda * (D * beta).lpNorm<1>();
}

} // namespace lassodof
