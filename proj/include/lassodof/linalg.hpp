#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lassodof/errors.hpp"

namespace lassodof {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/**
 * Relative cutoff used to decide which singular values count as nonzero.
 *
 * A singular value s is treated as zero when s <= cutoff * s_max. The
 * automatic cutoff scales with the matrix size, max(rows, cols) * 2^-46.
 */
class RankTolerance {
public:
    static RankTolerance automatic() { return RankTolerance{}; }

    static RankTolerance relative(double cutoff)
    {
        if (!(cutoff > 0.0 && cutoff < 1.0)) {
            throw InputError("rank tolerance must lie in (0, 1)");
        }
        RankTolerance t;
        t.cutoff_ = cutoff;
        return t;
    }

    bool is_automatic() const { return cutoff_ <= 0.0; }

    double cutoff_for(Index rows, Index cols) const
    {
        if (!is_automatic()) return cutoff_;
        return static_cast<double>(std::max<Index>({rows, cols, 1})) * std::ldexp(1.0, -46);
    }

private:
    RankTolerance() = default;
    double cutoff_ = 0.0;
};

struct SvdFactors {
    DenseMatrix left_vectors;   // rows x rows
    Vec singular_values;        // nonincreasing, length min(rows, cols)
    DenseMatrix right_vectors;  // cols x cols
};

/// Full SVD. Zero-dimension inputs yield identity blocks and no singular values.
inline SvdFactors svd(const DenseMatrix& A)
{
    if (A.rows() == 0 || A.cols() == 0) {
        return {DenseMatrix::Identity(A.rows(), A.rows()), Vec(0),
                DenseMatrix::Identity(A.cols(), A.cols())};
    }
    Eigen::JacobiSVD<DenseMatrix> dec(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

namespace detail {

inline Index count_above(const Vec& s, double relative_cutoff)
{
    if (s.size() == 0) return 0;
    const double smax = s(0);
    if (!(smax > 0.0)) return 0;
    const double thresh = relative_cutoff * smax;
    Index r = 0;
    while (r < s.size() && s(r) > thresh) ++r;
    return r;
}

inline void require_finite(const DenseMatrix& A, const char* what)
{
    if (!A.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

} // namespace detail

inline Index numeric_rank(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    detail::require_finite(A, "matrix");
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<DenseMatrix> dec(A);
    return detail::count_above(dec.singularValues(), tol.cutoff_for(A.rows(), A.cols()));
}

/// Moore-Penrose pseudoinverse with singular values below the cutoff zeroed.
inline DenseMatrix pseudoinverse(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    detail::require_finite(A, "matrix");
    if (A.size() == 0) return DenseMatrix::Zero(A.cols(), A.rows());
    Eigen::JacobiSVD<DenseMatrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = dec.singularValues();
    const Index r = detail::count_above(s, tol.cutoff_for(A.rows(), A.cols()));
    if (r == 0) return DenseMatrix::Zero(A.cols(), A.rows());
    const auto U = dec.matrixU().leftCols(r);
    const auto V = dec.matrixV().leftCols(r);
    return V * s.head(r).cwiseInverse().asDiagonal() * U.transpose();
}

/// Orthonormal basis of col(A), as columns.
inline DenseMatrix col_basis(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    detail::require_finite(A, "matrix");
    if (A.size() == 0) return DenseMatrix::Zero(A.rows(), 0);
    Eigen::JacobiSVD<DenseMatrix> dec(A, Eigen::ComputeThinU);
    const Index r = detail::count_above(dec.singularValues(), tol.cutoff_for(A.rows(), A.cols()));
    return dec.matrixU().leftCols(r);
}

/// A A^+, the orthogonal projector onto col(A).
inline DenseMatrix projector_onto_col(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    const DenseMatrix Q = col_basis(A, tol);
    return Q * Q.transpose();
}

/// Orthonormal basis of null(A), as columns; cols(A) - rank(A) of them.
inline DenseMatrix null_basis(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    detail::require_finite(A, "matrix");
    if (A.rows() == 0 || A.cols() == 0) return DenseMatrix::Identity(A.cols(), A.cols());
    Eigen::JacobiSVD<DenseMatrix> dec(A, Eigen::ComputeFullV);
    const Index r = detail::count_above(dec.singularValues(), tol.cutoff_for(A.rows(), A.cols()));
    return dec.matrixV().rightCols(A.cols() - r);
}

/// I - A^+ A, the orthogonal projector onto null(A).
inline DenseMatrix projector_onto_null(const DenseMatrix& A, RankTolerance tol = RankTolerance::automatic())
{
    const DenseMatrix N = null_basis(A, tol);
    return N * N.transpose();
}

/// Columns of A listed in `idx`, in order.
inline DenseMatrix select_cols(const DenseMatrix& A, std::span<const Index> idx)
{
    DenseMatrix out(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = A.col(idx[k]);
    return out;
}

inline DenseMatrix select_rows(const DenseMatrix& A, std::span<const Index> idx)
{
    DenseMatrix out(static_cast<Index>(idx.size()), A.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = A.row(idx[k]);
    return out;
}

/// Rows of A whose index is not in the sorted list `idx`.
inline DenseMatrix drop_rows(const DenseMatrix& A, std::span<const Index> idx)
{
    std::vector<Index> keep;
    keep.reserve(static_cast<std::size_t>(A.rows()));
    std::size_t k = 0;
    for (Index i = 0; i < A.rows(); ++i) {
        if (k < idx.size() && idx[k] == i) {
            ++k;
            continue;
        }
        keep.push_back(i);
    }
    return select_rows(A, keep);
}

} // namespace lassodof
