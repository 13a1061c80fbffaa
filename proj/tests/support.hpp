#pragma once

// Test-only helpers: seeded random instances and brute-force oracles that do
// not share code paths with the library (no SVD, no coordinate descent, no ADMM).

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace lassodof::testing {

using Mat = Eigen::MatrixXd;
using V = Eigen::VectorXd;

inline Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> N;
    Mat A(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = N(rng);
    return A;
}

inline V gaussian_vector(Eigen::Index n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

/// Random matrix of prescribed rank.
inline Mat low_rank_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, std::mt19937_64& rng)
{
    return gaussian_matrix(rows, rank, rng) * gaussian_matrix(rank, cols, rng);
}

inline Mat random_orthogonal(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::HouseholderQR<Mat> qr(gaussian_matrix(n, n, rng));
    return qr.householderQ() * Mat::Identity(n, n);
}

/// Copies column `src` over column `dst` so the design has exact duplicates.
inline Mat with_duplicate(Mat X, Eigen::Index src, Eigen::Index dst)
{
    X.col(dst) = X.col(src);
    return X;
}

// Exact rank of a small integer matrix by fraction-free Gaussian elimination.
inline int integer_rank(const Mat& A)
{
    std::vector<std::vector<long long>> M(static_cast<std::size_t>(A.rows()),
                                          std::vector<long long>(static_cast<std::size_t>(A.cols())));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) M[i][j] = std::llround(A(i, j));
    int rank = 0;
    const int rows = static_cast<int>(A.rows()), cols = static_cast<int>(A.cols());
    for (int c = 0; c < cols && rank < rows; ++c) {
        int piv = -1;
        for (int r = rank; r < rows; ++r)
            if (M[r][c] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        std::swap(M[piv], M[rank]);
        for (int r = rank + 1; r < rows; ++r) {
            const long long a = M[rank][c], b = M[r][c];
            for (int k = 0; k < cols; ++k) M[r][k] = a * M[r][k] - b * M[rank][k];
            long long g = 0;
            for (int k = 0; k < cols; ++k) g = std::gcd(g, std::llabs(M[r][k]));
            if (g > 1)
                for (int k = 0; k < cols; ++k) M[r][k] /= g;
        }
        ++rank;
    }
    return rank;
}

/// Number of connected components by union-find.
inline int count_components(int nodes, const std::vector<std::pair<int, int>>& edges)
{
    std::vector<int> parent(static_cast<std::size_t>(nodes));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int comps = nodes;
    for (auto [a, b] : edges) {
        const int ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --comps;
        }
    }
    return comps;
}

// Null-space basis through a full-pivot LU (independent of the library's SVD).
inline Mat lu_kernel(const Mat& A, Eigen::Index cols)
{
    if (A.rows() == 0) return Mat::Identity(cols, cols);
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-10);
    if (lu.rank() == cols) return Mat(cols, 0);
    return lu.kernel();
}

struct OracleSolution {
    V beta;
    double objective = 0.0;
};

/**
 * Lasso by enumerating every sign pattern in {-1, 0, +1}^p and solving the
 * restricted stationarity equations with a complete orthogonal decomposition.
 * Exact up to rounding; practical for p <= 10.
 */
inline std::optional<OracleSolution> enumerate_lasso(const Mat& X, const V& y, double lambda, double kkt_tol = 1e-9)
{
    const int p = static_cast<int>(X.cols());
    std::vector<int> s(static_cast<std::size_t>(p), -1);
    std::optional<OracleSolution> best;
    long total = 1;
    for (int i = 0; i < p; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<Eigen::Index> A;
        for (int i = 0; i < p; ++i) {
            s[i] = static_cast<int>(c % 3) - 1;
            c /= 3;
            if (s[i] != 0) A.push_back(i);
        }
        V beta = V::Zero(p);
        if (!A.empty()) {
            Mat XA(X.rows(), static_cast<Eigen::Index>(A.size()));
            V sa(static_cast<Eigen::Index>(A.size()));
            for (std::size_t k = 0; k < A.size(); ++k) {
                XA.col(k) = X.col(A[k]);
                sa(k) = s[A[k]];
            }
            const Mat G = XA.transpose() * XA;
            const V rhs = XA.transpose() * y - lambda * sa;
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
            const V b = cod.solve(rhs);
            if ((G * b - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
            bool ok = true;
            for (std::size_t k = 0; k < A.size(); ++k) {
                if (b(k) * sa(k) <= 0.0) ok = false;
                beta(A[k]) = b(k);
            }
            if (!ok) continue;
        }
        const V corr = X.transpose() * (y - X * beta);
        bool ok = true;
        for (int i = 0; i < p; ++i) {
            if (s[i] == 0 && std::abs(corr(i)) > lambda + kkt_tol) ok = false;
        }
        if (!ok) continue;
        const double obj = 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
        if (!best || obj < best->objective) best = OracleSolution{beta, obj};
    }
    return best;
}

/**
 * Generalized lasso by enumerating (A, r) over the rows of D. For each guess,
 * beta = N t with N a kernel basis of D_{-A}; t solves the restricted normal
 * equations; the subgradient gamma_{-A} must solve D_{-A}^T gamma = c within
 * the box. Requires X N to have full column rank for the candidates that matter.
 */
inline std::optional<OracleSolution> enumerate_genlasso(const Mat& X, const Mat& D, const V& y, double lambda,
                                                        double kkt_tol = 1e-9)
{
    const int m = static_cast<int>(D.rows());
    const Eigen::Index p = X.cols();
    long total = 1;
    for (int i = 0; i < m; ++i) total *= 3;
    std::optional<OracleSolution> best;
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<int> r(static_cast<std::size_t>(m));
        std::vector<Eigen::Index> A, notA;
        for (int i = 0; i < m; ++i) {
            r[i] = static_cast<int>(c % 3) - 1;
            c /= 3;
            (r[i] != 0 ? A : notA).push_back(i);
        }
        Mat DA(static_cast<Eigen::Index>(A.size()), p), DmA(static_cast<Eigen::Index>(notA.size()), p);
        V ra(static_cast<Eigen::Index>(A.size()));
        for (std::size_t k = 0; k < A.size(); ++k) {
            DA.row(k) = D.row(A[k]);
            ra(k) = r[A[k]];
        }
        for (std::size_t k = 0; k < notA.size(); ++k) DmA.row(k) = D.row(notA[k]);
        const Mat N = lu_kernel(DmA, p);
        if (N.cols() == 0) continue;
        const Mat XN = X * N;
        const Mat G = XN.transpose() * XN;
        const V rhs = XN.transpose() * y - lambda * (N.transpose() * (DA.transpose() * ra));
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
        const V t = cod.solve(rhs);
        if ((G * t - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
        const V beta = N * t;
        const V DAb = DA * beta;
        bool ok = true;
        for (Eigen::Index k = 0; k < DAb.size(); ++k)
            if (DAb(k) * ra(k) <= 1e-12) ok = false;
        if (!ok) continue;
        const V cvec = X.transpose() * (y - X * beta) / lambda - DA.transpose() * ra;
        if (DmA.rows() > 0) {
            Eigen::CompleteOrthogonalDecomposition<Mat> cg(Mat(DmA.transpose()));
            const V g = cg.solve(cvec);
            if ((DmA.transpose() * g - cvec).norm() > 1e-8 * (1.0 + cvec.norm())) continue;
            if (g.lpNorm<Eigen::Infinity>() > 1.0 + kkt_tol) continue;
        } else if (cvec.norm() > 1e-8 * (1.0 + (X.transpose() * y).norm())) {
            continue;
        }
        const double obj = 0.5 * (y - X * beta).squaredNorm() + lambda * (D * beta).lpNorm<1>();
        if (!best || obj < best->objective) best = OracleSolution{beta, obj};
    }
    return best;
}

} // namespace lassodof::testing
