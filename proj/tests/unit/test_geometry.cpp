#include <gtest/gtest.h>

#include "lassodof/geometry.hpp"
#include "lassodof/penalties.hpp"
#include "support.hpp"

using namespace lassodof;
using lassodof::testing::gaussian_matrix;
using lassodof::testing::gaussian_vector;

namespace {

Vec vec3(double a, double b, double c)
{
    Vec v(3);
    v << a, b, c;
    return v;
}

} // namespace

TEST(LassoMembership, Examples)
{
    const DenseMatrix I = DenseMatrix::Identity(2, 2);
    Vec u(2);
    u << 0.5, -1.0;
    EXPECT_TRUE(lasso_poly_membership(I, 1.0, u, 1e-12).inside);
    u << 2.0, 0.0;
    const MembershipVerdict v = lasso_poly_membership(I, 1.0, u, 1e-12);
    EXPECT_FALSE(v.inside);
    EXPECT_DOUBLE_EQ(v.violation, 1.0);
    EXPECT_THROW(lasso_poly_membership(I, 1.0, Vec::Zero(3), 1e-12), InputError);
}

TEST(GenlassoMembership, ChainExamples)
{
    const DenseMatrix I = DenseMatrix::Identity(3, 3);
    const DenseMatrix D = diff_1d(3);
    // D^T w = (-w1, w1 - w2, w2)
    const MembershipVerdict in = genlasso_poly_membership(I, D, 1.0, vec3(-0.5, 0.0, 0.5), 1e-8);
    EXPECT_TRUE(in.inside);
    ASSERT_TRUE(in.certificate.has_value());
    EXPECT_LT((D.transpose() * *in.certificate - vec3(-0.5, 0.0, 0.5)).norm(), 1e-8);

    // constant vectors are orthogonal to row(D): distance is the full norm
    const MembershipVerdict ones = genlasso_poly_membership(I, D, 1.0, vec3(1, 1, 1), 1e-8);
    EXPECT_FALSE(ones.inside);
    EXPECT_NEAR(ones.violation, std::sqrt(3.0), 1e-8);

    // in row(D) but outside the box: w = (-2, -2) needs |w| <= 1
    EXPECT_FALSE(genlasso_poly_membership(I, D, 1.0, vec3(2, 0, -2), 1e-8).inside);
}

TEST(GenlassoMembership, IdentityPenaltyMatchesLassoSet)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const DenseMatrix X = gaussian_matrix(5, 4, rng);
        const Vec u = gaussian_vector(5, rng);
        const double lambda = 0.5 + 0.1 * rep;
        const bool lasso_in = lasso_poly_membership(X, lambda, u, 0.0).inside;
        const double margin = lambda - (X.transpose() * u).lpNorm<Eigen::Infinity>();
        if (std::abs(margin) < 1e-6) continue;
        EXPECT_EQ(genlasso_poly_membership(X, DenseMatrix::Identity(4, 4), lambda, u, 1e-8).inside, lasso_in);
    }
}

TEST(FeasibleSamplers, DrawsStayInside)
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 5; ++rep) {
        const DenseMatrix X = gaussian_matrix(6, 9, rng);
        const auto lasso = lasso_feasible_sampler(X, 1.3, 2.0);
        const DenseMatrix Xt = gaussian_matrix(8, 5, rng);
        const auto lasso_tall = lasso_feasible_sampler(Xt, 0.7, 2.0);
        const DenseMatrix D = diff_1d(9);
        const auto gen = genlasso_feasible_sampler(X, D, 1.3, 2.0);
        std::mt19937_64 draw(rep);
        for (int k = 0; k < 50; ++k) {
            EXPECT_TRUE(lasso_poly_membership(X, 1.3, lasso(draw), 1e-9).inside);
            EXPECT_TRUE(lasso_poly_membership(Xt, 0.7, lasso_tall(draw), 1e-9).inside);
            EXPECT_TRUE(genlasso_poly_membership(X, D, 1.3, gen(draw), 1e-7).inside);
        }
    }
}

TEST(ProjectionOptimality, SolverFitsSatisfyVariationalInequality)
{
    const Vec y = vec3(3, 0.5, -2);
    const DenseMatrix I = DenseMatrix::Identity(3, 3);
    const Vec fit = solve_lasso(LassoProblem{I, y, 1.0}).fit;
    const auto sampler = lasso_feasible_sampler(I, 1.0, 1.0);
    EXPECT_LE(verify_projection_optimality(y, fit, sampler, 2000, 1), 1e-9);
    // inflating the fit moves theta off the projection; any interior point exposes it
    EXPECT_GT(verify_projection_optimality(y, 2.0 * fit, sampler, 2000, 1), 1.0);

    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        const DenseMatrix X = gaussian_matrix(10, 14, rng);
        const DenseMatrix D = diff_1d(14);
        const Vec yy = 3.0 * gaussian_vector(10, rng);
        const GenLassoProblem prob{X, D, yy, 0.8};
        const Vec f = solve_genlasso(prob).fit;
        const auto gen = genlasso_feasible_sampler(X, D, 0.8, 3.0);
        EXPECT_LE(verify_projection_optimality(yy, f, gen, 500, rep), 1e-6 * (1.0 + yy.squaredNorm()));
        EXPECT_GT(verify_projection_optimality(yy, 1.5 * f, gen, 500, rep), 1e-3);
    }
}

TEST(Nonexpansive, LassoAndGeneralizedFits)
{
    std::mt19937_64 rng(6);
    const DenseMatrix X = gaussian_matrix(8, 12, rng);
    const LassoFitModel lasso{X, 0.9};
    const GenLassoFitModel fused{X, diff_1d(12), 0.9};
    for (int k = 0; k < 40; ++k) {
        const Vec a = 2.0 * gaussian_vector(8, rng);
        const Vec b = k % 2 ? Vec(a + 0.01 * gaussian_vector(8, rng)) : Vec(2.0 * gaussian_vector(8, rng));
        EXPECT_TRUE(check_nonexpansive(lasso, a, b));
        EXPECT_TRUE(check_nonexpansive(fused, a, b));
    }
    // a map that doubles distances is caught
    auto doubling = [](const Vec& y) { return Vec(2.0 * y); };
    EXPECT_FALSE(check_nonexpansive(doubling, Vec::Zero(3), Vec::Ones(3)));
}

TEST(LocalAffineProbe, IdentityLassoMovesOnlyActiveCoordinates)
{
    const LassoFitModel model{DenseMatrix::Identity(3, 3), 1.0};
    const Vec y = vec3(3, 0.5, -2);
    const AffineProbeReport rep = local_affine_probe(model, y, default_probe_step(y), 25, 7);
    EXPECT_EQ(rep.affine_passes, 25);
    EXPECT_EQ(rep.set_passes, 25);
    EXPECT_LT(rep.max_affine_error, 1e-10);

    const DenseMatrix P = model.local_projector(y);
    EXPECT_LT((P - Vec(vec3(1, 0, 1)).asDiagonal().toDenseMatrix()).norm(), 1e-14);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 10; ++k) {
        const Vec d = (model(y + 1e-3 * gaussian_vector(3, rng)) - model(y));
        EXPECT_EQ(d(1), 0.0);
    }
}

TEST(LocalAffineProbe, FusedStepIsLocallyAffine)
{
    const GenLassoFitModel model{DenseMatrix::Identity(3, 3), diff_1d(3), 1.0};
    const Vec y = vec3(0, 0, 10);
    const AffineProbeReport rep = local_affine_probe(model, y, default_probe_step(y), 25, 9);
    EXPECT_EQ(rep.affine_passes, 25);
    EXPECT_EQ(rep.set_passes, 25);

    DenseMatrix expected = DenseMatrix::Zero(3, 3);
    expected.topLeftCorner(2, 2).setConstant(0.5);
    expected(2, 2) = 1.0;
    EXPECT_LT((model.local_projector(y) - expected).norm(), 1e-12);
}

TEST(LocalAffineProbe, RandomDesigns)
{
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 5; ++rep) {
        const DenseMatrix X = gaussian_matrix(10, 16, rng);
        const Vec y = 3.0 * gaussian_vector(10, rng);
        const double lambda = 0.4 * (X.transpose() * y).lpNorm<Eigen::Infinity>();
        const AffineProbeReport lr = local_affine_probe(LassoFitModel{X, lambda}, y, default_probe_step(y), 10, rep);
        EXPECT_GE(lr.pass_fraction(), 0.9);
        const AffineProbeReport gr =
            local_affine_probe(GenLassoFitModel{X, diff_1d(16), 0.5}, y, default_probe_step(y), 10, rep);
        EXPECT_GE(gr.pass_fraction(), 0.9);
    }
}
