#include "helpers.hpp"

#include <sgl/datagen.hpp>
#include <sgl/errors.hpp>
#include <sgl/lasso.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace sgl;
using namespace sgl::testing;

namespace {

// Walsh columns on 8 points: centered, unit mean square, mutually orthogonal.
Dataset walsh_design(const Vector& y)
{
    Dataset d;
    d.X.resize(8, 3);
    for (Index i = 0; i < 8; ++i) {
        d.X(i, 0) = (i & 1) ? 1.0 : -1.0;
        d.X(i, 1) = (i & 2) ? 1.0 : -1.0;
        d.X(i, 2) = (i & 4) ? 1.0 : -1.0;
    }
    d.y = y;
    return d;
}

double soft(double z, double t)
{
    return std::copysign(std::max(std::abs(z) - t, 0.0), z);
}

void expect_kkt(const LassoProblem& pr, const LassoFit& f, double tol)
{
    const Vector b = pr.to_standardized(f.beta);
    const Vector corr = pr.standardized_X().transpose() * (pr.centered_y() - pr.standardized_X() * b)
                        / static_cast<double>(pr.n());
    for (Index j = 0; j < pr.p(); ++j) {
        if (b(j) == 0.0) {
            EXPECT_LE(std::abs(corr(j)), f.lambda + tol) << "variable " << j;
        } else {
            EXPECT_NEAR(corr(j), std::copysign(f.lambda, b(j)), tol) << "variable " << j;
        }
    }
}

} // namespace

TEST(Lasso, LambdaMaxGivesZero)
{
    for (int rep = 0; rep < 10; ++rep) {
        const Dataset d = random_regression(60 + rep, 15, 6);
        const LassoProblem pr(d);
        LassoConfig cfg;
        cfg.lambda = pr.lambda_max();
        const LassoFit f = lasso_fit(d, cfg);
        EXPECT_EQ(f.nonzeros(), 0);
        EXPECT_NEAR(f.intercept, d.y.mean(), 1e-15);
        cfg.lambda = 0.99 * pr.lambda_max();
        EXPECT_GT(lasso_fit(d, cfg).nonzeros(), 0);
    }
}

TEST(Lasso, OrthonormalDesignIsSoftThresholding)
{
    Rng rng(61);
    const Dataset d = walsh_design(random_vector(rng, 8, -2, 2));
    const LassoProblem pr(d);
    for (double lambda : {0.0, 0.05, 0.2, 0.5}) {
        const LassoFit f = pr.solve(lambda, 1e-14, 100);
        for (Index j = 0; j < 3; ++j) {
            const double z = d.X.col(j).dot(d.y - Vector::Constant(8, d.y.mean())) / 8.0;
            EXPECT_NEAR(f.beta(j), soft(z, lambda), 1e-14);
        }
        EXPECT_LE(f.sweeps, 2);
    }
}

TEST(Lasso, KktConditions)
{
    Rng rng(62);
    for (int rep = 0; rep < 10; ++rep) {
        const Dataset d = random_regression(70 + rep, 25, 8 + rep);
        const LassoProblem pr(d);
        const LassoFit f = pr.solve(rng.uniform(0.02, 0.6) * pr.lambda_max(), 1e-12, 100000);
        ASSERT_TRUE(f.converged);
        expect_kkt(pr, f, 1e-6);
    }
}

TEST(Lasso, SweepObjectivesNonIncreasing)
{
    for (int rep = 0; rep < 10; ++rep) {
        const Dataset d = random_regression(80 + rep, 20, 12);
        const LassoProblem pr(d);
        std::vector<double> obj;
        const double lambda = 0.1 * pr.lambda_max();
        pr.solve(lambda, 1e-12, 10000, nullptr, &obj);
        double prev = pr.objective(Vector::Zero(pr.p()), lambda);
        for (double v : obj) {
            EXPECT_LE(v, prev + 1e-14);
            prev = v;
        }
    }
}

TEST(Lasso, ConstantColumnStaysZero)
{
    Dataset d = random_regression(90, 12, 4);
    d.X.col(2).setConstant(3.0);
    const LassoFit f = LassoProblem(d).solve(0.0, 1e-12, 10000);
    EXPECT_EQ(f.beta(2), 0.0);
    EXPECT_TRUE(f.beta.allFinite());
}

TEST(LassoPath, MatchesColdStartFits)
{
    const Dataset d = gen_turlach(SyntheticSpec::turlach_defaults(5));
    const LassoProblem pr(d);
    std::vector<double> grid;
    for (int k = 0; k < 20; ++k) grid.push_back(pr.lambda_max() * std::pow(0.7, k));
    const auto path = lasso_path(d, grid, 1e-12, 100000);
    ASSERT_EQ(path.size(), grid.size());
    EXPECT_EQ(path.front().beta, Vector::Zero(10));
    for (const auto& pt : path) {
        const LassoFit cold = pr.solve(pt.lambda, 1e-12, 100000);
        EXPECT_LE((pt.beta - cold.beta).norm(), 1e-8) << "lambda " << pt.lambda;
    }
}

TEST(LassoPath, RefinedGridAgreesOnCommonPoints)
{
    const Dataset d = random_regression(91, 30, 7);
    const LassoProblem pr(d);
    std::vector<double> coarse, fine;
    for (int k = 0; k <= 10; ++k) coarse.push_back(pr.lambda_max() * std::pow(0.5, k));
    for (int k = 0; k <= 40; ++k) fine.push_back(pr.lambda_max() * std::pow(0.5, k / 4.0));
    const auto a = lasso_path(d, coarse, 1e-12), b = lasso_path(d, fine, 1e-12);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_LE((a[k].beta - b[4 * k].beta).norm(), 1e-8);
    }
    // refining the grid shrinks the largest jump between neighbouring solutions
    auto max_jump = [](const std::vector<LassoPathPoint>& path) {
        double m = 0.0;
        for (std::size_t k = 1; k < path.size(); ++k) m = std::max(m, (path[k].beta - path[k - 1].beta).norm());
        return m;
    };
    EXPECT_LT(max_jump(b), max_jump(a));
}

TEST(LassoPath, GridValidation)
{
    const Dataset d = random_regression(92, 10, 3);
    EXPECT_THROW(lasso_path(d, {}), InvalidInput);
    EXPECT_THROW(lasso_path(d, {0.5, 0.5}), InvalidInput);
    EXPECT_THROW(lasso_path(d, {0.1, 0.2}), InvalidInput);
}

TEST(LassoCardinality, HitsEveryReachableTarget)
{
    const Dataset d = gen_turlach(SyntheticSpec::turlach_defaults(7));
    const LassoProblem pr(d);
    for (Index target = 0; target <= 10; ++target) {
        const LassoFit f = lasso_fit_cardinality(pr, target, 1e-10, 100000);
        if (f.cardinality_exact) {
            EXPECT_EQ(f.nonzeros(), target);
        } else {
            EXPECT_NE(f.nonzeros(), target);
        }
    }
    LassoConfig cfg;
    cfg.target_cardinality = 5;
    EXPECT_EQ(lasso_fit(d, cfg).nonzeros(), 5);
}

TEST(LassoConfig, Validation)
{
    LassoConfig cfg;
    EXPECT_THROW(cfg.validate(5), InvalidInput);
    cfg.lambda = 0.1;
    EXPECT_NO_THROW(cfg.validate(5));
    cfg.target_cardinality = 2;
    EXPECT_THROW(cfg.validate(5), InvalidInput);
    cfg.lambda.reset();
    cfg.target_cardinality = 6;
    EXPECT_THROW(cfg.validate(5), InvalidInput);
    cfg.target_cardinality = 5;
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(5), InvalidInput);
    LassoConfig neg;
    neg.lambda = -1.0;
    EXPECT_THROW(neg.validate(5), InvalidInput);
}
