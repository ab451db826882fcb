#include "helpers.hpp"

#include <sgl/classification.hpp>
#include <sgl/datagen.hpp>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <cmath>

using namespace sgl;
using namespace sgl::testing;

namespace {

ClassificationProblem make_problem(const Dataset& d, bool reduce = false)
{
    const double s = median_bandwidth(d.X);
    return ClassificationProblem(d, kernel_matrix(d.X, {KernelKind::Gaussian, s}),
                                 locality_weights(d.X, {WeightKind::GaussianAllPairs, s, 1}), reduce);
}

double naive_objective(const ClassificationProblem& pr, const Vector& a, const Matrix& C,
                       double l1, double l2)
{
    const Dataset& d = pr.data();
    const Matrix& K = pr.K();
    const Matrix Kh = kernel_sqrt(K).half;
    const Index n = d.n();
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            double t = 0.0;
            for (Index b = 0; b < n; ++b) t += a(b) * K(b, i);
            for (Index v = 0; v < d.p(); ++v) {
                double ck = 0.0;
                for (Index b = 0; b < n; ++b) ck += C(v, b) * Kh(b, i);
                t += (d.X(j, v) - d.X(i, v)) * ck;
            }
            sum += pr.weights()(i, j) * std::log(1.0 + std::exp(-d.y(j) * t));
        }
    }
    double pen = 0.0;
    for (Index v = 0; v < C.rows(); ++v) pen += C.row(v).norm();
    return sum / static_cast<double>(n * n) + l1 * a.dot(K * a) + l2 * pen;
}

ClassificationConfig config(double l1, double l2)
{
    ClassificationConfig c;
    c.lambda1 = l1;
    c.lambda2 = l2;
    return c;
}

} // namespace

TEST(LogisticLoss, BranchesAndDerivative)
{
    EXPECT_DOUBLE_EQ(logistic_loss(0.0), std::log(2.0));
    EXPECT_NEAR(logistic_loss(-40.0), 40.0, 1e-12);
    EXPECT_NEAR(logistic_loss(40.0), std::exp(-40.0), 1e-25);
    EXPECT_NEAR(logistic_loss(-30.0), 30.0, 1e-12);
    EXPECT_NEAR(logistic_loss(5.0), std::log1p(std::exp(-5.0)), 1e-15);
    EXPECT_DOUBLE_EQ(logistic_loss_derivative(0.0), -0.5);
    for (double t : {-3.0, -0.2, 0.7, 4.0}) {
        const double h = 1e-6;
        EXPECT_NEAR(logistic_loss_derivative(t), (logistic_loss(t + h) - logistic_loss(t - h)) / (2 * h), 1e-8);
    }
    EXPECT_TRUE(std::isfinite(logistic_loss(-1e4)));
    EXPECT_TRUE(std::isfinite(logistic_loss(1e4)));
    EXPECT_NEAR(logistic_loss_derivative(-1e4), -1.0, 1e-15);
    EXPECT_EQ(logistic_loss_derivative(1e4), -0.0);
}

TEST(ClassObjective, AtZero)
{
    const Dataset d = random_classification(1, 8, 3);
    const ClassificationProblem pr = make_problem(d);
    const double expected = std::log(2.0) * pr.weights().sum() / 64.0;
    EXPECT_NEAR(pr.objective(Vector::Zero(8), Matrix::Zero(3, 8), 0.5, 0.5), expected, 1e-15);
}

TEST(ClassObjective, MatchesNaiveLoop)
{
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        const ClassificationProblem pr = make_problem(random_classification(10 + rep, 4, 3));
        const Vector a = random_vector(rng, 4);
        const Matrix C = random_matrix(rng, 3, 4);
        EXPECT_NEAR(pr.objective(a, C, 0.2, 0.3), naive_objective(pr, a, C, 0.2, 0.3), 1e-12);
    }
}

TEST(ClassObjective, PerfectMarginDataTermVanishes)
{
    const Dataset d = random_classification(3, 6, 2);
    const Matrix K = kernel_matrix(d.X, {KernelKind::Gaussian, 0.5});
    const ClassificationProblem pr(d, K, Matrix::Identity(6, 6), false);
    const Vector dir = K.ldlt().solve(d.y); // f^0(x_i) = y_i
    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 4.0, 16.0, 64.0, 256.0}) {
        const double v = pr.smooth_value(scale * dir, Matrix::Zero(2, 6), 0.0);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-50);
}

TEST(ClassObjective, LabelsValidated)
{
    Dataset d = random_classification(4, 6, 2);
    d.y(0) = 0.0;
    EXPECT_THROW(make_problem(d), InvalidInput);
    d.y.setOnes();
    EXPECT_THROW(make_problem(d), InvalidInput);
}

TEST(ClassGradients, ZeroWeights)
{
    const Dataset d = random_classification(5, 6, 3);
    const ClassificationProblem pr(d, kernel_matrix(d.X, {KernelKind::Gaussian, 1.0}),
                                   Matrix::Zero(6, 6), false);
    Rng rng(3);
    const auto g = pr.gradients(random_vector(rng, 6), random_matrix(rng, 3, 6), 0.0);
    EXPECT_EQ(g.alpha.norm(), 0.0);
    EXPECT_EQ(g.C_tilde.norm(), 0.0);
}

TEST(ClassGradients, AlphaBlockAtOrigin)
{
    const Dataset d = random_classification(6, 7, 3);
    const ClassificationProblem pr = make_problem(d);
    const auto g = pr.gradients(Vector::Zero(7), Matrix::Zero(3, 7), 0.4);
    Vector expected = Vector::Zero(7);
    for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 7; ++j)
            expected += -pr.weights()(i, j) * d.y(j) * pr.K().col(i) / 2.0;
    expected /= 49.0;
    EXPECT_LE((g.alpha - expected).norm(), 1e-14);
}

TEST(ClassGradients, FiniteDifferences)
{
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const bool reduce = rep % 2 == 0;
        const Dataset d = random_classification(20 + rep, 5 + rep % 3, 3 + rep % 5);
        const ClassificationProblem pr = make_problem(d, reduce);
        const Vector a = random_vector(rng, d.n());
        const Matrix C = random_matrix(rng, d.p(), d.n());
        const double l1 = 0.3;
        const auto g = pr.gradients(a, C, l1);
        const Matrix num_c = numeric_gradient([&](const Matrix& A) { return pr.smooth_value(a, A, l1); }, C);
        const Matrix num_a = numeric_gradient([&](const Matrix& A) { return pr.smooth_value(A.col(0), C, l1); },
                                              Matrix(a));
        EXPECT_LE(rel_err(g.C_tilde, num_c), 1e-5) << "instance " << rep;
        EXPECT_LE(rel_err(g.alpha, num_a), 1e-5) << "instance " << rep;
    }
}

TEST(ClassObjective, ConvexAlongSegments)
{
    Rng rng(8);
    const ClassificationProblem pr = make_problem(random_classification(30, 8, 4));
    for (int rep = 0; rep < 20; ++rep) {
        const Vector a0 = random_vector(rng, 8, -3, 3), a1 = random_vector(rng, 8, -3, 3);
        const Matrix c0 = random_matrix(rng, 4, 8, -3, 3), c1 = random_matrix(rng, 4, 8, -3, 3);
        const double mid = pr.objective(0.5 * (a0 + a1), 0.5 * (c0 + c1), 0.1, 0.2);
        const double ends = 0.5 * (pr.objective(a0, c0, 0.1, 0.2) + pr.objective(a1, c1, 0.1, 0.2));
        EXPECT_LE(mid, ends + 1e-10);
    }
}

TEST(ClassObjective, LabelFlipSymmetry)
{
    Rng rng(9);
    const Dataset d = random_classification(31, 7, 3);
    Dataset flipped = d;
    flipped.y = -d.y;
    const ClassificationProblem a = make_problem(d), b = make_problem(flipped);
    for (int rep = 0; rep < 5; ++rep) {
        const Vector al = random_vector(rng, 7);
        const Matrix C = random_matrix(rng, 3, 7);
        EXPECT_NEAR(a.smooth_value(al, C, 0.0), b.smooth_value(-al, -C, 0.0), 1e-13);
    }
}

TEST(ClassObjective, OverflowSafeForHugeMargins)
{
    const ClassificationProblem pr = make_problem(random_classification(32, 6, 2));
    for (double scale : {1e2, 1e3, 1e4}) {
        const Vector a = Vector::Constant(6, scale);
        const Matrix C = Matrix::Constant(2, 6, -scale);
        EXPECT_TRUE(std::isfinite(pr.objective(a, C, 0.1, 0.1)));
        const auto g = pr.gradients(a, C, 0.1);
        EXPECT_TRUE(g.alpha.allFinite());
        EXPECT_TRUE(g.C_tilde.allFinite());
    }
}

TEST(ClassFit, HugeLambda2ReducesToKernelLogistic)
{
    const Dataset d = random_classification(33, 10, 3);
    const ClassificationProblem pr = make_problem(d);
    ClassificationConfig cfg = config(0.05, 1e6);
    cfg.tol = 1e-10;
    cfg.max_iter = 200000;
    const ClassificationFit f = fit_classification(pr, cfg);
    EXPECT_EQ(f.model.C_tilde.norm(), 0.0);

    // independent gradient descent on alpha with C~ held at zero
    const Matrix C0 = Matrix::Zero(3, 10);
    const double step = 1.0 / (pr.logistic_lipschitz() + 0.05 * pr.ridge_curvature());
    Vector a = Vector::Zero(10);
    for (int it = 0; it < 200000; ++it) {
        const Vector next = a - step * pr.gradients(a, C0, 0.05).alpha;
        const double change = (next - a).norm();
        a = next;
        if (change < 1e-13) break;
    }
    EXPECT_LE((pr.K() * (f.model.alpha - a)).norm(), 1e-6);
}

TEST(ClassFit, MonotoneObjectiveAndFixedPoint)
{
    for (int rep = 0; rep < 10; ++rep) {
        const Dataset d = random_classification(40 + rep, 8 + rep % 3, 4 + rep % 4);
        const ClassificationProblem pr = make_problem(d, rep % 2 == 1);
        const ClassificationConfig cfg = config(0.01, 0.3 * pr.lambda2_max_heuristic());
        const ClassificationFit f = fit_classification(pr, cfg);
        const auto& tr = f.report.objective_trace;
        for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_LE(tr[k], tr[k - 1] + 1e-12);
        ASSERT_TRUE(f.report.converged);
        EXPECT_LE(f.report.fixed_point_residual, 10.0 * cfg.tol);
    }
}

TEST(ClassFit, StepSizeBound)
{
    const ClassificationProblem pr = make_problem(random_classification(50, 8, 3));
    ClassificationConfig cfg = config(0.1, 0.01);
    cfg.delta = 2.0 / (pr.logistic_lipschitz() + 0.1 * pr.ridge_curvature());
    EXPECT_THROW(fit_classification(pr, cfg), InvalidInput);
    cfg.delta = 1.0 / (pr.logistic_lipschitz() + 0.1 * pr.ridge_curvature());
    EXPECT_NO_THROW(fit_classification(pr, cfg));
}

TEST(ClassFit, SpheresLowNoiseSelectsSignalPlane)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SyntheticSpec spec = SyntheticSpec::two_spheres_defaults(0.5, seed);
        spec.p = 10;
        const Dataset d = gen_two_spheres(spec);
        const double s = median_bandwidth(d.X);
        ClassificationConfig cfg;
        cfg.weight_spec = {WeightKind::GaussianAllPairs, s, 10};
        cfg.kernel_spec = {KernelKind::Gaussian, s};
        cfg.lambda1 = 1e-3;
        const ClassificationProblem pr(d, cfg.weight_spec, cfg.kernel_spec);
        const ClassCardinalityFit cf = fit_classification_to_cardinality(pr, cfg, 2);
        EXPECT_EQ(cf.selection.selected, (std::vector<Index>{0, 1})) << "seed " << seed;
        const EdrResult e = edr_directions(cf.fit.model.C_tilde);
        EXPECT_EQ(e.eigenvalues.size(), 2);
        EXPECT_EQ(e.support, (std::vector<Index>{0, 1}));
        const Matrix Z = project(d.X, e);
        double inner_max = 0.0, outer_min = 1e300;
        for (Index i = 0; i < d.n(); ++i) {
            const double r = Z.row(i).norm();
            if (d.y(i) > 0) inner_max = std::max(inner_max, r);
            else outer_min = std::min(outer_min, r);
        }
        EXPECT_LT(inner_max, outer_min) << "seed " << seed;
    }
}

TEST(ClassCardinality, TargetOutOfRange)
{
    const ClassificationProblem pr = make_problem(random_classification(51, 8, 3));
    EXPECT_THROW(fit_classification_to_cardinality(pr, config(0.01, 0.0), 4), InvalidInput);
    const ClassCardinalityFit none = fit_classification_to_cardinality(pr, config(0.01, 0.0), 0);
    EXPECT_EQ(none.selection.size(), 0);
}

TEST(Predict, SignConvention)
{
    ClassModel m;
    m.training_X = Matrix::Zero(3, 2);
    m.training_X(1, 0) = 1.0;
    m.alpha = Vector::Zero(3);
    m.kernel = {KernelKind::Gaussian, 1.0};
    Rng rng(10);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(predict_label(m, random_vector(rng, 2)), -1);

    ClassModel single;
    single.training_X = Matrix::Ones(1, 2);
    single.alpha = Vector::Constant(1, 0.5);
    single.kernel = {KernelKind::Gaussian, 1.0};
    for (int k = 0; k < 5; ++k) EXPECT_EQ(predict_label(single, random_vector(rng, 2, -5, 5)), 1);
    EXPECT_THROW(predict_label(single, Vector::Zero(3)), InvalidInput);
}
