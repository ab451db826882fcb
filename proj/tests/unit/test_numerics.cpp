#include "helpers.hpp"

#include <sgl/numerics.hpp>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace sgl;
using namespace sgl::testing;

TEST(Kernel, SingleZeroSampleLinearPlusOne)
{
    const Matrix X = Matrix::Zero(1, 1);
    const Matrix K = kernel_matrix(X, {KernelKind::LinearPlusOne, 1.0});
    ASSERT_EQ(K.rows(), 1);
    EXPECT_EQ(K(0, 0), 1.0);
}

TEST(Kernel, IdenticalSamplesGaussianAllOnes)
{
    Matrix X(2, 3);
    X << 0.3, -1.0, 2.0, 0.3, -1.0, 2.0;
    for (double bw : {0.1, 1.0, 50.0}) {
        const Matrix K = kernel_matrix(X, {KernelKind::Gaussian, bw});
        EXPECT_TRUE(K.isApprox(Matrix::Ones(2, 2)));
    }
}

TEST(Kernel, UnitVectorsLinearPlusOne)
{
    Matrix X(2, 2);
    X << 1, 0, 0, 1;
    Matrix expected(2, 2);
    expected << 2, 1, 1, 2;
    EXPECT_EQ(kernel_matrix(X, {KernelKind::LinearPlusOne, 1.0}), expected);
}

TEST(Kernel, GramMatricesSymmetricPsd)
{
    Rng rng(7);
    for (KernelKind kind : {KernelKind::LinearPlusOne, KernelKind::Linear, KernelKind::Gaussian}) {
        for (int rep = 0; rep < 5; ++rep) {
            const Matrix X = random_matrix(rng, 12, 4, -2.0, 2.0);
            const Matrix K = kernel_matrix(X, {kind, 0.8});
            EXPECT_EQ(K, K.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> es(K);
            EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
        }
    }
}

TEST(Kernel, EvaluationSymmetric)
{
    Rng rng(3);
    const Vector a = random_vector(rng, 5), b = random_vector(rng, 5);
    for (KernelKind kind : {KernelKind::LinearPlusOne, KernelKind::Linear, KernelKind::Gaussian}) {
        const KernelSpec k{kind, 0.7};
        EXPECT_DOUBLE_EQ(k(a, b), k(b, a));
    }
}

TEST(Kernel, NonFiniteValueNamesPair)
{
    Matrix X(3, 1);
    X << 1.0, 1e200, 2.0;
    try {
        kernel_matrix(X, {KernelKind::Linear, 1.0});
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("pair"), std::string::npos);
    }
}

TEST(Kernel, BadBandwidthRejected)
{
    EXPECT_THROW((KernelSpec{KernelKind::Gaussian, 0.0}.validate()), InvalidInput);
    EXPECT_THROW((KernelSpec{KernelKind::Gaussian, -1.0}.validate()), InvalidInput);
    EXPECT_THROW(kernel_kind_from_string("poly"), InvalidInput);
    EXPECT_EQ(kernel_kind_from_string("gaussian"), KernelKind::Gaussian);
}

TEST(Kernel, VectorMatchesMatrixRow)
{
    Rng rng(11);
    const Matrix X = random_matrix(rng, 6, 3);
    const KernelSpec spec{KernelKind::Gaussian, 0.9};
    const Matrix K = kernel_matrix(X, spec);
    const Vector k2 = kernel_vector(X, X.row(2).transpose(), spec);
    EXPECT_LE((k2 - K.col(2)).norm(), 1e-15);
    EXPECT_THROW(kernel_vector(X, Vector::Zero(4), spec), InvalidInput);
}

TEST(KernelSqrt, Identity)
{
    const KernelRoot r = kernel_sqrt(Matrix::Identity(4, 4));
    EXPECT_TRUE(r.half.isApprox(Matrix::Identity(4, 4), 1e-14));
    EXPECT_TRUE(r.half_pinv.isApprox(Matrix::Identity(4, 4), 1e-14));
}

TEST(KernelSqrt, Diagonal)
{
    Matrix K(2, 2);
    K << 4, 0, 0, 9;
    Matrix expected(2, 2);
    expected << 2, 0, 0, 3;
    const KernelRoot r = kernel_sqrt(K);
    EXPECT_LE((r.half - expected).norm(), 1e-12);
}

TEST(KernelSqrt, RankOneProjector)
{
    Vector v(3);
    v << 1, 2, 2;
    v.normalize();
    const Matrix P = v * v.transpose();
    const KernelRoot r = kernel_sqrt(P);
    EXPECT_LE((r.half - P).norm(), 1e-12);
    EXPECT_LE((r.half_pinv - P).norm(), 1e-12);
    EXPECT_LE((r.half * r.half_pinv * r.half - r.half).norm(), 1e-12);
}

TEST(KernelSqrt, RoundTripOnGramMatrices)
{
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix X = random_matrix(rng, 10, rep + 1);
        const Matrix K = kernel_matrix(X, {KernelKind::LinearPlusOne, 1.0});
        const KernelRoot r = kernel_sqrt(K);
        EXPECT_LE((r.half * r.half - K).norm(), 1e-8 * K.norm());
        EXPECT_LE((r.half * r.half_pinv * r.half - r.half).norm(), 1e-8 * r.half.norm());
        EXPECT_EQ(r.half, r.half.transpose());
        EXPECT_EQ(r.half_pinv, r.half_pinv.transpose());
    }
}

TEST(KernelSqrt, MaterialNegativeEigenvalueRejected)
{
    Matrix K(2, 2);
    K << 1, 0, 0, -0.01;
    EXPECT_THROW(kernel_sqrt(K), NumericalError);
    K(1, 1) = -1e-9; // rounding-level negativity is clamped
    EXPECT_NO_THROW(kernel_sqrt(K));
}

TEST(Weights, GaussianDiagonalAndDistanceS)
{
    Matrix X(2, 2);
    X << 0, 0, 3, 4; // distance 5
    const Matrix W = locality_weights(X, {WeightKind::GaussianAllPairs, 5.0, 1});
    EXPECT_EQ(W(0, 0), 1.0);
    EXPECT_EQ(W(1, 1), 1.0);
    EXPECT_NEAR(W(0, 1), std::exp(-0.5), 1e-15);
    EXPECT_EQ(W(0, 1), W(1, 0));
}

TEST(Weights, KnnCollinearPattern)
{
    Matrix X(3, 1);
    X << 0, 1, 10;
    const Matrix W = locality_weights(X, {WeightKind::TruncatedKnn, 2.0, 1});
    EXPECT_GT(W(0, 1), 0.0);
    EXPECT_EQ(W(0, 2), 0.0);
    EXPECT_GT(W(1, 0), 0.0);
    EXPECT_EQ(W(1, 2), 0.0);
    EXPECT_EQ(W(2, 0), 0.0);
    EXPECT_GT(W(2, 1), 0.0);
    EXPECT_NEAR(W(0, 1), std::exp(-2.0 * 1.0 / 4.0), 1e-15);
    EXPECT_DOUBLE_EQ(W(2, 1), std::exp(-2.0 * 81.0 / 4.0));
    EXPECT_EQ(W(0, 0), 0.0); // self excluded
}

TEST(Weights, KnnMatchesBruteForceEnumeration)
{
    Rng rng(21);
    const Matrix X = random_matrix(rng, 15, 3);
    const int k = 4;
    const double s = 0.6;
    const Matrix W = locality_weights(X, {WeightKind::TruncatedKnn, s, k});
    for (Index i = 0; i < X.rows(); ++i) {
        std::vector<std::pair<double, Index>> d;
        for (Index j = 0; j < X.rows(); ++j) {
            if (j != i) d.emplace_back((X.row(i) - X.row(j)).squaredNorm(), j);
        }
        std::sort(d.begin(), d.end());
        for (std::size_t r = 0; r < d.size(); ++r) {
            const Index j = d[r].second;
            if (static_cast<int>(r) < k) {
                EXPECT_NEAR(W(i, j), std::exp(-2.0 * d[r].first / (s * s)), 1e-15);
            } else {
                EXPECT_EQ(W(i, j), 0.0);
            }
        }
    }
}

TEST(Weights, KnnTiesGoToLowerIndex)
{
    Matrix X(3, 1);
    X << 0, -1, 1; // samples 1 and 2 are equidistant from sample 0
    const Matrix W = locality_weights(X, {WeightKind::TruncatedKnn, 1.0, 1});
    EXPECT_GT(W(0, 1), 0.0);
    EXPECT_EQ(W(0, 2), 0.0);
}

TEST(Weights, RangeAndSymmetry)
{
    Rng rng(8);
    const Matrix X = random_matrix(rng, 20, 5);
    const Matrix G = locality_weights(X, {WeightKind::GaussianAllPairs, 0.5, 1});
    EXPECT_EQ(G, G.transpose());
    EXPECT_GE(G.minCoeff(), 0.0);
    EXPECT_LE(G.maxCoeff(), 1.0);
    EXPECT_EQ(G.diagonal(), Vector::Ones(20));
    const Matrix N = locality_weights(X, {WeightKind::TruncatedKnn, 0.5, 3});
    EXPECT_GE(N.minCoeff(), 0.0);
    EXPECT_LE(N.maxCoeff(), 1.0);
    for (Index i = 0; i < 20; ++i) {
        EXPECT_EQ((N.row(i).array() > 0.0).count(), 3);
    }
}

TEST(Weights, InvalidSpecs)
{
    const Matrix X = Matrix::Identity(3, 3);
    EXPECT_THROW(locality_weights(X, {WeightKind::TruncatedKnn, 1.0, 3}), InvalidInput);
    EXPECT_THROW(locality_weights(X, {WeightKind::GaussianAllPairs, 0.0, 1}), InvalidInput);
    EXPECT_THROW(locality_weights(X, {WeightKind::TruncatedKnn, 1.0, 0}), InvalidInput);
}

TEST(MedianBandwidth, SinglePair)
{
    Matrix X(2, 2);
    X << 0, 0, 0, 4;
    EXPECT_DOUBLE_EQ(median_bandwidth(X), 2.0);
}

TEST(MedianBandwidth, ThreeDistances)
{
    Matrix X(3, 1);
    X << 0, 1, 3; // distances 1, 3, 2
    EXPECT_DOUBLE_EQ(median_bandwidth(X), 1.0);
}

TEST(MedianBandwidth, EvenCountUsesCentralMean)
{
    Matrix X(4, 1);
    X << 0, 1, 3, 7; // distances 1, 3, 7, 2, 6, 4 -> median (3 + 4) / 2
    EXPECT_DOUBLE_EQ(median_bandwidth(X), 1.75);
}

TEST(MedianBandwidth, BruteForceOracle)
{
    Rng rng(13);
    const Matrix X = random_matrix(rng, 10, 4);
    std::vector<double> d;
    for (Index i = 0; i < 10; ++i)
        for (Index j = i + 1; j < 10; ++j) d.push_back((X.row(i) - X.row(j)).norm());
    ASSERT_EQ(d.size(), 45u);
    std::sort(d.begin(), d.end());
    EXPECT_NEAR(median_bandwidth(X), 0.5 * d[22], 1e-15);
}

TEST(MedianBandwidth, IdenticalSamplesDegenerate)
{
    const Matrix X = Matrix::Ones(5, 3);
    EXPECT_THROW(median_bandwidth(X), DegenerateData);
}

TEST(ReducedGeometry, IdenticalSamplesGiveZeroBeta)
{
    const Matrix X = Matrix::Constant(4, 3, 2.5);
    const ReducedGeometry g = reduced_geometry(X);
    EXPECT_EQ(g.beta.norm(), 0.0);
}

TEST(ReducedGeometry, TwoSamples)
{
    Matrix X(2, 2);
    X << 3, 4, 0, 0;
    const ReducedGeometry g = reduced_geometry(X);
    EXPECT_NEAR(g.beta.col(0).norm(), 5.0, 1e-12);
    EXPECT_EQ(g.beta.col(1).norm(), 0.0);
}

TEST(ReducedGeometry, ReconstructionBothShapes)
{
    Rng rng(17);
    for (auto [n, p] : {std::pair<Index, Index>{5, 8}, {8, 5}, {6, 6}, {10, 50}}) {
        const Matrix X = random_matrix(rng, n, p);
        const Matrix M = difference_matrix(X);
        EXPECT_EQ(M.col(n - 1).norm(), 0.0);
        const ReducedGeometry g = reduced_geometry(X);
        EXPECT_EQ(g.U.rows(), p);
        EXPECT_EQ(g.U.cols(), std::min(n, p));
        EXPECT_LE((g.U * g.beta - M).norm(), 1e-10 * std::max(1.0, M.norm()));
        const Matrix I = Matrix::Identity(g.U.cols(), g.U.cols());
        EXPECT_LE((g.U.transpose() * g.U - I).norm(), 1e-10);
    }
}

TEST(ReducedGeometry, SparseRowProjectionMatchesDense)
{
    Rng rng(29);
    const Matrix U = random_matrix(rng, 40, 6);
    for (int nonzero : {0, 3, 19, 21, 40}) {
        Matrix C = Matrix::Zero(40, 6);
        for (int k = 0; k < nonzero; ++k) C.row((7 * k) % 40) = random_matrix(rng, 1, 6);
        EXPECT_LE((project_sparse_rows(U, C) - U.transpose() * C).norm(), 1e-12) << nonzero;
    }
}

namespace {

Matrix naive_margins(const Matrix& Z, const Matrix& A, const Matrix& Kh)
{
    const Index n = Z.cols();
    Matrix t(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) t(i, j) = (Z.col(j) - Z.col(i)).dot(A * Kh.col(i));
    return t;
}

} // namespace

TEST(PairwiseOperator, MarginsMatchLoopAndAdjointIdentity)
{
    Rng rng(31);
    const Index n = 7, d = 4;
    const Matrix Z = random_matrix(rng, d, n);
    const Matrix W = random_matrix(rng, n, n, 0.0, 1.0);
    const Matrix Kh = kernel_sqrt(kernel_matrix(random_matrix(rng, n, 3), {KernelKind::Gaussian, 1.0})).half;
    const PairwiseOperator op(Z, W, Kh);
    const Matrix A = random_matrix(rng, d, n);
    const Matrix S = random_matrix(rng, n, n);
    EXPECT_LE((op.margins(A) - naive_margins(Z, A, Kh)).norm(), 1e-12);
    const double lhs = (S.array() * op.margins(A).array()).sum();
    const double rhs = (op.adjoint(S).array() * A.array()).sum();
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
    EXPECT_THROW(op.margins(Matrix::Zero(d + 1, n)), InvalidInput);
}

TEST(Lipschitz, SinglePairHandExample)
{
    Matrix Z(1, 2);
    Z << 0, 1; // z_2 - z_1 = e_1
    Matrix W = Matrix::Zero(2, 2);
    W(0, 1) = 1.0;
    const PairwiseOperator op(Z, W, Matrix::Identity(2, 2));
    EXPECT_NEAR(lipschitz_estimate(op), 0.505, 1e-6);
}

TEST(Lipschitz, ScalesWithWeights)
{
    Rng rng(41);
    const Index n = 6, d = 3;
    const Matrix Z = random_matrix(rng, d, n);
    const Matrix W = random_matrix(rng, n, n, 0.0, 1.0);
    const Matrix Kh = Matrix::Identity(n, n);
    const double L1 = lipschitz_estimate(PairwiseOperator(Z, W, Kh));
    const double L4 = lipschitz_estimate(PairwiseOperator(Z, 4.0 * W, Kh));
    EXPECT_NEAR(L4 / L1, 4.0, 4e-2);
}

TEST(Lipschitz, DenseHessianOracle)
{
    Rng rng(43);
    for (int rep = 0; rep < 5; ++rep) {
        const Index n = 6, p = 4;
        const Matrix X = random_matrix(rng, n, p);
        const Matrix W = locality_weights(X, {WeightKind::GaussianAllPairs, 0.7, 1});
        const Matrix Kh = kernel_sqrt(kernel_matrix(X, {KernelKind::LinearPlusOne, 1.0})).half;
        const PairwiseOperator op(X.transpose(), W, Kh);
        // H = (2/n^2) sum_ij w_ij b_ij b_ij^T with b_ij = vec((x_j - x_i) k_i^T)
        Matrix H = Matrix::Zero(p * n, p * n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                const Matrix B = (X.row(j) - X.row(i)).transpose() * Kh.col(i).transpose();
                const Eigen::Map<const Vector> b(B.data(), B.size());
                H += (2.0 / (n * n)) * W(i, j) * b * b.transpose();
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        const double L = lipschitz_estimate(op);
        EXPECT_LE(std::abs(L - top), 0.02 * top);
        EXPECT_GE(L, 0.99 * top);
    }
}

TEST(Lipschitz, ZeroWeightsDegenerate)
{
    const PairwiseOperator op(Matrix::Ones(2, 3), Matrix::Zero(3, 3), Matrix::Identity(3, 3));
    EXPECT_THROW(lipschitz_estimate(op), DegenerateData);
}
