#include <sgl/numerics.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

namespace sgl {

void KernelSpec::validate() const
{
    if (kind == KernelKind::Gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
        throw InvalidInput("gaussian kernel bandwidth must be positive, got "
                           + std::to_string(bandwidth));
    }
}

std::string to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::LinearPlusOne:
        return "linear1";
    case KernelKind::Linear:
        return "linear";
    case KernelKind::Gaussian:
        return "gaussian";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& s)
{
    if (s == "linear1" || s == "linear+1" || s == "linearplusone") return KernelKind::LinearPlusOne;
    if (s == "linear") return KernelKind::Linear;
    if (s == "gaussian") return KernelKind::Gaussian;
    throw InvalidInput("unknown kernel '" + s + "'");
}

Matrix kernel_matrix(const Matrix& X, const KernelSpec& spec)
{
    spec.validate();
    const Index n = X.rows();
    Matrix K(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double v = spec(X.row(i).transpose(), X.row(j).transpose());
            if (!std::isfinite(v)) {
                throw InvalidInput("non-finite kernel value for pair (" + std::to_string(i) + ", "
                                   + std::to_string(j) + ")");
            }
            K(i, j) = v;
        }
    }
    Matrix Ks = 0.5 * (K + K.transpose());
    return Ks;
}

Vector kernel_vector(const Matrix& X, const Eigen::Ref<const Vector>& x, const KernelSpec& spec)
{
    if (x.size() != X.cols()) {
        throw InvalidInput("point has " + std::to_string(x.size()) + " coordinates, expected "
                           + std::to_string(X.cols()));
    }
    Vector k(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        k(i) = spec(x, X.row(i).transpose());
    }
    return k;
}

KernelRoot kernel_sqrt(const Matrix& K)
{
    if (K.rows() != K.cols()) {
        throw InvalidInput("kernel matrix must be square");
    }
    const Index n = K.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (K + K.transpose()));
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the kernel matrix failed");
    }
    const Vector& ev = es.eigenvalues();
    const Matrix& Q = es.eigenvectors();
    const double top = n > 0 ? ev.maxCoeff() : 0.0;
    if (n > 0 && ev.minCoeff() < -kNegativeTolerance * std::max(top, 0.0)) {
        std::ostringstream os;
        os << "kernel matrix is not positive semidefinite: eigenvalue " << ev.minCoeff()
           << " against largest " << top;
        throw NumericalError(os.str());
    }
    const double floor = kEigenClamp * std::max(top, 0.0);
    Vector root(n), inv_root(n);
    for (Index i = 0; i < n; ++i) {
        if (ev(i) > floor && ev(i) > 0.0) {
            root(i) = std::sqrt(ev(i));
            inv_root(i) = 1.0 / root(i);
        } else {
            root(i) = 0.0;
            inv_root(i) = 0.0;
        }
    }
    KernelRoot out;
    out.half = Q * root.asDiagonal() * Q.transpose();
    out.half_pinv = Q * inv_root.asDiagonal() * Q.transpose();
    out.half = 0.5 * (out.half + out.half.transpose()).eval();
    out.half_pinv = 0.5 * (out.half_pinv + out.half_pinv.transpose()).eval();
    return out;
}

void WeightSpec::validate() const
{
    if (!(s > 0.0 && std::isfinite(s))) {
        throw InvalidInput("weight bandwidth s must be positive, got " + std::to_string(s));
    }
    if (kind == WeightKind::TruncatedKnn && k_neighbors < 1) {
        throw InvalidInput("k_neighbors must be positive");
    }
}

namespace {

Matrix squared_distances(const Matrix& X)
{
    const Index n = X.rows();
    Matrix D(n, n);
    for (Index i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double d = (X.row(i) - X.row(j)).squaredNorm();
            D(i, j) = d;
            D(j, i) = d;
        }
    }
    return D;
}

} // namespace

Matrix locality_weights(const Matrix& X, const WeightSpec& spec)
{
    spec.validate();
    const Index n = X.rows();
    const Matrix D = squared_distances(X);
    Matrix W = Matrix::Zero(n, n);
    if (spec.kind == WeightKind::GaussianAllPairs) {
        const double denom = 2.0 * spec.s * spec.s;
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                W(i, j) = std::exp(-D(i, j) / denom);
            }
        }
        return W;
    }

    if (spec.k_neighbors >= n) {
        throw InvalidInput("k_neighbors (" + std::to_string(spec.k_neighbors)
                           + ") must be smaller than the sample count (" + std::to_string(n) + ")");
    }
    const double coef = 2.0 / (spec.s * spec.s);
    std::vector<Index> order(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        order.clear();
        for (Index j = 0; j < n; ++j) {
            if (j != i) order.push_back(j);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return D(i, a) < D(i, b); });
        for (int k = 0; k < spec.k_neighbors; ++k) {
            const Index j = order[static_cast<std::size_t>(k)];
            W(i, j) = std::exp(-coef * D(i, j));
        }
    }
    return W;
}

double median_bandwidth(const Matrix& X)
{
    const Index n = X.rows();
    if (n < 2) {
        throw InvalidInput("median bandwidth needs at least 2 samples");
    }
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            dist.push_back((X.row(i) - X.row(j)).norm());
        }
    }
    std::sort(dist.begin(), dist.end());
    const std::size_t m = dist.size();
    const double med = (m % 2 == 1) ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
    if (!(med > 0.0)) {
        throw DegenerateData("median pairwise distance is zero; samples are (mostly) identical");
    }
    return 0.5 * med;
}

Matrix difference_matrix(const Matrix& X)
{
    const Index n = X.rows();
    Matrix M = X.transpose();
    const Vector last = X.row(n - 1).transpose();
    M.colwise() -= last;
    M.col(n - 1).setZero();
    return M;
}

ReducedGeometry reduced_geometry(const Matrix& X)
{
    if (X.rows() < 2) {
        throw InvalidInput("reduced geometry needs at least 2 samples");
    }
    const Matrix M = difference_matrix(X);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("economy SVD of the difference matrix failed");
    }
    ReducedGeometry g;
    g.U = svd.matrixU();
    // U^T M equals Sigma V^T and keeps the anchor column exactly zero
    g.beta = g.U.transpose() * M;
    if (!g.U.allFinite() || !g.beta.allFinite()) {
        throw NumericalError("economy SVD produced non-finite factors");
    }
    return g;
}

Matrix project_sparse_rows(const Matrix& U, const Matrix& C)
{
    std::vector<Index> rows;
    for (Index j = 0; j < C.rows(); ++j) {
        if (!C.row(j).isZero(0.0)) rows.push_back(j);
    }
    if (2 * static_cast<Index>(rows.size()) > C.rows()) {
        return U.transpose() * C;
    }
    Matrix Us(static_cast<Index>(rows.size()), U.cols());
    Matrix Cs(static_cast<Index>(rows.size()), C.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        Us.row(static_cast<Index>(k)) = U.row(rows[k]);
        Cs.row(static_cast<Index>(k)) = C.row(rows[k]);
    }
    return Us.transpose() * Cs;
}

PairwiseOperator::PairwiseOperator(Matrix coords, Matrix weights, Matrix k_half)
    : coords_(std::move(coords)), weights_(std::move(weights)), k_half_(std::move(k_half))
{
    const Index n = weights_.rows();
    if (weights_.cols() != n || k_half_.rows() != n || k_half_.cols() != n || coords_.cols() != n) {
        throw InvalidInput("pairwise operator shapes are inconsistent");
    }
}

Matrix PairwiseOperator::margins(const Matrix& A) const
{
    if (A.rows() != dim() || A.cols() != n()) {
        throw InvalidInput("coefficient matrix has shape " + std::to_string(A.rows()) + "x"
                           + std::to_string(A.cols()) + ", expected " + std::to_string(dim()) + "x"
                           + std::to_string(n()));
    }
    // T_i = A k_i^{1/2};  P(j, i) = z_j^T T_i
    const Matrix T = A * k_half_;
    const Matrix P = coords_.transpose() * T;
    Matrix M = P.transpose();
    for (Index i = 0; i < n(); ++i) {
        M.row(i).array() -= P(i, i);
    }
    return M;
}

Matrix PairwiseOperator::adjoint(const Matrix& S) const
{
    if (S.rows() != n() || S.cols() != n()) {
        throw InvalidInput("pairwise coefficient matrix must be n x n");
    }
    // B_i = sum_j S(i,j) (z_j - z_i)
    const Vector rowsum = S.rowwise().sum();
    Matrix B = coords_ * S.transpose();
    B -= coords_ * rowsum.asDiagonal();
    return B * k_half_;
}

Matrix PairwiseOperator::quadratic_hessian_apply(const Matrix& A) const
{
    const double nn = static_cast<double>(n()) * static_cast<double>(n());
    const Matrix S = weights_.cwiseProduct(margins(A));
    return (2.0 / nn) * adjoint(S);
}

double lipschitz_estimate(const PairwiseOperator& op, const PowerIterationOptions& opts)
{
    const Index rows = op.dim();
    const Index cols = op.n();
    if (op.weights().cwiseAbs().maxCoeff() == 0.0) {
        throw DegenerateData("all locality weights are zero; step size is undefined");
    }
    auto apply = [&](const Vector& v) -> Vector {
        const Eigen::Map<const Matrix> A(v.data(), rows, cols);
        Matrix H = op.quadratic_hessian_apply(A);
        return Eigen::Map<const Vector>(H.data(), H.size());
    };
    return power_lipschitz(apply, rows * cols, opts);
}

} // namespace sgl
