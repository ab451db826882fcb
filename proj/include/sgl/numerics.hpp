#pragma once
#include <sgl/errors.hpp>
#include <sgl/rng.hpp>
#include <sgl/types.hpp>

#include <cmath>
#include <string>

namespace sgl {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

enum class KernelKind
{
    LinearPlusOne, // 1 + <x, u>
    Linear,        // <x, u>
    Gaussian       // exp(-|x - u|^2 / (2 bw^2))
};

struct KernelSpec
{
    KernelKind kind = KernelKind::LinearPlusOne;
    double bandwidth = 1.0;

    void validate() const;

    template <class A, class B>
    double operator()(const A& x, const B& u) const
    {
        switch (kind) {
        case KernelKind::LinearPlusOne:
            return 1.0 + x.dot(u);
        case KernelKind::Linear:
            return x.dot(u);
        case KernelKind::Gaussian:
            return std::exp(-(x - u).squaredNorm() / (2.0 * bandwidth * bandwidth));
        }
        return 0.0;
    }
};

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

/// Gram matrix over the rows of X, symmetrized as (K + K^T) / 2.
Matrix kernel_matrix(const Matrix& X, const KernelSpec& spec);

/// k(x, x_i) for every row x_i of X.
Vector kernel_vector(const Matrix& X, const Eigen::Ref<const Vector>& x, const KernelSpec& spec);

// Relative eigenvalue floor for square roots and pseudo-inverses.
inline constexpr double kEigenClamp = 1e-12;
// Below -kNegativeTolerance * max_eigenvalue a Gram matrix is rejected.
inline constexpr double kNegativeTolerance = 1e-6;

struct KernelRoot
{
    Matrix half;      // K^{1/2}
    Matrix half_pinv; // Moore-Penrose inverse of K^{1/2}
};

KernelRoot kernel_sqrt(const Matrix& K);

// ---------------------------------------------------------------------------
// Locality weights
// ---------------------------------------------------------------------------

enum class WeightKind
{
    GaussianAllPairs, // exp(-|x_j - x_i|^2 / (2 s^2)) for every pair
    TruncatedKnn      // exp(-2 |x_i - x_j|^2 / s^2) if x_j is a k-NN of x_i, else 0
};

struct WeightSpec
{
    WeightKind kind = WeightKind::GaussianAllPairs;
    double s = 1.0;
    int k_neighbors = 10;

    void validate() const;
};

/**
 * n x n weight matrix, row i = anchor sample i.
 *
 * TruncatedKnn weights are generally asymmetric. Neighbors exclude the
 * sample itself; ties in distance go to the lower sample index.
 */
Matrix locality_weights(const Matrix& X, const WeightSpec& spec);

/// Half the median pairwise Euclidean distance between rows of X.
double median_bandwidth(const Matrix& X);

// ---------------------------------------------------------------------------
// Economy SVD of the centered difference matrix
// ---------------------------------------------------------------------------

/**
 * M_x = (x_1 - x_n, ..., x_n - x_n) = U * beta.
 *
 * U has m = min(p, n) orthonormal columns and beta = U^T M_x = Sigma V^T is
 * m x n; its last column is exactly zero.
 * For p >= n this is the usual p x n / n x n pair; for p < n the factor U
 * is square orthogonal and beta keeps only p rows, which still reproduces
 * M_x exactly.
 */
struct ReducedGeometry
{
    Matrix U;
    Matrix beta;
};

Matrix difference_matrix(const Matrix& X);
ReducedGeometry reduced_geometry(const Matrix& X);

/// U^T C summed over the nonzero rows of C only (group-sparse iterates).
Matrix project_sparse_rows(const Matrix& U, const Matrix& C);

// ---------------------------------------------------------------------------
// Pairwise Taylor operator
// ---------------------------------------------------------------------------

/**
 * Linear operator shared by every pairwise first-order Taylor loss.
 *
 * Samples are given in some coordinate system Z (d x n, column i is z_i);
 * with Z = X^T the operator acts on the full p x n coefficient matrix, with
 * Z = beta it acts on the U-projected n x n one. For a coefficient matrix A
 * (d x n):
 *
 *   margins(A)(i, j) = (z_j - z_i)^T A k_i^{1/2}
 *   adjoint(S)       = sum_ij S(i, j) (z_j - z_i) (k_i^{1/2})^T
 *
 * so that <S, margins(A)> = <adjoint(S), A>.
 */
class PairwiseOperator
{
public:
    PairwiseOperator(Matrix coords, Matrix weights, Matrix k_half);

    Index n() const { return weights_.rows(); }
    Index dim() const { return coords_.rows(); }

    const Matrix& coords() const { return coords_; }
    const Matrix& weights() const { return weights_; }
    const Matrix& k_half() const { return k_half_; }

    Matrix margins(const Matrix& A) const;
    Matrix adjoint(const Matrix& S) const;

    /// Hessian of (1/n^2) sum_ij w_ij margins(A)(i,j)^2 applied to A.
    Matrix quadratic_hessian_apply(const Matrix& A) const;

private:
    Matrix coords_;
    Matrix weights_;
    Matrix k_half_;
};

// ---------------------------------------------------------------------------
// Lipschitz estimation
// ---------------------------------------------------------------------------

struct PowerIterationOptions
{
    double rel_tol = 1e-6;
    int max_iter = 200;
    double safety = 1.01;
    std::uint64_t seed = 0x5eed5eedULL;
};

/**
 * Largest eigenvalue of a symmetric PSD linear map on R^dim via power
 * iteration, multiplied by the safety factor. `apply` takes and returns a
 * Vector of length dim.
 */
template <class Apply>
double power_lipschitz(Apply&& apply, Index dim, const PowerIterationOptions& opts = {})
{
    Rng rng(opts.seed);
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) {
        v(i) = rng.uniform(-1.0, 1.0);
    }
    v.normalize();
    double rho = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        Vector w = apply(v);
        const double rho_new = v.dot(w);
        const double wn = w.norm();
        if (!(wn > 0.0)) {
            if (it == 0) {
                throw DegenerateData("smooth term has a zero Hessian; step size is undefined");
            }
            break;
        }
        const bool done = it > 0 && std::abs(rho_new - rho) <= opts.rel_tol * std::abs(rho_new);
        rho = rho_new;
        v = w / wn;
        if (done) {
            break;
        }
    }
    if (!(rho > 0.0)) {
        throw DegenerateData("smooth term has a zero Hessian; step size is undefined");
    }
    return opts.safety * rho;
}

/// L for the regression smooth term (1/n^2) sum w_ij (r_ij)^2 expressed through op.
double lipschitz_estimate(const PairwiseOperator& op, const PowerIterationOptions& opts = {});

} // namespace sgl
