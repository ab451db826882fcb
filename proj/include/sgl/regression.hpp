#pragma once
#include <sgl/analysis.hpp>
#include <sgl/numerics.hpp>
#include <sgl/types.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace sgl {

enum class ReduceMode
{
    Auto, // reduced iteration when p > n
    On,
    Off
};

ReduceMode reduce_mode_from_string(const std::string& s);
std::string to_string(ReduceMode m);

struct RegressionConfig
{
    double lambda = 0.0;
    std::optional<double> delta; // unset: 1 / L
    double tol = 1e-6;
    int max_iter = 10000;
    WeightSpec weight_spec;
    KernelSpec kernel_spec;
    ReduceMode reduce = ReduceMode::Auto;

    void validate() const;
};

struct FitReport
{
    int iterations = 0;
    double final_objective = 0.0;
    std::vector<double> objective_trace; // objective at C^(0), C^(1), ...
    double fixed_point_residual = 0.0;
    bool converged = false;
    double step = 0.0;
    double lipschitz = 0.0;
    bool reduced = false;
};

/// Growth of the objective over its starting value treated as divergence.
inline constexpr double kDivergenceFactor = 1e6;

/// Row-wise group soft-thresholding: the proximity map of threshold * sum_j |d^j|_2.
Matrix prox_group(const Matrix& D, double threshold);

/**
 * Repeated prox_group(C - delta * U * B, threshold) for a slowly changing B
 * without forming U * B in full every time. Row norms of the last full
 * product bound the current ones,
 *   |u_j^T B| <= |u_j^T B_ref| + |u_j| |B - B_ref|_F,
 * so zero rows of C that provably stay zero are skipped. The result equals
 * the dense step; the full product is redone once the bound admits too
 * many rows.
 */
class ScreenedProx
{
public:
    explicit ScreenedProx(const Matrix& U);

    Matrix step(const Matrix& C, const Matrix& B, double delta, double threshold);

    int refreshes() const { return refreshes_; }

private:
    const Matrix& U_;
    Vector u_norms_;
    Matrix B_ref_;
    Vector ref_norms_; // |u_j^T B_ref|
    int refreshes_ = 0;
};

/**
 * Everything about one training set that the solver reuses across
 * iterations and across lambda values: K, K^{1/2}, weights, the pairwise
 * operators and (optionally) the economy-SVD factorization.
 */
class RegressionProblem
{
public:
    RegressionProblem(Dataset data, const WeightSpec& weights, const KernelSpec& kernel,
                      ReduceMode reduce = ReduceMode::Auto);

    // Direct construction from precomputed K and weights.
    RegressionProblem(Dataset data, Matrix K, Matrix weights, bool reduce);

    const Dataset& data() const { return data_; }
    Index n() const { return data_.n(); }
    Index p() const { return data_.p(); }
    const Matrix& K() const { return K_; }
    const KernelRoot& root() const { return root_; }
    const Matrix& weights() const { return weights_; }
    bool reduced() const { return reduced_.has_value(); }
    const ReducedGeometry* geometry() const { return geometry_ ? &*geometry_ : nullptr; }
    const PairwiseOperator& full_operator() const { return full_; }

    /// r_ij = y_i - y_j + (x_j - x_i)^T C~ k_i^{1/2}, computed on the active path.
    Matrix residuals(const Matrix& C_tilde) const;

    /// (1/n^2) sum_ij w_ij r_ij^2 + lambda sum_j |c~^j|_2, row-major over (i, j).
    double objective(const Matrix& C_tilde, double lambda) const;
    double smooth_value(const Matrix& C_tilde) const;
    double objective_from_residuals(const Matrix& r, const Matrix& C_tilde, double lambda) const;

    Matrix grad_smooth(const Matrix& C_tilde) const;
    Matrix grad_from_residuals(const Matrix& r) const;

    /// Smallest lambda whose solution is exactly zero.
    double lambda_max() const;

    /// Operator norm estimate of the Hessian of the smooth term (cached).
    double lipschitz() const;

private:
    void check_shape(const Matrix& C_tilde) const;

    Dataset data_;
    Matrix K_;
    KernelRoot root_;
    Matrix weights_;
    Matrix ydiff_;
    std::optional<ReducedGeometry> geometry_;
    PairwiseOperator full_;
    std::optional<PairwiseOperator> reduced_;
    mutable std::optional<double> lipschitz_;
};

struct RegressionFit
{
    Matrix C_tilde;
    FitReport report;
};

/**
 * Forward-backward splitting:
 *   D = C~ - delta grad(C~),  C~ <- prox_group(D, lambda delta)
 * from `init` (zero when null) until the relative Frobenius step is at most
 * tol or max_iter is reached.
 */
RegressionFit fit(const RegressionProblem& problem, const RegressionConfig& cfg,
                  const Matrix* init = nullptr);

RegressionFit fit(const Dataset& data, const RegressionConfig& cfg);

/// C = C~ K^{-1/2}.
Matrix recover_original_coefficients(const Matrix& C_tilde, const Matrix& K_half_pinv);

/// f^j(x_i) for every variable j and training sample i, via C K.
Matrix gradient_at_samples(const Matrix& C, const Matrix& K);

struct PathPoint
{
    double lambda = 0.0;
    SelectionResult selection;
    Matrix C_tilde;
    FitReport report;
};

/// `count` values log-spaced from lambda_max down to ratio * lambda_max.
std::vector<double> auto_lambda_grid(double lambda_max, int count = 50, double ratio = 1e-3);

/// Warm-started fits along a strictly descending grid.
std::vector<PathPoint> regularization_path(const RegressionProblem& problem,
                                           const RegressionConfig& cfg,
                                           const std::vector<double>& grid);

struct CardinalityFit
{
    double lambda = 0.0;
    RegressionFit fit;
    SelectionResult selection;
    bool exact = false; // false: closest size found, preferring fewer variables
    int fits = 0;
};

/**
 * Search lambda so that exactly `target` variables are selected: a geometric
 * descent from lambda_max followed by log-scale bisection, warm-starting
 * every fit from the nearest solved lambda.
 */
CardinalityFit fit_to_cardinality(const RegressionProblem& problem, const RegressionConfig& cfg,
                                  Index target, int max_bisections = 60);

} // namespace sgl
