#pragma once
#include <sgl/types.hpp>

#include <optional>
#include <vector>

namespace sgl {

/// Exactly one of `lambda` / `target_cardinality` must be set.
struct LassoConfig
{
    std::optional<double> lambda;
    std::optional<Index> target_cardinality;
    double tol = 1e-8;
    int max_sweeps = 10000;

    void validate(Index p) const;
};

struct LassoFit
{
    Vector beta;      // original scale
    double intercept = 0.0;
    double lambda = 0.0;
    int sweeps = 0;
    bool converged = false;
    bool cardinality_exact = true;

    Index nonzeros() const;
};

/**
 * Standardized design used internally: centered columns scaled to unit mean
 * square, centered response. Objective (1/2n)|y - X b|^2 + lambda |b|_1 on
 * that scale.
 */
class LassoProblem
{
public:
    explicit LassoProblem(const Dataset& data);

    Index n() const { return Xs_.rows(); }
    Index p() const { return Xs_.cols(); }
    const Matrix& standardized_X() const { return Xs_; }
    const Vector& centered_y() const { return yc_; }
    const Vector& scale() const { return sd_; }

    /// Smallest lambda with an all-zero solution.
    double lambda_max() const;
    double objective(const Vector& beta_std, double lambda) const;

    /// Coordinate descent from `init` (standardized scale).
    LassoFit solve(double lambda, double tol, int max_sweeps, const Vector* init = nullptr,
                   std::vector<double>* sweep_objectives = nullptr) const;

    Vector to_standardized(const Vector& beta) const;

private:
    Matrix Xs_;
    Vector yc_;
    Vector mean_;
    Vector sd_;
    double ymean_ = 0.0;
};

LassoFit lasso_fit(const Dataset& data, const LassoConfig& cfg);

/// Nonzero count hit by bisection on log(lambda); closest count wins, ties toward fewer.
LassoFit lasso_fit_cardinality(const LassoProblem& problem, Index target, double tol,
                               int max_sweeps, int max_steps = 100);

struct LassoPathPoint
{
    double lambda = 0.0;
    Vector beta;
};

/// Warm-started coordinate descent along a strictly descending grid.
std::vector<LassoPathPoint> lasso_path(const Dataset& data, const std::vector<double>& grid,
                                       double tol = 1e-8, int max_sweeps = 10000);

} // namespace sgl
