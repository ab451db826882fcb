#include <sgl/errors.hpp>
#include <sgl/lasso.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace sgl {

void LassoConfig::validate(Index p) const
{
    if (lambda.has_value() == target_cardinality.has_value()) {
        throw InvalidInput("set exactly one of lambda and target_cardinality");
    }
    if (lambda && !(*lambda >= 0.0)) {
        throw InvalidInput("lasso lambda must be nonnegative");
    }
    if (target_cardinality && (*target_cardinality < 0 || *target_cardinality > p)) {
        throw InvalidInput("target cardinality must lie in [0, p]");
    }
    if (!(tol > 0.0) || max_sweeps < 1) {
        throw InvalidInput("lasso tolerance and sweep cap must be positive");
    }
}

Index LassoFit::nonzeros() const
{
    return static_cast<Index>((beta.array() != 0.0).count());
}

LassoProblem::LassoProblem(const Dataset& data)
{
    data.validate(Task::Regression);
    const double n = static_cast<double>(data.n());
    mean_ = data.X.colwise().mean().transpose();
    Xs_ = data.X.rowwise() - mean_.transpose();
    sd_ = (Xs_.colwise().squaredNorm().transpose() / n).cwiseSqrt();
    for (Index j = 0; j < Xs_.cols(); ++j) {
        if (sd_(j) > 0.0) {
            Xs_.col(j) /= sd_(j);
        } else {
            Xs_.col(j).setZero();
        }
    }
    ymean_ = data.y.mean();
    yc_ = data.y.array() - ymean_;
}

double LassoProblem::lambda_max() const
{
    // rounded up a few ulps so that lambda = lambda_max itself reproduces the zero solution
    return (Xs_.transpose() * yc_).cwiseAbs().maxCoeff() / static_cast<double>(n()) * (1.0 + 1e-12);
}

double LassoProblem::objective(const Vector& beta_std, double lambda) const
{
    const Vector r = yc_ - Xs_ * beta_std;
    return r.squaredNorm() / (2.0 * static_cast<double>(n())) + lambda * beta_std.lpNorm<1>();
}

Vector LassoProblem::to_standardized(const Vector& beta) const
{
    return beta.cwiseProduct(sd_);
}

LassoFit LassoProblem::solve(double lambda, double tol, int max_sweeps, const Vector* init,
                             std::vector<double>* sweep_objectives) const
{
    const double nd = static_cast<double>(n());
    Vector b = init ? *init : Vector::Zero(p());
    Vector r = yc_ - Xs_ * b;
    LassoFit out;
    out.lambda = lambda;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < p(); ++j) {
            if (sd_(j) == 0.0) continue;
            const double z = Xs_.col(j).dot(r) / nd + b(j);
            const double next = std::copysign(std::max(std::abs(z) - lambda, 0.0), z);
            const double d = next - b(j);
            if (d != 0.0) {
                r -= d * Xs_.col(j);
                b(j) = next;
                max_change = std::max(max_change, std::abs(d));
            }
        }
        if (sweep_objectives) {
            sweep_objectives->push_back(objective(b, lambda));
        }
        if (max_change <= tol) {
            out.converged = true;
            ++sweep;
            break;
        }
    }
    out.sweeps = sweep;
    out.beta = Vector::Zero(p());
    for (Index j = 0; j < p(); ++j) {
        if (sd_(j) > 0.0) out.beta(j) = b(j) / sd_(j);
    }
    out.intercept = ymean_ - mean_.dot(out.beta);
    return out;
}

LassoFit lasso_fit_cardinality(const LassoProblem& problem, Index target, double tol,
                               int max_sweeps, int max_steps)
{
    const double lmax = problem.lambda_max();
    std::map<double, Vector> solved; // lambda -> standardized beta
    auto run = [&](double lambda) {
        const Vector* init = nullptr;
        double gap = 0.0;
        for (const auto& [l, b] : solved) {
            const double g = std::abs(l - lambda);
            if (!init || g < gap) {
                init = &b;
                gap = g;
            }
        }
        LassoFit f = problem.solve(lambda, tol, max_sweeps, init);
        solved.insert_or_assign(lambda, problem.to_standardized(f.beta));
        return f;
    };

    LassoFit best = run(lmax);
    Index best_gap = std::abs(best.nonzeros() - target);
    auto consider = [&](const LassoFit& f) {
        const Index gap = std::abs(f.nonzeros() - target);
        if (gap < best_gap || (gap == best_gap && f.nonzeros() < best.nonzeros())) {
            best = f;
            best_gap = gap;
        }
    };
    if (best_gap == 0 || !(lmax > 0.0)) {
        best.cardinality_exact = best_gap == 0;
        return best;
    }

    double hi = lmax;          // too few nonzeros
    double lo = 1e-10 * lmax;  // assumed too many
    {
        LassoFit f = run(lo);
        consider(f);
        if (f.nonzeros() <= target) {
            best.cardinality_exact = best_gap == 0;
            return best;
        }
    }
    for (int step = 0; step < max_steps && best_gap != 0; ++step) {
        const double mid = std::sqrt(hi * lo);
        LassoFit f = run(mid);
        consider(f);
        if (f.nonzeros() < target) {
            hi = mid;
        } else if (f.nonzeros() > target) {
            lo = mid;
        } else {
            break;
        }
    }
    best.cardinality_exact = best_gap == 0;
    return best;
}

LassoFit lasso_fit(const Dataset& data, const LassoConfig& cfg)
{
    cfg.validate(data.p());
    const LassoProblem problem(data);
    if (cfg.lambda) {
        return problem.solve(*cfg.lambda, cfg.tol, cfg.max_sweeps);
    }
    return lasso_fit_cardinality(problem, *cfg.target_cardinality, cfg.tol, cfg.max_sweeps);
}

std::vector<LassoPathPoint> lasso_path(const Dataset& data, const std::vector<double>& grid,
                                       double tol, int max_sweeps)
{
    if (grid.empty()) {
        throw InvalidInput("lambda grid is empty");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] < grid[k - 1])) {
            throw InvalidInput("lambda grid must be strictly descending");
        }
    }
    const LassoProblem problem(data);
    std::vector<LassoPathPoint> path;
    Vector warm = Vector::Zero(problem.p());
    for (double lambda : grid) {
        LassoFit f = problem.solve(lambda, tol, max_sweeps, &warm);
        warm = problem.to_standardized(f.beta);
        path.push_back({lambda, std::move(f.beta)});
    }
    return path;
}

} // namespace sgl
