#include <sgl/errors.hpp>
#include <sgl/regression.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace sgl {

ReduceMode reduce_mode_from_string(const std::string& s)
{
    if (s == "auto") return ReduceMode::Auto;
    if (s == "on") return ReduceMode::On;
    if (s == "off") return ReduceMode::Off;
    throw InvalidInput("reduce mode must be on|off|auto, got '" + s + "'");
}

std::string to_string(ReduceMode m)
{
    switch (m) {
    case ReduceMode::Auto:
        return "auto";
    case ReduceMode::On:
        return "on";
    case ReduceMode::Off:
        return "off";
    }
    return "auto";
}

void RegressionConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidInput("lambda must be a nonnegative finite number");
    }
    if (delta && !(*delta > 0.0)) {
        throw InvalidInput("step size must be positive");
    }
    if (!(tol > 0.0)) {
        throw InvalidInput("tolerance must be positive");
    }
    if (max_iter < 1) {
        throw InvalidInput("max_iter must be positive");
    }
    weight_spec.validate();
    kernel_spec.validate();
}

Matrix prox_group(const Matrix& D, double threshold)
{
    if (!(threshold >= 0.0)) {
        throw InvalidInput("proximity threshold must be nonnegative");
    }
    Matrix out(D.rows(), D.cols());
    for (Index j = 0; j < D.rows(); ++j) {
        const double norm = D.row(j).norm();
        if (norm <= threshold) {
            out.row(j).setZero();
        } else {
            out.row(j) = ((norm - threshold) / norm) * D.row(j);
        }
    }
    return out;
}

ScreenedProx::ScreenedProx(const Matrix& U) : U_(U), u_norms_(U.rowwise().norm()) {}

Matrix ScreenedProx::step(const Matrix& C, const Matrix& B, double delta, double threshold)
{
    if (!(threshold >= 0.0)) {
        throw InvalidInput("proximity threshold must be nonnegative");
    }
    if (B_ref_.size() != 0) {
        const double drift = (B - B_ref_).norm();
        // margin keeps rounding in the bound from admitting a row the exact map would keep
        const double cut = threshold / (delta * (1.0 + 1e-10));
        std::vector<Index> rows;
        Index active = 0;
        for (Index j = 0; j < C.rows(); ++j) {
            const bool nonzero = !C.row(j).isZero(0.0);
            active += nonzero ? 1 : 0;
            if (nonzero || ref_norms_(j) + u_norms_(j) * drift > cut) rows.push_back(j);
        }
        const Index m = static_cast<Index>(rows.size());
        // refresh once the drift admits many more rows than are active
        if (2 * m <= C.rows() && m <= 2 * active + C.rows() / 64) {
            Matrix Us(m, U_.cols());
            Matrix D(m, C.cols());
            for (Index k = 0; k < m; ++k) {
                Us.row(k) = U_.row(rows[static_cast<std::size_t>(k)]);
                D.row(k) = C.row(rows[static_cast<std::size_t>(k)]);
            }
            D -= delta * (Us * B);
            const Matrix shrunk = prox_group(D, threshold);
            Matrix out = Matrix::Zero(C.rows(), C.cols());
            for (Index k = 0; k < m; ++k) out.row(rows[static_cast<std::size_t>(k)]) = shrunk.row(k);
            return out;
        }
    }
    const Matrix G = U_ * B;
    B_ref_ = B;
    ref_norms_ = G.rowwise().norm();
    ++refreshes_;
    return prox_group(C - delta * G, threshold);
}

namespace {

Matrix pairwise_differences(const Vector& y)
{
    const Index n = y.size();
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            d(i, j) = y(i) - y(j);
        }
    }
    return d;
}

bool want_reduction(ReduceMode mode, Index n, Index p)
{
    switch (mode) {
    case ReduceMode::On:
        return true;
    case ReduceMode::Off:
        return false;
    case ReduceMode::Auto:
        return p > n;
    }
    return false;
}

} // namespace

RegressionProblem::RegressionProblem(Dataset data, const WeightSpec& weights,
                                     const KernelSpec& kernel, ReduceMode reduce)
    : RegressionProblem(data, kernel_matrix(data.X, kernel), locality_weights(data.X, weights),
                        want_reduction(reduce, data.n(), data.p()))
{}

RegressionProblem::RegressionProblem(Dataset data, Matrix K, Matrix weights, bool reduce)
    : data_(std::move(data)),
      K_(std::move(K)),
      root_(kernel_sqrt(K_)),
      weights_(std::move(weights)),
      ydiff_(pairwise_differences(data_.y)),
      full_(data_.X.transpose(), weights_, root_.half)
{
    data_.validate(Task::Regression);
    if (K_.rows() != data_.n() || weights_.rows() != data_.n()) {
        throw InvalidInput("kernel or weight matrix does not match the sample count");
    }
    if (reduce) {
        geometry_ = reduced_geometry(data_.X);
        reduced_.emplace(geometry_->beta, weights_, root_.half);
    }
}

void RegressionProblem::check_shape(const Matrix& C_tilde) const
{
    if (C_tilde.rows() != p() || C_tilde.cols() != n()) {
        throw InvalidInput("coefficient matrix is " + std::to_string(C_tilde.rows()) + "x"
                           + std::to_string(C_tilde.cols()) + ", expected " + std::to_string(p())
                           + "x" + std::to_string(n()));
    }
}

Matrix RegressionProblem::residuals(const Matrix& C_tilde) const
{
    check_shape(C_tilde);
    if (reduced_) {
        return ydiff_ + reduced_->margins(project_sparse_rows(geometry_->U, C_tilde));
    }
    return ydiff_ + full_.margins(C_tilde);
}

double RegressionProblem::objective_from_residuals(const Matrix& r, const Matrix& C_tilde,
                                                   double lambda) const
{
    const Index nn = n();
    double data_term = 0.0;
    for (Index i = 0; i < nn; ++i) {
        for (Index j = 0; j < nn; ++j) {
            data_term += weights_(i, j) * r(i, j) * r(i, j);
        }
    }
    data_term /= static_cast<double>(nn) * static_cast<double>(nn);
    double penalty = 0.0;
    if (lambda != 0.0) {
        for (Index j = 0; j < C_tilde.rows(); ++j) {
            penalty += C_tilde.row(j).norm();
        }
    }
    return data_term + lambda * penalty;
}

double RegressionProblem::objective(const Matrix& C_tilde, double lambda) const
{
    return objective_from_residuals(residuals(C_tilde), C_tilde, lambda);
}

double RegressionProblem::smooth_value(const Matrix& C_tilde) const
{
    return objective(C_tilde, 0.0);
}

Matrix RegressionProblem::grad_from_residuals(const Matrix& r) const
{
    const double scale = 2.0 / (static_cast<double>(n()) * static_cast<double>(n()));
    const Matrix S = weights_.cwiseProduct(r);
    if (reduced_) {
        return scale * (geometry_->U * reduced_->adjoint(S));
    }
    return scale * full_.adjoint(S);
}

Matrix RegressionProblem::grad_smooth(const Matrix& C_tilde) const
{
    return grad_from_residuals(residuals(C_tilde));
}

double RegressionProblem::lambda_max() const
{
    const Matrix g0 = grad_smooth(Matrix::Zero(p(), n()));
    const double m = g0.rowwise().norm().maxCoeff();
    // rounded up a few ulps so that lambda = lambda_max itself reproduces the zero solution
    return m * (1.0 + 1e-12);
}

double RegressionProblem::lipschitz() const
{
    if (!lipschitz_) {
        lipschitz_ = reduced_ ? lipschitz_estimate(*reduced_) : lipschitz_estimate(full_);
    }
    return *lipschitz_;
}

RegressionFit fit(const RegressionProblem& problem, const RegressionConfig& cfg, const Matrix* init)
{
    cfg.validate();
    const double L = problem.lipschitz();
    double delta = 1.0 / L;
    if (cfg.delta) {
        if (!(*cfg.delta < 2.0 / L)) {
            throw InvalidInput("step size " + std::to_string(*cfg.delta)
                               + " violates the convergence bound delta < 2/L = "
                               + std::to_string(2.0 / L));
        }
        delta = *cfg.delta;
    }

    Matrix C = Matrix::Zero(problem.p(), problem.n());
    if (init) {
        if (init->rows() != C.rows() || init->cols() != C.cols()) {
            throw InvalidInput("initial coefficient matrix has the wrong shape");
        }
        C = *init;
    }

    RegressionFit out;
    FitReport& rep = out.report;
    rep.step = delta;
    rep.lipschitz = L;
    rep.reduced = problem.reduced();

    const double threshold = cfg.lambda * delta;
    Matrix r = problem.residuals(C);
    double obj = problem.objective_from_residuals(r, C, cfg.lambda);
    const double obj0 = obj;
    rep.objective_trace.push_back(obj);

    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        const Matrix G = problem.grad_from_residuals(r);
        Matrix next = prox_group(C - delta * G, threshold);
        const double change = (next - C).norm() / std::max(1.0, C.norm());
        C = std::move(next);
        r = problem.residuals(C);
        obj = problem.objective_from_residuals(r, C, cfg.lambda);
        rep.objective_trace.push_back(obj);
        if (!std::isfinite(obj) || (obj0 > 0.0 && obj > kDivergenceFactor * obj0)) {
            throw StepSizeError("objective diverged (from " + std::to_string(obj0) + " to "
                                + std::to_string(obj) + "); use a smaller step size");
        }
        if (change <= cfg.tol) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.iterations = it;
    rep.final_objective = obj;
    const Matrix G = problem.grad_from_residuals(r);
    rep.fixed_point_residual = (C - prox_group(C - delta * G, threshold)).norm();
    out.C_tilde = std::move(C);
    return out;
}

RegressionFit fit(const Dataset& data, const RegressionConfig& cfg)
{
    cfg.validate();
    const RegressionProblem problem(data, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
    return fit(problem, cfg);
}

Matrix recover_original_coefficients(const Matrix& C_tilde, const Matrix& K_half_pinv)
{
    if (C_tilde.cols() != K_half_pinv.rows()) {
        throw InvalidInput("coefficient matrix and kernel root have incompatible shapes");
    }
    return C_tilde * K_half_pinv;
}

Matrix gradient_at_samples(const Matrix& C, const Matrix& K)
{
    return C * K;
}

std::vector<double> auto_lambda_grid(double lambda_max, int count, double ratio)
{
    if (count < 1 || !(ratio > 0.0 && ratio < 1.0)) {
        throw InvalidInput("lambda grid needs count >= 1 and 0 < ratio < 1");
    }
    std::vector<double> grid;
    if (!(lambda_max > 0.0)) {
        grid.push_back(0.0);
        return grid;
    }
    if (count == 1) {
        grid.push_back(lambda_max);
        return grid;
    }
    const double lo = std::log(lambda_max * ratio);
    const double hi = std::log(lambda_max);
    for (int k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) / (count - 1);
        grid.push_back(k == 0 ? lambda_max : std::exp(hi + t * (lo - hi)));
    }
    return grid;
}

std::vector<PathPoint> regularization_path(const RegressionProblem& problem,
                                           const RegressionConfig& cfg,
                                           const std::vector<double>& grid)
{
    if (grid.empty()) {
        throw InvalidInput("lambda grid is empty");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] < grid[k - 1])) {
            throw InvalidInput("lambda grid must be strictly descending");
        }
    }
    std::vector<PathPoint> path;
    path.reserve(grid.size());
    Matrix warm = Matrix::Zero(problem.p(), problem.n());
    for (double lambda : grid) {
        RegressionConfig c = cfg;
        c.lambda = lambda;
        RegressionFit f = fit(problem, c, &warm);
        warm = f.C_tilde;
        PathPoint pt;
        pt.lambda = lambda;
        pt.selection = select(f.C_tilde);
        pt.C_tilde = std::move(f.C_tilde);
        pt.report = std::move(f.report);
        path.push_back(std::move(pt));
    }
    return path;
}

CardinalityFit fit_to_cardinality(const RegressionProblem& problem, const RegressionConfig& cfg,
                                  Index target, int max_bisections)
{
    if (target < 0 || target > problem.p()) {
        throw InvalidInput("target cardinality out of range");
    }
    const double lmax = problem.lambda_max();
    CardinalityFit best;
    best.fits = 0;

    // solved lambda -> fit; warm starts come from the nearest solved lambda
    std::map<double, RegressionFit> solved;
    auto solve = [&](double lambda) -> const RegressionFit& {
        const Matrix* init = nullptr;
        double best_gap = std::numeric_limits<double>::infinity();
        for (const auto& [l, f] : solved) {
            const double gap = std::abs(std::log(l) - std::log(lambda));
            if (gap < best_gap) {
                best_gap = gap;
                init = &f.C_tilde;
            }
        }
        RegressionConfig c = cfg;
        c.lambda = lambda;
        RegressionFit f = fit(problem, c, init);
        ++best.fits;
        return solved.insert_or_assign(lambda, std::move(f)).first->second;
    };

    bool have = false;
    Index best_gap = 0;
    auto consider = [&](double lambda, const RegressionFit& f) {
        SelectionResult sel = select(f.C_tilde);
        const Index gap = std::abs(sel.size() - target);
        const bool better = !have || gap < best_gap
                            || (gap == best_gap && sel.size() < best.selection.size());
        if (better) {
            have = true;
            best_gap = gap;
            best.lambda = lambda;
            best.fit = f;
            best.selection = std::move(sel);
            best.exact = gap == 0;
        }
        return best.exact;
    };

    if (!(lmax > 0.0)) {
        // constant response: only the empty set is reachable
        RegressionConfig c = cfg;
        c.lambda = 0.0;
        RegressionFit f = fit(problem, c);
        ++best.fits;
        consider(0.0, f);
        return best;
    }

    if (target == 0) {
        consider(lmax, solve(lmax));
        return best;
    }

    // geometric descent until the selection reaches the target
    double hi = lmax; // fewer than target selected
    double lo = 0.0;  // more than target selected (0: not found yet)
    double lambda = lmax;
    const double shrink = 0.8;
    const double floor = 1e-6 * lmax;
    while (true) {
        lambda *= shrink;
        if (lambda < floor) break;
        const RegressionFit& f = solve(lambda);
        if (consider(lambda, f)) return best;
        const Index size = select(f.C_tilde).size();
        if (size < target) {
            hi = lambda;
        } else {
            lo = lambda;
            break;
        }
    }
    if (lo == 0.0) {
        return best;
    }

    for (int step = 0; step < max_bisections; ++step) {
        const double mid = std::sqrt(hi * lo);
        const RegressionFit& f = solve(mid);
        if (consider(mid, f)) return best;
        const Index size = select(f.C_tilde).size();
        if (size < target) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi / lo < 1.0 + 1e-12) break;
    }
    return best;
}

} // namespace sgl
