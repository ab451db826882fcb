#include <sgl/classification.hpp>
#include <sgl/errors.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <utility>

namespace sgl {

void ClassificationConfig::validate() const
{
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) {
        throw InvalidInput("lambda1 must be a nonnegative finite number");
    }
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) {
        throw InvalidInput("lambda2 must be a nonnegative finite number");
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

double logistic_loss(double t)
{
    if (t < -30.0) return -t;
    if (t > 30.0) return std::exp(-t);
    return std::log1p(std::exp(-t));
}

double logistic_loss_derivative(double t)
{
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(t));
}

namespace {

bool want_reduction(ReduceMode mode, Index n, Index p)
{
    return mode == ReduceMode::On || (mode == ReduceMode::Auto && p > n);
}

} // namespace

ClassificationProblem::ClassificationProblem(Dataset data, const WeightSpec& weights,
                                             const KernelSpec& kernel, ReduceMode reduce)
    : ClassificationProblem(data, kernel_matrix(data.X, kernel), locality_weights(data.X, weights),
                            want_reduction(reduce, data.n(), data.p()))
{}

ClassificationProblem::ClassificationProblem(Dataset data, Matrix K, Matrix weights, bool reduce)
    : data_(std::move(data)),
      K_(std::move(K)),
      root_(kernel_sqrt(K_)),
      weights_(std::move(weights)),
      full_(data_.X.transpose(), weights_, root_.half)
{
    data_.validate(Task::Classification);
    if (K_.rows() != data_.n() || weights_.rows() != data_.n()) {
        throw InvalidInput("kernel or weight matrix does not match the sample count");
    }
    if (reduce) {
        geometry_ = reduced_geometry(data_.X);
        reduced_.emplace(geometry_->beta, weights_, root_.half);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(K_, Eigen::EigenvaluesOnly);
    k_norm_ = es.eigenvalues().cwiseAbs().maxCoeff();
}

void ClassificationProblem::check_shapes(const Vector& alpha, const Matrix& C_tilde) const
{
    if (alpha.size() != n()) {
        throw InvalidInput("alpha has length " + std::to_string(alpha.size()) + ", expected "
                           + std::to_string(n()));
    }
    if (C_tilde.rows() != p() || C_tilde.cols() != n()) {
        throw InvalidInput("coefficient matrix has the wrong shape");
    }
}

Matrix ClassificationProblem::c_margins(const Matrix& C_tilde) const
{
    if (reduced_) {
        return reduced_->margins(project_sparse_rows(geometry_->U, C_tilde));
    }
    return full_.margins(C_tilde);
}

Matrix ClassificationProblem::c_adjoint(const Matrix& S) const
{
    if (reduced_) {
        return geometry_->U * reduced_->adjoint(S);
    }
    return full_.adjoint(S);
}

Matrix ClassificationProblem::margins(const Vector& alpha, const Matrix& C_tilde) const
{
    check_shapes(alpha, C_tilde);
    Matrix t = c_margins(C_tilde);
    // alpha^T k_i, K symmetric
    const Vector f0 = K_ * alpha;
    t.colwise() += f0;
    return t;
}

double ClassificationProblem::smooth_value(const Vector& alpha, const Matrix& C_tilde,
                                           double lambda1) const
{
    const Matrix t = margins(alpha, C_tilde);
    const Index nn = n();
    double data_term = 0.0;
    for (Index i = 0; i < nn; ++i) {
        for (Index j = 0; j < nn; ++j) {
            data_term += weights_(i, j) * logistic_loss(data_.y(j) * t(i, j));
        }
    }
    data_term /= static_cast<double>(nn) * static_cast<double>(nn);
    return data_term + lambda1 * alpha.dot(K_ * alpha);
}

double ClassificationProblem::objective(const Vector& alpha, const Matrix& C_tilde,
                                        double lambda1, double lambda2) const
{
    double penalty = 0.0;
    for (Index j = 0; j < C_tilde.rows(); ++j) {
        penalty += C_tilde.row(j).norm();
    }
    return smooth_value(alpha, C_tilde, lambda1) + lambda2 * penalty;
}

ClassificationProblem::Gradients ClassificationProblem::gradients(const Vector& alpha,
                                                                  const Matrix& C_tilde,
                                                                  double lambda1) const
{
    const Matrix t = margins(alpha, C_tilde);
    const Index nn = n();
    // S_ij = w_ij y_j phi'(y_j t_ij)
    Matrix S(nn, nn);
    for (Index i = 0; i < nn; ++i) {
        for (Index j = 0; j < nn; ++j) {
            const double yj = data_.y(j);
            S(i, j) = weights_(i, j) * yj * logistic_loss_derivative(yj * t(i, j));
        }
    }
    const double scale = 1.0 / (static_cast<double>(nn) * static_cast<double>(nn));
    Gradients g;
    g.alpha = scale * (K_ * S.rowwise().sum()) + 2.0 * lambda1 * (K_ * alpha);
    g.C_tilde = scale * c_adjoint(S);
    return g;
}

ClassificationProblem::Evaluation ClassificationProblem::evaluate(const Vector& alpha,
                                                                  const Matrix& C_tilde,
                                                                  double lambda1,
                                                                  double lambda2,
                                                                  bool factored) const
{
    const Matrix t = margins(alpha, C_tilde);
    const Index nn = n();
    Matrix S(nn, nn);
    double data_term = 0.0;
    for (Index i = 0; i < nn; ++i) {
        for (Index j = 0; j < nn; ++j) {
            const double yj = data_.y(j);
            const double m = yj * t(i, j);
            data_term += weights_(i, j) * logistic_loss(m);
            S(i, j) = weights_(i, j) * yj * logistic_loss_derivative(m);
        }
    }
    const double scale = 1.0 / (static_cast<double>(nn) * static_cast<double>(nn));
    const Vector Ka = K_ * alpha;
    double penalty = 0.0;
    for (Index j = 0; j < C_tilde.rows(); ++j) {
        penalty += C_tilde.row(j).norm();
    }
    Evaluation e;
    e.objective = scale * data_term + lambda1 * alpha.dot(Ka) + lambda2 * penalty;
    e.grad.alpha = scale * (K_ * S.rowwise().sum()) + 2.0 * lambda1 * Ka;
    if (factored && reduced_) {
        e.c_core = scale * reduced_->adjoint(S);
    } else {
        e.grad.C_tilde = scale * c_adjoint(S);
    }
    return e;
}

double ClassificationProblem::lambda2_max_heuristic() const
{
    const Gradients g = gradients(Vector::Zero(n()), Matrix::Zero(p(), n()), 0.0);
    return g.C_tilde.rowwise().norm().maxCoeff();
}

double ClassificationProblem::logistic_lipschitz() const
{
    if (logistic_lipschitz_) {
        return *logistic_lipschitz_;
    }
    if (weights_.cwiseAbs().maxCoeff() == 0.0) {
        throw DegenerateData("all locality weights are zero; step size is undefined");
    }
    const Index nn = n();
    const PairwiseOperator& op = reduced_ ? *reduced_ : full_;
    const Index d = op.dim();
    const double scale = 0.25 / (static_cast<double>(nn) * static_cast<double>(nn));
    // Hessian bound: (1/4n^2) sum_ij w_ij a_ij a_ij^T, a_ij = d t_ij / d(alpha, C)
    auto apply = [&](const Vector& v) -> Vector {
        const Eigen::Map<const Vector> a(v.data(), nn);
        const Eigen::Map<const Matrix> A(v.data() + nn, d, nn);
        Matrix t = op.margins(A);
        t.colwise() += K_ * a;
        const Matrix S = weights_.cwiseProduct(t);
        Vector out(v.size());
        out.head(nn) = scale * (K_ * S.rowwise().sum());
        const Matrix B = scale * op.adjoint(S);
        out.tail(d * nn) = Eigen::Map<const Vector>(B.data(), B.size());
        return out;
    };
    logistic_lipschitz_ = power_lipschitz(apply, nn + d * nn);
    return *logistic_lipschitz_;
}

double ClassModel::decision(const Eigen::Ref<const Vector>& x) const
{
    return alpha.dot(kernel_vector(training_X, x, kernel));
}

ClassificationFit fit_classification(const ClassificationProblem& problem,
                                     const ClassificationConfig& cfg, const Vector* alpha0,
                                     const Matrix* c0)
{
    cfg.validate();
    const double L = problem.logistic_lipschitz() + cfg.lambda1 * problem.ridge_curvature();
    double delta = 1.0 / L;
    if (cfg.delta) {
        if (!(*cfg.delta < 2.0 / L)) {
            throw InvalidInput("step size " + std::to_string(*cfg.delta)
                               + " violates the convergence bound delta < 2/L = "
                               + std::to_string(2.0 / L));
        }
        delta = *cfg.delta;
    }

    Vector alpha = Vector::Zero(problem.n());
    Matrix C = Matrix::Zero(problem.p(), problem.n());
    if (alpha0) {
        if (alpha0->size() != alpha.size()) throw InvalidInput("initial alpha has the wrong length");
        alpha = *alpha0;
    }
    if (c0) {
        if (c0->rows() != C.rows() || c0->cols() != C.cols()) {
            throw InvalidInput("initial coefficient matrix has the wrong shape");
        }
        C = *c0;
    }

    ClassificationFit out;
    FitReport& rep = out.report;
    rep.step = delta;
    rep.lipschitz = L;
    rep.reduced = problem.reduced();

    const double threshold = cfg.lambda2 * delta;
    std::optional<ScreenedProx> screen;
    if (problem.reduced()) screen.emplace(problem.geometry()->U);
    auto prox_step = [&](const Matrix& Cc, const ClassificationProblem::Evaluation& e) {
        return screen ? screen->step(Cc, e.c_core, delta, threshold)
                      : prox_group(Cc - delta * e.grad.C_tilde, threshold);
    };
    // margins are formed once per iterate and serve both the trace and the next step
    auto ev = problem.evaluate(alpha, C, cfg.lambda1, cfg.lambda2, true);
    double obj = ev.objective;
    const double obj0 = obj;
    rep.objective_trace.push_back(obj);

    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        Vector alpha_next = alpha - delta * ev.grad.alpha;
        Matrix C_next = prox_step(C, ev);
        const double step = std::sqrt((alpha_next - alpha).squaredNorm() + (C_next - C).squaredNorm());
        const double size = std::sqrt(alpha.squaredNorm() + C.squaredNorm());
        alpha = std::move(alpha_next);
        C = std::move(C_next);
        ev = problem.evaluate(alpha, C, cfg.lambda1, cfg.lambda2, true);
        obj = ev.objective;
        rep.objective_trace.push_back(obj);
        if (!std::isfinite(obj) || (obj0 > 0.0 && obj > kDivergenceFactor * obj0)) {
            throw StepSizeError("objective diverged (from " + std::to_string(obj0) + " to "
                                + std::to_string(obj) + "); use a smaller step size");
        }
        if (step / std::max(1.0, size) <= cfg.tol) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.iterations = it;
    rep.final_objective = obj;

    out.alpha_residual = (delta * ev.grad.alpha).norm();
    out.c_residual = (C - prox_step(C, ev)).norm();
    rep.fixed_point_residual = std::hypot(out.alpha_residual, out.c_residual);

    out.model.alpha = std::move(alpha);
    out.model.C_tilde = std::move(C);
    out.model.kernel = cfg.kernel_spec;
    out.model.training_X = problem.data().X;
    out.model.training_fingerprint = fingerprint(problem.data());
    return out;
}

ClassificationFit fit_classification(const Dataset& data, const ClassificationConfig& cfg)
{
    cfg.validate();
    const ClassificationProblem problem(data, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
    return fit_classification(problem, cfg);
}

ClassCardinalityFit fit_classification_to_cardinality(const ClassificationProblem& problem,
                                                      const ClassificationConfig& cfg,
                                                      Index target, int max_bisections)
{
    if (target < 0 || target > problem.p()) {
        throw InvalidInput("target cardinality must lie in [0, p]");
    }
    ClassCardinalityFit best;
    Index best_gap = -1;
    std::map<double, std::pair<Vector, Matrix>> solved;
    auto run = [&](double lambda2) {
        ClassificationConfig c = cfg;
        c.lambda2 = lambda2;
        const std::pair<Vector, Matrix>* init = nullptr;
        double gap = 0.0;
        for (const auto& [l, s] : solved) {
            const double g = std::abs(std::log(l) - std::log(lambda2));
            if (!init || g < gap) {
                init = &s;
                gap = g;
            }
        }
        ClassificationFit f = init ? fit_classification(problem, c, &init->first, &init->second)
                                   : fit_classification(problem, c);
        ++best.fits;
        solved.insert_or_assign(lambda2, std::make_pair(f.model.alpha, f.model.C_tilde));
        SelectionResult sel = select(f.model.C_tilde);
        const Index size = sel.size();
        const Index g = std::abs(size - target);
        if (best_gap < 0 || g < best_gap || (g == best_gap && size < best.selection.size())) {
            best.lambda2 = lambda2;
            best.fit = std::move(f);
            best.selection = std::move(sel);
            best_gap = g;
        }
        return size;
    };

    double hi = problem.lambda2_max_heuristic();
    if (!(hi > 0.0)) {
        run(0.0);
        best.exact = best_gap == 0;
        return best;
    }
    // bracket: size(hi) <= target <= size(lo)
    Index size_hi = run(hi);
    for (int k = 0; k < 30 && size_hi > target; ++k) {
        hi *= 2.0;
        size_hi = run(hi);
    }
    double lo = hi;
    Index size_lo = size_hi;
    for (int k = 0; k < 60 && size_lo < target; ++k) {
        hi = lo;
        lo *= 0.5;
        size_lo = run(lo);
    }
    for (int k = 0; k < max_bisections && best_gap != 0 && size_lo > target; ++k) {
        const double mid = std::sqrt(hi * lo);
        const Index s = run(mid);
        if (s < target) {
            hi = mid;
        } else if (s > target) {
            lo = mid;
        }
    }
    best.exact = best_gap == 0;
    return best;
}

int predict_label(const ClassModel& model, const Eigen::Ref<const Vector>& x)
{
    return model.decision(x) > 0.0 ? 1 : -1;
}

} // namespace sgl
