#pragma once
#include <sgl/analysis.hpp>
#include <sgl/numerics.hpp>
#include <sgl/regression.hpp>
#include <sgl/types.hpp>

#include <optional>

namespace sgl {

struct ClassificationConfig
{
    double lambda1 = 0.0; // ridge on f^0
    double lambda2 = 0.0; // group sparsity on the gradient rows
    std::optional<double> delta;
    double tol = 1e-6;
    int max_iter = 10000;
    WeightSpec weight_spec;
    KernelSpec kernel_spec;
    ReduceMode reduce = ReduceMode::Auto;

    void validate() const;
};

/// phi(t) = log(1 + e^{-t}), evaluated without overflow.
double logistic_loss(double t);

/// phi'(t) = -1 / (1 + e^{t}).
double logistic_loss_derivative(double t);

class ClassificationProblem
{
public:
    ClassificationProblem(Dataset data, const WeightSpec& weights, const KernelSpec& kernel,
                          ReduceMode reduce = ReduceMode::Auto);
    ClassificationProblem(Dataset data, Matrix K, Matrix weights, bool reduce);

    const Dataset& data() const { return data_; }
    Index n() const { return data_.n(); }
    Index p() const { return data_.p(); }
    const Matrix& K() const { return K_; }
    const KernelRoot& root() const { return root_; }
    const Matrix& weights() const { return weights_; }
    bool reduced() const { return reduced_.has_value(); }
    const ReducedGeometry* geometry() const { return geometry_ ? &*geometry_ : nullptr; }

    /// t_ij = alpha^T k_i + (x_j - x_i)^T C~ k_i^{1/2}
    Matrix margins(const Vector& alpha, const Matrix& C_tilde) const;

    double objective(const Vector& alpha, const Matrix& C_tilde, double lambda1,
                     double lambda2) const;
    /// Data term plus ridge: the differentiable part.
    double smooth_value(const Vector& alpha, const Matrix& C_tilde, double lambda1) const;

    struct Gradients
    {
        Vector alpha;
        Matrix C_tilde;
    };
    Gradients gradients(const Vector& alpha, const Matrix& C_tilde, double lambda1) const;

    struct Evaluation
    {
        double objective = 0.0;
        Gradients grad;
        Matrix c_core; // factored form: grad.C_tilde = U c_core, grad.C_tilde left empty
    };
    /// Objective and smooth-part gradients from a single margins pass. With
    /// `factored` on a reduced problem the C~ gradient is kept as c_core.
    Evaluation evaluate(const Vector& alpha, const Matrix& C_tilde, double lambda1,
                        double lambda2, bool factored = false) const;


    /// Heuristic lambda2 upper bound: largest row norm of the C~ gradient at (0, 0).
    double lambda2_max_heuristic() const;

    /// Bound on the Hessian of the logistic data term (curvature capped at 1/4).
    double logistic_lipschitz() const;
    /// 2 |K|_2
    double ridge_curvature() const { return 2.0 * k_norm_; }

private:
    void check_shapes(const Vector& alpha, const Matrix& C_tilde) const;
    Matrix c_margins(const Matrix& C_tilde) const;
    Matrix c_adjoint(const Matrix& S) const;

    Dataset data_;
    Matrix K_;
    KernelRoot root_;
    Matrix weights_;
    std::optional<ReducedGeometry> geometry_;
    PairwiseOperator full_;
    std::optional<PairwiseOperator> reduced_;
    double k_norm_ = 0.0;
    mutable std::optional<double> logistic_lipschitz_;
};

struct ClassModel
{
    Vector alpha;
    Matrix C_tilde;
    KernelSpec kernel;
    Matrix training_X;
    std::uint64_t training_fingerprint = 0;

    /// f^0(x) = sum_i alpha_i k(x, x_i)
    double decision(const Eigen::Ref<const Vector>& x) const;
};

struct ClassificationFit
{
    ClassModel model;
    FitReport report;
    double alpha_residual = 0.0; // fixed-point residual of the alpha block
    double c_residual = 0.0;     // fixed-point residual of the C~ block
};

ClassificationFit fit_classification(const ClassificationProblem& problem,
                                     const ClassificationConfig& cfg,
                                     const Vector* alpha0 = nullptr,
                                     const Matrix* c0 = nullptr);

ClassificationFit fit_classification(const Dataset& data, const ClassificationConfig& cfg);

struct ClassCardinalityFit
{
    double lambda2 = 0.0;
    ClassificationFit fit;
    SelectionResult selection;
    bool exact = false;
    int fits = 0;
};

/**
 * Search lambda2 (lambda1 fixed from cfg) for exactly `target` selected
 * variables. The upper end starts at the heuristic bound and doubles while
 * anything is still selected; then log-scale bisection with warm starts.
 */
ClassCardinalityFit fit_classification_to_cardinality(const ClassificationProblem& problem,
                                                      const ClassificationConfig& cfg,
                                                      Index target, int max_bisections = 40);

/// +1 if f^0(x) > 0, otherwise -1.
int predict_label(const ClassModel& model, const Eigen::Ref<const Vector>& x);

} // namespace sgl
