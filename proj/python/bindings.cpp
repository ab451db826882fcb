#include <sgl/analysis.hpp>
#include <sgl/classification.hpp>
#include <sgl/datagen.hpp>
#include <sgl/errors.hpp>
#include <sgl/lasso.hpp>
#include <sgl/regression.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace sgl;

namespace {

Dataset make_dataset(const Matrix& X, const Vector& y)
{
    Dataset d;
    d.X = X;
    d.y = y;
    return d;
}

// weights: "gaussian" or "knn:K"; bandwidth defaults to half the median distance
WeightSpec weights_from(const Matrix& X, const std::string& weights, std::optional<double> bandwidth)
{
    WeightSpec w;
    w.s = bandwidth.value_or(median_bandwidth(X));
    if (weights == "gaussian") {
        w.kind = WeightKind::GaussianAllPairs;
    } else if (weights.rfind("knn:", 0) == 0) {
        w.kind = WeightKind::TruncatedKnn;
        w.k_neighbors = std::stoi(weights.substr(4));
    } else {
        throw InvalidInput("weights must be gaussian or knn:K, got '" + weights + "'");
    }
    w.validate();
    return w;
}

KernelSpec kernel_from(const Matrix& X, const std::string& kernel, std::optional<double> bandwidth)
{
    KernelSpec k;
    k.kind = kernel_kind_from_string(kernel);
    k.bandwidth = bandwidth.value_or(median_bandwidth(X));
    k.validate();
    return k;
}

py::dict report_dict(const FitReport& r)
{
    return py::dict("iterations"_a = r.iterations, "converged"_a = r.converged,
                    "objective"_a = r.final_objective, "objective_trace"_a = r.objective_trace,
                    "fixed_point_residual"_a = r.fixed_point_residual, "step"_a = r.step,
                    "reduced"_a = r.reduced);
}

py::tuple as_tuple(const Dataset& d)
{
    return py::make_tuple(d.X, d.y);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sparse gradient learning: regression and classification with group-sparse gradient estimates";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "turlach",
        [](Index n, Index p, double noise_sigma, std::uint64_t seed) {
            SyntheticSpec s = SyntheticSpec::turlach_defaults(seed);
            s.n = n;
            s.p = p;
            s.noise_sigma = noise_sigma;
            return as_tuple(gen_turlach(s));
        },
        "n"_a = 100, "p"_a = 10, "noise_sigma"_a = 0.22360679774997896, "seed"_a = 1,
        "Samples (X, y) of y = (2x1 - 1)^2 + x2 + x3 + x4 + x5 + noise.");
    m.def("turlach_gradient", [](const Vector& x) { return turlach_gradient(x); }, "x"_a);
    m.def(
        "two_spheres",
        [](double sigma, Index n, Index p, std::uint64_t seed) {
            SyntheticSpec s = SyntheticSpec::two_spheres_defaults(sigma, seed);
            s.n = n;
            s.p = p;
            return as_tuple(gen_two_spheres(s));
        },
        "sigma"_a, "n"_a = 40, "p"_a = 50, "seed"_a = 1,
        "Labels +1 on the radius-3 circle and -1 on the radius-7.5 circle in (x1, x2), noise elsewhere.");

    m.def(
        "regression_lambda_max",
        [](const Matrix& X, const Vector& y, const std::string& weights, const std::string& kernel,
           std::optional<double> bandwidth, std::optional<double> kernel_bandwidth) {
            const Dataset d = make_dataset(X, y);
            return RegressionProblem(d, weights_from(X, weights, bandwidth),
                                     kernel_from(X, kernel, kernel_bandwidth.has_value() ? kernel_bandwidth : bandwidth))
                .lambda_max();
        },
        "X"_a, "y"_a, "weights"_a = "knn:10", "kernel"_a = "linear1", "bandwidth"_a = py::none(),
        "kernel_bandwidth"_a = py::none(), "Smallest lambda whose solution is all zero.");

    m.def(
        "fit_regression",
        [](const Matrix& X, const Vector& y, double lam, const std::string& weights, const std::string& kernel,
           std::optional<double> bandwidth, std::optional<double> kernel_bandwidth, double tol, int max_iter) {
            RegressionConfig cfg;
            cfg.lambda = lam;
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            cfg.weight_spec = weights_from(X, weights, bandwidth);
            cfg.kernel_spec = kernel_from(X, kernel, kernel_bandwidth.has_value() ? kernel_bandwidth : bandwidth);
            const Dataset d = make_dataset(X, y);
            const RegressionProblem pr(d, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
            const RegressionFit f = fit(pr, cfg);
            const Matrix C = recover_original_coefficients(f.C_tilde, pr.root().half_pinv);
            return py::dict("C_tilde"_a = f.C_tilde, "gradients"_a = gradient_at_samples(C, pr.K()),
                            "selected"_a = select(f.C_tilde).selected, "report"_a = report_dict(f.report));
        },
        "X"_a, "y"_a, "lam"_a, "weights"_a = "knn:10", "kernel"_a = "linear1", "bandwidth"_a = py::none(),
        "kernel_bandwidth"_a = py::none(), "tol"_a = 1e-6, "max_iter"_a = 10000,
        "Group-sparse gradient fit. `gradients` holds the estimated gradient at each sample as a column.");

    m.def(
        "fit_classification",
        [](const Matrix& X, const Vector& y, double lambda1, double lambda2, const std::string& weights,
           const std::string& kernel, std::optional<double> bandwidth, std::optional<double> kernel_bandwidth,
           double tol, int max_iter) {
            ClassificationConfig cfg;
            cfg.lambda1 = lambda1;
            cfg.lambda2 = lambda2;
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            cfg.weight_spec = weights_from(X, weights, bandwidth);
            cfg.kernel_spec = kernel_from(X, kernel, kernel_bandwidth.has_value() ? kernel_bandwidth : bandwidth);
            const ClassificationFit f = fit_classification(make_dataset(X, y), cfg);
            return py::dict("alpha"_a = f.model.alpha, "C_tilde"_a = f.model.C_tilde,
                            "selected"_a = select(f.model.C_tilde).selected, "report"_a = report_dict(f.report));
        },
        "X"_a, "y"_a, "lambda1"_a = 1e-3, "lambda2"_a, "weights"_a = "gaussian", "kernel"_a = "gaussian",
        "bandwidth"_a = py::none(), "kernel_bandwidth"_a = py::none(), "tol"_a = 1e-6, "max_iter"_a = 10000,
        "Logistic fit of the base function and its group-sparse gradient. Labels must be +1 or -1.");

    m.def(
        "decision",
        [](const Matrix& X_train, const Vector& alpha, const Matrix& X, const std::string& kernel,
           std::optional<double> kernel_bandwidth) {
            ClassModel model;
            model.alpha = alpha;
            model.kernel = kernel_from(X_train, kernel, kernel_bandwidth);
            model.training_X = X_train;
            Vector out(X.rows());
            for (Index i = 0; i < X.rows(); ++i) out(i) = model.decision(X.row(i).transpose());
            return out;
        },
        "X_train"_a, "alpha"_a, "X"_a, "kernel"_a = "gaussian", "kernel_bandwidth"_a = py::none(),
        "Base-function values sum_i alpha_i k(x, x_i) at the rows of X; the predicted label is their sign.");

    m.def("select", [](const Matrix& C) { return select(C).selected; }, "C_tilde"_a,
          "Indices of the nonzero rows.");
    m.def("segcm", &segcm, "C_tilde"_a, "Empirical gradient outer-product matrix.");
    m.def(
        "edr_directions",
        [](const Matrix& C, std::optional<Index> d) {
            const EdrResult e = edr_directions(C, d);
            return py::make_tuple(e.eigenvalues, e.directions);
        },
        "C_tilde"_a, "d"_a = py::none(), "(eigenvalues, directions) of the gradient outer-product matrix.");

    m.def(
        "lasso",
        [](const Matrix& X, const Vector& y, std::optional<double> lam, std::optional<Index> cardinality) {
            LassoConfig cfg;
            cfg.lambda = lam;
            cfg.target_cardinality = cardinality;
            const LassoFit f = lasso_fit(make_dataset(X, y), cfg);
            return py::make_tuple(f.beta, f.intercept);
        },
        "X"_a, "y"_a, "lam"_a = py::none(), "cardinality"_a = py::none(),
        "Coordinate-descent LASSO on standardized columns; returns (beta, intercept) on the original scale.");
}
