#pragma once
#include <sgl/classification.hpp>
#include <sgl/datagen.hpp>
#include <sgl/regression.hpp>

#include <json.hpp>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sgl::app {

enum ExitCode : int
{
    kOk = 0,
    kUsage = 1,
    kNumerical = 2,
    kNotConverged = 3
};

/// Parses argv, runs one command, writes the JSON record to --out (or `out`).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Pieces shared by commands, tests and the acceptance suite
// ---------------------------------------------------------------------------

/// Solver settings used for the Turlach comparison: 10-NN weights at the
/// half-median bandwidth and the kernel 1 + <x, u>.
RegressionConfig turlach_regression_config(const Dataset& data);

/// Two-spheres settings: Gaussian weights and kernel at the half-median
/// bandwidth, lambda1 = 1e-3.
ClassificationConfig spheres_classification_config(const Dataset& data);

struct FrequencyTable
{
    std::vector<int> sgl;   // per variable, repeats in which it was selected
    std::vector<int> lasso;
    int repeats = 0;
    int inexact_sgl = 0;    // repeats where exactly 5 variables could not be hit
    int inexact_lasso = 0;
};

/// Turlach repeats r = 0..R-1 with data seed `seed + r`; each method is tuned
/// to exactly `target` variables. Runs on up to `threads` threads; the table
/// does not depend on the thread count.
FrequencyTable selection_frequencies(int repeats, std::uint64_t seed, int threads, Index target = 5);

/// Thread cap from SGL_THREADS (hardware concurrency when unset or invalid).
int thread_cap();

/**
 * Leave-one-out misclassification count: sample i is predicted by a model
 * refitted without it. Bandwidths and all other settings are taken from
 * `cfg` unchanged.
 */
int loo_errors_classification(const Dataset& data, const ClassificationConfig& cfg);

/**
 * Leave-one-out error counts along a strictly descending lambda2 grid
 * (lambda1 and bandwidths from `cfg`). Each fold builds its problem once.
 * With `full_models` (one all-sample fit per grid value) every fold starts
 * from that fit with sample i removed; otherwise from its own solution at
 * the previous grid value. Folds run on up to `threads` threads and the
 * counts do not depend on that number.
 */
std::vector<int> loo_errors_classification_path(const Dataset& data, const ClassificationConfig& cfg,
                                                const std::vector<double>& lambda2_grid, int threads = 1,
                                                const std::vector<ClassModel>* full_models = nullptr);

/**
 * Starting point for a fit on `fold` (all samples but `dropped`) taken from
 * a fit on all samples: the fold coefficients reproduce the full model's
 * f^0 and gradient values at the remaining samples (least squares through
 * the fold's K^+). Zero rows of C~ stay zero.
 */
std::pair<Vector, Matrix> transfer_to_fold(const ClassModel& full, const KernelRoot& full_root,
                                           const ClassificationProblem& fold, Index dropped);

/**
 * Regression tuning score: squared-error LOO of a 1-nearest-neighbour
 * regressor on the training samples projected onto the EDR directions of
 * `C_tilde`. With no directions the prediction is the mean of the other
 * responses.
 */
double loo_score_regression(const Dataset& data, const Matrix& C_tilde);

/// Training error count of sgn(f^0) on `data`.
int misclassified(const ClassModel& model, const Dataset& data);

/// "auto" (50 points), "auto:N", or a comma list of values.
std::vector<double> parse_grid(const std::string& text, double lambda_max);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m); // row-major nested arrays

} // namespace sgl::app
