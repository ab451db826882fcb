#include "app.hpp"

#include <sgl/analysis.hpp>
#include <sgl/errors.hpp>
#include <sgl/lasso.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

namespace sgl::app {

using nlohmann::json;

json to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json to_json(const Matrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double parse_number(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) {
        throw InvalidInput("cannot parse " + what + " '" + s + "'");
    }
    return v;
}

} // namespace

std::vector<double> parse_grid(const std::string& text, double lambda_max)
{
    if (text.rfind("auto", 0) == 0) {
        int count = 50;
        if (text.size() > 4) {
            if (text[4] != ':') throw InvalidInput("grid must be auto, auto:N or a comma list");
            count = static_cast<int>(parse_number(text.substr(5), "grid size"));
        }
        if (count < 1) throw InvalidInput("lambda grid is empty");
        if (!(lambda_max > 0.0)) return {0.0};
        return auto_lambda_grid(lambda_max, count);
    }
    std::vector<double> grid;
    for (const auto& tok : split(text, ',')) {
        grid.push_back(parse_number(tok, "grid value"));
    }
    if (grid.empty()) throw InvalidInput("lambda grid is empty");
    for (double g : grid) {
        if (!(g >= 0.0)) throw InvalidInput("grid values must be nonnegative");
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

RegressionConfig turlach_regression_config(const Dataset& data)
{
    RegressionConfig cfg;
    const double s = median_bandwidth(data.X);
    cfg.weight_spec = {WeightKind::TruncatedKnn, s, 10};
    cfg.kernel_spec = {KernelKind::LinearPlusOne, 1.0};
    return cfg;
}

ClassificationConfig spheres_classification_config(const Dataset& data)
{
    ClassificationConfig cfg;
    const double s = median_bandwidth(data.X);
    cfg.weight_spec = {WeightKind::GaussianAllPairs, s, 10};
    cfg.kernel_spec = {KernelKind::Gaussian, s};
    cfg.lambda1 = 1e-3;
    return cfg;
}

int thread_cap()
{
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SGL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    return static_cast<int>(hw);
}

FrequencyTable selection_frequencies(int repeats, std::uint64_t seed, int threads, Index target)
{
    if (repeats < 1) throw InvalidInput("repeats must be positive");
    const Index p = SyntheticSpec::turlach_defaults().p;
    struct Outcome
    {
        SelectionResult sgl;
        Vector lasso;
        bool sgl_exact = false;
        bool lasso_exact = false;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(repeats));
    std::vector<std::string> failures(outcomes.size());
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < repeats; r = next++) {
            try {
                const Dataset d = gen_turlach(SyntheticSpec::turlach_defaults(seed + r));
                const RegressionConfig cfg = turlach_regression_config(d);
                const RegressionProblem problem(d, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
                CardinalityFit cf = fit_to_cardinality(problem, cfg, target);
                const LassoProblem lp(d);
                const LassoFit lf = lasso_fit_cardinality(lp, target, 1e-8, 10000);
                auto& o = outcomes[static_cast<std::size_t>(r)];
                o.sgl = std::move(cf.selection);
                o.sgl_exact = cf.exact;
                o.lasso = lf.beta;
                o.lasso_exact = lf.cardinality_exact;
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(r)] = e.what();
            }
        }
    };
    const int nthreads = std::clamp(threads, 1, repeats);
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t r = 0; r < failures.size(); ++r) {
        if (!failures[r].empty()) {
            throw NumericalError("repeat " + std::to_string(r) + ": " + failures[r]);
        }
    }

    FrequencyTable table;
    table.repeats = repeats;
    table.sgl.assign(static_cast<std::size_t>(p), 0);
    table.lasso.assign(static_cast<std::size_t>(p), 0);
    for (const auto& o : outcomes) {
        for (Index j : o.sgl.selected) ++table.sgl[static_cast<std::size_t>(j)];
        for (Index j = 0; j < p; ++j) {
            if (o.lasso(j) != 0.0) ++table.lasso[static_cast<std::size_t>(j)];
        }
        table.inexact_sgl += o.sgl_exact ? 0 : 1;
        table.inexact_lasso += o.lasso_exact ? 0 : 1;
    }
    return table;
}

namespace {

Dataset drop_sample(const Dataset& data, Index i)
{
    Dataset d;
    const Index n = data.n();
    d.X.resize(n - 1, data.p());
    d.y.resize(n - 1);
    for (Index r = 0, k = 0; r < n; ++r) {
        if (r == i) continue;
        d.X.row(k) = data.X.row(r);
        d.y(k) = data.y(r);
        ++k;
    }
    d.names = data.names;
    return d;
}

} // namespace

int misclassified(const ClassModel& model, const Dataset& data)
{
    int errors = 0;
    for (Index i = 0; i < data.n(); ++i) {
        const int label = predict_label(model, data.X.row(i).transpose());
        errors += (label != static_cast<int>(data.y(i))) ? 1 : 0;
    }
    return errors;
}

int loo_errors_classification(const Dataset& data, const ClassificationConfig& cfg)
{
    int errors = 0;
    for (Index i = 0; i < data.n(); ++i) {
        const Dataset rest = drop_sample(data, i);
        const ClassificationFit f = fit_classification(rest, cfg);
        const int label = predict_label(f.model, data.X.row(i).transpose());
        errors += (label != static_cast<int>(data.y(i))) ? 1 : 0;
    }
    return errors;
}

std::pair<Vector, Matrix> transfer_to_fold(const ClassModel& full, const KernelRoot& full_root,
                                           const ClassificationProblem& fold, Index dropped)
{
    const Index n = full.alpha.size();
    auto without = [&](const Matrix& M) {
        Matrix out(M.rows(), n - 1);
        out << M.leftCols(dropped), M.rightCols(n - 1 - dropped);
        return out;
    };
    // keep f^0 and the gradient functions at the remaining samples: with
    // p >> n the coefficients cancel each other, so dropping one term alone
    // would move the start far from the full solution
    const Matrix& fold_pinv = fold.root().half_pinv;
    const Vector f0 = full_root.half * (full_root.half * full.alpha);
    const Vector alpha = fold_pinv * (fold_pinv * without(f0.transpose()).transpose());
    const Matrix grad_values = full.C_tilde * full_root.half; // C K, column i = gradient at x_i
    return {alpha, without(grad_values) * fold_pinv};
}

std::vector<int> loo_errors_classification_path(const Dataset& data, const ClassificationConfig& cfg,
                                                const std::vector<double>& lambda2_grid, int threads,
                                                const std::vector<ClassModel>* full_models)
{
    if (lambda2_grid.empty()) throw InvalidInput("lambda grid is empty");
    if (full_models && full_models->size() != lambda2_grid.size()) {
        throw InvalidInput("one full-data model per grid value is required");
    }
    std::optional<KernelRoot> full_root;
    if (full_models) full_root = kernel_sqrt(kernel_matrix(data.X, cfg.kernel_spec));
    for (std::size_t k = 1; k < lambda2_grid.size(); ++k) {
        if (!(lambda2_grid[k] < lambda2_grid[k - 1])) {
            throw InvalidInput("lambda grid must be strictly descending");
        }
    }
    const Index n = data.n();
    std::vector<std::vector<char>> wrong(static_cast<std::size_t>(n),
                                         std::vector<char>(lambda2_grid.size(), 0));
    std::vector<std::string> failures(static_cast<std::size_t>(n));
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index i = next++; i < n; i = next++) {
            try {
                const ClassificationProblem fold(drop_sample(data, i), cfg.weight_spec, cfg.kernel_spec,
                                                 cfg.reduce);
                ClassificationConfig c = cfg;
                std::optional<ClassificationFit> prev;
                for (std::size_t k = 0; k < lambda2_grid.size(); ++k) {
                    c.lambda2 = lambda2_grid[k];
                    ClassificationFit f;
                    if (full_models) {
                        const auto [a0, c0] = transfer_to_fold((*full_models)[k], *full_root, fold, i);
                        f = fit_classification(fold, c, &a0, &c0);
                    } else if (prev) {
                        f = fit_classification(fold, c, &prev->model.alpha, &prev->model.C_tilde);
                    } else {
                        f = fit_classification(fold, c);
                    }
                    const int label = predict_label(f.model, data.X.row(i).transpose());
                    wrong[static_cast<std::size_t>(i)][k] = label != static_cast<int>(data.y(i));
                    prev = std::move(f);
                }
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    const int nthreads = static_cast<int>(std::clamp<Index>(threads, 1, n));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (!failures[i].empty()) throw NumericalError("fold " + std::to_string(i) + ": " + failures[i]);
    }
    std::vector<int> errors(lambda2_grid.size(), 0);
    for (const auto& row : wrong) {
        for (std::size_t k = 0; k < row.size(); ++k) errors[k] += row[k];
    }
    return errors;
}

double loo_score_regression(const Dataset& data, const Matrix& C_tilde)
{
    const EdrResult edr = edr_directions(C_tilde);
    const Matrix Z = project(data.X, edr);
    const Index n = data.n();
    double sse = 0.0;
    for (Index i = 0; i < n; ++i) {
        double pred = 0.0;
        if (Z.cols() == 0) {
            pred = (data.y.sum() - data.y(i)) / static_cast<double>(n - 1);
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d = (Z.row(j) - Z.row(i)).squaredNorm();
                if (d < best) {
                    best = d;
                    pred = data.y(j);
                }
            }
        }
        sse += (data.y(i) - pred) * (data.y(i) - pred);
    }
    return sse / static_cast<double>(n);
}

namespace {

struct Options
{
    std::string command;
    std::string mode;
    std::string input;
    std::string test_input;
    std::string response = "y";
    std::string labels;
    std::string ignore;
    std::string synthetic;
    std::optional<Index> n;
    std::optional<Index> p;
    double sigma = 0.5;
    std::uint64_t seed = 1;
    std::optional<double> lambda;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    bool auto_lambda = false;
    std::optional<Index> target_size;
    std::optional<double> delta;
    std::string kernel;
    std::optional<double> kernel_bandwidth;
    std::string weights;
    std::string bandwidth = "median-half";
    std::string reduce = "auto";
    double tol = 1e-6;
    int max_iter = 10000;
    int repeats = 100;
    std::optional<std::string> grid; // unset: command default; set but empty: error
    std::string lambda1_grid;
    std::string method = "sgl";
    std::optional<Index> dims;
    bool normalize = false;
    bool loo = false;
    bool strict = false;
    std::string out;
    std::string table;
};

struct Context
{
    Options opt;
    Task task = Task::Regression;
    Dataset train;
    std::optional<Dataset> test;
    json dataset_info;
    json config;
    bool all_converged = true;
};

json report_json(const FitReport& r)
{
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"final_objective", r.final_objective},
            {"fixed_point_residual", r.fixed_point_residual},
            {"step", r.step},
            {"lipschitz", r.lipschitz},
            {"reduced", r.reduced}};
}

std::string var_name(const Dataset& d, Index j)
{
    return d.names.empty() ? "x" + std::to_string(j + 1) : d.names[static_cast<std::size_t>(j)];
}

json selection_json(const Dataset& d, const SelectionResult& sel)
{
    json idx = json::array();
    json names = json::array();
    for (Index j : sel.selected) {
        idx.push_back(j + 1);
        names.push_back(var_name(d, j));
    }
    return {{"count", sel.size()}, {"variables", idx}, {"names", names},
            {"row_norms", to_json(sel.row_norms)}};
}

json edr_json(const Dataset& d, const Matrix& C_tilde, std::optional<Index> dims)
{
    const EdrResult edr = edr_directions(C_tilde, dims);
    json dirs = json::array();
    for (Index j : edr.support) {
        dirs.push_back({{"variable", j + 1},
                        {"name", var_name(d, j)},
                        {"loadings", to_json(Vector(edr.directions.row(j).transpose()))}});
    }
    json support = json::array();
    for (Index j : edr.support) support.push_back(j + 1);
    return {{"eigenvalues", to_json(edr.eigenvalues)},
            {"dimension", edr.directions.cols()},
            {"truncated", edr.truncated},
            {"support", support},
            {"directions", dirs},
            {"projections", to_json(project(d.X, edr))}};
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows)
{
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw LoadError("cannot open '" + path + "' for writing", 0, 0);
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "\t" : "") << cells[k];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// Data and solver settings from flags
// ---------------------------------------------------------------------------

CsvSchema schema_from(const Options& o)
{
    CsvSchema s;
    s.response = o.response;
    for (const auto& kv : split(o.labels, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("label map entries look like NAME=VALUE");
        s.label_map[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), "label value");
    }
    s.ignore = split(o.ignore, ',');
    return s;
}

void load_data(Context& ctx)
{
    const Options& o = ctx.opt;
    if (o.input.empty() == o.synthetic.empty()) {
        throw InvalidInput("give exactly one of --input and --synthetic");
    }
    if (!o.input.empty()) {
        const CsvSchema schema = schema_from(o);
        ctx.train = load_csv(o.input, schema);
        if (!o.test_input.empty()) ctx.test = load_csv(o.test_input, schema);
        ctx.task = !schema.label_map.empty() ? Task::Classification : Task::Regression;
        ctx.dataset_info["source"] = o.input;
    } else {
        const SyntheticModel model = synthetic_model_from_string(o.synthetic);
        SyntheticSpec spec = model == SyntheticModel::TurlachRegression
                                 ? SyntheticSpec::turlach_defaults(o.seed)
                                 : SyntheticSpec::two_spheres_defaults(o.sigma, o.seed);
        if (o.n) spec.n = *o.n;
        if (o.p) spec.p = *o.p;
        ctx.train = generate(spec);
        ctx.task = model == SyntheticModel::TurlachRegression ? Task::Regression
                                                              : Task::Classification;
        ctx.dataset_info["source"] = "synthetic:" + to_string(model);
        ctx.dataset_info["noise_sigma"] = spec.noise_sigma;
        if (!o.test_input.empty()) throw InvalidInput("--test-input needs --input");
    }
    if (!o.mode.empty()) {
        if (o.mode == "regression") ctx.task = Task::Regression;
        else if (o.mode == "classification") ctx.task = Task::Classification;
        else throw InvalidInput("mode must be regression or classification");
    }
    ctx.train.validate(ctx.task);
    if (ctx.test) {
        if (ctx.test->p() != ctx.train.p()) {
            throw InvalidInput("test set has " + std::to_string(ctx.test->p())
                               + " variables, training set " + std::to_string(ctx.train.p()));
        }
        ctx.test->validate(ctx.task);
    }
    if (o.normalize) {
        NormalizedSplit ns = normalize_split(ctx.train, ctx.test ? *ctx.test : Dataset{});
        ctx.train = std::move(ns.train);
        if (ctx.test) ctx.test = std::move(ns.test);
        ctx.dataset_info["constant_variables"] = ns.constant_variables.size();
    }
    ctx.dataset_info["n"] = ctx.train.n();
    ctx.dataset_info["p"] = ctx.train.p();
    ctx.dataset_info["fingerprint"] = to_hex(fingerprint(ctx.train));
    if (ctx.test) {
        ctx.dataset_info["test_n"] = ctx.test->n();
        ctx.dataset_info["test_fingerprint"] = to_hex(fingerprint(*ctx.test));
    }
    ctx.dataset_info["task"] = ctx.task == Task::Regression ? "regression" : "classification";
}

WeightSpec weight_spec_from(const std::string& text, double s)
{
    WeightSpec w;
    w.s = s;
    if (text == "gaussian") {
        w.kind = WeightKind::GaussianAllPairs;
    } else if (text.rfind("knn", 0) == 0) {
        w.kind = WeightKind::TruncatedKnn;
        if (text.size() > 3) {
            if (text[3] != ':') throw InvalidInput("weights must be gaussian or knn:K");
            w.k_neighbors = static_cast<int>(parse_number(text.substr(4), "neighbour count"));
        }
    } else {
        throw InvalidInput("weights must be gaussian or knn:K, got '" + text + "'");
    }
    w.validate();
    return w;
}

template <class Cfg>
void fill_common(Context& ctx, Cfg& cfg)
{
    const Options& o = ctx.opt;
    const bool reg = ctx.task == Task::Regression;
    const double s = o.bandwidth == "median-half" ? median_bandwidth(ctx.train.X)
                                                  : parse_number(o.bandwidth, "bandwidth");
    cfg.weight_spec = weight_spec_from(o.weights.empty() ? (reg ? "knn:10" : "gaussian") : o.weights, s);
    cfg.kernel_spec.kind = kernel_kind_from_string(o.kernel.empty() ? (reg ? "linear1" : "gaussian")
                                                                   : o.kernel);
    cfg.kernel_spec.bandwidth = o.kernel_bandwidth.value_or(s);
    cfg.delta = o.delta;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    cfg.reduce = reduce_mode_from_string(o.reduce);
    ctx.config["bandwidth"] = s;
    ctx.config["weights"] = {{"kind", cfg.weight_spec.kind == WeightKind::GaussianAllPairs ? "gaussian" : "knn"},
                             {"s", s},
                             {"k_neighbors", cfg.weight_spec.k_neighbors}};
    ctx.config["kernel"] = {{"kind", to_string(cfg.kernel_spec.kind)},
                            {"bandwidth", cfg.kernel_spec.bandwidth}};
    ctx.config["tol"] = cfg.tol;
    ctx.config["max_iter"] = cfg.max_iter;
    ctx.config["reduce"] = to_string(cfg.reduce);
    if (cfg.delta) ctx.config["delta"] = *cfg.delta;
}

void note_fit(Context& ctx, const FitReport& r)
{
    ctx.all_converged = ctx.all_converged && r.converged;
}

// ---------------------------------------------------------------------------
// Tuning
// ---------------------------------------------------------------------------

struct RegressionChoice
{
    double lambda = 0.0;
    json table;
};

RegressionChoice tune_regression(Context& ctx, const RegressionProblem& problem,
                                 const RegressionConfig& cfg)
{
    const std::vector<double> grid =
        parse_grid(ctx.opt.grid.value_or("auto:10"), problem.lambda_max());
    const std::vector<PathPoint> path = regularization_path(problem, cfg, grid);
    RegressionChoice out;
    out.table = json::array();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : path) {
        note_fit(ctx, pt.report);
        const double score = loo_score_regression(ctx.train, pt.C_tilde);
        out.table.push_back({{"lambda", pt.lambda}, {"selected", pt.selection.size()},
                             {"loo_mse_1nn_edr", score}});
        if (score < best) { // ties keep the larger lambda
            best = score;
            out.lambda = pt.lambda;
        }
    }
    return out;
}

struct ClassChoice
{
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    json table;
};

ClassChoice tune_classification(Context& ctx, const ClassificationProblem& problem,
                                const ClassificationConfig& base)
{
    const std::vector<double> grid2 =
        parse_grid(ctx.opt.grid.value_or("auto:10"), problem.lambda2_max_heuristic());
    std::vector<double> grid1;
    if (ctx.opt.lambda1_grid.empty()) {
        grid1.push_back(base.lambda1);
    } else {
        for (const auto& tok : split(ctx.opt.lambda1_grid, ',')) {
            grid1.push_back(parse_number(tok, "lambda1 grid value"));
        }
        std::sort(grid1.begin(), grid1.end(), std::greater<>());
    }
    ClassChoice out;
    out.table = json::array();
    int best = std::numeric_limits<int>::max();
    for (double l1 : grid1) {
        ClassificationConfig cfg = base;
        cfg.lambda1 = l1;
        std::vector<ClassModel> models;
        std::vector<Index> sizes;
        for (std::size_t k = 0; k < grid2.size(); ++k) {
            cfg.lambda2 = grid2[k];
            ClassificationFit full = models.empty()
                                         ? fit_classification(problem, cfg)
                                         : fit_classification(problem, cfg, &models.back().alpha,
                                                              &models.back().C_tilde);
            note_fit(ctx, full.report);
            sizes.push_back(select(full.model.C_tilde).size());
            models.push_back(std::move(full.model));
        }
        const std::vector<int> loo =
            loo_errors_classification_path(ctx.train, cfg, grid2, thread_cap(), &models);
        for (std::size_t k = 0; k < grid2.size(); ++k) {
            out.table.push_back({{"lambda1", l1}, {"lambda2", grid2[k]},
                                 {"selected", sizes[k]},
                                 {"loo_errors", loo[k]}});
            if (loo[k] < best) {
                best = loo[k];
                out.lambda1 = l1;
                out.lambda2 = grid2[k];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

json fit_regression(Context& ctx)
{
    const Options& o = ctx.opt;
    RegressionConfig cfg;
    fill_common(ctx, cfg);
    const RegressionProblem problem(ctx.train, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
    json res;
    res["lambda_max"] = problem.lambda_max();

    RegressionFit fit_out;
    if (o.target_size) {
        CardinalityFit cf = fit_to_cardinality(problem, cfg, *o.target_size);
        cfg.lambda = cf.lambda;
        fit_out = std::move(cf.fit);
        res["target_size"] = *o.target_size;
        res["target_size_exact"] = cf.exact;
    } else {
        if (o.auto_lambda) {
            RegressionChoice ch = tune_regression(ctx, problem, cfg);
            cfg.lambda = ch.lambda;
            res["tuning"] = {{"score", "loo_mse_1nn_edr"}, {"table", ch.table}};
        } else if (o.lambda) {
            cfg.lambda = *o.lambda;
        } else {
            throw InvalidInput("give --lambda, --auto-lambda or --target-size");
        }
        fit_out = fit(problem, cfg);
    }
    note_fit(ctx, fit_out.report);
    ctx.config["lambda"] = cfg.lambda;
    res["lambda"] = cfg.lambda;
    res["report"] = report_json(fit_out.report);
    res["selection"] = selection_json(ctx.train, select(fit_out.C_tilde));
    if (o.command != "select") res["edr"] = edr_json(ctx.train, fit_out.C_tilde, o.dims);
    return res;
}

json fit_class(Context& ctx)
{
    const Options& o = ctx.opt;
    ClassificationConfig cfg;
    fill_common(ctx, cfg);
    cfg.lambda1 = o.lambda1.value_or(1e-3);
    const ClassificationProblem problem(ctx.train, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
    json res;
    res["lambda2_max_heuristic"] = problem.lambda2_max_heuristic();

    ClassificationFit f;
    if (o.target_size) {
        ClassCardinalityFit cf = fit_classification_to_cardinality(problem, cfg, *o.target_size);
        cfg.lambda2 = cf.lambda2;
        f = std::move(cf.fit);
        res["target_size"] = *o.target_size;
        res["target_size_exact"] = cf.exact;
    } else {
        if (o.auto_lambda) {
            ClassChoice ch = tune_classification(ctx, problem, cfg);
            cfg.lambda1 = ch.lambda1;
            cfg.lambda2 = ch.lambda2;
            res["tuning"] = {{"score", "loo_errors"}, {"table", ch.table}};
        } else if (o.lambda2 || o.lambda) {
            cfg.lambda2 = o.lambda2 ? *o.lambda2 : *o.lambda;
        } else {
            throw InvalidInput("give --lambda2, --auto-lambda or --target-size");
        }
        f = fit_classification(problem, cfg);
    }
    note_fit(ctx, f.report);
    ctx.config["lambda1"] = cfg.lambda1;
    ctx.config["lambda2"] = cfg.lambda2;
    res["lambda1"] = cfg.lambda1;
    res["lambda2"] = cfg.lambda2;
    res["report"] = report_json(f.report);
    res["report"]["alpha_residual"] = f.alpha_residual;
    res["report"]["c_residual"] = f.c_residual;
    res["selection"] = selection_json(ctx.train, select(f.model.C_tilde));
    res["training_errors"] = misclassified(f.model, ctx.train);
    if (ctx.test) {
        res["test_errors"] = misclassified(f.model, *ctx.test);
        res["test_n"] = ctx.test->n();
    }
    if (o.loo) res["loo_errors"] = loo_errors_classification(ctx.train, cfg);
    if (o.command != "select") res["edr"] = edr_json(ctx.train, f.model.C_tilde, o.dims);
    return res;
}

json cmd_fit(Context& ctx)
{
    load_data(ctx);
    return ctx.task == Task::Regression ? fit_regression(ctx) : fit_class(ctx);
}

json cmd_path(Context& ctx)
{
    load_data(ctx);
    const Options& o = ctx.opt;
    const Dataset& d = ctx.train;
    std::vector<std::string> header{"lambda", "selected"};
    for (Index j = 0; j < d.p(); ++j) header.push_back(var_name(d, j));
    std::vector<std::vector<std::string>> rows;
    json res;
    json table = json::array();
    auto add_row = [&](double lambda, Index size, const Vector& values) {
        std::vector<std::string> r{fmt(lambda), std::to_string(size)};
        for (Index j = 0; j < values.size(); ++j) r.push_back(fmt(values(j)));
        rows.push_back(std::move(r));
        table.push_back({{"lambda", lambda}, {"selected", size}, {"values", to_json(values)}});
    };

    if (o.method == "lasso") {
        if (ctx.task != Task::Regression) throw InvalidInput("the lasso path needs regression data");
        const LassoProblem lp(d);
        const std::vector<double> grid = parse_grid(o.grid.value_or("auto"), lp.lambda_max());
        res["lambda_max"] = lp.lambda_max();
        res["values"] = "coefficients";
        for (const auto& pt : lasso_path(d, grid)) {
            add_row(pt.lambda, static_cast<Index>((pt.beta.array() != 0.0).count()), pt.beta);
        }
    } else if (o.method != "sgl") {
        throw InvalidInput("method must be sgl or lasso");
    } else if (ctx.task == Task::Regression) {
        RegressionConfig cfg;
        fill_common(ctx, cfg);
        const RegressionProblem problem(d, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
        const std::vector<double> grid = parse_grid(o.grid.value_or("auto"), problem.lambda_max());
        res["lambda_max"] = problem.lambda_max();
        res["values"] = "row_norms";
        for (const auto& pt : regularization_path(problem, cfg, grid)) {
            note_fit(ctx, pt.report);
            add_row(pt.lambda, pt.selection.size(), pt.selection.row_norms);
        }
    } else {
        ClassificationConfig cfg;
        fill_common(ctx, cfg);
        cfg.lambda1 = o.lambda1.value_or(1e-3);
        ctx.config["lambda1"] = cfg.lambda1;
        const ClassificationProblem problem(d, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
        const double top = problem.lambda2_max_heuristic();
        const std::vector<double> grid = parse_grid(o.grid.value_or("auto"), top);
        res["lambda2_max_heuristic"] = top;
        res["values"] = "row_norms";
        Vector alpha = Vector::Zero(d.n());
        Matrix C = Matrix::Zero(d.p(), d.n());
        for (double l2 : grid) {
            cfg.lambda2 = l2;
            const ClassificationFit f = fit_classification(problem, cfg, &alpha, &C);
            note_fit(ctx, f.report);
            alpha = f.model.alpha;
            C = f.model.C_tilde;
            const SelectionResult sel = select(C);
            add_row(l2, sel.size(), sel.row_norms);
        }
    }
    res["method"] = o.method;
    res["table"] = table;
    write_table(o.table, header, rows);
    return res;
}

json cmd_simulate(Context& ctx, std::ostream& out)
{
    load_data(ctx);
    if (ctx.opt.out.empty()) {
        write_csv(out, ctx.train);
    } else {
        write_csv(ctx.opt.out, ctx.train);
    }
    return {{"written", ctx.opt.out.empty() ? "stdout" : ctx.opt.out}};
}

json cmd_benchmark(Context& ctx)
{
    const Options& o = ctx.opt;
    const int threads = thread_cap();
    const FrequencyTable t = selection_frequencies(o.repeats, o.seed, threads);
    ctx.dataset_info = {{"source", "synthetic:turlach"}, {"repeats", o.repeats},
                        {"seeds", std::to_string(o.seed) + ".." + std::to_string(o.seed + o.repeats - 1)}};
    ctx.config["target_size"] = 5;
    ctx.config["sgl"] = {{"weights", "knn:10"}, {"bandwidth", "median-half"}, {"kernel", "linear1"}};
    ctx.config["lasso"] = {{"tol", 1e-8}};
    std::vector<std::string> header{"method"};
    json names = json::array();
    for (std::size_t j = 0; j < t.sgl.size(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
        names.push_back("x" + std::to_string(j + 1));
    }
    std::vector<std::vector<std::string>> rows(2);
    rows[0].push_back("SGL");
    rows[1].push_back("LASSO");
    for (std::size_t j = 0; j < t.sgl.size(); ++j) {
        rows[0].push_back(std::to_string(t.sgl[j]));
        rows[1].push_back(std::to_string(t.lasso[j]));
    }
    write_table(o.table, header, rows);
    return {{"repeats", t.repeats},
            {"variables", names},
            {"sgl", t.sgl},
            {"lasso", t.lasso},
            {"sgl_inexact_repeats", t.inexact_sgl},
            {"lasso_inexact_repeats", t.inexact_lasso}};
}

json cmd_tune(Context& ctx)
{
    load_data(ctx);
    const Options& o = ctx.opt;
    json res;
    if (ctx.task == Task::Regression) {
        RegressionConfig cfg;
        fill_common(ctx, cfg);
        const RegressionProblem problem(ctx.train, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
        RegressionChoice ch = tune_regression(ctx, problem, cfg);
        cfg.lambda = ch.lambda;
        const RegressionFit f = fit(problem, cfg);
        note_fit(ctx, f.report);
        res["score"] = "loo_mse_1nn_edr";
        res["score_note"] = "leave-one-out squared error of a 1-nearest-neighbour regressor on EDR projections";
        res["lambda_max"] = problem.lambda_max();
        res["best"] = {{"lambda", ch.lambda}};
        res["table"] = ch.table;
        res["selection"] = selection_json(ctx.train, select(f.C_tilde));
        res["report"] = report_json(f.report);
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : ch.table) {
            rows.push_back({fmt(r["lambda"]), std::to_string(r["selected"].get<Index>()),
                            fmt(r["loo_mse_1nn_edr"])});
        }
        write_table(o.table, {"lambda", "selected", "loo_mse_1nn_edr"}, rows);
    } else {
        ClassificationConfig cfg;
        fill_common(ctx, cfg);
        cfg.lambda1 = o.lambda1.value_or(1e-3);
        const ClassificationProblem problem(ctx.train, cfg.weight_spec, cfg.kernel_spec, cfg.reduce);
        ClassChoice ch = tune_classification(ctx, problem, cfg);
        cfg.lambda1 = ch.lambda1;
        cfg.lambda2 = ch.lambda2;
        const ClassificationFit f = fit_classification(problem, cfg);
        note_fit(ctx, f.report);
        int best_loo = 0;
        for (const auto& r : ch.table) {
            if (r["lambda1"] == ch.lambda1 && r["lambda2"] == ch.lambda2) best_loo = r["loo_errors"];
        }
        res["score"] = "loo_errors";
        res["lambda2_max_heuristic"] = problem.lambda2_max_heuristic();
        res["best"] = {{"lambda1", ch.lambda1}, {"lambda2", ch.lambda2}, {"loo_errors", best_loo}};
        res["table"] = ch.table;
        res["selection"] = selection_json(ctx.train, select(f.model.C_tilde));
        res["report"] = report_json(f.report);
        res["training_errors"] = misclassified(f.model, ctx.train);
        if (ctx.test) {
            res["test_errors"] = misclassified(f.model, *ctx.test);
            res["test_n"] = ctx.test->n();
        }
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : ch.table) {
            rows.push_back({fmt(r["lambda1"]), fmt(r["lambda2"]),
                            std::to_string(r["selected"].get<Index>()),
                            std::to_string(r["loo_errors"].get<int>())});
        }
        write_table(o.table, {"lambda1", "lambda2", "selected", "loo_errors"}, rows);
    }
    return res;
}

void add_data_options(CLI::App* sub, Options& o)
{
    sub->add_option("--mode", o.mode, "regression | classification (default: from the data)")
        ->check(CLI::IsMember({"regression", "classification"}));
    sub->add_option("--input", o.input, "training CSV (header row, one sample per row)");
    sub->add_option("--test-input", o.test_input, "held-out CSV with the same columns");
    sub->add_option("--response", o.response, "response column name")->capture_default_str();
    sub->add_option("--labels", o.labels, "label map for a text response, e.g. ALL=1,AML=-1");
    sub->add_option("--ignore", o.ignore, "comma list of columns to skip");
    sub->add_option("--synthetic", o.synthetic, "turlach | spheres");
    sub->add_option("--n", o.n, "synthetic sample count");
    sub->add_option("--p", o.p, "synthetic variable count");
    sub->add_option("--sigma", o.sigma, "two-spheres noise standard deviation")->capture_default_str();
    sub->add_option("--seed", o.seed, "data seed")->capture_default_str();
    sub->add_flag("--normalize", o.normalize,
                  "center by training means and scale each variable to unit length");
}

void add_solver_options(CLI::App* sub, Options& o)
{
    sub->add_option("--lambda", o.lambda, "sparsity parameter (classification: same as --lambda2)");
    sub->add_option("--lambda1", o.lambda1, "classification ridge on f0 (default 1e-3)");
    sub->add_option("--lambda2", o.lambda2, "classification sparsity parameter");
    sub->add_flag("--auto-lambda", o.auto_lambda, "tune lambda by leave-one-out over --grid");
    sub->add_option("--target-size", o.target_size, "choose lambda to select exactly this many variables");
    sub->add_option("--delta", o.delta, "step size (default 1/L)");
    sub->add_option("--kernel", o.kernel, "linear1 | linear | gaussian");
    sub->add_option("--kernel-bandwidth", o.kernel_bandwidth, "Gaussian kernel bandwidth (default: --bandwidth)");
    sub->add_option("--weights", o.weights, "gaussian | knn:K");
    sub->add_option("--bandwidth", o.bandwidth, "weight bandwidth s: value or median-half")->capture_default_str();
    sub->add_option("--reduce", o.reduce, "on | off | auto")->check(CLI::IsMember({"on", "off", "auto"}))->capture_default_str();
    sub->add_option("--tol", o.tol, "relative step tolerance")->capture_default_str();
    sub->add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
    sub->add_option("--grid", o.grid, "auto | auto:N | comma list of lambda values");
    sub->add_option("--lambda1-grid", o.lambda1_grid, "comma list of lambda1 values (classification tuning)");
}

void add_output_options(CLI::App* sub, Options& o)
{
    sub->add_option("--out", o.out, "write the JSON record here (default stdout)");
    sub->add_option("--table", o.table, "write a TSV table here");
    sub->add_flag("--strict", o.strict, "exit with code 3 when a fit does not converge");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Sparse gradient learning: variable selection and dimension reduction"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all help");

    struct Cmd
    {
        const char* name;
        const char* help;
        bool data;
        bool solver;
    };
    const Cmd cmds[] = {
        {"fit", "fit, select variables and compute EDR directions", true, true},
        {"select", "fit and report the selected variables", true, true},
        {"edr", "fit and report EDR directions and projections", true, true},
        {"path", "regularization path table (--method sgl|lasso)", true, true},
        {"simulate", "write a synthetic data set as CSV (--out)", true, false},
        {"benchmark", "Turlach selection-frequency table for SGL and LASSO", false, false},
        {"tune", "leave-one-out grid search for lambda", true, true},
    };
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        if (c.data) add_data_options(sub, o);
        if (c.solver) add_solver_options(sub, o);
        if (std::string(c.name) == "path") {
            sub->add_option("--method", o.method, "sgl | lasso")->capture_default_str();
        }
        if (std::string(c.name) == "fit" || std::string(c.name) == "edr") {
            sub->add_option("--dims", o.dims, "number of EDR directions (default: all nonzero)");
        }
        if (std::string(c.name) == "fit") {
            sub->add_flag("--loo", o.loo, "also report classification leave-one-out errors");
        }
        if (std::string(c.name) == "benchmark") {
            sub->add_option("--repeats", o.repeats, "number of repeats")->capture_default_str();
            sub->add_option("--seed", o.seed, "seed of the first repeat")->capture_default_str();
        }
        if (std::string(c.name) == "simulate") {
            sub->add_option("--out", o.out, "CSV destination (default stdout)");
        } else {
            add_output_options(sub, o);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    for (auto* sub : app.get_subcommands()) o.command = sub->get_name();

    Context ctx;
    ctx.opt = o;
    const auto t0 = std::chrono::steady_clock::now();
    json results;
    try {
        if (o.command == "simulate") {
            results = cmd_simulate(ctx, out);
        } else if (o.command == "benchmark") {
            results = cmd_benchmark(ctx);
        } else if (o.command == "path") {
            results = cmd_path(ctx);
        } else if (o.command == "tune") {
            results = cmd_tune(ctx);
        } else {
            results = cmd_fit(ctx);
        }
    } catch (const LoadError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (o.command == "simulate" && o.out.empty()) return kOk;

    json record;
    record["command"] = o.command;
    record["seed"] = o.seed;
    record["config"] = ctx.config;
    record["dataset"] = ctx.dataset_info;
    record["results"] = results;
    record["converged"] = ctx.all_converged;
    record["timing"] = {{"seconds", secs}};

    const std::string text = record.dump(2);
    if (o.out.empty() || o.command == "simulate") {
        out << text << '\n';
    } else {
        std::ofstream f(o.out);
        if (!f) {
            err << "error: cannot open '" << o.out << "' for writing\n";
            return kUsage;
        }
        f << text << '\n';
    }
    if (o.strict && !ctx.all_converged) {
        err << "error: at least one fit stopped at max_iter without converging\n";
        return kNotConverged;
    }
    return kOk;
}

} // namespace sgl::app
