#include <sgl/datagen.hpp>
#include <sgl/errors.hpp>
#include <sgl/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace sgl {

SyntheticSpec SyntheticSpec::turlach_defaults(std::uint64_t seed)
{
    SyntheticSpec s;
    s.model = SyntheticModel::TurlachRegression;
    s.n = 100;
    s.p = 10;
    s.noise_sigma = std::sqrt(0.05);
    s.seed = seed;
    return s;
}

SyntheticSpec SyntheticSpec::two_spheres_defaults(double sigma, std::uint64_t seed)
{
    SyntheticSpec s;
    s.model = SyntheticModel::TwoSpheresClassification;
    s.n = 40;
    s.p = 200;
    s.noise_sigma = sigma;
    s.seed = seed;
    return s;
}

void SyntheticSpec::validate() const
{
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw InvalidInput("noise sigma must be nonnegative");
    }
    if (n < 2) {
        throw InvalidInput("synthetic data needs at least 2 samples");
    }
    if (model == SyntheticModel::TurlachRegression && p < 5) {
        throw InvalidInput("the Turlach model needs p >= 5");
    }
    if (model == SyntheticModel::TwoSpheresClassification) {
        if (p < 2) throw InvalidInput("the two-spheres model needs p >= 2");
        if (n % 2 != 0) throw InvalidInput("the two-spheres model needs an even sample count");
    }
}

std::string to_string(SyntheticModel m)
{
    return m == SyntheticModel::TurlachRegression ? "turlach" : "spheres";
}

SyntheticModel synthetic_model_from_string(const std::string& s)
{
    if (s == "turlach") return SyntheticModel::TurlachRegression;
    if (s == "spheres" || s == "two-spheres") return SyntheticModel::TwoSpheresClassification;
    throw InvalidInput("unknown synthetic model '" + s + "' (expected turlach|spheres)");
}

double turlach_mean(const Eigen::Ref<const Vector>& x)
{
    const double a = 2.0 * x(0) - 1.0;
    return a * a + x(1) + x(2) + x(3) + x(4);
}

Vector turlach_gradient(const Eigen::Ref<const Vector>& x)
{
    Vector g = Vector::Zero(x.size());
    g(0) = 4.0 * (2.0 * x(0) - 1.0);
    g.segment(1, 4).setOnes();
    return g;
}

namespace {

std::vector<std::string> default_names(Index p)
{
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        names.push_back("x" + std::to_string(j + 1));
    }
    return names;
}

} // namespace

Dataset gen_turlach(const SyntheticSpec& spec)
{
    spec.validate();
    Rng rng(spec.seed);
    Dataset d;
    d.X.resize(spec.n, spec.p);
    d.y.resize(spec.n);
    for (Index i = 0; i < spec.n; ++i) {
        for (Index j = 0; j < spec.p; ++j) {
            d.X(i, j) = rng.uniform();
        }
        const double eps = spec.noise_sigma > 0.0 ? spec.noise_sigma * rng.normal() : 0.0;
        d.y(i) = turlach_mean(d.X.row(i).transpose()) + eps;
    }
    d.names = default_names(spec.p);
    return d;
}

Dataset gen_two_spheres(const SyntheticSpec& spec)
{
    spec.validate();
    Rng rng(spec.seed);
    Dataset d;
    d.X.resize(spec.n, spec.p);
    d.y.resize(spec.n);
    const Index half = spec.n / 2;
    for (Index i = 0; i < spec.n; ++i) {
        const bool inner = i < half;
        const double radius = inner ? kInnerRadius : kOuterRadius;
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        d.X(i, 0) = radius * std::cos(theta);
        d.X(i, 1) = radius * std::sin(theta);
        for (Index j = 2; j < spec.p; ++j) {
            d.X(i, j) = spec.noise_sigma > 0.0 ? spec.noise_sigma * rng.normal() : 0.0;
        }
        d.y(i) = inner ? 1.0 : -1.0;
    }
    d.names = default_names(spec.p);
    return d;
}

Dataset generate(const SyntheticSpec& spec)
{
    return spec.model == SyntheticModel::TurlachRegression ? gen_turlach(spec)
                                                           : gen_two_spheres(spec);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cell += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out)
{
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

} // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema)
{
    std::string line;
    long row = 1;
    if (!std::getline(in, line)) {
        throw LoadError("empty CSV input", 1, 0);
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF
        && static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
        line.erase(0, 3);
    }
    const std::vector<std::string> header = split_csv_line(line);
    long response_col = -1;
    std::vector<long> var_cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string h = trim(header[c]);
        if (h == schema.response) {
            response_col = static_cast<long>(c);
        } else if (std::find(schema.ignore.begin(), schema.ignore.end(), h) == schema.ignore.end()) {
            var_cols.push_back(static_cast<long>(c));
            names.push_back(h);
        }
    }
    if (response_col < 0) {
        throw LoadError("response column '" + schema.response + "' missing from header", 1, 0);
    }
    if (var_cols.empty()) {
        throw LoadError("no variable columns in header", 1, 0);
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw LoadError("expected " + std::to_string(header.size()) + " cells, found "
                                + std::to_string(cells.size()),
                            row, static_cast<long>(std::min(cells.size(), header.size())) + 1);
        }
        std::vector<double> values(var_cols.size());
        for (std::size_t k = 0; k < var_cols.size(); ++k) {
            const auto c = static_cast<std::size_t>(var_cols[k]);
            if (!parse_double(cells[c], values[k]) || !std::isfinite(values[k])) {
                throw LoadError("non-numeric cell '" + cells[c] + "'", row,
                                static_cast<long>(c) + 1);
            }
        }
        const std::string raw = trim(cells[static_cast<std::size_t>(response_col)]);
        double yv = 0.0;
        if (!schema.label_map.empty()) {
            auto it = schema.label_map.find(raw);
            if (it == schema.label_map.end()) {
                throw LoadError("response '" + raw + "' not in the label map", row,
                                response_col + 1);
            }
            yv = it->second;
        } else if (raw.empty()) {
            throw LoadError("missing response", row, response_col + 1);
        } else if (!parse_double(raw, yv) || !std::isfinite(yv)) {
            throw LoadError("non-numeric response '" + raw + "'", row, response_col + 1);
        }
        rows.push_back(std::move(values));
        ys.push_back(yv);
    }
    if (rows.empty()) {
        throw LoadError("CSV has no data rows", row, 0);
    }

    Dataset d;
    d.X.resize(static_cast<Index>(rows.size()), static_cast<Index>(var_cols.size()));
    d.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < var_cols.size(); ++k) {
            d.X(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
        }
        d.y(static_cast<Index>(i)) = ys[i];
    }
    d.names = std::move(names);
    return d;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema)
{
    std::ifstream in(path);
    if (!in) {
        throw LoadError("cannot open '" + path + "'", 0, 0);
    }
    return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& response)
{
    const std::vector<std::string> names =
        data.names.empty() ? default_names(data.p()) : data.names;
    for (const auto& nm : names) {
        out << nm << ',';
    }
    out << response << '\n';
    out << std::setprecision(17);
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.p(); ++j) {
            out << data.X(i, j) << ',';
        }
        out << data.y(i) << '\n';
    }
}

void write_csv(const std::string& path, const Dataset& data, const std::string& response)
{
    std::ofstream out(path);
    if (!out) {
        throw LoadError("cannot open '" + path + "' for writing", 0, 0);
    }
    write_csv(out, data, response);
}

NormalizedSplit normalize_split(const Dataset& train, const Dataset& test)
{
    if (train.n() < 1) {
        throw InvalidInput("training set is empty");
    }
    if (test.n() > 0 && test.p() != train.p()) {
        throw InvalidInput("train and test sets have different variable counts");
    }
    NormalizedSplit out;
    out.mean = train.X.colwise().mean().transpose();
    out.scale = Vector::Ones(train.p());
    out.train = train;
    out.test = test;
    out.train.X.rowwise() -= out.mean.transpose();
    for (Index j = 0; j < train.p(); ++j) {
        const double len = out.train.X.col(j).norm();
        if (len > 0.0) {
            out.scale(j) = len;
        } else {
            out.constant_variables.push_back(j);
        }
    }
    out.train.X.array().rowwise() /= out.scale.transpose().array();
    if (test.n() > 0) {
        out.test.X.rowwise() -= out.mean.transpose();
        out.test.X.array().rowwise() /= out.scale.transpose().array();
    }
    return out;
}

} // namespace sgl
