#pragma once
#include <sgl/types.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sgl {

enum class SyntheticModel
{
    TurlachRegression,       // y = (2x1 - 1)^2 + x2 + x3 + x4 + x5 + eps
    TwoSpheresClassification // circles of radius 3 (+1) and 7.5 (-1) in x1, x2
};

struct SyntheticSpec
{
    SyntheticModel model = SyntheticModel::TurlachRegression;
    Index n = 100;
    Index p = 10;
    // Turlach: standard deviation of eps (default sqrt(0.05)).
    // Two spheres: standard deviation of every noise coordinate.
    double noise_sigma = 0.22360679774997896;
    std::uint64_t seed = 1;

    static SyntheticSpec turlach_defaults(std::uint64_t seed = 1);
    static SyntheticSpec two_spheres_defaults(double sigma, std::uint64_t seed = 1);

    void validate() const;
};

std::string to_string(SyntheticModel m);
SyntheticModel synthetic_model_from_string(const std::string& s);

inline constexpr double kInnerRadius = 3.0;
inline constexpr double kOuterRadius = 7.5;

/// Noise-free Turlach response for one sample.
double turlach_mean(const Eigen::Ref<const Vector>& x);

/// True gradient of the Turlach mean function (length p).
Vector turlach_gradient(const Eigen::Ref<const Vector>& x);

Dataset gen_turlach(const SyntheticSpec& spec);

/// First n/2 samples are class +1 (inner circle), the rest class -1.
Dataset gen_two_spheres(const SyntheticSpec& spec);

Dataset generate(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/**
 * Column layout of a sample CSV: header row, one sample per row.
 * `label_map` maps raw response strings (e.g. "ALL", "AML") to numbers;
 * without it the response column must be numeric. Columns listed in
 * `ignore` (e.g. a sample id) are skipped.
 */
struct CsvSchema
{
    std::string response = "y";
    std::map<std::string, double> label_map;
    std::vector<std::string> ignore;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
Dataset parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes names (x1..xp when empty) plus the response column; 17 significant digits.
void write_csv(const std::string& path, const Dataset& data, const std::string& response = "y");
void write_csv(std::ostream& out, const Dataset& data, const std::string& response = "y");

struct NormalizedSplit
{
    Dataset train;
    Dataset test;
    Vector mean;
    Vector scale;
    std::vector<Index> constant_variables; // scaled by 1 instead of their (zero) length
};

/**
 * Center every variable by its training mean and scale it to unit Euclidean
 * length over the training samples; the test set reuses the training
 * statistics.
 */
NormalizedSplit normalize_split(const Dataset& train, const Dataset& test);

} // namespace sgl
