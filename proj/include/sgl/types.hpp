#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace sgl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Task
{
    Regression,
    Classification
};

/**
 * Sample set. X holds one sample per row (n x p); y is the response
 * (real for regression, +/-1 for classification). `names` is optional
 * and, when present, has one entry per column of X.
 */
struct Dataset
{
    Matrix X;
    Vector y;
    std::vector<std::string> names;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }

    // Throws InvalidInput on shape errors, non-finite entries, or
    // (for classification) labels outside {-1,+1} / a missing class.
    void validate(Task task) const;
};

// FNV-1a over the shape, X (row-major) and y bit patterns.
std::uint64_t fingerprint(const Dataset& data);

std::string to_hex(std::uint64_t v);

} // namespace sgl
