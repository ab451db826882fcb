#pragma once
#include <sgl/types.hpp>

#include <optional>
#include <vector>

namespace sgl {

/// Variables whose gradient row survived the group shrinkage.
struct SelectionResult
{
    std::vector<Index> selected; // ascending, 0-based
    Vector row_norms;            // |c~^j|_2 == |f^j|_K

    Index size() const { return static_cast<Index>(selected.size()); }
    bool contains(Index j) const;
};

SelectionResult select(const Matrix& C_tilde);

/// Sparse empirical gradient covariance matrix C~ C~^T (p x p).
Matrix segcm(const Matrix& C_tilde);

// Relative threshold below which an eigenvalue of the S-EGCM counts as zero.
inline constexpr double kEdrEigenFloor = 1e-8;

struct EdrResult
{
    Vector eigenvalues;         // nonzero spectrum of the S-EGCM, descending
    Matrix directions;          // p x d, orthonormal columns, zero outside support
    std::vector<Index> support; // variables with any nonzero loading
    bool truncated = false;     // fewer than the requested d directions exist
};

/**
 * Sparse EDR directions from the SVD of the selected rows of C~.
 *
 * With `d` unset, every eigenvalue above kEdrEigenFloor times the largest
 * one yields a direction. Each direction's largest-magnitude loading is
 * made positive (lowest index wins ties).
 */
EdrResult edr_directions(const Matrix& C_tilde, std::optional<Index> d = std::nullopt);

/// X * directions (samples as rows).
Matrix project(const Matrix& X, const EdrResult& edr);

} // namespace sgl
