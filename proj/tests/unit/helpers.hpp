#pragma once
#include <sgl/rng.hpp>
#include <sgl/types.hpp>

#include <functional>

namespace sgl::testing {

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0)
{
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline Vector random_vector(Rng& rng, Index n, double lo = -1.0, double hi = 1.0)
{
    return random_matrix(rng, n, 1, lo, hi);
}

inline Dataset random_regression(std::uint64_t seed, Index n, Index p)
{
    Rng rng(seed);
    Dataset d;
    d.X = random_matrix(rng, n, p);
    d.y = random_vector(rng, n);
    return d;
}

inline Dataset random_classification(std::uint64_t seed, Index n, Index p)
{
    Rng rng(seed);
    Dataset d;
    d.X = random_matrix(rng, n, p);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) d.y(i) = (i % 2 == 0) ? 1.0 : -1.0;
    return d;
}

/// Central differences of f at A, entrywise.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& A,
                               double h = 1e-6)
{
    Matrix g(A.rows(), A.cols());
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            Matrix P = A, M = A;
            P(i, j) += h;
            M(i, j) -= h;
            g(i, j) = (f(P) - f(M)) / (2.0 * h);
        }
    }
    return g;
}

inline double rel_err(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(1e-300, std::max(a.norm(), b.norm()));
}

} // namespace sgl::testing
