#include <sgl/analysis.hpp>
#include <sgl/errors.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace sgl {

bool SelectionResult::contains(Index j) const
{
    return std::binary_search(selected.begin(), selected.end(), j);
}

SelectionResult select(const Matrix& C_tilde)
{
    SelectionResult out;
    out.row_norms = C_tilde.rowwise().norm();
    for (Index j = 0; j < C_tilde.rows(); ++j) {
        if (out.row_norms(j) > 0.0) {
            out.selected.push_back(j);
        }
    }
    return out;
}

Matrix segcm(const Matrix& C_tilde)
{
    return C_tilde * C_tilde.transpose();
}

EdrResult edr_directions(const Matrix& C_tilde, std::optional<Index> d)
{
    if (d && (*d < 1 || *d > C_tilde.rows())) {
        throw InvalidInput("requested " + std::to_string(*d) + " directions for "
                           + std::to_string(C_tilde.rows()) + " variables");
    }
    const Index p = C_tilde.rows();
    const SelectionResult sel = select(C_tilde);
    EdrResult out;
    out.directions = Matrix::Zero(p, 0);
    if (sel.selected.empty()) {
        out.eigenvalues = Vector(0);
        out.truncated = d.has_value();
        return out;
    }

    const Index s = sel.size();
    Matrix rows(s, C_tilde.cols());
    for (Index k = 0; k < s; ++k) {
        rows.row(k) = C_tilde.row(sel.selected[static_cast<std::size_t>(k)]);
    }
    Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeThinU);
    const Vector sv = svd.singularValues();
    const Vector ev = sv.array().square();

    const double top = ev.size() > 0 ? ev(0) : 0.0;
    Index nonzero = 0;
    while (nonzero < ev.size() && ev(nonzero) > kEdrEigenFloor * top) {
        ++nonzero;
    }
    out.eigenvalues = ev.head(nonzero);

    Index want = d.value_or(nonzero);
    if (want > nonzero) {
        out.truncated = true;
        want = nonzero;
    }

    out.directions = Matrix::Zero(p, want);
    const Matrix& U = svd.matrixU();
    for (Index c = 0; c < want; ++c) {
        Vector u = U.col(c);
        Index arg = 0;
        for (Index k = 1; k < s; ++k) {
            if (std::abs(u(k)) > std::abs(u(arg))) arg = k;
        }
        if (u(arg) < 0.0) u = -u;
        for (Index k = 0; k < s; ++k) {
            out.directions(sel.selected[static_cast<std::size_t>(k)], c) = u(k);
        }
    }
    for (Index j = 0; j < p; ++j) {
        if ((out.directions.row(j).array() != 0.0).any()) {
            out.support.push_back(j);
        }
    }
    return out;
}

Matrix project(const Matrix& X, const EdrResult& edr)
{
    if (X.cols() != edr.directions.rows()) {
        throw InvalidInput("samples have " + std::to_string(X.cols())
                           + " variables but directions expect "
                           + std::to_string(edr.directions.rows()));
    }
    return X * edr.directions;
}

} // namespace sgl
