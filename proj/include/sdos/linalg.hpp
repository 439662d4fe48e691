#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "sdos/errors.hpp"

namespace sdos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Throws NotPositiveDefinite when a pivot is <= 0 or non-finite; callers that
// want jitter repair apply it explicitly.
inline Matrix cholesky(const Matrix& a) {
    const auto n = a.rows();
    if (n < 1 || a.cols() != n) throw std::invalid_argument("cholesky: matrix must be square, dim >= 1");
    const double scale = a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0)) {
        throw std::invalid_argument("cholesky: matrix is not symmetric");
    }
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NotPositiveDefinite("cholesky: pivot <= 0 or non-finite at column " + std::to_string(j));
        }
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

}  // namespace sdos
