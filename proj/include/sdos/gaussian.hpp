#pragma once

#include <cmath>
#include <stdexcept>

#include "sdos/linalg.hpp"
#include "sdos/rng.hpp"

namespace sdos {

// Multivariate Gaussian in mean / lower-Cholesky form, covariance = L L^T.
struct Gaussian {
    Vector mean;
    Matrix chol;  // lower triangular, strictly positive diagonal

    Gaussian() = default;

    Gaussian(Vector mean_, Matrix chol_) : mean(std::move(mean_)), chol(std::move(chol_)) {
        const auto d = mean.size();
        if (chol.rows() != d || chol.cols() != d) {
            throw std::invalid_argument("Gaussian: mean/chol dimension mismatch");
        }
        chol = Matrix(chol.triangularView<Eigen::Lower>());
        if (!mean.allFinite() || !chol.allFinite()) throw std::invalid_argument("Gaussian: non-finite parameter");
        for (Eigen::Index i = 0; i < d; ++i) {
            if (!(chol(i, i) > 0.0)) throw std::invalid_argument("Gaussian: Cholesky diagonal must be > 0");
        }
    }

    static Gaussian from_mean_cov(Vector mean, const Matrix& cov) { return {std::move(mean), cholesky(cov)}; }

    int dim() const { return static_cast<int>(mean.size()); }

    Matrix covariance() const { return chol * chol.transpose(); }

    // -d/2 log(2*pi) - sum_i log L_ii - 1/2 || L^{-1} (z - mean) ||^2
    double log_density(const Vector& z) const {
        if (z.size() != mean.size()) throw std::invalid_argument("Gaussian::log_density: dimension mismatch");
        const Vector w = chol.triangularView<Eigen::Lower>().solve(z - mean);
        return -0.5 * dim() * std::log(2.0 * M_PI) - chol.diagonal().array().log().sum() - 0.5 * w.squaredNorm();
    }

    // mean + L eps, eps iid standard normal.
    Vector sample(RngStream& rng) const {
        Vector eps(dim());
        for (int i = 0; i < dim(); ++i) eps[i] = rng.normal();
        return mean + chol.triangularView<Eigen::Lower>() * eps;
    }
};

}  // namespace sdos
