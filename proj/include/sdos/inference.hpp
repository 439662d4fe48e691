#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdos/adam.hpp"
#include "sdos/autodiff.hpp"
#include "sdos/gaussian.hpp"
#include "sdos/models.hpp"
#include "sdos/numerics.hpp"
#include "sdos/rng.hpp"

namespace sdos {

// Fitted approximation plus the optimization trace and (for Laplace) the
// terminal point, gradient, and Hessian.
struct FitReport {
    Gaussian q;
    std::vector<double> objective_trace;
    struct Terminal {
        Vector z_hat;
        Vector grad;
        Matrix hess;
    };
    std::optional<Terminal> terminal;
    std::string method;
    int iterations = 0;
    std::uint64_t seed = 0;
    int skipped_steps = 0;
};

inline std::pair<double, Vector> log_joint_grad(const Model& m, const Vector& data, const Vector& u) {
    return ad::value_and_grad([&](const std::vector<ad::Expr>& z) { return m.log_joint_ad(z, data); }, u);
}

namespace inference_detail {

// Cholesky of a (+ jitter I), escalating jitter from 1e-8 * mean|diag| by
// factors of 10 before giving up.
inline Matrix cholesky_with_jitter(const Matrix& a) {
    try {
        return cholesky(a);
    } catch (const NotPositiveDefinite&) {
    }
    const double base = 1e-8 * a.diagonal().cwiseAbs().mean();
    for (int k = 0; k <= 8; ++k) {
        const double jitter = base * std::pow(10.0, k);
        try {
            return cholesky(a + jitter * Matrix::Identity(a.rows(), a.cols()));
        } catch (const NotPositiveDefinite&) {
        }
    }
    throw CurvatureFailure("-H is not positive definite after the jitter schedule");
}

inline Matrix spd_inverse(const Matrix& l) {
    const Matrix inv_l = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(l.rows(), l.cols()));
    Matrix cov = inv_l.transpose() * inv_l;
    return 0.5 * (cov + cov.transpose());
}

}  // namespace inference_detail

// Laplace's method: Adam ascent on the unconstrained log-joint from z0 = 0,
// mean = terminal point, covariance = -H^{-1}.
inline FitReport laplace_fit(const Model& m, const Vector& data, int iters, std::uint64_t seed = 0) {
    if (iters < 1) throw std::invalid_argument("laplace_fit: iters must be >= 1");
    Vector u = Vector::Zero(m.dim);
    AdamState adam(m.dim, {0.01, 0.001, iters});
    FitReport report;
    report.method = "laplace";
    report.iterations = iters;
    report.seed = seed;
    report.objective_trace.reserve(iters);
    for (int it = 0; it < iters; ++it) {
        const auto [val, grad] = log_joint_grad(m, data, u);
        report.objective_trace.push_back(val);
        u = adam_update(adam, u, grad);
    }
    const auto [val, grad] = log_joint_grad(m, data, u);
    const Matrix hess = ad::hessian([&](const std::vector<ad::Expr>& z) { return m.log_joint_ad(z, data); }, u);
    (void)val;
    const Matrix neg_h_chol = inference_detail::cholesky_with_jitter(-hess);
    const Matrix cov = inference_detail::spd_inverse(neg_h_chol);
    report.q = Gaussian::from_mean_cov(u, cov);
    report.terminal = FitReport::Terminal{u, grad, hess};
    return report;
}

// Newton-step mean shift: mean = z_hat + Sigma g, which makes grad log q at
// z_hat equal grad log p there exactly.
inline Gaussian laplace_adjust(const FitReport& report) {
    if (!report.terminal) throw std::invalid_argument("laplace_adjust: report has no terminal point");
    const auto& t = *report.terminal;
    const Matrix& l = report.q.chol;
    const Vector shift = l.triangularView<Eigen::Lower>() * (l.transpose().triangularView<Eigen::Upper>() * t.grad);
    return Gaussian(t.z_hat + shift, l);
}

// Monte-Carlo ELBO: average of log p(z, data) - log q(z) over z ~ q.
inline double elbo_estimate(const Model& m, const Vector& data, const Gaussian& q, int n_samples, RngStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("elbo_estimate: n_samples must be >= 1");
    double acc = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const Vector z = q.sample(rng);
        const double v = m.log_joint(z, data) - q.log_density(z);
        if (!std::isfinite(v)) throw NonFiniteValue("elbo_estimate: non-finite sample value");
        acc += v;
    }
    return acc / n_samples;
}

// ln[(1/M) sum_m p(z_m,data)/q(z_m)] over M iid draws from q, in log space.
inline double iw_elbo_estimate(const Model& m, const Vector& data, const Gaussian& q, int M, RngStream& rng) {
    if (M < 1) throw std::invalid_argument("iw_elbo_estimate: M must be >= 1");
    std::vector<double> lw(M);
    for (int i = 0; i < M; ++i) {
        const Vector z = q.sample(rng);
        lw[i] = m.log_joint(z, data) - q.log_density(z);
    }
    const double v = logsumexp(std::move(lw)) - std::log(static_cast<double>(M));
    if (!std::isfinite(v)) throw NonFiniteValue("iw_elbo_estimate: non-finite estimate");
    return v;
}

// ---- variational parameter packing ----
//
// theta = [ mean (d) ; log diag of L (d) ; strict lower triangle of L,
// row-major ]. The log-diagonal keeps L positive definite under
// unconstrained optimization.

inline int vi_param_count(int d) { return 2 * d + d * (d - 1) / 2; }

inline Vector vi_pack(const Gaussian& q) {
    const int d = q.dim();
    Vector theta(vi_param_count(d));
    theta.head(d) = q.mean;
    for (int i = 0; i < d; ++i) theta[d + i] = std::log(q.chol(i, i));
    int k = 2 * d;
    for (int i = 1; i < d; ++i) {
        for (int j = 0; j < i; ++j) theta[k++] = q.chol(i, j);
    }
    return theta;
}

inline Gaussian vi_unpack(const Vector& theta, int d) {
    if (theta.size() != vi_param_count(d)) throw std::invalid_argument("vi_unpack: wrong parameter count");
    Matrix l = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) l(i, i) = std::exp(theta[d + i]);
    int k = 2 * d;
    for (int i = 1; i < d; ++i) {
        for (int j = 0; j < i; ++j) l(i, j) = theta[k++];
    }
    return Gaussian(theta.head(d), l);
}

enum class GradEstimator { stl, plain };

namespace inference_detail {

// Shared core for the single-sample STL estimator and the M-sample
// importance-weighted estimator. Gradients flow through z = mean + L eps;
// log q(mean + L eps) = const - sum_i s_i - 1/2 |eps|^2, so its total
// derivative w.r.t. the parameters is -1 per log-diagonal entry and zero
// elsewhere, while the STL (stopped-q) path uses grad_z log q = -L^{-T} eps.
struct QGradAccum {
    int d;
    Vector grad;
    explicit QGradAccum(int dim) : d(dim), grad(Vector::Zero(vi_param_count(dim))) {}

    // adds weight * (r^T dz/dtheta) where r is a gradient w.r.t. z
    void add_path(double weight, const Vector& r, const Vector& eps, const Vector& diag_l) {
        grad.head(d) += weight * r;
        for (int i = 0; i < d; ++i) grad[d + i] += weight * r[i] * eps[i] * diag_l[i];
        int k = 2 * d;
        for (int i = 1; i < d; ++i) {
            for (int j = 0; j < i; ++j) grad[k++] += weight * r[i] * eps[j];
        }
    }
};

}  // namespace inference_detail

// Sticking-the-landing ELBO gradient, one Monte-Carlo sample. The score term
// is omitted: q's parameters inside log q are treated as constants, so the
// estimator has zero variance when q equals the target exactly.
inline Vector stl_gradient(const Vector& theta, const Model& m, const Vector& data, RngStream& rng,
                           double* objective = nullptr) {
    const int d = m.dim;
    const Gaussian q = vi_unpack(theta, d);
    Vector eps(d);
    for (int i = 0; i < d; ++i) eps[i] = rng.normal();
    const Vector z = q.mean + q.chol.triangularView<Eigen::Lower>() * eps;
    const auto [lp, gp] = log_joint_grad(m, data, z);
    const Vector gq = -q.chol.transpose().triangularView<Eigen::Upper>().solve(eps);
    inference_detail::QGradAccum acc(d);
    acc.add_path(1.0, gp - gq, eps, q.chol.diagonal());
    if (objective) *objective = lp - q.log_density(z);
    return acc.grad;
}

// Plain (total-derivative) reparameterized gradient of the importance-weighted
// objective ln(1/M) sum_m p(z_m)/q(z_m). M = 1 reduces to the plain
// reparameterized ELBO gradient.
inline Vector iw_gradient(const Vector& theta, const Model& m, const Vector& data, int M, RngStream& rng,
                          double* objective = nullptr) {
    if (M < 1) throw std::invalid_argument("iw_gradient: M must be >= 1");
    const int d = m.dim;
    const Gaussian q = vi_unpack(theta, d);
    const double entropy_const = -0.5 * d * std::log(2.0 * M_PI) - theta.segment(d, d).sum();
    std::vector<Vector> epss(M), gps(M);
    std::vector<double> lws(M);
    for (int s = 0; s < M; ++s) {
        Vector eps(d);
        for (int i = 0; i < d; ++i) eps[i] = rng.normal();
        const Vector z = q.mean + q.chol.triangularView<Eigen::Lower>() * eps;
        const auto [lp, gp] = log_joint_grad(m, data, z);
        const double lq = entropy_const - 0.5 * eps.squaredNorm();
        epss[s] = std::move(eps);
        gps[s] = gp;
        lws[s] = lp - lq;
    }
    const double lse = logsumexp(lws);
    inference_detail::QGradAccum acc(d);
    for (int s = 0; s < M; ++s) {
        acc.add_path(std::exp(lws[s] - lse), gps[s], epss[s], q.chol.diagonal());
    }
    // total derivative of -log q w.r.t. each log-diagonal parameter is +1
    acc.grad.segment(d, d).array() += 1.0;
    if (objective) *objective = lse - std::log(static_cast<double>(M));
    return acc.grad;
}

namespace inference_detail {

template <class GradFn>
FitReport run_vi_loop(const Model& m, const Vector& data, int iters, RngStream& rng, std::uint64_t seed,
                      const std::string& method, GradFn&& grad_fn) {
    if (iters < 1) throw std::invalid_argument("vi_fit: iters must be >= 1");
    const int d = m.dim;
    Vector theta = vi_pack(Gaussian(Vector::Zero(d), Matrix::Identity(d, d)));
    AdamState adam(static_cast<int>(theta.size()), {0.001, 0.0001, iters});
    FitReport report;
    report.method = method;
    report.iterations = iters;
    report.seed = seed;
    report.objective_trace.reserve(iters);
    for (int it = 0; it < iters; ++it) {
        double obj = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        Vector g;
        try {
            g = grad_fn(theta, rng, &obj);
            ok = g.allFinite();
        } catch (const NonFiniteValue&) {
            ok = false;
        }
        report.objective_trace.push_back(obj);
        if (ok) {
            theta = adam_update(adam, theta, g);
        } else {
            ++report.skipped_steps;
        }
    }
    report.q = vi_unpack(theta, d);
    return report;
}

}  // namespace inference_detail

// Gaussian VI: init N(0, I), Adam on (mean, chol) with one MC sample per step.
inline FitReport vi_fit(const Model& m, const Vector& data, int iters, RngStream& rng,
                        GradEstimator est = GradEstimator::stl) {
    const std::uint64_t seed = rng.master_seed();
    auto grad_fn = [&](const Vector& theta, RngStream& r, double* obj) {
        return est == GradEstimator::stl ? stl_gradient(theta, m, data, r, obj)
                                         : iw_gradient(theta, m, data, 1, r, obj);
    };
    return inference_detail::run_vi_loop(m, data, iters, rng, seed,
                                         est == GradEstimator::stl ? "vi" : "vi-plain", grad_fn);
}

inline FitReport vi_fit(const Model& m, const Vector& data, int iters, std::uint64_t seed,
                        GradEstimator est = GradEstimator::stl) {
    RngStream rng(seed, 0);
    return vi_fit(m, data, iters, rng, est);
}

// Importance-weighted VI: ascends the M-sample importance-weighted objective.
inline FitReport iwvi_fit(const Model& m, const Vector& data, int M, int iters, RngStream& rng) {
    if (M < 1) throw std::invalid_argument("iwvi_fit: M must be >= 1");
    const std::uint64_t seed = rng.master_seed();
    auto grad_fn = [&](const Vector& theta, RngStream& r, double* obj) {
        return iw_gradient(theta, m, data, M, r, obj);
    };
    return inference_detail::run_vi_loop(m, data, iters, rng, seed, "iwvi", grad_fn);
}

inline FitReport iwvi_fit(const Model& m, const Vector& data, int M, int iters, std::uint64_t seed) {
    RngStream rng(seed, 0);
    return iwvi_fit(m, data, M, iters, rng);
}

// ---- fitters: inference engines with their budgets baked in ----

using QFitter = std::function<Gaussian(const Model&, const Vector& data, RngStream&)>;

inline QFitter make_laplace_fitter(int iters) {
    return [iters](const Model& m, const Vector& data, RngStream&) { return laplace_fit(m, data, iters).q; };
}

inline QFitter make_adjusted_laplace_fitter(int iters) {
    return [iters](const Model& m, const Vector& data, RngStream&) {
        return laplace_adjust(laplace_fit(m, data, iters));
    };
}

inline QFitter make_vi_fitter(int iters) {
    return [iters](const Model& m, const Vector& data, RngStream& rng) { return vi_fit(m, data, iters, rng).q; };
}

inline QFitter make_iwvi_fitter(int M, int iters) {
    return [M, iters](const Model& m, const Vector& data, RngStream& rng) {
        return iwvi_fit(m, data, M, iters, rng).q;
    };
}

inline QFitter make_exact_fitter() {
    return [](const Model& m, const Vector& data, RngStream&) {
        if (!m.exact_posterior) throw std::invalid_argument("exact fitter: model has no closed-form posterior");
        return m.exact_posterior(data);
    };
}

// Exact posterior with the covariance scaled and the mean shifted; used to
// validate the diagnostic against closed-form divergences.
inline QFitter make_misspecified_exact_fitter(double var_scale, double mean_shift) {
    return [var_scale, mean_shift](const Model& m, const Vector& data, RngStream&) {
        if (!m.exact_posterior) throw std::invalid_argument("misspecified fitter: model has no closed-form posterior");
        Gaussian q = m.exact_posterior(data);
        return Gaussian(Vector(q.mean.array() + mean_shift), std::sqrt(var_scale) * q.chol);
    };
}

}  // namespace sdos
