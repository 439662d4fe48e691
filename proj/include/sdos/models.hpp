#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sdos/autodiff.hpp"
#include "sdos/dataset.hpp"
#include "sdos/gaussian.hpp"
#include "sdos/numerics.hpp"
#include "sdos/rng.hpp"
#include "sdos/transforms.hpp"

namespace sdos {

// A joint density p(z, x), optionally conditional on fixed covariates.
// Latents are simulated in constrained space; log_joint evaluates the density
// of the *unconstrained* latent (Jacobian terms included) so optimizers and
// approximations can work over all of R^d. log_joint_constrained is the
// independent constrained-space route used to cross-check the Jacobian wiring.
struct Model {
    std::string name;
    int dim = 0;
    TransformVec transforms;
    bool conditional = false;  // fixed covariates, simulated data plays the y role

    std::function<Vector(RngStream&)> simulate_latent;                   // constrained z
    std::function<Vector(const Vector&, RngStream&)> simulate_data;      // data given constrained z
    std::function<double(const Vector&, const Vector&)> log_joint;       // (u, data) -> log p, unconstrained
    std::function<ad::Expr(const std::vector<ad::Expr>&, const Vector&)> log_joint_ad;
    std::function<double(const Vector&, const Vector&)> log_joint_constrained;  // (z, data)
    std::function<Gaussian(const Vector&)> exact_posterior;              // conjugate models only
    std::function<double(const Vector&)> log_evidence;                   // conjugate models only
};

namespace model_detail {

template <class T, class U>
auto normal_lpdf(const T& x, const U& mu, double sd) {
    auto r = (x - mu) / sd;
    return -0.5 * ad::square(r) - (std::log(sd) + 0.5 * std::log(2.0 * M_PI));
}

template <class T>
auto normal_lpdf_sd(const T& x, const T& mu, const T& sd) {
    return -0.5 * ad::square((x - mu) / sd) - ad::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

// Binomial log-pmf through the logit link, stable for any eta.
template <class T>
auto binomial_logit_lpmf(double y, double n, const T& eta) {
    return log_choose(n, y) + (-y) * ad::log1p_exp(-eta) + (-(n - y)) * ad::log1p_exp(eta);
}

}  // namespace model_detail

// ---- gaussian toy: z ~ N(0, pv), x | z ~ N(z, nv) ----

struct GaussianToyConfig {
    double prior_var = 1.0;
    double noise_var = 1.0;
};

inline Model gaussian_toy(double prior_var = 1.0, double noise_var = 1.0) {
    if (!(prior_var > 0.0 && noise_var > 0.0)) throw std::invalid_argument("gaussian_toy: variances must be > 0");
    const double ps = std::sqrt(prior_var);
    const double ns = std::sqrt(noise_var);
    Model m;
    m.name = "gaussian_toy";
    m.dim = 1;
    m.transforms = {Transform::real()};
    m.simulate_latent = [ps](RngStream& rng) {
        Vector z(1);
        z[0] = rng.normal(0.0, ps);
        return z;
    };
    m.simulate_data = [ns](const Vector& z, RngStream& rng) {
        Vector x(1);
        x[0] = rng.normal(z[0], ns);
        return x;
    };
    auto lj = [ps, ns](const auto& u, const Vector& x) {
        using model_detail::normal_lpdf;
        return normal_lpdf(u[0], 0.0, ps) + normal_lpdf(x[0], u[0], ns);
    };
    m.log_joint = [lj](const Vector& u, const Vector& x) {
        std::vector<double> uu{u[0]};
        return lj(uu, x);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& x) { return lj(u, x); };
    m.log_joint_constrained = m.log_joint;  // identity transform
    m.exact_posterior = [prior_var, noise_var](const Vector& x) {
        const double var = 1.0 / (1.0 / prior_var + 1.0 / noise_var);
        Vector mean(1);
        mean[0] = var * x[0] / noise_var;
        Matrix l(1, 1);
        l(0, 0) = std::sqrt(var);
        return Gaussian(mean, l);
    };
    m.log_evidence = [prior_var, noise_var](const Vector& x) {
        const double v = prior_var + noise_var;
        return -0.5 * std::log(2.0 * M_PI * v) - 0.5 * x[0] * x[0] / v;
    };
    return m;
}

// ---- glm_binomial: bird-pairs counts over scaled time ----
//
// Latents (alpha, beta1, beta2) ~ N(0, 10^2); counts c_i ~ Binomial(n_i, pi_i)
// with pi_i = logistic(alpha + beta1 x_i + beta2 x_i^2) and x_i equally spaced
// in [-1, 1]. The trial counts default to a constant 50 over 40 time points.

struct GlmBinomialConfig {
    int n_points = 40;
    int n_trials = 50;
    double prior_sd = 10.0;
};

inline Model glm_binomial(const GlmBinomialConfig& cfg = {}) {
    std::vector<double> xs(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i) {
        xs[i] = cfg.n_points == 1 ? 0.0 : -1.0 + 2.0 * i / (cfg.n_points - 1);
    }
    Model m;
    m.name = "glm_binomial";
    m.dim = 3;
    m.transforms = TransformVec(3, Transform::real());
    m.simulate_latent = [cfg](RngStream& rng) {
        Vector z(3);
        for (int i = 0; i < 3; ++i) z[i] = rng.normal(0.0, cfg.prior_sd);
        return z;
    };
    m.simulate_data = [cfg, xs](const Vector& z, RngStream& rng) {
        Vector c(cfg.n_points);
        for (int i = 0; i < cfg.n_points; ++i) {
            const double eta = z[0] + z[1] * xs[i] + z[2] * xs[i] * xs[i];
            c[i] = rng.binomial(cfg.n_trials, ad::logistic(eta));
        }
        return c;
    };
    auto lj = [cfg, xs](const auto& u, const Vector& c) {
        using model_detail::binomial_logit_lpmf;
        using model_detail::normal_lpdf;
        auto lp = normal_lpdf(u[0], 0.0, cfg.prior_sd) + normal_lpdf(u[1], 0.0, cfg.prior_sd) +
                  normal_lpdf(u[2], 0.0, cfg.prior_sd);
        for (int i = 0; i < cfg.n_points; ++i) {
            auto eta = u[0] + u[1] * xs[i] + u[2] * (xs[i] * xs[i]);
            lp += binomial_logit_lpmf(c[i], cfg.n_trials, eta);
        }
        return lp;
    };
    m.log_joint = [lj](const Vector& u, const Vector& c) {
        std::vector<double> uu(u.data(), u.data() + u.size());
        return lj(uu, c);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& c) { return lj(u, c); };
    m.log_joint_constrained = m.log_joint;
    return m;
}

// ---- heart_transplants ----
//
// p_T ~ Uniform(0,1); y_T ~ Binomial(N, p_T); theta ~ Gamma(1/3, 1/3)
// (shape-rate); s_1..s_8 ~ Exponential(theta). Every simulated dataset
// carries exactly 8 survival times regardless of y_T, so the posterior
// dimension is fixed. data = [y_T, s_1, ..., s_8].

struct HeartTransplantsConfig {
    int cohort = 10;  // N
};

inline Model heart_transplants(const HeartTransplantsConfig& cfg = {}) {
    constexpr int kSurvivors = 8;
    constexpr double kShape = 1.0 / 3.0;
    constexpr double kRate = 1.0 / 3.0;
    Model m;
    m.name = "heart_transplants";
    m.dim = 2;
    m.transforms = {Transform::interval(0.0, 1.0), Transform::positive()};
    m.simulate_latent = [](RngStream& rng) {
        Vector z(2);
        z[0] = rng.uniform_range(0.0, 1.0);
        z[1] = rng.gamma(kShape, kRate);
        return z;
    };
    m.simulate_data = [cfg](const Vector& z, RngStream& rng) {
        Vector d(1 + kSurvivors);
        d[0] = rng.binomial(cfg.cohort, z[0]);
        for (int i = 0; i < kSurvivors; ++i) d[1 + i] = rng.exponential(z[1]);
        return d;
    };
    // u[0] = logit(p_T), u[1] = log(theta)
    auto lj = [cfg](const auto& u, const Vector& d) {
        using model_detail::binomial_logit_lpmf;
        const double y = d[0];
        double s_sum = 0.0;
        for (int i = 0; i < kSurvivors; ++i) s_sum += d[1 + i];
        // uniform prior on p_T is 0; its Jacobian is log sigma + log(1-sigma)
        auto lp = -ad::log1p_exp(-u[0]) - ad::log1p_exp(u[0]);
        // Gamma(shape, rate) prior on theta plus the log-transform Jacobian:
        // (shape-1) log(theta) - rate*theta + norm + u = shape*u - rate*e^u + norm
        auto theta = ad::exp(u[1]);
        lp += kShape * u[1] - kRate * theta + kShape * std::log(kRate) - std::lgamma(kShape);
        lp += binomial_logit_lpmf(y, cfg.cohort, u[0]);
        lp += kSurvivors * u[1] - theta * s_sum;  // sum_i log theta - theta s_i
        return lp;
    };
    m.log_joint = [lj](const Vector& u, const Vector& d) {
        std::vector<double> uu(u.data(), u.data() + u.size());
        return lj(uu, d);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& d) { return lj(u, d); };
    m.log_joint_constrained = [cfg](const Vector& z, const Vector& d) {
        const double p = z[0], theta = z[1];
        const double y = d[0];
        double lp = 0.0;  // uniform prior
        lp += (kShape - 1.0) * std::log(theta) - kRate * theta + kShape * std::log(kRate) - std::lgamma(kShape);
        lp += log_choose(cfg.cohort, y) + y * std::log(p) + (cfg.cohort - y) * std::log1p(-p);
        for (int i = 0; i < kSurvivors; ++i) lp += std::log(theta) - theta * d[1 + i];
        return lp;
    };
    return m;
}

// ---- hospitals ----
//
// omega ~ Uniform(.25, 1); mu ~ Uniform(-3, 3); logit(theta_i) ~ N(mu, omega^2);
// y_i ~ Binomial(n_i, theta_i). The per-hospital operation counts default to a
// documented synthetic vector in [50, 300] (the original study's counts are
// not reprinted anywhere we can cite, so these are placeholders).

struct HospitalsConfig {
    std::vector<int> n_ops = {55, 94, 132, 63, 210, 165, 97, 248, 120, 77, 186, 300};
};

inline Model hospitals(const HospitalsConfig& cfg = {}) {
    const int h = static_cast<int>(cfg.n_ops.size());
    Model m;
    m.name = "hospitals";
    m.dim = h + 2;
    m.transforms = {Transform::interval(0.25, 1.0), Transform::interval(-3.0, 3.0)};
    for (int i = 0; i < h; ++i) m.transforms.push_back(Transform::real());
    m.simulate_latent = [h](RngStream& rng) {
        Vector z(h + 2);
        z[0] = rng.uniform_range(0.25, 1.0);
        z[1] = rng.uniform_range(-3.0, 3.0);
        for (int i = 0; i < h; ++i) z[2 + i] = rng.normal(z[1], z[0]);
        return z;
    };
    m.simulate_data = [cfg, h](const Vector& z, RngStream& rng) {
        Vector y(h);
        for (int i = 0; i < h; ++i) y[i] = rng.binomial(cfg.n_ops[i], ad::logistic(z[2 + i]));
        return y;
    };
    const TransformVec ts = m.transforms;
    auto lj = [cfg, h, ts](const auto& u, const Vector& y) {
        using model_detail::binomial_logit_lpmf;
        using model_detail::normal_lpdf_sd;
        auto omega = constrain(u[0], ts[0]);
        auto mu = constrain(u[1], ts[1]);
        // uniform priors contribute their normalizers plus the Jacobians
        auto lp = transform_log_jacobian(u[0], ts[0]) - std::log(0.75) +
                  transform_log_jacobian(u[1], ts[1]) - std::log(6.0);
        for (int i = 0; i < h; ++i) {
            lp += normal_lpdf_sd(u[2 + i], mu, omega);
            lp += binomial_logit_lpmf(y[i], cfg.n_ops[i], u[2 + i]);
        }
        return lp;
    };
    m.log_joint = [lj](const Vector& u, const Vector& y) {
        std::vector<double> uu(u.data(), u.data() + u.size());
        return lj(uu, y);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& y) { return lj(u, y); };
    m.log_joint_constrained = [cfg, h](const Vector& z, const Vector& y) {
        const double omega = z[0], mu = z[1];
        double lp = -std::log(0.75) - std::log(6.0);
        for (int i = 0; i < h; ++i) {
            const double t = z[2 + i];
            lp += -0.5 * ((t - mu) / omega) * ((t - mu) / omega) - std::log(omega) - 0.5 * std::log(2.0 * M_PI);
            const double theta = ad::logistic(t);
            lp += log_choose(cfg.n_ops[i], y[i]) + y[i] * std::log(theta) + (cfg.n_ops[i] - y[i]) * std::log1p(-theta);
        }
        return lp;
    };
    return m;
}

// ---- regression models over a fixed design matrix ----

// Bayesian logistic regression, w ~ N(0, I), labels in {0, 1}.
inline Model ionosphere(const Dataset& data) {
    auto x = std::make_shared<Matrix>(data.features);
    const int d = static_cast<int>(x->cols());
    const int n = static_cast<int>(x->rows());
    if (d < 1 || n < 1) throw std::invalid_argument("ionosphere: empty design matrix");
    Model m;
    m.name = "ionosphere";
    m.dim = d;
    m.transforms = TransformVec(d, Transform::real());
    m.conditional = true;
    m.simulate_latent = [d](RngStream& rng) {
        Vector w(d);
        for (int i = 0; i < d; ++i) w[i] = rng.normal();
        return w;
    };
    m.simulate_data = [x, n](const Vector& w, RngStream& rng) {
        Vector y(n);
        const Vector eta = *x * w;
        for (int i = 0; i < n; ++i) y[i] = rng.bernoulli(ad::logistic(eta[i])) ? 1.0 : 0.0;
        return y;
    };
    auto lj = [x, d, n](const auto& u, const Vector& y) {
        using Scalar = std::decay_t<decltype(u[0])>;
        using model_detail::normal_lpdf;
        Scalar lp = Scalar(0.0);
        for (int j = 0; j < d; ++j) lp += normal_lpdf(u[j], 0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            Scalar eta = Scalar(0.0);
            for (int j = 0; j < d; ++j) eta += (*x)(i, j) * u[j];
            lp += (-y[i]) * ad::log1p_exp(-eta) + (-(1.0 - y[i])) * ad::log1p_exp(eta);
        }
        return lp;
    };
    m.log_joint = [lj](const Vector& u, const Vector& y) {
        std::vector<double> uu(u.data(), u.data() + u.size());
        return lj(uu, y);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& y) { return lj(u, y); };
    m.log_joint_constrained = m.log_joint;
    return m;
}

// Bayesian linear regression, w ~ N(0, I), unit noise variance. The posterior
// is exactly Gaussian: Sigma^{-1} = I + X^T X, mean = Sigma X^T y.
inline Model concrete(const Dataset& data) {
    auto x = std::make_shared<Matrix>(data.features);
    const int d = static_cast<int>(x->cols());
    const int n = static_cast<int>(x->rows());
    if (d < 1 || n < 1) throw std::invalid_argument("concrete: empty design matrix");
    Model m;
    m.name = "concrete";
    m.dim = d;
    m.transforms = TransformVec(d, Transform::real());
    m.conditional = true;
    m.simulate_latent = [d](RngStream& rng) {
        Vector w(d);
        for (int i = 0; i < d; ++i) w[i] = rng.normal();
        return w;
    };
    m.simulate_data = [x, n](const Vector& w, RngStream& rng) {
        Vector y = *x * w;
        for (int i = 0; i < n; ++i) y[i] += rng.normal();
        return y;
    };
    auto lj = [x, d, n](const auto& u, const Vector& y) {
        using Scalar = std::decay_t<decltype(u[0])>;
        using model_detail::normal_lpdf;
        Scalar lp = Scalar(0.0);
        for (int j = 0; j < d; ++j) lp += normal_lpdf(u[j], 0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            Scalar eta = Scalar(0.0);
            for (int j = 0; j < d; ++j) eta += (*x)(i, j) * u[j];
            lp += normal_lpdf(y[i], eta, 1.0);
        }
        return lp;
    };
    m.log_joint = [lj](const Vector& u, const Vector& y) {
        std::vector<double> uu(u.data(), u.data() + u.size());
        return lj(uu, y);
    };
    m.log_joint_ad = [lj](const std::vector<ad::Expr>& u, const Vector& y) { return lj(u, y); };
    m.log_joint_constrained = m.log_joint;
    m.exact_posterior = [x, d](const Vector& y) {
        const Matrix prec = Matrix::Identity(d, d) + x->transpose() * *x;
        const Matrix l = cholesky(prec);
        const Vector mean = l.transpose().triangularView<Eigen::Upper>().solve(
            l.triangularView<Eigen::Lower>().solve(x->transpose() * y));
        const Matrix cov = l.transpose().triangularView<Eigen::Upper>().solve(
            Matrix(l.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d))));
        return Gaussian::from_mean_cov(mean, 0.5 * (cov + cov.transpose()));
    };
    m.log_evidence = [x, n](const Vector& y) {
        const Matrix cov = Matrix::Identity(n, n) + *x * x->transpose();
        const Matrix l = cholesky(cov);
        const Vector w = l.triangularView<Eigen::Lower>().solve(y);
        return -0.5 * n * std::log(2.0 * M_PI) - l.diagonal().array().log().sum() - 0.5 * w.squaredNorm();
    };
    return m;
}

}  // namespace sdos
