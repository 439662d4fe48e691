#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdos/gaussian.hpp"
#include "sdos/linalg.hpp"
#include "sdos/numerics.hpp"
#include "sdos/rng.hpp"
#include "sdos/transforms.hpp"

using namespace sdos;

TEST_CASE("cholesky: identity maps to identity") {
    const Matrix i3 = Matrix::Identity(3, 3);
    REQUIRE(cholesky(i3).isApprox(i3, 1e-14));
}

TEST_CASE("cholesky: 2x2 hand example") {
    Matrix a(2, 2);
    a << 4, 2, 2, 3;
    const Matrix l = cholesky(a);
    REQUIRE(l(0, 0) == Catch::Approx(2.0));
    REQUIRE(l(1, 0) == Catch::Approx(1.0));
    REQUIRE(l(0, 1) == 0.0);
    REQUIRE(l(1, 1) == Catch::Approx(std::sqrt(2.0)));
    REQUIRE((l * l.transpose() - a).norm() < 1e-12);
}

TEST_CASE("cholesky: negative pivot raises NotPositiveDefinite") {
    Matrix a(1, 1);
    a << -1.0;
    REQUIRE_THROWS_AS(cholesky(a), NotPositiveDefinite);
}

TEST_CASE("cholesky: random SPD factorization property") {
    RngStream rng(17, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 6);
        Matrix m(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
        }
        const Matrix a = m.transpose() * m + Matrix::Identity(d, d);
        const Matrix l = cholesky(a);
        REQUIRE((l * l.transpose() - a).norm() / a.norm() < 1e-10);
    }
}

TEST_CASE("gaussian log density: standard normal values") {
    Gaussian q1(Vector::Zero(1), Matrix::Identity(1, 1));
    REQUIRE(q1.log_density(Vector::Zero(1)) == Catch::Approx(-0.91893853).margin(1e-8));

    for (int d : {2, 5, 9}) {
        Gaussian qd(Vector::Zero(d), Matrix::Identity(d, d));
        REQUIRE(qd.log_density(Vector::Zero(d)) == Catch::Approx(-0.5 * d * std::log(2.0 * M_PI)));
    }
}

TEST_CASE("gaussian log density: univariate analytic formula") {
    // z = 3, N(1, variance 4): -0.5 log(2 pi 4) - (3-1)^2/8
    Vector mean(1), z(1);
    mean << 1.0;
    z << 3.0;
    Matrix l(1, 1);
    l << 2.0;
    Gaussian q(mean, l);
    REQUIRE(q.log_density(z) == Catch::Approx(-2.11208571).margin(1e-8));
}

TEST_CASE("gaussian log density: dimension mismatch") {
    Gaussian q(Vector::Zero(2), Matrix::Identity(2, 2));
    REQUIRE_THROWS(q.log_density(Vector::Zero(3)));
}

TEST_CASE("gaussian log density integrates to one (1-d quadrature)") {
    Vector mean(1);
    mean << 0.7;
    Matrix l(1, 1);
    l << 1.3;
    Gaussian q(mean, l);
    // Simpson's rule over +-10 sigma
    const double lo = mean[0] - 10 * l(0, 0), hi = mean[0] + 10 * l(0, 0);
    const int n = 20000;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        Vector z(1);
        z << lo + i * h;
        const double f = std::exp(q.log_density(z));
        acc += f * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    acc *= h / 3.0;
    REQUIRE(acc == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("gaussian sampling: degenerate noise returns the mean") {
    Vector mean(2);
    mean << 4.0, -1.0;
    Gaussian q(mean, 1e-300 * Matrix::Identity(2, 2));
    RngStream rng(3, 0);
    REQUIRE((q.sample(rng) - mean).norm() < 1e-12);
}

TEST_CASE("gaussian sampling: determinism under identical streams") {
    Gaussian q(Vector::Zero(3), Matrix::Identity(3, 3));
    RngStream a(42, 7), b(42, 7);
    REQUIRE(q.sample(a) == q.sample(b));
}

TEST_CASE("gaussian sampling: mean within 4 SE componentwise") {
    Vector mean(2);
    mean << 2.0, -3.0;
    Matrix l(2, 2);
    l << 1.5, 0.0, 0.4, 0.9;
    Gaussian q(mean, l);
    const Matrix cov = q.covariance();
    const int n = 100000;
    RngStream rng(5, 0);
    Vector acc = Vector::Zero(2);
    for (int i = 0; i < n; ++i) acc += q.sample(rng);
    acc /= n;
    for (int i = 0; i < 2; ++i) {
        const double se = std::sqrt(cov(i, i) / n);
        REQUIRE(std::abs(acc[i] - mean[i]) < 4.0 * se);
    }
}

TEST_CASE("gaussian sampling: covariance within 5% on d<=5") {
    for (int d : {2, 5}) {
        RngStream init(d, 99);
        Matrix m(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) m(i, j) = init.normal();
        }
        const Matrix cov = m.transpose() * m + Matrix::Identity(d, d);
        Gaussian q = Gaussian::from_mean_cov(Vector::Zero(d), cov);
        const int n = 100000;
        RngStream rng(11, static_cast<std::uint64_t>(d));
        Matrix acc = Matrix::Zero(d, d);
        Vector mean_acc = Vector::Zero(d);
        std::vector<Vector> draws;
        draws.reserve(n);
        for (int i = 0; i < n; ++i) {
            draws.push_back(q.sample(rng));
            mean_acc += draws.back();
        }
        mean_acc /= n;
        for (const auto& z : draws) acc += (z - mean_acc) * (z - mean_acc).transpose();
        acc /= (n - 1);
        REQUIRE((acc - cov).norm() / cov.norm() < 0.05);
    }
}

TEST_CASE("rng: disjoint stream indices look uncorrelated") {
    RngStream a(123, 1), b(123, 2);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal(), y = b.normal();
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    REQUIRE(std::abs(cov / std::sqrt(vx * vy)) < 0.01);
}

TEST_CASE("rng: gamma and binomial moments") {
    RngStream rng(9, 4);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rng.gamma(1.0 / 3.0, 1.0 / 3.0);
    REQUIRE(acc / n == Catch::Approx(1.0).margin(0.03));  // mean shape/rate = 1

    long total = 0;
    for (int i = 0; i < 20000; ++i) total += rng.binomial(50, 0.3);
    REQUIRE(static_cast<double>(total) / 20000.0 == Catch::Approx(15.0).margin(0.2));
}

TEST_CASE("transforms: examples") {
    SECTION("positive at 1") {
        Vector c(1);
        c << 1.0;
        auto [u, lj] = to_unconstrained(c, {Transform::positive()});
        REQUIRE(u[0] == 0.0);
        REQUIRE(lj == 0.0);
    }
    SECTION("interval(0,1) midpoint") {
        Vector c(1);
        c << 0.5;
        auto [u, lj] = to_unconstrained(c, {Transform::interval(0, 1)});
        REQUIRE(u[0] == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(lj == Catch::Approx(std::log(0.25)).margin(1e-12));
    }
    SECTION("interval(0,2) midpoint scales the jacobian") {
        Vector c(1);
        c << 1.0;
        auto [u, lj] = to_unconstrained(c, {Transform::interval(0, 2)});
        REQUIRE(u[0] == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(lj == Catch::Approx(std::log(0.5)).margin(1e-12));
    }
    SECTION("inverse direction") {
        Vector u(3);
        u << -7.3, 0.0, 0.0;
        const Vector c = to_constrained(u, {Transform::real(), Transform::positive(), Transform::interval(0, 1)});
        REQUIRE(c[0] == -7.3);
        REQUIRE(c[1] == Catch::Approx(1.0));
        REQUIRE(c[2] == Catch::Approx(0.5));
    }
    SECTION("boundary raises ConstraintViolation") {
        Vector c(1);
        c << 0.0;
        REQUIRE_THROWS_AS(to_unconstrained(c, {Transform::positive()}), ConstraintViolation);
        REQUIRE_THROWS_AS(to_unconstrained(c, {Transform::interval(0, 1)}), ConstraintViolation);
    }
}

TEST_CASE("transforms: randomized round trips") {
    RngStream rng(31, 0);
    const TransformVec ts = {Transform::real(), Transform::positive(), Transform::interval(-2.0, 5.0)};
    for (int trial = 0; trial < 200; ++trial) {
        Vector c(3);
        c << rng.normal() * 10.0, rng.exponential(0.5), rng.uniform_range(-2.0 + 1e-6, 5.0 - 1e-6);
        const Vector u = to_unconstrained(c, ts).first;
        const Vector back = to_constrained(u, ts);
        for (int i = 0; i < 3; ++i) {
            REQUIRE(std::abs(back[i] - c[i]) <= 1e-12 * std::max(1.0, std::abs(c[i])));
        }
    }
}

TEST_CASE("normal quantile matches pinned value") {
    REQUIRE(normal_quantile(0.975) == Catch::Approx(1.959964).margin(5e-7));
    REQUIRE(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(normal_cdf(normal_quantile(0.123)) == Catch::Approx(0.123).margin(1e-10));
}

TEST_CASE("logsumexp is order independent and stable") {
    std::vector<double> a = {1000.0, 999.0, -40.0};
    std::vector<double> b = {-40.0, 1000.0, 999.0};
    REQUIRE(logsumexp(a) == logsumexp(b));
    REQUIRE(logsumexp({0.0, 0.0}) == Catch::Approx(std::log(2.0)));
}
