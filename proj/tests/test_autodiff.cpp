#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdos/autodiff.hpp"
#include "sdos/inference.hpp"
#include "sdos/models.hpp"
#include "sdos/rng.hpp"

using namespace sdos;
using ad::Expr;

namespace {

// Central finite differences, the independent oracle for taped gradients.
template <class F>
Vector fd_gradient(F&& f, const Vector& z, double h = 1e-5) {
    Vector g(z.size());
    Vector zp = z;
    for (int i = 0; i < z.size(); ++i) {
        zp[i] = z[i] + h;
        const double fp = f(zp);
        zp[i] = z[i] - h;
        const double fm = f(zp);
        zp[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("value_and_grad: quadratic") {
    auto f = [](const std::vector<Expr>& z) { return 0.5 * (ad::square(z[0]) + ad::square(z[1])); };
    Vector z(2);
    z << 1.0, -2.0;
    const auto [val, grad] = ad::value_and_grad(f, z);
    REQUIRE(val == Catch::Approx(2.5));
    REQUIRE(grad[0] == Catch::Approx(1.0));
    REQUIRE(grad[1] == Catch::Approx(-2.0));
}

TEST_CASE("value_and_grad: constant function has zero gradient") {
    auto f = [](const std::vector<Expr>&) { return Expr(3.5); };
    const auto [val, grad] = ad::value_and_grad(f, Vector::Ones(4));
    REQUIRE(val == 3.5);
    REQUIRE(grad.norm() == 0.0);
}

TEST_CASE("value_and_grad: bilinear form matches (A + A^T) z and finite differences") {
    RngStream rng(21, 0);
    Matrix a(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
    }
    auto f = [&](const std::vector<Expr>& z) {
        Expr acc(0.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) acc += a(i, j) * z[i] * z[j];
        }
        return acc;
    };
    Vector z(3);
    z << 0.3, -1.1, 0.7;
    const auto [val, grad] = ad::value_and_grad(f, z);
    (void)val;
    const Vector expected = (a + a.transpose()) * z;
    REQUIRE((grad - expected).norm() < 1e-12);
    auto fv = [&](const Vector& v) {
        return ad::value_and_grad(f, v).first;
    };
    REQUIRE((grad - fd_gradient(fv, z)).norm() < 1e-6);
}

TEST_CASE("value_and_grad: non-finite forward pass throws") {
    auto f = [](const std::vector<Expr>& z) { return ad::log(z[0]); };
    Vector z(1);
    z << -1.0;
    REQUIRE_THROWS_AS(ad::value_and_grad(f, z), NonFiniteValue);
}

TEST_CASE("value_and_grad: linearity of taped compositions") {
    auto f = [](const std::vector<Expr>& z) { return ad::exp(z[0]) + ad::square(z[1]); };
    auto g = [](const std::vector<Expr>& z) { return ad::log1p_exp(z[0]) * z[1]; };
    const double alpha = 2.5, beta = -0.75;
    auto combo = [&](const std::vector<Expr>& z) { return alpha * f(z) + beta * g(z); };
    Vector z(2);
    z << 0.4, 1.3;
    const Vector gf = ad::value_and_grad(f, z).second;
    const Vector gg = ad::value_and_grad(g, z).second;
    const Vector gc = ad::value_and_grad(combo, z).second;
    REQUIRE((gc - (alpha * gf + beta * gg)).norm() < 1e-12);
}

TEST_CASE("primitive derivatives against finite differences") {
    RngStream rng(77, 0);
    auto check = [&](auto&& prim, double lo, double hi) {
        for (int t = 0; t < 10; ++t) {
            Vector z(1);
            z << rng.uniform_range(lo, hi);
            auto f = [&](const std::vector<Expr>& v) { return prim(v[0]); };
            const double g = ad::value_and_grad(f, z).second[0];
            auto fv = [&](const Vector& v) { return ad::value_and_grad(f, v).first; };
            const double gfd = fd_gradient(fv, z)[0];
            REQUIRE(g == Catch::Approx(gfd).margin(1e-5).epsilon(1e-5));
        }
    };
    check([](const Expr& x) { return ad::exp(x); }, -2.0, 2.0);
    check([](const Expr& x) { return ad::log(x); }, 0.1, 5.0);
    check([](const Expr& x) { return ad::sqrt(x); }, 0.1, 5.0);
    check([](const Expr& x) { return ad::logistic(x); }, -4.0, 4.0);
    check([](const Expr& x) { return ad::log1p_exp(x); }, -35.0, 35.0);
    check([](const Expr& x) { return ad::lgamma(x); }, 0.2, 8.0);
    check([](const Expr& x) { return x / (ad::square(x) + 1.0); }, -3.0, 3.0);
}

TEST_CASE("hessian: quadratic form recovers its matrix") {
    Matrix a(3, 3);
    a << 2.0, 0.3, -0.1, 0.3, 1.5, 0.4, -0.1, 0.4, 3.0;
    auto f = [&](const std::vector<Expr>& z) {
        Expr acc(0.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) acc += 0.5 * a(i, j) * z[i] * z[j];
        }
        return acc;
    };
    Vector z(3);
    z << 0.2, -0.4, 1.0;
    const Matrix h = ad::hessian(f, z);
    REQUIRE((h - a).norm() / a.norm() < 1e-5);
    REQUIRE((h - h.transpose()).norm() == 0.0);
}

TEST_CASE("hessian: standard normal log density has curvature -I") {
    auto f = [](const std::vector<Expr>& z) {
        Expr acc(0.0);
        for (const auto& zi : z) acc += -0.5 * ad::square(zi);
        return acc;
    };
    const Matrix h = ad::hessian(f, Vector::Ones(4));
    REQUIRE((h + Matrix::Identity(4, 4)).norm() < 1e-5);
}

TEST_CASE("hessian: exp at zero") {
    auto f = [](const std::vector<Expr>& z) { return ad::exp(z[0]); };
    const Matrix h = ad::hessian(f, Vector::Zero(1));
    REQUIRE(h(0, 0) == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("model zoo gradients match central finite differences") {
    std::vector<Model> zoo;
    zoo.push_back(gaussian_toy());
    zoo.push_back(glm_binomial());
    zoo.push_back(heart_transplants());
    zoo.push_back(hospitals());
    {
        RngStream rng(100, 0);
        Matrix x(12, 3);
        for (int i = 0; i < x.size(); ++i) x(i / 3, i % 3) = rng.normal();
        Dataset ds;
        ds.features = x;
        zoo.push_back(ionosphere(ds));
        zoo.push_back(concrete(ds));
    }
    for (const auto& m : zoo) {
        RngStream rng(55, 1);
        RngStream sim = rng.split(0);
        const Vector z = m.simulate_latent(sim);
        const Vector data = m.simulate_data(z, sim);
        for (int t = 0; t < 20; ++t) {
            Vector u(m.dim);
            for (int i = 0; i < m.dim; ++i) u[i] = rng.normal();
            const Vector g = log_joint_grad(m, data, u).second;
            auto fv = [&](const Vector& v) { return m.log_joint(v, data); };
            const Vector gfd = fd_gradient(fv, u);
            const double denom = std::max(1.0, gfd.cwiseAbs().maxCoeff());
            INFO(m.name);
            REQUIRE((g - gfd).cwiseAbs().maxCoeff() / denom < 1e-5);
        }
    }
}
