#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sdos/errors.hpp"
#include "sdos/linalg.hpp"

// Reverse-mode automatic differentiation over a scalar expression tape.
// Expr is a lightweight handle (tape pointer + node id + value); an Expr with
// a null tape is a constant and records nothing. Model code is written once,
// templated on the scalar type, calling the ad:: math functions, which have
// overloads for both double and Expr.

namespace sdos::ad {

// ---- double overloads so templated code works untaped ----

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double square(double x) { return x * x; }
inline double lgamma(double x) { return std::lgamma(x); }

inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x); for large x the e^x term dominates completely.
inline double log1p_exp(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

inline double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    const double f = 1.0 / (x * x);
    return r + std::log(x) - 0.5 / x - f * (1.0 / 12.0 - f * (1.0 / 120.0 - f / 252.0));
}

// ---- tape ----

struct Tape {
    struct Node {
        double w0, w1;    // local partials toward the parents
        std::int32_t p0, p1;  // parent node ids, -1 if absent
    };
    std::vector<Node> nodes;

    std::int32_t leaf() {
        nodes.push_back({0.0, 0.0, -1, -1});
        return static_cast<std::int32_t>(nodes.size() - 1);
    }
    std::int32_t push(double w0, std::int32_t p0, double w1 = 0.0, std::int32_t p1 = -1) {
        nodes.push_back({w0, w1, p0, p1});
        return static_cast<std::int32_t>(nodes.size() - 1);
    }
};

struct Expr {
    Tape* tape = nullptr;
    std::int32_t id = -1;
    double v = 0.0;

    Expr() = default;
    Expr(double c) : v(c) {}  // NOLINT: implicit constants are the point
    Expr(Tape* t, std::int32_t i, double val) : tape(t), id(i), v(val) {}
};

inline Expr operator+(const Expr& a, const Expr& b) {
    Tape* t = a.tape ? a.tape : b.tape;
    if (!t) return Expr(a.v + b.v);
    if (a.tape && b.tape) return {t, t->push(1.0, a.id, 1.0, b.id), a.v + b.v};
    const Expr& x = a.tape ? a : b;
    return {t, t->push(1.0, x.id), a.v + b.v};
}

inline Expr operator-(const Expr& a, const Expr& b) {
    Tape* t = a.tape ? a.tape : b.tape;
    if (!t) return Expr(a.v - b.v);
    if (a.tape && b.tape) return {t, t->push(1.0, a.id, -1.0, b.id), a.v - b.v};
    if (a.tape) return {t, t->push(1.0, a.id), a.v - b.v};
    return {t, t->push(-1.0, b.id), a.v - b.v};
}

inline Expr operator-(const Expr& a) {
    if (!a.tape) return Expr(-a.v);
    return {a.tape, a.tape->push(-1.0, a.id), -a.v};
}

inline Expr operator*(const Expr& a, const Expr& b) {
    Tape* t = a.tape ? a.tape : b.tape;
    if (!t) return Expr(a.v * b.v);
    if (a.tape && b.tape) return {t, t->push(b.v, a.id, a.v, b.id), a.v * b.v};
    if (a.tape) return {t, t->push(b.v, a.id), a.v * b.v};
    return {t, t->push(a.v, b.id), a.v * b.v};
}

inline Expr operator/(const Expr& a, const Expr& b) {
    Tape* t = a.tape ? a.tape : b.tape;
    const double val = a.v / b.v;
    if (!t) return Expr(val);
    const double wa = 1.0 / b.v;
    const double wb = -a.v / (b.v * b.v);
    if (a.tape && b.tape) return {t, t->push(wa, a.id, wb, b.id), val};
    if (a.tape) return {t, t->push(wa, a.id), val};
    return {t, t->push(wb, b.id), val};
}

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

namespace detail {
inline Expr unary(const Expr& a, double val, double w) {
    if (!a.tape) return Expr(val);
    return {a.tape, a.tape->push(w, a.id), val};
}
}  // namespace detail

inline Expr exp(const Expr& a) {
    const double e = std::exp(a.v);
    return detail::unary(a, e, e);
}
inline Expr log(const Expr& a) { return detail::unary(a, std::log(a.v), 1.0 / a.v); }
inline Expr sqrt(const Expr& a) {
    const double s = std::sqrt(a.v);
    return detail::unary(a, s, 0.5 / s);
}
inline Expr square(const Expr& a) { return detail::unary(a, a.v * a.v, 2.0 * a.v); }
inline Expr logistic(const Expr& a) {
    const double s = logistic(a.v);
    return detail::unary(a, s, s * (1.0 - s));
}
inline Expr log1p_exp(const Expr& a) { return detail::unary(a, log1p_exp(a.v), logistic(a.v)); }
inline Expr lgamma(const Expr& a) { return detail::unary(a, std::lgamma(a.v), digamma(a.v)); }

// ---- evaluation ----

using DifferentiableFn = std::function<Expr(const std::vector<Expr>&)>;

template <class F>
std::pair<double, Vector> value_and_grad(F&& f, const Vector& z) {
    const int d = static_cast<int>(z.size());
    Tape tape;
    tape.nodes.reserve(256);
    std::vector<Expr> in(d);
    for (int i = 0; i < d; ++i) in[i] = Expr(&tape, tape.leaf(), z[i]);
    const Expr out = f(in);
    if (!std::isfinite(out.v)) throw NonFiniteValue("value_and_grad: forward pass is non-finite");
    Vector grad = Vector::Zero(d);
    if (out.tape) {
        std::vector<double> adj(tape.nodes.size(), 0.0);
        adj[out.id] = 1.0;
        for (std::int32_t i = out.id; i >= 0; --i) {
            const double a = adj[i];
            if (a == 0.0) continue;
            const Tape::Node& n = tape.nodes[i];
            if (n.p0 >= 0) adj[n.p0] += n.w0 * a;
            if (n.p1 >= 0) adj[n.p1] += n.w1 * a;
        }
        for (int i = 0; i < d; ++i) grad[i] = adj[i];
    }
    return {out.v, grad};
}

// Forward differences of reverse-mode gradients, then symmetrized. Costs d+1
// gradient evaluations; fine at the dimensions this library targets.
template <class F>
Matrix hessian(F&& f, const Vector& z) {
    const int d = static_cast<int>(z.size());
    const double h = 1e-5 * std::max(1.0, z.cwiseAbs().maxCoeff());
    const Vector g0 = value_and_grad(f, z).second;
    Matrix hess(d, d);
    Vector zp = z;
    for (int j = 0; j < d; ++j) {
        zp[j] = z[j] + h;
        hess.col(j) = (value_and_grad(f, zp).second - g0) / h;
        zp[j] = z[j];
    }
    return 0.5 * (hess + hess.transpose());
}

}  // namespace sdos::ad
