#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdos/autodiff.hpp"
#include "sdos/errors.hpp"
#include "sdos/linalg.hpp"

namespace sdos {

// Per-coordinate constraint descriptor mapping constrained <-> unconstrained
// space. Convention: log p_u(u) = log p_c(c(u)) + log|J| where J is the
// Jacobian of the inverse map u -> c.
struct Transform {
    enum class Kind { Real, Positive, Interval };
    Kind kind = Kind::Real;
    double a = 0.0, b = 0.0;

    static Transform real() { return {}; }
    static Transform positive() { return {Kind::Positive, 0.0, 0.0}; }
    static Transform interval(double a, double b) {
        if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
            throw std::invalid_argument("Transform::interval: requires finite a < b");
        }
        return {Kind::Interval, a, b};
    }
};

using TransformVec = std::vector<Transform>;

// c(u), usable with double or ad::Expr.
template <class T>
T constrain(const T& u, const Transform& t) {
    switch (t.kind) {
        case Transform::Kind::Real: return u;
        case Transform::Kind::Positive: return ad::exp(u);
        case Transform::Kind::Interval: return t.a + (t.b - t.a) * ad::logistic(u);
    }
    throw std::logic_error("constrain: bad kind");
}

// log|dc/du| at u; the additive correction making p_u a density.
template <class T>
T transform_log_jacobian(const T& u, const Transform& t) {
    switch (t.kind) {
        case Transform::Kind::Real: return T(0.0);
        case Transform::Kind::Positive: return u;
        case Transform::Kind::Interval:
            // log(b-a) + log sigma(u) + log(1-sigma(u))
            return std::log(t.b - t.a) - ad::log1p_exp(-u) - ad::log1p_exp(u);
    }
    throw std::logic_error("transform_log_jacobian: bad kind");
}

inline double unconstrain_coord(double c, const Transform& t) {
    switch (t.kind) {
        case Transform::Kind::Real: return c;
        case Transform::Kind::Positive:
            if (!(c > 0.0)) throw ConstraintViolation("to_unconstrained: value not strictly positive");
            return std::log(c);
        case Transform::Kind::Interval: {
            if (!(c > t.a && c < t.b)) throw ConstraintViolation("to_unconstrained: value not strictly inside interval");
            const double p = (c - t.a) / (t.b - t.a);
            return std::log(p) - std::log1p(-p);
        }
    }
    throw std::logic_error("unconstrain_coord: bad kind");
}

// Maps a constrained vector to unconstrained space. Also returns the total
// log|J| of the inverse map at the resulting point.
inline std::pair<Vector, double> to_unconstrained(const Vector& c, const TransformVec& ts) {
    if (static_cast<size_t>(c.size()) != ts.size()) {
        throw std::invalid_argument("to_unconstrained: dimension mismatch");
    }
    Vector u(c.size());
    double lj = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        u[i] = unconstrain_coord(c[i], ts[i]);
        lj += transform_log_jacobian(u[i], ts[i]);
    }
    return {u, lj};
}

inline Vector to_constrained(const Vector& u, const TransformVec& ts) {
    if (static_cast<size_t>(u.size()) != ts.size()) {
        throw std::invalid_argument("to_constrained: dimension mismatch");
    }
    Vector c(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) c[i] = constrain(u[i], ts[i]);
    return c;
}

}  // namespace sdos
