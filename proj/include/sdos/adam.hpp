#pragma once

#include <cmath>
#include <stdexcept>

#include "sdos/linalg.hpp"

namespace sdos {

// Two-phase step size: one value for the first half of the iteration budget,
// another for the second half.
struct AdamSchedule {
    double lr_early = 0.01;
    double lr_late = 0.001;
    int total_iters = 1;

    double at(int step) const { return 2 * step <= total_iters ? lr_early : lr_late; }
};

struct AdamState {
    int step = 0;
    Vector m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    AdamSchedule schedule;

    AdamState(int dim, AdamSchedule sched)
        : m(Vector::Zero(dim)), v(Vector::Zero(dim)), schedule(sched) {}
};

// One bias-corrected Adam ascent step. Mutates the moment state, returns the
// updated parameters.
inline Vector adam_update(AdamState& st, const Vector& params, const Vector& grad) {
    if (params.size() != st.m.size() || grad.size() != st.m.size()) {
        throw std::invalid_argument("adam_update: dimension mismatch");
    }
    st.step += 1;
    st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
    st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(st.beta1, st.step);
    const double c2 = 1.0 - std::pow(st.beta2, st.step);
    const Vector mhat = st.m / c1;
    const Vector vhat = st.v / c2;
    const double lr = st.schedule.at(st.step);
    return params + lr * (mhat.array() / (vhat.array().sqrt() + st.eps)).matrix();
}

}  // namespace sdos
