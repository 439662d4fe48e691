#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sdos/gaussian.hpp"
#include "sdos/inference.hpp"
#include "sdos/models.hpp"
#include "sdos/numerics.hpp"
#include "sdos/rng.hpp"
#include "sdos/transforms.hpp"

// Symmetric-divergence-over-simulations diagnostics. Each repetition
// simulates a dataset from the model, re-runs inference from scratch on it,
// and evaluates one log-ratio difference d_k whose average estimates the
// symmetric KL divergence between the approximation and the target, jointly
// over latents and simulated data. All latent-space arithmetic happens in
// unconstrained coordinates with Jacobian corrections inside the model's
// log-joint.

namespace sdos {

struct DiagnosticSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
};

// Normal-theory summary of the per-repetition values on the raw d scale.
inline DiagnosticSummary summarize(const std::vector<double>& d_values, double level) {
    if (d_values.size() < 2) throw std::invalid_argument("summarize: need at least 2 values");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("summarize: level must be in (0,1)");
    const int k = static_cast<int>(d_values.size());
    double mean = 0.0;
    for (double d : d_values) mean += d;
    mean /= k;
    double ss = 0.0;
    for (double d : d_values) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (k - 1));
    const double se = sd / std::sqrt(static_cast<double>(k));
    const double z = normal_quantile(0.5 * (1.0 + level));
    return {mean, se, {mean - z * se, mean + z * se}};
}

struct DiagnosticResult {
    std::vector<double> d_values;  // per-repetition values, nats, ordered by k
    double mean = 0.0;
    double std_error = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    struct Meta {
        std::string model;
        std::string method;
        int iters = 0;
        int M = 1;
        int K = 0;
        std::uint64_t master_seed = 0;
        double level = 0.95;
        int failure_count = 0;  // repetitions dropped because inference failed
    } meta;
};

namespace diag_detail {

// Fixed substream roles within one repetition. Keeping each role on its own
// stream makes the shared-draw identities hold exactly: e.g. the IW
// diagnostic at M = 1 consumes the same draws as the joint diagnostic.
enum Role : std::uint64_t { kSimulate = 0, kFit = 1, kTilde = 2, kExtra = 3, kAugment = 4 };

}  // namespace diag_detail

// One repetition of the joint diagnostic:
// d = [log p(z,x) - log q(z|x)] - [log p(z~,x) - log q(z~|x)].
inline double diagnostic_rep_joint(const Model& m, const QFitter& fitter, RngStream& rep_rng) {
    RngStream sim = rep_rng.split(diag_detail::kSimulate);
    RngStream fit = rep_rng.split(diag_detail::kFit);
    RngStream tilde = rep_rng.split(diag_detail::kTilde);
    const Vector z = m.simulate_latent(sim);
    const Vector data = m.simulate_data(z, sim);
    const Gaussian q = fitter(m, data, fit);
    const Vector u = to_unconstrained(z, m.transforms).first;
    const Vector ut = q.sample(tilde);
    const double d = (m.log_joint(u, data) - q.log_density(u)) - (m.log_joint(ut, data) - q.log_density(ut));
    if (!std::isfinite(d)) throw NonFiniteValue("diagnostic_rep_joint: non-finite d");
    return d;
}

// The d-value of the importance-weighted diagnostic given explicit sample
// blocks; bitwise invariant under permutations within either block.
inline double iw_dvalue(const Model& m, const Vector& data, const Gaussian& q, const std::vector<Vector>& z_block,
                        const std::vector<Vector>& tilde_block) {
    auto log_weights = [&](const std::vector<Vector>& block) {
        std::vector<double> lw(block.size());
        for (size_t i = 0; i < block.size(); ++i) lw[i] = m.log_joint(block[i], data) - q.log_density(block[i]);
        return lw;
    };
    const double d = logsumexp(log_weights(z_block)) - logsumexp(log_weights(tilde_block));
    if (!std::isfinite(d)) throw NonFiniteValue("iw_dvalue: non-finite d");
    return d;
}

// One repetition of the importance-weighted diagnostic: z_1 comes from the
// model simulation, z_2..z_M and the whole tilde block from q. The 1/M
// factors cancel in the difference and are omitted.
inline double diagnostic_rep_iw(const Model& m, const QFitter& fitter, int M, RngStream& rep_rng) {
    if (M < 1) throw std::invalid_argument("diagnostic_rep_iw: M must be >= 1");
    RngStream sim = rep_rng.split(diag_detail::kSimulate);
    RngStream fit = rep_rng.split(diag_detail::kFit);
    RngStream tilde = rep_rng.split(diag_detail::kTilde);
    RngStream extra = rep_rng.split(diag_detail::kExtra);
    const Vector z = m.simulate_latent(sim);
    const Vector data = m.simulate_data(z, sim);
    const Gaussian q = fitter(m, data, fit);
    std::vector<Vector> z_block;
    z_block.reserve(M);
    z_block.push_back(to_unconstrained(z, m.transforms).first);
    for (int i = 1; i < M; ++i) z_block.push_back(q.sample(extra));
    std::vector<Vector> tilde_block;
    tilde_block.reserve(M);
    for (int i = 0; i < M; ++i) tilde_block.push_back(q.sample(tilde));
    return iw_dvalue(m, data, q, z_block, tilde_block);
}

// Self-normalized importance resampling: draw M proposals from q, pick index
// m with probability proportional to p/q, and return the multiset with the
// selected draw first.
inline std::vector<Vector> sample_qiw(const Gaussian& q, const Model& m, const Vector& data, int M, RngStream& rng) {
    if (M < 1) throw std::invalid_argument("sample_qiw: M must be >= 1");
    std::vector<Vector> draws(M);
    std::vector<double> lw(M);
    for (int i = 0; i < M; ++i) {
        draws[i] = q.sample(rng);
        lw[i] = m.log_joint(draws[i], data) - q.log_density(draws[i]);
    }
    const double lse = logsumexp(lw);
    if (!std::isfinite(lse)) throw NonFiniteValue("sample_qiw: all importance weights are zero");
    const double u = rng.uniform();
    int pick = M - 1;
    double cum = 0.0;
    for (int i = 0; i < M; ++i) {
        cum += std::exp(lw[i] - lse);
        if (u < cum) {
            pick = i;
            break;
        }
    }
    std::vector<Vector> out;
    out.reserve(M);
    out.push_back(draws[pick]);
    for (int i = 0; i < M; ++i) {
        if (i != pick) out.push_back(draws[i]);
    }
    return out;
}

// ---- augmentation ----

// Augments a base model with a hidden variable h whose conditional
// p(h | z, x) can be simulated and evaluated. h lives in unconstrained space.
struct AugmentedModel {
    const Model* base = nullptr;
    int h_dim = 0;
    std::function<Vector(const Vector& u, const Vector& data, RngStream&)> simulate_h;
    std::function<double(const Vector& u, const Vector& h, const Vector& data)> log_h_given_z;
};

// An approximation q(z, h | x) that can be sampled and evaluated jointly.
struct AugmentedApprox {
    std::function<std::pair<Vector, Vector>(RngStream&)> sample;
    std::function<double(const Vector& u, const Vector& h)> log_density;
};

using AugmentedFitter = std::function<AugmentedApprox(const Model&, const Vector& data, RngStream&)>;

// One repetition of the augmented diagnostic, with
// log p(z,h,x) = log p(z,x) + log p(h|z,x).
inline double diagnostic_rep_augmented(const AugmentedModel& am, const AugmentedFitter& fitter, RngStream& rep_rng) {
    const Model& m = *am.base;
    RngStream sim = rep_rng.split(diag_detail::kSimulate);
    RngStream fit = rep_rng.split(diag_detail::kFit);
    RngStream tilde = rep_rng.split(diag_detail::kTilde);
    RngStream haug = rep_rng.split(diag_detail::kAugment);
    const Vector z = m.simulate_latent(sim);
    const Vector data = m.simulate_data(z, sim);
    const AugmentedApprox q = fitter(m, data, fit);
    const Vector u = to_unconstrained(z, m.transforms).first;
    const Vector h = am.simulate_h(u, data, haug);
    const auto [ut, ht] = q.sample(tilde);
    const double lhs = m.log_joint(u, data) + am.log_h_given_z(u, h, data) - q.log_density(u, h);
    const double rhs = m.log_joint(ut, data) + am.log_h_given_z(ut, ht, data) - q.log_density(ut, ht);
    const double d = lhs - rhs;
    if (!std::isfinite(d)) throw NonFiniteValue("diagnostic_rep_augmented: non-finite d");
    return d;
}

namespace diag_detail {

// Runs K independent repetitions, repetition k on RngStream(master_seed, k),
// optionally fanned out over a worker pool. Reduction is ordered by k, so the
// result does not depend on the worker count. Repetitions whose inference
// raises CurvatureFailure are dropped and counted.
template <class RepFn>
DiagnosticResult run_reps(RepFn&& rep, int K, std::uint64_t master_seed, int jobs, double level) {
    if (K < 2) throw std::invalid_argument("diagnostic: K must be >= 2");
    if (jobs < 1) throw std::invalid_argument("diagnostic: jobs must be >= 1");
    std::vector<std::optional<double>> values(K);
    std::vector<char> failed(K, 0);
    std::vector<std::exception_ptr> errors(K);

    auto worker = [&](int start, int stride) {
        for (int k = start; k < K; k += stride) {
            RngStream rep_rng(master_seed, static_cast<std::uint64_t>(k));
            try {
                values[k] = rep(rep_rng);
            } catch (const CurvatureFailure&) {
                failed[k] = 1;
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker, t, jobs);
        for (auto& th : pool) th.join();
    }

    DiagnosticResult result;
    result.meta.K = K;
    result.meta.master_seed = master_seed;
    result.meta.level = level;
    for (int k = 0; k < K; ++k) {
        if (errors[k]) std::rethrow_exception(errors[k]);
        if (failed[k]) {
            ++result.meta.failure_count;
        } else {
            result.d_values.push_back(*values[k]);
        }
    }
    if (result.d_values.empty()) throw CurvatureFailure("diagnostic: every repetition failed");
    if (result.d_values.size() >= 2) {
        const DiagnosticSummary s = summarize(result.d_values, level);
        result.mean = s.mean;
        result.std_error = s.std_error;
        result.ci = s.ci;
    } else {
        result.mean = result.d_values.front();
        result.std_error = std::numeric_limits<double>::quiet_NaN();
        result.ci = {result.mean, result.mean};
    }
    return result;
}

}  // namespace diag_detail

inline DiagnosticResult sdos_joint(const Model& m, const QFitter& fitter, int K, std::uint64_t master_seed,
                                   int jobs = 1, double level = 0.95) {
    auto result = diag_detail::run_reps(
        [&](RngStream& rng) { return diagnostic_rep_joint(m, fitter, rng); }, K, master_seed, jobs, level);
    result.meta.model = m.name;
    return result;
}

// Conditional variant: covariates stay fixed inside the model, the simulated
// data plays the y role. Mechanically identical to the joint diagnostic.
inline DiagnosticResult sdos_conditional(const Model& m, const QFitter& fitter, int K, std::uint64_t master_seed,
                                         int jobs = 1, double level = 0.95) {
    return sdos_joint(m, fitter, K, master_seed, jobs, level);
}

inline DiagnosticResult sdos_iw(const Model& m, const QFitter& fitter, int M, int K, std::uint64_t master_seed,
                                int jobs = 1, double level = 0.95) {
    auto result = diag_detail::run_reps(
        [&](RngStream& rng) { return diagnostic_rep_iw(m, fitter, M, rng); }, K, master_seed, jobs, level);
    result.meta.model = m.name;
    result.meta.M = M;
    return result;
}

inline DiagnosticResult sdos_augmented(const AugmentedModel& am, const AugmentedFitter& fitter, int K,
                                       std::uint64_t master_seed, int jobs = 1, double level = 0.95) {
    auto result = diag_detail::run_reps(
        [&](RngStream& rng) { return diagnostic_rep_augmented(am, fitter, rng); }, K, master_seed, jobs, level);
    result.meta.model = am.base ? am.base->name : "";
    return result;
}

}  // namespace sdos
