#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lendopt/core.hpp"
#include "lendopt/intensity.hpp"
#include "lendopt/rng.hpp"
#include "lendopt/threading.hpp"

namespace lendopt::sim {

enum class JumpMode { exact, relaxed };

struct SimConfig {
    int n_steps = 100;
    int jump_trials = 10;   // J: Bernoulli sub-trials per step and sign
    double epsilon = 0.25;  // hard-sigmoid half-width (relaxed mode)
    JumpMode mode = JumpMode::exact;
    std::uint64_t seed = 1;
    long n_paths = 1;
    int threads = 0;  // 0: default_thread_count()
    bool record_paths = false;

    void validate() const {
        if (n_steps <= 0) throw ConfigError("n_steps must be > 0");
        if (jump_trials < 1) throw ConfigError("jump_trials must be >= 1");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
        if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
    }
};

/// Starting utilization: a fixed lattice value or uniform over the interior
/// nodes {delta, ..., 1 - delta}.
struct U0Spec {
    enum Kind { fixed, uniform } kind = fixed;
    double value = 0.5;

    static U0Spec fixed_at(double u) { return {fixed, u}; }
    static U0Spec uniform_interior() { return {uniform, 0.0}; }
};

struct TrajectoryBatch {
    long n_paths = 0;
    int n_steps = 0;
    double tau = 0.0;
    Eigen::VectorXd initial_u;
    Eigen::VectorXd terminal_u;
    Eigen::VectorXd terminal_x;
    Eigen::VectorXd terminal_q;
    bool has_paths = false;
    Eigen::MatrixXd u_paths, x_paths, q_paths;  // n_paths x (n_steps + 1) when recorded
};

// ---------------------------------------------------------------------------
// relaxed-Bernoulli primitives

/// H_eps(x): 0 below -eps, 1 above +eps, linear in between; H_eps(0) = 1/2.
template <class Scalar>
Scalar hard_sigmoid(Scalar x, double epsilon) {
    const Scalar lo = x + epsilon > Scalar(0) ? x + Scalar(epsilon) : Scalar(0);
    const Scalar hi = x - epsilon > Scalar(0) ? x - Scalar(epsilon) : Scalar(0);
    return (lo - hi) / Scalar(2.0 * epsilon);
}

/// log(x) - log(1-x) on (0, 1).
inline double logit(double x) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("logit argument outside (0,1)");
    return std::log(x) - std::log1p(-x);
}

inline constexpr double kProbClamp = 1e-12;

/// Thresholds in z-space of the relaxed jump indicator for success
/// probability p: below z_zero the hard sigmoid saturates at 0, above z_full
/// at 1 (avoids per-trial transcendentals in the hot loop).
struct RelaxedWindow {
    double z_zero, z_full;

    static RelaxedWindow of(double p, double exp_plus_eps, double exp_minus_eps) {
        const double q = 1.0 - p;
        return {q / (q + p * exp_plus_eps), q / (q + p * exp_minus_eps)};
    }
};

/// Relaxed count over J trials with uniforms supplied by uni(j).  The window
/// count (trials on the linear part of the hard sigmoid) is what the
/// derivative with respect to p needs.
template <class Uni>
double relaxed_count(double p_clamped, int trials, double epsilon, double exp_plus_eps,
                     double exp_minus_eps, Uni&& uni, int* window_count = nullptr) {
    const auto win = RelaxedWindow::of(p_clamped, exp_plus_eps, exp_minus_eps);
    double count = 0.0;
    int in_window = 0;
    double logit_p = 0.0;
    for (int j = 0; j < trials; ++j) {
        const double z = uni(j);
        if (z >= win.z_full) {
            count += 1.0;
        } else if (z > win.z_zero) {
            if (in_window == 0) logit_p = logit(p_clamped);
            ++in_window;
            count += (logit_p + logit(z) + epsilon) / (2.0 * epsilon);
        }
    }
    if (window_count) *window_count = in_window;
    return count;
}

template <class Uni>
int exact_count(double p, int trials, Uni&& uni) {
    int count = 0;
    for (int j = 0; j < trials; ++j)
        if (uni(j) >= 1.0 - p) ++count;
    return count;
}

/// One step of the jump sampler.  uniforms holds 2*J values: first the up
/// trials, then the down trials.  Boundary indicators zero the up intensity
/// at u_prev >= 1 and the down intensity at u_prev <= 0.
std::pair<double, double> jump_counts(double lambda_plus, double lambda_minus, double u_prev,
                                      double tau, int trials, JumpMode mode, double epsilon,
                                      std::span<const double> uniforms);

/// Highest per-trial jump probability over the admissible rate range.
double max_probability(const intensity::PiecewiseIntensity& curve, double tau, int trials);
double max_probability(const intensity::LinearIntensity& curve, const RiskParams& params,
                       double tau, int trials);

// ---------------------------------------------------------------------------
// batch simulation
//
// Policy protocol:
//   struct P {
//     using State = ...;                       // per-path mutable state
//     State init_state(double u0) const;
//     double rate(double u, int step, State&); // raw rate, clipped by the caller
//   };

namespace detail {

inline int draw_interior_node(std::uint64_t seed, long path, int grid_size) {
    const double z =
        rng::uniform(rng::step_key(rng::path_key(seed, path), rng::kTagInitialUtil, 0), 0);
    int node = 1 + static_cast<int>(z * (grid_size - 2));
    return std::min(node, grid_size - 2);
}

}  // namespace detail

template <class Policy>
TrajectoryBatch simulate_batch(const Policy& policy, const intensity::SampledCurve& curve,
                               const RiskParams& params, const SimConfig& config,
                               const U0Spec& u0_spec) {
    config.validate();
    params.validate();
    const UtilizationGrid grid = UtilizationGrid::make(params.delta);
    const double tau = params.horizon / config.n_steps;
    const double p_bar =
        std::max(curve.max_lambda_plus(), curve.max_lambda_minus()) * tau / config.jump_trials;
    if (p_bar > 1.0)
        throw ConfigError("highest jump probability " + std::to_string(p_bar) +
                          " exceeds 1; increase jump_trials or n_steps");

    int fixed_node = -1;
    if (u0_spec.kind == U0Spec::fixed) {
        fixed_node = grid.index_of(u0_spec.value);
        if (fixed_node < 0) throw ConfigError("fixed u0 must lie on the utilization lattice");
    }

    TrajectoryBatch batch;
    batch.n_paths = config.n_paths;
    batch.n_steps = config.n_steps;
    batch.tau = tau;
    batch.initial_u.resize(config.n_paths);
    batch.terminal_u.resize(config.n_paths);
    batch.terminal_x.resize(config.n_paths);
    batch.terminal_q.resize(config.n_paths);
    if (config.record_paths) {
        batch.has_paths = true;
        batch.u_paths.resize(config.n_paths, config.n_steps + 1);
        batch.x_paths.resize(config.n_paths, config.n_steps + 1);
        batch.q_paths.resize(config.n_paths, config.n_steps + 1);
    }

    const bool relaxed = config.mode == JumpMode::relaxed;
    const double exp_pe = std::exp(config.epsilon);
    const double exp_me = std::exp(-config.epsilon);
    const double tau_over_j = tau / config.jump_trials;
    const int n_nodes = grid.size();
    const int threads = config.threads > 0 ? config.threads : default_thread_count();

    parallel_chunks(config.n_paths, 1024, threads, [&](long, long begin, long end) {
        for (long path = begin; path < end; ++path) {
            const std::uint64_t pkey = rng::path_key(config.seed, path);
            const int node0 = u0_spec.kind == U0Spec::fixed
                                  ? fixed_node
                                  : detail::draw_interior_node(config.seed, path, n_nodes);
            double u = grid.nodes[node0];
            int node = node0;  // exact mode tracks the lattice index
            double x = 0.0, q = 0.0;
            typename Policy::State state = policy.init_state(u);
            batch.initial_u[path] = u;
            if (config.record_paths) {
                batch.u_paths(path, 0) = u;
                batch.x_paths(path, 0) = 0.0;
                batch.q_paths(path, 0) = 0.0;
            }
            for (int i = 0; i < config.n_steps; ++i) {
                const double r_raw = policy.rate(u, i, state);
                const double r = std::clamp(r_raw, params.r_min, params.r_max);
                x += r * u * tau;
                const double dr = r - params.r_bar;
                q += params.phi * dr * dr * tau;

                double lp, lm;
                curve.eval(r, lp, lm);
                if (u >= 1.0) lp = 0.0;
                if (u <= 0.0) lm = 0.0;

                const std::uint64_t kup = rng::step_key(pkey, i, 0);
                const std::uint64_t kdn = rng::step_key(pkey, i, 1);
                if (relaxed) {
                    const double p_up =
                        std::clamp(lp * tau_over_j, kProbClamp, 1.0 - kProbClamp);
                    const double p_dn =
                        std::clamp(lm * tau_over_j, kProbClamp, 1.0 - kProbClamp);
                    const double d_up =
                        relaxed_count(p_up, config.jump_trials, config.epsilon, exp_pe, exp_me,
                                      [&](int j) { return rng::uniform(kup, j); });
                    const double d_dn =
                        relaxed_count(p_dn, config.jump_trials, config.epsilon, exp_pe, exp_me,
                                      [&](int j) { return rng::uniform(kdn, j); });
                    u = std::clamp(u + params.delta * (d_up - d_dn), 0.0, 1.0);
                } else {
                    const int d_up = exact_count(lp * tau_over_j, config.jump_trials,
                                                 [&](int j) { return rng::uniform(kup, j); });
                    const int d_dn = exact_count(lm * tau_over_j, config.jump_trials,
                                                 [&](int j) { return rng::uniform(kdn, j); });
                    node = std::clamp(node + d_up - d_dn, 0, n_nodes - 1);
                    u = grid.nodes[node];
                }
                if (config.record_paths) {
                    batch.u_paths(path, i + 1) = u;
                    batch.x_paths(path, i + 1) = x;
                    batch.q_paths(path, i + 1) = q;
                }
            }
            batch.terminal_u[path] = u;
            batch.terminal_x[path] = x;
            batch.terminal_q[path] = q;
        }
    });
    return batch;
}

/// T-normalized objective: mean over paths of (X_N - psi(U_N) - Q_N) / T.
double objective(const TrajectoryBatch& batch, const RiskParams& params);

/// Convexity penalty of a lattice policy snapshot: negated sum of negative
/// second differences over u in {u_star, ..., 1 - delta} and all time steps,
/// divided by the step count.  Non-negative; zero for convex policies.
template <class RateAt>
double convexity_penalty(RateAt&& rate_at, const UtilizationGrid& grid, int n_steps,
                         const RiskParams& params) {
    const int first = [&] {
        int k = 0;
        while (k < grid.size() && grid.nodes[k] < params.u_star - kGridTol) ++k;
        return std::max(k, 1);
    }();
    const int last = grid.size() - 2;  // 1 - delta
    double total = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        for (int k = first; k <= last; ++k) {
            const double second_diff = rate_at(grid.nodes[k + 1], i) -
                                       2.0 * rate_at(grid.nodes[k], i) +
                                       rate_at(grid.nodes[k - 1], i);
            // roundoff guard: exactly-linear policies must not be charged
            if (second_diff < -1e-12) total -= second_diff;
        }
    }
    return total / n_steps;
}

void write_trajectories_csv(const TrajectoryBatch& batch, const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& meta = {});

}  // namespace lendopt::sim
