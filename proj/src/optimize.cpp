#include "lendopt/optimize.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "lendopt/csv.hpp"

namespace lendopt::opt {

// ---------------------------------------------------------------------------
// parametric model evaluation

double eval_linear_model(double r_base, double r_slope1, double u, double u_star) {
    return r_base + (u / u_star) * r_slope1;
}

double eval_bilinear_model(double r_base, double r_slope1, double r_slope2, double u,
                           double u_star) {
    if (u < u_star) return r_base + (u / u_star) * r_slope1;
    if (u_star >= 1.0) return r_base + r_slope1;  // degenerate kink at full utilization
    return r_base + r_slope1 + (u - u_star) / (1.0 - u_star) * r_slope2;
}

double adaptive_error(double u, double u_star) {
    return u < u_star ? (u - u_star) / u_star : (u - u_star) / (1.0 - u_star);
}

double adaptive_curve(const AdaptiveParams& p, double u, double u_star) {
    const double err = adaptive_error(u, u_star);
    return u < u_star ? (1.0 - p.k_d1) * err + 1.0 : (p.k_d2 - 1.0) * err + 1.0;
}

double eval_adaptive_model(const AdaptiveParams& p, double u, double t, double u_star,
                           AdaptiveState& state) {
    const double speed = std::exp(p.k_p * adaptive_error(state.u_last, u_star) * (t - state.t_last));
    state.r_target *= speed;
    state.t_last = t;
    state.u_last = u;
    return state.r_target * adaptive_curve(p, u, u_star);
}

// ---------------------------------------------------------------------------

GridPolicy GridPolicy::from_surface(const RateSurface& s, int n_steps, double r_min,
                                    double r_max) {
    if (s.values.cols() < n_steps)
        throw ConfigError("surface has fewer time slices than the requested step count");
    GridPolicy p;
    p.grid_ = s.grid;
    p.n_steps_ = n_steps;
    p.r_min_ = r_min;
    p.r_max_ = r_max;
    p.theta_ = s.values.leftCols(n_steps);
    return p;
}

RateSurface GridPolicy::to_surface() const {
    RateSurface s;
    s.grid = grid_;
    s.times = TimeGrid::make(static_cast<double>(n_steps_), n_steps_);
    s.values.resize(grid_.size(), n_steps_ + 1);
    s.values.leftCols(n_steps_) = theta_;
    s.values.col(n_steps_) = theta_.col(n_steps_ - 1);
    return s;
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::policy: return "policy";
        case Variant::linear: return "linear";
        case Variant::bilinear: return "bilinear";
        case Variant::adaptive: return "adaptive";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "policy") return Variant::policy;
    if (name == "linear") return Variant::linear;
    if (name == "bilinear") return Variant::bilinear;
    if (name == "adaptive") return Variant::adaptive;
    throw ConfigError("unknown model variant '" + name + "'");
}

ParametricModel::ParametricModel(Variant variant, double u_star, double tau)
    : variant_(variant), u_star_(u_star), tau_(tau) {
    switch (variant) {
        case Variant::linear: p_ = {0.0, 0.05}; break;
        case Variant::bilinear: p_ = {0.0, 0.05, 0.05}; break;
        case Variant::adaptive: p_ = {0.05, 0.01, 0.5, 2.0}; break;
        case Variant::policy: throw ConfigError("policy variant is not parametric");
    }
}

ParametricModel ParametricModel::line_initialized(Variant variant, double u_star, double tau,
                                                  double r_min, double r_max) {
    ParametricModel m(variant, u_star, tau);
    const double span = r_max - r_min;
    Eigen::VectorXd v(m.param_count());
    switch (variant) {
        case Variant::linear: v << r_min, u_star * span; break;
        case Variant::bilinear: v << r_min, u_star * span, (1.0 - u_star) * span; break;
        case Variant::adaptive: v << r_min + u_star * span, 0.01, 0.5, 2.0; break;
        default: break;
    }
    m.set_params(v);
    return m;
}

std::vector<std::string> ParametricModel::param_names() const {
    switch (variant_) {
        case Variant::linear: return {"r_base", "r_slope1"};
        case Variant::bilinear: return {"r_base", "r_slope1", "r_slope2"};
        case Variant::adaptive: return {"r_target0", "k_p", "k_d1", "k_d2"};
        default: return {};
    }
}

double ParametricModel::rate(double u, int step, State& st) const {
    switch (variant_) {
        case Variant::linear: return eval_linear_model(p_[0], p_[1], u, u_star_);
        case Variant::bilinear: return eval_bilinear_model(p_[0], p_[1], p_[2], u, u_star_);
        case Variant::adaptive: {
            const AdaptiveParams ap{p_[0], p_[1], p_[2], p_[3]};
            return eval_adaptive_model(ap, u, step * tau_, u_star_, st.adaptive);
        }
        default: return 0.0;
    }
}

double ParametricModel::rate_at(double u, int step) const {
    State st = init_state(u);
    return rate(u, step, st);
}

double ParametricModel::rate_fwd(double u, int step, State& st, double* trace) const {
    const double r = rate(u, step, st);
    if (variant_ == Variant::adaptive && trace) *trace = st.adaptive.r_target;
    return r;
}

void ParametricModel::rate_bwd(int step, double u, double u_prev, const double* trace, double a_r,
                               BwdCarry& carry, Eigen::Ref<Eigen::VectorXd> grad, double& a_u,
                               double& a_u_prev) const {
    switch (variant_) {
        case Variant::linear:
            grad[0] += a_r;
            grad[1] += a_r * (u / u_star_);
            a_u += a_r * p_[1] / u_star_;
            return;
        case Variant::bilinear:
            grad[0] += a_r;
            if (u < u_star_) {
                grad[1] += a_r * (u / u_star_);
                a_u += a_r * p_[1] / u_star_;
            } else if (u_star_ < 1.0) {
                grad[1] += a_r;
                grad[2] += a_r * (u - u_star_) / (1.0 - u_star_);
                a_u += a_r * p_[2] / (1.0 - u_star_);
            } else {
                grad[1] += a_r;
            }
            return;
        case Variant::adaptive: {
            const AdaptiveParams ap{p_[0], p_[1], p_[2], p_[3]};
            const double rt = trace[step];
            const double err = adaptive_error(u, u_star_);
            const double curve = adaptive_curve(ap, u, u_star_);
            // rate = r_target * curve(u)
            double a_rt = a_r * curve + carry.a_r_target;
            if (u < u_star_) {
                grad[2] += a_r * rt * (-err);         // d curve / d k_d1
                a_u += a_r * rt * (1.0 - ap.k_d1) / u_star_;
            } else {
                grad[3] += a_r * rt * err;            // d curve / d k_d2
                a_u += a_r * rt * (ap.k_d2 - 1.0) / (1.0 - u_star_);
            }
            if (step == 0) {
                grad[0] += a_rt;  // r_target at step 0 equals the parameter
                carry.a_r_target = 0.0;
            } else {
                const double err_prev = adaptive_error(u_prev, u_star_);
                const double err_prev_slope =
                    u_prev < u_star_ ? 1.0 / u_star_ : 1.0 / (1.0 - u_star_);
                // r_target_i = r_target_{i-1} * exp(k_p * err(u_prev) * tau)
                grad[1] += a_rt * rt * err_prev * tau_;
                a_u_prev += a_rt * rt * ap.k_p * tau_ * err_prev_slope;
                const double speed = std::exp(ap.k_p * err_prev * tau_);
                carry.a_r_target = a_rt * speed;
            }
            return;
        }
        default: return;
    }
}

// ---------------------------------------------------------------------------
// reverse-mode gradient through the unrolled relaxed simulation

namespace {

struct PathWork {
    std::vector<double> u;       // n_steps + 1
    std::vector<double> r_raw;   // n_steps
    std::vector<double> trace;   // n_steps (models with per-step state)
};

struct EngineConsts {
    double tau = 0.0, tau_over_j = 0.0, exp_pe = 0.0, exp_me = 0.0;
    int n_steps = 0, trials = 0;
    double epsilon = 0.0;
};

template <class Model>
double path_forward(const Model& model, const intensity::SampledCurve& curve,
                    const RiskParams& params, const EngineConsts& ec, std::uint64_t seed,
                    long path, int fixed_node, const UtilizationGrid& grid, PathWork& w) {
    const std::uint64_t pkey = rng::path_key(seed, path);
    const int node0 = fixed_node >= 0
                          ? fixed_node
                          : sim::detail::draw_interior_node(seed, path, grid.size());
    double u = grid.nodes[node0];
    double x = 0.0, q = 0.0;
    typename Model::State st = model.init_state(u);
    w.u[0] = u;
    for (int i = 0; i < ec.n_steps; ++i) {
        const double r_raw =
            model.rate_fwd(u, i, st, Model::kHasTrace ? &w.trace[i] : nullptr);
        w.r_raw[i] = r_raw;
        const double r = std::clamp(r_raw, params.r_min, params.r_max);
        x += r * u * ec.tau;
        const double dr = r - params.r_bar;
        q += params.phi * dr * dr * ec.tau;

        double lp, lm;
        curve.eval(r, lp, lm);
        if (u >= 1.0) lp = 0.0;
        if (u <= 0.0) lm = 0.0;
        const double p_up = std::clamp(lp * ec.tau_over_j, sim::kProbClamp, 1.0 - sim::kProbClamp);
        const double p_dn = std::clamp(lm * ec.tau_over_j, sim::kProbClamp, 1.0 - sim::kProbClamp);
        const std::uint64_t kup = rng::step_key(pkey, i, 0);
        const std::uint64_t kdn = rng::step_key(pkey, i, 1);
        const double d_up = sim::relaxed_count(p_up, ec.trials, ec.epsilon, ec.exp_pe, ec.exp_me,
                                               [&](int j) { return rng::uniform(kup, j); });
        const double d_dn = sim::relaxed_count(p_dn, ec.trials, ec.epsilon, ec.exp_pe, ec.exp_me,
                                               [&](int j) { return rng::uniform(kdn, j); });
        u = std::clamp(u + params.delta * (d_up - d_dn), 0.0, 1.0);
        w.u[i + 1] = u;
    }
    return x - terminal_penalty_value(u, params.eta, params.u_star) - q;
}

template <class Model>
void path_backward(const Model& model, const intensity::SampledCurve& curve,
                   const RiskParams& params, const EngineConsts& ec, std::uint64_t seed,
                   long path, const PathWork& w, double a_path,
                   Eigen::Ref<Eigen::VectorXd> grad) {
    const std::uint64_t pkey = rng::path_key(seed, path);
    const double u_terminal = w.u[ec.n_steps];
    double a_u = -terminal_penalty_slope(u_terminal, params) * a_path;
    const double a_x = a_path;
    const double a_q = -a_path;
    typename Model::BwdCarry carry{};
    double a_u_prev_pending = 0.0;

    for (int i = ec.n_steps - 1; i >= 0; --i) {
        const double u_i = w.u[i];
        const double r_raw = w.r_raw[i];
        const double r = std::clamp(r_raw, params.r_min, params.r_max);

        double lp, lm, sp, sm;
        curve.eval_with_slopes(r, lp, lm, sp, sm);
        const bool up_open = u_i < 1.0;
        const bool dn_open = u_i > 0.0;
        if (!up_open) lp = 0.0;
        if (!dn_open) lm = 0.0;
        const double praw_up = lp * ec.tau_over_j;
        const double praw_dn = lm * ec.tau_over_j;
        const double p_up = std::clamp(praw_up, sim::kProbClamp, 1.0 - sim::kProbClamp);
        const double p_dn = std::clamp(praw_dn, sim::kProbClamp, 1.0 - sim::kProbClamp);

        const std::uint64_t kup = rng::step_key(pkey, i, 0);
        const std::uint64_t kdn = rng::step_key(pkey, i, 1);
        int m_up = 0, m_dn = 0;
        const double d_up = sim::relaxed_count(p_up, ec.trials, ec.epsilon, ec.exp_pe, ec.exp_me,
                                               [&](int j) { return rng::uniform(kup, j); }, &m_up);
        const double d_dn = sim::relaxed_count(p_dn, ec.trials, ec.epsilon, ec.exp_pe, ec.exp_me,
                                               [&](int j) { return rng::uniform(kdn, j); }, &m_dn);
        const double u_pre = u_i + params.delta * (d_up - d_dn);
        const double a_upre = (u_pre >= 0.0 && u_pre <= 1.0) ? a_u : 0.0;

        double a_r = a_x * u_i * ec.tau + a_q * 2.0 * params.phi * (r - params.r_bar) * ec.tau;
        if (a_upre != 0.0) {
            double dd_up = 0.0, dd_dn = 0.0;
            if (m_up > 0 && praw_up > sim::kProbClamp && praw_up < 1.0 - sim::kProbClamp)
                dd_up = m_up / (2.0 * ec.epsilon * p_up * (1.0 - p_up));
            if (m_dn > 0 && praw_dn > sim::kProbClamp && praw_dn < 1.0 - sim::kProbClamp)
                dd_dn = m_dn / (2.0 * ec.epsilon * p_dn * (1.0 - p_dn));
            const double a_lp = a_upre * params.delta * dd_up * ec.tau_over_j;
            const double a_lm = -a_upre * params.delta * dd_dn * ec.tau_over_j;
            if (up_open) a_r += a_lp * sp;
            if (dn_open) a_r += a_lm * sm;
        }
        const double a_r_raw = (r_raw >= params.r_min && r_raw <= params.r_max) ? a_r : 0.0;

        double a_u_i = a_upre + a_x * r * ec.tau + a_u_prev_pending;
        a_u_prev_pending = 0.0;
        model.rate_bwd(i, u_i, i > 0 ? w.u[i - 1] : std::numeric_limits<double>::quiet_NaN(),
                       Model::kHasTrace ? w.trace.data() : nullptr, a_r_raw, carry, grad, a_u_i,
                       a_u_prev_pending);
        a_u = a_u_i;
    }
}

/// Convexity penalty of a grid policy (clipped rates) and its theta-gradient.
double policy_penalty(const GridPolicy& policy, const RiskParams& params,
                      Eigen::VectorXd* grad_out) {
    const auto& grid = policy.grid();
    const auto& theta = policy.theta();
    const int n_nodes = grid.size();
    const int n_steps = policy.n_steps();
    int first = 0;
    while (first < n_nodes && grid.nodes[first] < params.u_star - kGridTol) ++first;
    first = std::max(first, 1);
    const int last = n_nodes - 2;

    const auto clipped = [&](int k, int i) {
        return std::clamp(theta(k, i), params.r_min, params.r_max);
    };
    const auto gate = [&](int k, int i) {
        return theta(k, i) >= params.r_min && theta(k, i) <= params.r_max ? 1.0 : 0.0;
    };

    double total = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        for (int k = first; k <= last; ++k) {
            const double sd = clipped(k + 1, i) - 2.0 * clipped(k, i) + clipped(k - 1, i);
            // roundoff guard mirrors sim::convexity_penalty
            if (sd < -1e-12) {
                total -= sd;
                if (grad_out) {
                    const long col = static_cast<long>(i) * n_nodes;
                    (*grad_out)[col + k + 1] -= gate(k + 1, i) / n_steps;
                    (*grad_out)[col + k] += 2.0 * gate(k, i) / n_steps;
                    (*grad_out)[col + k - 1] -= gate(k - 1, i) / n_steps;
                }
            }
        }
    }
    return total / n_steps;
}

// fixed chunk count: reductions stay deterministic under any thread count,
// and the per-chunk gradient buffers stay few for large parameter vectors
constexpr long kGradChunks = 16;

}  // namespace

template <class Model>
GradResult gradient(const Model& model, const intensity::SampledCurve& curve,
                    const RiskParams& params, const sim::SimConfig& config,
                    const GradSample& sample, bool want_gradient) {
    params.validate();
    if (config.mode != sim::JumpMode::relaxed)
        throw ConfigError("gradients are only defined for the relaxed simulator");

    const UtilizationGrid grid = UtilizationGrid::make(params.delta);
    EngineConsts ec;
    ec.n_steps = config.n_steps;
    ec.trials = config.jump_trials;
    ec.epsilon = config.epsilon;
    ec.tau = params.horizon / config.n_steps;
    ec.tau_over_j = ec.tau / config.jump_trials;
    ec.exp_pe = std::exp(config.epsilon);
    ec.exp_me = std::exp(-config.epsilon);

    int fixed_node = -1;
    if (sample.u0.kind == sim::U0Spec::fixed) {
        fixed_node = grid.index_of(sample.u0.value);
        if (fixed_node < 0) throw ConfigError("fixed u0 must lie on the utilization lattice");
    }

    const long n_params = model.param_count();
    const long n_chunks = std::min(kGradChunks, sample.n_paths);
    const long chunk_size = (sample.n_paths + n_chunks - 1) / n_chunks;
    std::vector<Eigen::VectorXd> chunk_grad;
    if (want_gradient)
        chunk_grad.assign(n_chunks, Eigen::VectorXd::Zero(n_params));
    std::vector<double> chunk_pnl(n_chunks, 0.0);

    const int threads = config.threads > 0 ? config.threads : default_thread_count();
    const double a_path = 1.0 / (static_cast<double>(sample.n_paths) * params.horizon);

    parallel_chunks(sample.n_paths, chunk_size, threads, [&](long c, long begin, long end) {
        PathWork w;
        w.u.resize(ec.n_steps + 1);
        w.r_raw.resize(ec.n_steps);
        if (Model::kHasTrace) w.trace.resize(ec.n_steps);
        double pnl_sum = 0.0;
        for (long path = begin; path < end; ++path) {
            pnl_sum += path_forward(model, curve, params, ec, sample.seed, path, fixed_node,
                                    grid, w);
            if (want_gradient)
                path_backward(model, curve, params, ec, sample.seed, path, w, a_path,
                              chunk_grad[c]);
        }
        chunk_pnl[c] = pnl_sum;
    });

    GradResult out;
    double total = 0.0;
    for (long c = 0; c < n_chunks; ++c) total += chunk_pnl[c];
    out.objective = total * a_path;
    if (want_gradient) {
        out.grad = Eigen::VectorXd::Zero(n_params);
        for (long c = 0; c < n_chunks; ++c) out.grad += chunk_grad[c];
    }

    if constexpr (Model::kConvexityPenalty) {
        Eigen::VectorXd pen_grad;
        if (want_gradient) pen_grad = Eigen::VectorXd::Zero(n_params);
        out.penalty = policy_penalty(model, params, want_gradient ? &pen_grad : nullptr);
        if (want_gradient) out.grad -= pen_grad;
    }
    if (!std::isfinite(out.objective))
        throw TrainingError("non-finite objective in gradient evaluation");
    return out;
}

template GradResult gradient<GridPolicy>(const GridPolicy&, const intensity::SampledCurve&,
                                         const RiskParams&, const sim::SimConfig&,
                                         const GradSample&, bool);
template GradResult gradient<ParametricModel>(const ParametricModel&,
                                              const intensity::SampledCurve&, const RiskParams&,
                                              const sim::SimConfig&, const GradSample&, bool);

template <class Model>
double total_loss(const Model& model, const intensity::SampledCurve& curve,
                  const RiskParams& params, const sim::SimConfig& config,
                  const GradSample& sample) {
    const GradResult r = gradient(model, curve, params, config, sample, /*want_gradient=*/false);
    return r.objective - r.penalty;
}

template double total_loss<GridPolicy>(const GridPolicy&, const intensity::SampledCurve&,
                                       const RiskParams&, const sim::SimConfig&,
                                       const GradSample&);
template double total_loss<ParametricModel>(const ParametricModel&,
                                            const intensity::SampledCurve&, const RiskParams&,
                                            const sim::SimConfig&, const GradSample&);

// ---------------------------------------------------------------------------
// two-phase training

namespace {

constexpr std::uint64_t kValidationTag = 0x56414C0000000000ULL;

std::uint64_t iteration_tag(int phase, int iteration) {
    return (static_cast<std::uint64_t>(phase) << 40) + static_cast<std::uint64_t>(iteration);
}

template <class Model>
TrainReport train_impl(Model& model, const intensity::SampledCurve& curve,
                       const RiskParams& params, const TrainConfig& config, bool run_phase1) {
    const auto t_start = std::chrono::steady_clock::now();

    sim::SimConfig sc;
    sc.n_steps = config.n_steps;
    sc.jump_trials = config.jump_trials;
    sc.epsilon = config.epsilon;
    sc.mode = sim::JumpMode::relaxed;
    sc.threads = config.threads;
    sc.seed = config.seed;

    Adam adam;
    adam.reset(model.param_count());
    Eigen::VectorXd p = model.params();

    TrainReport rep;
    double val_prev = std::numeric_limits<double>::quiet_NaN();
    double val_last = std::numeric_limits<double>::quiet_NaN();
    rep.stop_reason = "max_iterations";

    const auto run_iteration = [&](int phase, int it, const PhaseConfig& pc) {
        const GradSample s{rng::derive(config.seed, iteration_tag(phase, it)), pc.batch,
                           config.u0};
        IterationRow row;
        row.phase = phase;
        row.iteration = it;
        for (int e = 0; e < config.epochs; ++e) {
            const GradResult g = gradient(model, curve, params, sc, s);
            if (e == 0) {
                row.objective = g.objective;
                row.penalty = g.penalty;
            }
            adam.step(p, g.grad, pc.learning_rate);
            model.set_params(p);
            model.project();
            p = model.params();
        }
        return row;
    };

    if (run_phase1) {
        for (int it = 0; it < config.phase1.max_iterations; ++it)
            rep.rows.push_back(run_iteration(1, it, config.phase1));
    }

    bool stopped = false;
    for (int it = 0; it < config.phase2.max_iterations && !stopped; ++it) {
        IterationRow row = run_iteration(2, it, config.phase2);
        if (it % config.check_every == 0) {
            const GradSample vs{rng::derive(config.seed, kValidationTag), config.validation_size,
                                config.u0};
            val_last = total_loss(model, curve, params, sc, vs);
            row.validation = val_last;
            row.has_validation = true;
            if (it >= config.min_iterations && std::isfinite(val_prev) &&
                std::abs(val_last - val_prev) < config.stop_threshold) {
                rep.stop_reason = "validation_converged";
                stopped = true;
            }
            val_prev = val_last;
        }
        rep.rows.push_back(row);
    }

    if (!std::isfinite(val_last)) {
        const GradSample vs{rng::derive(config.seed, kValidationTag), config.validation_size,
                            config.u0};
        val_last = total_loss(model, curve, params, sc, vs);
    }
    rep.final_validation = val_last;
    rep.final_params = model.params();
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

}  // namespace

TrainReport train_policy(GridPolicy& policy, const intensity::SampledCurve& curve,
                         const RiskParams& params, const TrainConfig& config) {
    return train_impl(policy, curve, params, config, /*run_phase1=*/true);
}

TrainReport train_parametric(ParametricModel& model, const intensity::SampledCurve& curve,
                             const RiskParams& params, const TrainConfig& config) {
    // parameter count is small; the rapid first phase is skipped
    return train_impl(model, curve, params, config, /*run_phase1=*/false);
}

void write_train_report_csv(const TrainReport& report, const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.meta("stop_reason", report.stop_reason);
    w.meta("wall_seconds", report.wall_seconds);
    w.meta("final_validation", report.final_validation);
    w.header("phase,iteration,objective,penalty,validation");
    for (const auto& r : report.rows)
        w.row(std::to_string(r.phase) + "," + std::to_string(r.iteration) + "," +
              csv::format_double(r.objective) + "," + csv::format_double(r.penalty) + "," +
              (r.has_validation ? csv::format_double(r.validation) : std::string()));
}

void save_parametric_json(const ParametricModel& model, const std::string& path,
                          std::uint64_t seed, double final_validation,
                          const std::vector<std::pair<std::string, std::string>>& training_meta) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(model.variant());
    j["u_star"] = model.u_star();
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    const auto names = model.param_names();
    const Eigen::VectorXd v = model.params();
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = v[static_cast<long>(i)];
    j["parameters"] = params;
    j["seed"] = seed;
    j["final_validation_objective"] = final_validation;
    if (!training_meta.empty()) {
        nlohmann::ordered_json t = nlohmann::ordered_json::object();
        for (const auto& [k, val] : training_meta) t[k] = val;
        j["training"] = t;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

ParametricModel load_parametric_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("cannot parse model file '" + path + "': " + e.what());
    }
    const Variant variant = variant_from_name(j.at("variant").get<std::string>());
    const double u_star = j.at("u_star").get<double>();
    ParametricModel model(variant, u_star, 1.0);
    const auto& params = j.at("parameters");
    const auto names = model.param_names();
    Eigen::VectorXd v(static_cast<long>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
        v[static_cast<long>(i)] = params.at(names[i]).get<double>();
    model.set_params(v);
    return model;
}

}  // namespace lendopt::opt
