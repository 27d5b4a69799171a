#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lendopt/sim.hpp"

namespace lendopt::opt {

// ---------------------------------------------------------------------------
// Parametric rate models (industry shapes).  Each model implements both the
// simulation policy protocol (init_state / rate) and the training protocol
// used by the reverse-mode gradient engine (rate_fwd / rate_bwd over a raw
// parameter vector).

/// r(u) = r_base + (u / u_star) * r_slope1.
double eval_linear_model(double r_base, double r_slope1, double u, double u_star);

/// Kinked at u_star; r(1) = r_base + r_slope1 + r_slope2.
double eval_bilinear_model(double r_base, double r_slope1, double r_slope2, double u,
                           double u_star);

struct AdaptiveState {
    double r_target = 0.0;
    double t_last = 0.0;
    double u_last = 0.0;
};

struct AdaptiveParams {
    double r_target0 = 0.0;
    double k_p = 0.0;
    double k_d1 = 0.0;
    double k_d2 = 0.0;
};

/// Target-chasing rate: the target level drifts exponentially at a speed set
/// by the utilization error since the last interaction, and the spot rate
/// scales the target by a piecewise-linear curve of the current error.
/// Returns the rate and advances the state to (new target, t, u).
double eval_adaptive_model(const AdaptiveParams& p, double u, double t, double u_star,
                           AdaptiveState& state);

double adaptive_error(double u, double u_star);
double adaptive_curve(const AdaptiveParams& p, double u, double u_star);

// ---------------------------------------------------------------------------

/// Tabular policy on the full (utilization, time-step) lattice, linearly
/// interpolated in u between nodes.  Equivalent in expressiveness to any
/// function policy evaluated on the lattice.
class GridPolicy {
public:
    GridPolicy() = default;
    GridPolicy(UtilizationGrid grid, int n_steps, double r_min, double r_max)
        : grid_(std::move(grid)), n_steps_(n_steps), r_min_(r_min), r_max_(r_max),
          theta_(Eigen::MatrixXd::Zero(grid_.size(), n_steps)) {
        // initial policy: linear in utilization between the rate bounds
        for (int k = 0; k < grid_.size(); ++k)
            theta_.row(k).setConstant(r_min + grid_.nodes[k] * (r_max - r_min));
    }

    static GridPolicy from_surface(const RateSurface& s, int n_steps, double r_min, double r_max);
    /// Lattice dump over the full time grid; the terminal column replicates
    /// the last trained slice (the policy is never queried at t_N).
    RateSurface to_surface() const;

    const UtilizationGrid& grid() const { return grid_; }
    int n_steps() const { return n_steps_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    Eigen::MatrixXd& theta() { return theta_; }
    const Eigen::MatrixXd& theta() const { return theta_; }

    // --- simulation policy protocol
    struct State {};
    State init_state(double) const { return {}; }
    double rate(double u, int step, State&) const { return eval(u, step); }

    double eval(double u, int step) const {
        const auto [k, w] = locate(u);
        return (1.0 - w) * theta_(k, step) + w * theta_(k + 1, step);
    }

    // --- training protocol
    static constexpr bool kHasTrace = false;
    static constexpr bool kConvexityPenalty = true;
    struct BwdCarry {};

    long param_count() const { return theta_.size(); }
    Eigen::VectorXd params() const {
        return Eigen::Map<const Eigen::VectorXd>(theta_.data(), theta_.size());
    }
    void set_params(const Eigen::VectorXd& p) {
        Eigen::Map<Eigen::VectorXd>(theta_.data(), theta_.size()) = p;
    }
    void project() {}  // unconstrained

    double rate_fwd(double u, int step, State&, double*) const { return eval(u, step); }

    void rate_bwd(int step, double u, double /*u_prev*/, const double*, double a_r, BwdCarry&,
                  Eigen::Ref<Eigen::VectorXd> grad, double& a_u, double& /*a_u_prev*/) const {
        const auto [k, w] = locate(u);
        const long col = static_cast<long>(step) * grid_.size();
        grad[col + k] += (1.0 - w) * a_r;
        grad[col + k + 1] += w * a_r;
        a_u += a_r * (theta_(k + 1, step) - theta_(k, step)) / grid_.delta;
    }

private:
    std::pair<int, double> locate(double u) const {
        const int last = grid_.size() - 2;
        int k = static_cast<int>(u / grid_.delta);
        k = std::clamp(k, 0, last);
        double w = (u - grid_.nodes[k]) / grid_.delta;
        w = std::clamp(w, 0.0, 1.0);
        return {k, w};
    }

    UtilizationGrid grid_;
    int n_steps_ = 0;
    double r_min_ = 0.0, r_max_ = 0.0;
    Eigen::MatrixXd theta_;
};

// ---------------------------------------------------------------------------

enum class Variant { policy, linear, bilinear, adaptive };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Linear / bilinear / adaptive model with a flat parameter vector, suitable
/// for both simulation and gradient training.  Parameters stay non-negative
/// by projection after every optimizer step.
class ParametricModel {
public:
    ParametricModel() = default;
    ParametricModel(Variant variant, double u_star, double tau);

    /// Start from the same utilization-linear line the grid policy uses.
    static ParametricModel line_initialized(Variant variant, double u_star, double tau,
                                            double r_min, double r_max);

    Variant variant() const { return variant_; }
    double u_star() const { return u_star_; }
    double tau() const { return tau_; }
    void set_tau(double tau) { tau_ = tau; }

    // --- simulation policy protocol
    struct State {
        AdaptiveState adaptive;
        int step = 0;
    };
    State init_state(double u0) const {
        State s;
        s.adaptive = {variant_ == Variant::adaptive ? p_[0] : 0.0, 0.0, u0};
        return s;
    }
    double rate(double u, int step, State& st) const;

    /// Stateless lattice snapshot (adaptive uses its initial target level).
    double rate_at(double u, int step) const;

    // --- training protocol
    static constexpr bool kHasTrace = true;  // adaptive records its target level
    static constexpr bool kConvexityPenalty = false;
    struct BwdCarry {
        double a_r_target = 0.0;
    };

    long param_count() const { return static_cast<long>(p_.size()); }
    Eigen::VectorXd params() const {
        return Eigen::Map<const Eigen::VectorXd>(p_.data(), static_cast<long>(p_.size()));
    }
    void set_params(const Eigen::VectorXd& v) {
        for (long i = 0; i < v.size(); ++i) p_[static_cast<std::size_t>(i)] = v[i];
    }
    void project() {
        for (auto& x : p_) x = std::max(x, 0.0);
    }

    double rate_fwd(double u, int step, State& st, double* trace) const;
    void rate_bwd(int step, double u, double u_prev, const double* trace, double a_r,
                  BwdCarry& carry, Eigen::Ref<Eigen::VectorXd> grad, double& a_u,
                  double& a_u_prev) const;

    std::vector<std::string> param_names() const;

private:
    Variant variant_ = Variant::linear;
    double u_star_ = 0.9;
    double tau_ = 1.0;
    std::vector<double> p_;
};

// ---------------------------------------------------------------------------

/// Standard Adam, ascent direction (objectives are maximized).
struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double guard = 1e-8;
    Eigen::VectorXd m, v;
    long long t = 0;

    void reset(long n) {
        m = Eigen::VectorXd::Zero(n);
        v = Eigen::VectorXd::Zero(n);
        t = 0;
    }

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate) {
        if (m.size() != grad.size()) reset(grad.size());
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        params.array() += learning_rate * (m.array() / c1) /
                          ((v.array() / c2).sqrt() + guard);
    }
};

// ---------------------------------------------------------------------------

struct GradSample {
    std::uint64_t seed = 1;  // identifies the batch's common random numbers
    long n_paths = 0;
    sim::U0Spec u0 = sim::U0Spec::uniform_interior();
};

struct GradResult {
    double objective = 0.0;  // mean pnl / T over the sampled batch
    double penalty = 0.0;    // convexity penalty (0 when inactive)
    Eigen::VectorXd grad;    // d(objective - penalty)/d(params)
};

/// Exact reverse-mode gradient of the sampled, relaxed objective through the
/// unrolled simulation.  The same seed always reproduces the same uniforms,
/// so repeated calls during an iteration's epochs share the sample.
template <class Model>
GradResult gradient(const Model& model, const intensity::SampledCurve& curve,
                    const RiskParams& params, const sim::SimConfig& config,
                    const GradSample& sample, bool want_gradient = true);

/// Relaxed-mode objective - penalty on a fixed sample (no gradient); used for
/// validation checks.
template <class Model>
double total_loss(const Model& model, const intensity::SampledCurve& curve,
                  const RiskParams& params, const sim::SimConfig& config,
                  const GradSample& sample);

// ---------------------------------------------------------------------------

struct PhaseConfig {
    double learning_rate = 1e-3;
    long batch = 2500;
    int max_iterations = 1000;
};

struct TrainConfig {
    int n_steps = 100;
    int jump_trials = 10;
    double epsilon = 0.25;
    int epochs = 10;
    std::uint64_t seed = 1;
    int threads = 0;
    sim::U0Spec u0 = sim::U0Spec::uniform_interior();

    PhaseConfig phase1{1e-3, 2500, 1000};
    PhaseConfig phase2{1e-4, 25000, 1000};
    long validation_size = 250000;
    int check_every = 10;
    int min_iterations = 100;
    double stop_threshold = 1e-7;
};

struct IterationRow {
    int phase = 0;
    int iteration = 0;
    double objective = 0.0;
    double penalty = 0.0;
    double validation = 0.0;
    bool has_validation = false;
};

struct TrainReport {
    std::vector<IterationRow> rows;
    std::string stop_reason;
    double wall_seconds = 0.0;
    Eigen::VectorXd final_params;
    double final_validation = 0.0;
};

TrainReport train_policy(GridPolicy& policy, const intensity::SampledCurve& curve,
                         const RiskParams& params, const TrainConfig& config);

TrainReport train_parametric(ParametricModel& model, const intensity::SampledCurve& curve,
                             const RiskParams& params, const TrainConfig& config);

void write_train_report_csv(const TrainReport& report, const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& meta = {});

/// Structured key-value model file (JSON); byte-identical for identical runs.
void save_parametric_json(const ParametricModel& model, const std::string& path,
                          std::uint64_t seed, double final_validation,
                          const std::vector<std::pair<std::string, std::string>>& training_meta);
ParametricModel load_parametric_json(const std::string& path);

}  // namespace lendopt::opt
