#include "lendopt/report.hpp"

#include <algorithm>
#include <cmath>

#include "lendopt/csv.hpp"

namespace lendopt::report {

Eigen::VectorXd risk_adjusted_pnl(const sim::TrajectoryBatch& batch, const RiskParams& params) {
    Eigen::VectorXd out(batch.n_paths);
    for (long p = 0; p < batch.n_paths; ++p)
        out[p] = (batch.terminal_x[p] -
                  terminal_penalty_value(batch.terminal_u[p], params.eta, params.u_star) -
                  batch.terminal_q[p]) /
                 params.horizon * kBps;
    return out;
}

Eigen::VectorXd raw_pnl(const sim::TrajectoryBatch& batch, const RiskParams& params) {
    return batch.terminal_x / params.horizon * kBps;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[hi];
}

PnLStats stats(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw ConfigError("stats of an empty sample");
    PnLStats s;
    s.n_paths = values.size();
    s.mean = values.mean();
    s.stddev = std::sqrt((values.array() - s.mean).square().sum() / values.size());
    std::vector<double> v(values.data(), values.data() + values.size());
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * v[lo] + w * v[hi];
    };
    s.p5 = at(0.05);
    s.p95 = at(0.95);
    return s;
}

Histogram histogram(const Eigen::VectorXd& values, int n_bins) {
    if (n_bins < 1) throw ConfigError("histogram needs >= 1 bin");
    std::vector<double> v(values.data(), values.data() + values.size());
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * v[lo] + w * v[hi];
    };
    double lo = at(0.001), hi = at(0.999);
    if (!(hi > lo)) {  // degenerate sample: widen a hair so every bin is valid
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(n_bins + 1);
    for (int k = 0; k <= n_bins; ++k) h.edges[k] = lo + (hi - lo) * k / n_bins;
    h.counts.assign(n_bins, 0);
    for (const double x : v) {
        int k = static_cast<int>((x - lo) / (hi - lo) * n_bins);
        k = std::clamp(k, 0, n_bins - 1);
        ++h.counts[k];
    }
    return h;
}

std::pair<double, double> surface_errors(const RateSurface& candidate,
                                         const RateSurface& reference) {
    if (candidate.grid.size() != reference.grid.size() ||
        std::abs(candidate.grid.delta - reference.grid.delta) > kGridTol)
        throw ConfigError("surface utilization grids differ");
    const int slices_a = static_cast<int>(candidate.values.cols());
    const int slices_b = static_cast<int>(reference.values.cols());
    if (std::abs(slices_a - slices_b) > 1)
        throw ConfigError("surface time grids differ by more than the terminal slice");
    // compare time indices 0..N-1: the terminal slice never enters
    const int n_compare = std::min(slices_a, slices_b) == std::max(slices_a, slices_b)
                              ? slices_a - 1
                              : std::min(slices_a, slices_b);
    if (n_compare < 1) throw ConfigError("surfaces have no comparable time slices");

    const int n_nodes = candidate.grid.size();
    double sum = 0.0, max_err = 0.0;
    for (int t = 0; t < n_compare; ++t) {
        for (int k = 1; k + 1 < n_nodes; ++k) {
            const double d = std::abs(candidate.values(k, t) - reference.values(k, t));
            sum += d;
            max_err = std::max(max_err, d);
        }
    }
    const double mean = sum / (static_cast<double>(n_compare) * (n_nodes - 2));
    return {mean * kBps, max_err * kBps};
}

void write_stats_csv(const std::vector<PnLStats>& rows, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.header("model,u0,mean_bps,std_bps,p5_bps,p95_bps,n_paths");
    for (const auto& r : rows)
        w.row(r.model + "," + r.u0 + "," + csv::format_double(r.mean) + "," +
              csv::format_double(r.stddev) + "," + csv::format_double(r.p5) + "," +
              csv::format_double(r.p95) + "," + std::to_string(r.n_paths));
}

void write_histogram_csv(const Histogram& h, const std::string& path,
                         const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.header("bin_lo,bin_hi,count");
    for (std::size_t k = 0; k + 1 < h.edges.size(); ++k)
        w.row(csv::format_double(h.edges[k]) + "," + csv::format_double(h.edges[k + 1]) + "," +
              std::to_string(h.counts[k]));
}

}  // namespace lendopt::report
