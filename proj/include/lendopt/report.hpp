#pragma once

#include <string>
#include <vector>

#include "lendopt/core.hpp"
#include "lendopt/sim.hpp"

namespace lendopt::report {

inline constexpr double kBps = 1e4;  // 1 basis point = 1e-4 in rate units

/// Per-path (X_N - psi(U_N) - Q_N) / T, in basis points.
Eigen::VectorXd risk_adjusted_pnl(const sim::TrajectoryBatch& batch, const RiskParams& params);

/// Per-path X_N / T in basis points (penalties excluded).
Eigen::VectorXd raw_pnl(const sim::TrajectoryBatch& batch, const RiskParams& params);

struct PnLStats {
    std::string model;
    std::string u0;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    double p5 = 0.0;
    double p95 = 0.0;
    long n_paths = 0;
};

/// Mean, population std and percentiles by linear interpolation between order
/// statistics (inclusive positions q*(n-1)).
PnLStats stats(const Eigen::VectorXd& values);

double percentile(std::vector<double> sorted_or_not, double q);

struct Histogram {
    std::vector<double> edges;  // n_bins + 1
    std::vector<long> counts;   // values outside the range land in the edge bins
};

/// 200 uniform bins over [p0.1, p99.9] by default; counts always sum to the
/// path count.
Histogram histogram(const Eigen::VectorXd& values, int n_bins = 200);

/// Mean/max absolute difference in basis points over interior utilization
/// nodes and time indices 0..N-1 (the terminal slice is excluded).  Surfaces
/// must share the lattice; slice counts may differ by the terminal slice.
std::pair<double, double> surface_errors(const RateSurface& candidate,
                                         const RateSurface& reference);

void write_stats_csv(const std::vector<PnLStats>& rows, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& meta = {});

void write_histogram_csv(const Histogram& h, const std::string& path,
                         const std::vector<std::pair<std::string, std::string>>& meta = {});

}  // namespace lendopt::report
