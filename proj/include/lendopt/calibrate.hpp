#pragma once

#include <string>
#include <vector>

#include "lendopt/intensity.hpp"
#include "lendopt/skellam.hpp"

namespace lendopt::calibrate {

struct PoolRow {
    long long block = 0;
    double utilization = 0.0;
    double rate = 0.0;
};

/// Block-by-block pool observations, one row per recorded transition.
struct PoolHistory {
    std::vector<PoolRow> rows;
    long gap_count = 0;  // consecutive-row block gaps > 1 (data-quality diagnostic)

    void validate() const;
};

struct IncrementRow {
    int n = 0;       // utilization increments of size delta between two rows
    double rate = 0.0;  // rate of the earlier row
};

struct IncrementDataset {
    std::vector<IncrementRow> rows;
};

/// Per consecutive row pair: n = trunc(dU/delta) (floor for dU >= 0, ceil
/// otherwise), paired with the earlier row's rate.  Multi-block gaps are
/// treated as a single one-block transition and counted in gap_count.
IncrementDataset increments_from_history(const PoolHistory& history, double delta);

struct BinnedSample {
    std::vector<double> edges;                 // K+1 edges, uniform on [min r, max r]
    std::vector<std::vector<int>> increments;  // per bin
    std::vector<double> mean_rate;             // empirical mean rate per bin
    std::vector<long> count;
    bool degenerate = false;  // all rates identical -> single bin
};

/// Uniform bins on [min rate, max rate]; half-open except the final bin.
BinnedSample bin_by_rate(const IncrementDataset& data, int n_bins);

struct BinFit {
    double bin_lo = 0.0, bin_hi = 0.0;
    double mean_rate = 0.0;
    skellam::SkellamFit fit;
};

struct FitReport {
    std::vector<BinFit> bins;
    long gap_count = 0;
    bool degenerate_bins = false;
};

/// Full pipeline: increments -> rate bins -> per-bin Skellam MLE -> knots ->
/// intensity::post_process.  Intensities come out per block.
intensity::PiecewiseIntensity calibrate_intensities(const PoolHistory& history, double delta,
                                                    int n_bins, double r_min, double r_max,
                                                    FitReport* report = nullptr);

/// Read `block_number,supplied,borrowed,rate` or `block_number,utilization,rate`.
PoolHistory read_history_csv(const std::string& path);

void write_fit_report_csv(const FitReport& report, const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& meta = {});

}  // namespace lendopt::calibrate
