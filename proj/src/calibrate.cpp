#include "lendopt/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include "lendopt/csv.hpp"

namespace lendopt::calibrate {

void PoolHistory::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].block <= rows[i - 1].block)
            throw InputError("block numbers must be strictly increasing",
                             static_cast<long>(i + 1));
        if (!(rows[i].utilization >= 0.0 && rows[i].utilization <= 1.0))
            throw InputError("utilization outside [0,1]", static_cast<long>(i + 1));
    }
}

IncrementDataset increments_from_history(const PoolHistory& history, double delta) {
    if (history.rows.size() < 2)
        throw CalibrationError("need at least 2 history rows to form increments");
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    IncrementDataset out;
    out.rows.reserve(history.rows.size() - 1);
    for (std::size_t i = 0; i + 1 < history.rows.size(); ++i) {
        const double du = history.rows[i + 1].utilization - history.rows[i].utilization;
        const double q = du / delta;
        // guard against 2.9999999996-style representation of an exact 3
        const long long n = du >= 0.0 ? static_cast<long long>(std::floor(q + 1e-9))
                                      : static_cast<long long>(std::ceil(q - 1e-9));
        out.rows.push_back({static_cast<int>(n), history.rows[i].rate});
    }
    return out;
}

BinnedSample bin_by_rate(const IncrementDataset& data, int n_bins) {
    if (n_bins < 1) throw ConfigError("bin count must be >= 1");
    if (data.rows.empty()) throw CalibrationError("empty increment dataset");

    double lo = data.rows.front().rate, hi = lo;
    for (const auto& r : data.rows) {
        lo = std::min(lo, r.rate);
        hi = std::max(hi, r.rate);
    }

    BinnedSample out;
    if (lo == hi) {
        out.degenerate = true;
        out.edges = {lo, hi};
        out.increments.resize(1);
        out.mean_rate.resize(1, lo);
        out.count.resize(1, 0);
        for (const auto& r : data.rows) {
            out.increments[0].push_back(r.n);
            ++out.count[0];
        }
        return out;
    }

    out.edges.resize(n_bins + 1);
    for (int k = 0; k <= n_bins; ++k) out.edges[k] = lo + (hi - lo) * k / n_bins;
    out.edges[n_bins] = hi;
    out.increments.resize(n_bins);
    out.mean_rate.assign(n_bins, 0.0);
    out.count.assign(n_bins, 0);

    for (const auto& r : data.rows) {
        int k = static_cast<int>((r.rate - lo) / (hi - lo) * n_bins);
        k = std::clamp(k, 0, n_bins - 1);
        // half-open bins [b_k, b_{k+1}) except the final closed bin
        while (k > 0 && r.rate < out.edges[k]) --k;
        while (k < n_bins - 1 && r.rate >= out.edges[k + 1]) ++k;
        out.increments[k].push_back(r.n);
        out.mean_rate[k] += r.rate;
        ++out.count[k];
    }
    for (int k = 0; k < n_bins; ++k)
        if (out.count[k] > 0) out.mean_rate[k] /= static_cast<double>(out.count[k]);
    return out;
}

intensity::PiecewiseIntensity calibrate_intensities(const PoolHistory& history, double delta,
                                                    int n_bins, double r_min, double r_max,
                                                    FitReport* report) {
    history.validate();
    const IncrementDataset data = increments_from_history(history, delta);
    const BinnedSample bins = bin_by_rate(data, n_bins);

    FitReport local;
    local.gap_count = history.gap_count;
    local.degenerate_bins = bins.degenerate;

    std::vector<intensity::RawIntensityPoint> points;
    const int k_bins = static_cast<int>(bins.increments.size());
    for (int k = 0; k < k_bins; ++k) {
        if (bins.count[k] == 0) continue;  // empty interior bin contributes no knot
        const auto fit = skellam::mle(bins.increments[k]);
        local.bins.push_back({bins.edges[k], bins.edges[k + 1], bins.mean_rate[k], fit});
        points.push_back({bins.mean_rate[k], fit.lambda_plus, fit.lambda_minus});
    }
    if (report) *report = local;

    if (points.empty()) throw CalibrationError("no populated rate bins");
    if (points.size() == 1) {
        // single observed rate level: no slope information, extend flat
        intensity::PiecewiseIntensity flat;
        flat.rates = {r_min, r_max};
        flat.lambda_plus = {points[0].lambda_plus, points[0].lambda_plus};
        flat.lambda_minus = {points[0].lambda_minus, points[0].lambda_minus};
        flat.validate();
        return flat;
    }
    return intensity::post_process(points, r_min, r_max);
}

PoolHistory read_history_csv(const std::string& path) {
    const auto t = csv::read_table(path);
    const std::vector<std::string> wide{"block_number", "supplied", "borrowed", "rate"};
    const std::vector<std::string> narrow{"block_number", "utilization", "rate"};

    PoolHistory h;
    if (t.columns == wide) {
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const long line = t.line_numbers[i];
            PoolRow row;
            row.block = csv::parse_int(t.rows[i][0], line);
            const double supplied = csv::parse_double(t.rows[i][1], line);
            const double borrowed = csv::parse_double(t.rows[i][2], line);
            if (!(supplied > 0.0)) throw InputError("supplied must be > 0", line);
            if (!(borrowed >= 0.0)) throw InputError("borrowed must be >= 0", line);
            if (borrowed > supplied) throw InputError("borrowed exceeds supplied", line);
            row.utilization = borrowed / supplied;
            row.rate = csv::parse_double(t.rows[i][3], line);
            h.rows.push_back(row);
        }
    } else if (t.columns == narrow) {
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const long line = t.line_numbers[i];
            PoolRow row;
            row.block = csv::parse_int(t.rows[i][0], line);
            row.utilization = csv::parse_double(t.rows[i][1], line);
            row.rate = csv::parse_double(t.rows[i][2], line);
            if (!(row.utilization >= 0.0 && row.utilization <= 1.0))
                throw InputError("utilization outside [0,1]", line);
            h.rows.push_back(row);
        }
    } else {
        throw InputError("history file '" + path +
                         "' must have header block_number,supplied,borrowed,rate or "
                         "block_number,utilization,rate");
    }
    if (h.rows.empty()) throw InputError("history file '" + path + "' has no data rows");
    for (std::size_t i = 0; i + 1 < h.rows.size(); ++i) {
        if (h.rows[i + 1].block <= h.rows[i].block)
            throw InputError("block numbers must be strictly increasing",
                             t.line_numbers[i + 1]);
        if (h.rows[i + 1].block > h.rows[i].block + 1) ++h.gap_count;
    }
    return h;
}

void write_fit_report_csv(const FitReport& report, const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& meta) {
    csv::Writer w(path);
    for (const auto& [k, v] : meta) w.meta(k, v);
    w.meta("gap_count", static_cast<long long>(report.gap_count));
    if (report.degenerate_bins) w.meta("degenerate_bins", "true");
    w.header("bin_lo,bin_hi,mean_rate,lambda_plus,ci_plus,lambda_minus,ci_minus,n");
    for (const auto& b : report.bins)
        w.row(csv::format_double(b.bin_lo) + "," + csv::format_double(b.bin_hi) + "," +
              csv::format_double(b.mean_rate) + "," + csv::format_double(b.fit.lambda_plus) + "," +
              csv::format_double(b.fit.ci_plus) + "," + csv::format_double(b.fit.lambda_minus) +
              "," + csv::format_double(b.fit.ci_minus) + "," + std::to_string(b.fit.n));
}

}  // namespace lendopt::calibrate
