#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lendopt/calibrate.hpp"
#include "lendopt/rng.hpp"

using namespace lendopt;
using namespace lendopt::calibrate;

namespace {

PoolHistory history_from_utilizations(const std::vector<double>& u, double rate_start = 0.05,
                                      double rate_step = 0.0) {
    PoolHistory h;
    for (std::size_t i = 0; i < u.size(); ++i)
        h.rows.push_back({static_cast<long long>(i + 1), u[i], rate_start + rate_step * i});
    return h;
}

}  // namespace

TEST_CASE("increment extraction") {
    SUBCASE("floor for positive moves") {
        const auto h = history_from_utilizations({0.5, 0.5025});
        const auto d = increments_from_history(h, 0.001);
        REQUIRE(d.rows.size() == 1);
        CHECK(d.rows[0].n == 2);  // floor(2.5)
        CHECK(d.rows[0].rate == 0.05);
    }
    SUBCASE("ceil for negative moves") {
        const auto h = history_from_utilizations({0.5, 0.4975});
        const auto d = increments_from_history(h, 0.001);
        CHECK(d.rows[0].n == -2);  // ceil(-2.5)
    }
    SUBCASE("zero move") {
        const auto h = history_from_utilizations({0.5, 0.5});
        CHECK(increments_from_history(h, 0.001).rows[0].n == 0);
    }
    SUBCASE("representation guard: 0.003/0.001 counts as 3") {
        const auto h = history_from_utilizations({0.2, 0.203});
        CHECK(increments_from_history(h, 0.001).rows[0].n == 3);
    }
    SUBCASE("too short") {
        const auto h = history_from_utilizations({0.5});
        CHECK_THROWS_AS(increments_from_history(h, 0.001), CalibrationError);
    }
}

TEST_CASE("binning by rate") {
    SUBCASE("four uniform bins") {
        IncrementDataset d;
        for (int i = 0; i < 100; ++i) d.rows.push_back({0, 0.04 + 0.0001 * i});
        const auto b = bin_by_rate(d, 4);
        CHECK(b.increments.size() == 4);
        CHECK(b.edges.size() == 5);
        CHECK(b.edges.front() == doctest::Approx(0.04));
        CHECK(b.edges.back() == doctest::Approx(0.0499));
        CHECK(b.count[0] + b.count[1] + b.count[2] + b.count[3] == 100);
    }
    SUBCASE("final bin is closed on the right") {
        IncrementDataset d;
        d.rows.push_back({1, 0.0});
        d.rows.push_back({2, 1.0});
        const auto b = bin_by_rate(d, 2);
        CHECK(b.edges == std::vector<double>{0.0, 0.5, 1.0});
        CHECK(b.count[0] == 1);
        CHECK(b.count[1] == 1);  // rate 1.0 lands in the closed final bin
        CHECK(b.increments[1][0] == 2);
    }
    SUBCASE("uniform rates give means near bin midpoints") {
        IncrementDataset d;
        const std::uint64_t key = rng::path_key(5, 5);
        for (int i = 0; i < 200000; ++i) d.rows.push_back({0, rng::uniform(key, i)});
        const auto b = bin_by_rate(d, 4);
        for (int k = 0; k < 4; ++k) {
            const double mid = 0.5 * (b.edges[k] + b.edges[k + 1]);
            CHECK(b.mean_rate[k] == doctest::Approx(mid).epsilon(0.01));
        }
    }
    SUBCASE("degenerate single-rate data is allowed and flagged") {
        IncrementDataset d;
        for (int i = 0; i < 10; ++i) d.rows.push_back({i % 2, 0.03});
        const auto b = bin_by_rate(d, 4);
        CHECK(b.degenerate);
        CHECK(b.increments.size() == 1);
        CHECK(b.count[0] == 10);
    }
}

TEST_CASE("constant utilization calibrates to zero intensities") {
    PoolHistory h;
    for (int i = 0; i < 500; ++i)
        h.rows.push_back({i + 1, 0.8, 0.04 + 0.00001 * (i % 7)});
    FitReport rep;
    const auto curve = calibrate_intensities(h, 0.001, 4, 0.0, 0.25, &rep);
    for (const double v : curve.lambda_plus) CHECK(v == 0.0);
    for (const double v : curve.lambda_minus) CHECK(v == 0.0);
    for (const auto& b : rep.bins) {
        CHECK(b.fit.lambda_plus == 0.0);
        CHECK(b.fit.lambda_minus == 0.0);
    }
}

TEST_CASE("curve shape: K interior knots plus two boundary knots") {
    PoolHistory h;
    const std::uint64_t key = rng::path_key(99, 1);
    double u = 0.5;
    std::uint64_t t = 0;
    for (int i = 0; i < 20000; ++i) {
        const double rate = 0.01 + 0.08 * rng::uniform(key, t++);
        if (rng::uniform(key, t++) < 0.02) u += (rng::uniform(key, t++) < 0.5 ? 1 : -1) * 0.001;
        u = std::clamp(u, 0.4, 0.6);
        h.rows.push_back({i + 1, u, rate});
    }
    FitReport rep;
    const auto curve = calibrate_intensities(h, 0.001, 4, 0.0, 0.25, &rep);
    CHECK(curve.rates.size() == 6);  // 4 interior + 2 boundary
    CHECK(rep.bins.size() == 4);
    CHECK(curve.rates.front() == 0.0);
    CHECK(curve.rates.back() == 0.25);
}

TEST_CASE("history csv ingestion") {
    const std::string path = "history_ingest_test.csv";
    SUBCASE("wide schema with supplied/borrowed") {
        {
            std::ofstream out(path);
            out << "block_number,supplied,borrowed,rate\n";
            out << "100,1000,800,0.05\n";
            out << "101,1000,810,0.051\n";
            out << "103,1000,820,0.052\n";  // gap of 2 blocks
        }
        const auto h = read_history_csv(path);
        REQUIRE(h.rows.size() == 3);
        CHECK(h.rows[0].utilization == doctest::Approx(0.8));
        CHECK(h.gap_count == 1);
    }
    SUBCASE("narrow schema") {
        {
            std::ofstream out(path);
            out << "block_number,utilization,rate\n100,0.8,0.05\n101,0.81,0.051\n";
        }
        const auto h = read_history_csv(path);
        CHECK(h.rows[1].utilization == 0.81);
        CHECK(h.gap_count == 0);
    }
    SUBCASE("borrowed above supplied is rejected with the row number") {
        {
            std::ofstream out(path);
            out << "block_number,supplied,borrowed,rate\n100,1000,1200,0.05\n";
        }
        try {
            read_history_csv(path);
            FAIL("expected InputError");
        } catch (const InputError& e) {
            CHECK(e.row_number == 2);
        }
    }
    SUBCASE("non-monotone blocks rejected") {
        {
            std::ofstream out(path);
            out << "block_number,utilization,rate\n100,0.8,0.05\n100,0.81,0.051\n";
        }
        CHECK_THROWS_AS(read_history_csv(path), InputError);
    }
    SUBCASE("unknown header rejected") {
        {
            std::ofstream out(path);
            out << "a,b\n1,2\n";
        }
        CHECK_THROWS_AS(read_history_csv(path), InputError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("increments pair with the earlier row's rate") {
    PoolHistory h;
    h.rows.push_back({1, 0.50, 0.010});
    h.rows.push_back({2, 0.51, 0.020});
    h.rows.push_back({3, 0.50, 0.030});
    const auto d = increments_from_history(h, 0.001);
    REQUIRE(d.rows.size() == 2);
    CHECK(d.rows[0].rate == 0.010);
    CHECK(d.rows[0].n == 10);
    CHECK(d.rows[1].rate == 0.020);
    CHECK(d.rows[1].n == -10);
}
