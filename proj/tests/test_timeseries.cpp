#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spill/timeseries.hpp"

using namespace spill;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

} // namespace

TEST_CASE("parse_instant handles dates, datetimes and epochs") {
    CHECK(parse_instant("1970-01-01") == 0);
    CHECK(parse_instant("1970-01-02") == 86400);
    CHECK(parse_instant("2021-01-01") == 1609459200);
    CHECK(parse_instant("2021-01-01T06:30:15") == 1609459200 + 6 * 3600 + 30 * 60 + 15);
    CHECK(parse_instant("2021-01-01 06:30:15") == parse_instant("2021-01-01T06:30:15"));
    CHECK(parse_instant("1609459200") == 1609459200);
    CHECK(format_instant(1609459200) == "2021-01-01");
    CHECK(format_instant(1609482615) == "2021-01-01T06:30:15");
    CHECK_THROWS_AS(parse_instant("not-a-date"), IngestError);
    CHECK_THROWS_AS(parse_instant("2021-13-01"), IngestError);
}

TEST_CASE("load_csv parses a small panel with a missing cell") {
    const auto path = write_temp("panel_small.csv",
                                 "date,USDT,USDC\n"
                                 "2021-01-01,1.0001,0.9999\n"
                                 "2021-01-02,1.0002,\n"
                                 "2021-01-03,0.9998,1.0001\n");
    const PricePanel panel = load_csv(path);
    CHECK(panel.rows() == 3);
    CHECK(panel.cols() == 2);
    CHECK(panel.assets[0].id == "USDT");
    CHECK(panel.values(0, 1) == doctest::Approx(0.9999));
    CHECK(std::isnan(panel.values(1, 1)));
    CHECK_FALSE(std::isnan(panel.values(2, 1)));
}

TEST_CASE("load_csv rejects bad inputs") {
    SUBCASE("duplicate timestamp") {
        const auto path = write_temp("panel_dup.csv",
                                     "date,A\n2021-01-01,1.0\n2021-01-01,1.1\n");
        CHECK_THROWS_AS(load_csv(path), IngestError);
    }
    SUBCASE("header only") {
        const auto path = write_temp("panel_empty.csv", "date,A\n");
        CHECK_THROWS_AS(load_csv(path), IngestError);
    }
    SUBCASE("no asset columns") {
        const auto path = write_temp("panel_noassets.csv", "date\n2021-01-01\n");
        CHECK_THROWS_AS(load_csv(path), IngestError);
    }
    SUBCASE("unknown subset column") {
        const auto path = write_temp("panel_sub.csv", "date,A\n2021-01-01,1.0\n");
        PanelSchema schema;
        schema.asset_ids = {"B"};
        CHECK_THROWS_AS(load_csv(path, schema), IngestError);
    }
    SUBCASE("unparseable cell") {
        const auto path = write_temp("panel_cell.csv", "date,A\n2021-01-01,abc\n");
        CHECK_THROWS_AS(load_csv(path), IngestError);
    }
}

TEST_CASE("load_csv respects subset order and skips comment lines") {
    const auto path = write_temp("panel_order.csv",
                                 "# config: {}\n"
                                 "date,A,B,C\n"
                                 "2021-01-01,1,2,3\n"
                                 "2021-01-02,4,5,6\n");
    PanelSchema schema;
    schema.asset_ids = {"C", "A"};
    const PricePanel panel = load_csv(path, schema);
    CHECK(panel.cols() == 2);
    CHECK(panel.assets[0].id == "C");
    CHECK(panel.values(0, 0) == 3.0);
    CHECK(panel.values(0, 1) == 1.0);
}

TEST_CASE("to_deviations basis-point transform") {
    PricePanel panel;
    panel.assets = {{"X", AssetCategory::FiatBacked}};
    panel.timestamps = {0, 86400, 2 * 86400};
    panel.values.resize(3, 1);
    panel.values << 1.0000, 0.940914, 0.9950;

    const DeviationPanel dev = to_deviations(panel);
    CHECK(dev.deviations(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dev.deviations(1, 0) == doctest::Approx(-590.86).epsilon(1e-9));
    CHECK(dev.diffs.rows() == 2);
    // (1.0000, 0.9950) spans -50 bp
    CHECK(dev.deviations(2, 0) - dev.deviations(1, 0) ==
          doctest::Approx(dev.diffs(1, 0)).epsilon(1e-12));

    PricePanel simple;
    simple.assets = panel.assets;
    simple.timestamps = {0, 86400};
    simple.values.resize(2, 1);
    simple.values << 1.0000, 0.9950;
    CHECK(to_deviations(simple).diffs(0, 0) == doctest::Approx(-50.0).epsilon(1e-12));
}

TEST_CASE("to_deviations propagates NaN into both adjacent diffs") {
    PricePanel panel;
    panel.assets = {{"X", AssetCategory::FiatBacked}};
    panel.timestamps = {0, 86400, 2 * 86400};
    panel.values.resize(3, 1);
    panel.values << 1.0, std::nan(""), 1.001;
    const DeviationPanel dev = to_deviations(panel);
    CHECK(std::isnan(dev.diffs(0, 0)));
    CHECK(std::isnan(dev.diffs(1, 0)));
}

TEST_CASE("anchor assets use scaled log levels") {
    PricePanel panel;
    panel.assets = {{"BTC", AssetCategory::CryptoAnchor}};
    panel.timestamps = {0, 86400};
    panel.values.resize(2, 1);
    panel.values << 40000.0, 42000.0;
    const DeviationPanel dev = to_deviations(panel);
    CHECK(dev.diffs(0, 0) ==
          doctest::Approx(std::log(42000.0 / 40000.0) * 10000.0).epsilon(1e-12));
}

TEST_CASE("price round-trips through the deviation transform") {
    PricePanel panel;
    panel.assets = {{"X", AssetCategory::FiatBacked}, {"BTC", AssetCategory::CryptoAnchor}};
    panel.timestamps = {0, 86400, 2 * 86400, 3 * 86400};
    panel.values.resize(4, 2);
    panel.values << 1.0001, 30000.0, 0.9987, 31000.0, 1.0153, 29500.0, 0.94, 33000.0;
    const DeviationPanel dev = to_deviations(panel);
    for (Eigen::Index t = 0; t < 4; ++t) {
        const double back_peg = dev.deviations(t, 0) / 10000.0 + 1.0;
        CHECK(back_peg == doctest::Approx(panel.values(t, 0)).epsilon(1e-12));
        const double back_anchor = std::exp(dev.deviations(t, 1) / 10000.0);
        CHECK(back_anchor == doctest::Approx(panel.values(t, 1)).epsilon(1e-12));
    }
}

TEST_CASE("diff columns telescope to the deviation span") {
    PricePanel panel;
    panel.assets = {{"X", AssetCategory::FiatBacked}};
    panel.timestamps = {0, 86400, 2 * 86400, 3 * 86400};
    panel.values.resize(4, 1);
    panel.values << 1.001, 0.997, 1.004, 0.97;
    const DeviationPanel dev = to_deviations(panel);
    CHECK(dev.diffs.col(0).sum() ==
          doctest::Approx(dev.deviations(3, 0) - dev.deviations(0, 0)).epsilon(1e-12));
}

TEST_CASE("balanced_window applies listwise deletion") {
    PricePanel panel;
    panel.assets = {{"A", AssetCategory::FiatBacked}, {"B", AssetCategory::Algorithmic}};
    panel.timestamps = {0, 86400, 2 * 86400, 3 * 86400, 4 * 86400};
    panel.values.resize(5, 2);
    panel.values << 1.00, 1.00, 1.01, 1.02, 1.02, std::nan(""), 1.03, 1.01, 1.00, 1.00;
    const DeviationPanel dev = to_deviations(panel);
    // diffs rows: 4; NaN price at t=2 kills diff rows 1 and 2 for asset B.

    SUBCASE("no NaN for single clean asset") {
        const DeviationPanel w = balanced_window(dev, {"A"}, 0, 10 * 86400);
        CHECK(w.n_obs() == 4);
        CHECK(w.dropped_rows == 0);
    }
    SUBCASE("NaN row dropped for all selected assets") {
        const DeviationPanel w = balanced_window(dev, {"A", "B"}, 0, 10 * 86400);
        CHECK(w.n_obs() == 2);
        CHECK(w.dropped_rows == 2);
        CHECK(w.diffs.allFinite());
        // timestamps are a subsequence of the input's
        for (auto ts : w.diff_timestamps)
            CHECK(std::find(dev.diff_timestamps.begin(), dev.diff_timestamps.end(), ts) !=
                  dev.diff_timestamps.end());
    }
    SUBCASE("time restriction") {
        const DeviationPanel w = balanced_window(dev, {"A"}, 2 * 86400, 3 * 86400);
        CHECK(w.n_obs() == 2);
        CHECK(w.diff_timestamps.front() == 2 * 86400);
    }
    SUBCASE("all rows missing for one asset") {
        PricePanel p2 = panel;
        p2.values.col(1).setConstant(std::nan(""));
        const DeviationPanel dev2 = to_deviations(p2);
        CHECK_THROWS_AS(balanced_window(dev2, {"A", "B"}, 0, 10 * 86400),
                        InsufficientDataError);
    }
    SUBCASE("empty subset rejected") {
        CHECK_THROWS_AS(balanced_window(dev, {}, 0, 86400), AlignmentError);
    }
    SUBCASE("min_rows enforced") {
        CHECK_THROWS_AS(balanced_window(dev, {"A", "B"}, 0, 10 * 86400, 3),
                        InsufficientDataError);
    }
}

TEST_CASE("resample_last keeps the final finite observation per bucket") {
    PricePanel panel;
    panel.assets = {{"A", AssetCategory::FiatBacked}};
    panel.timestamps = {0, 60, 120, 3600, 3660};
    panel.values.resize(5, 1);
    panel.values << 1.0, 1.1, std::nan(""), 2.0, 2.1;
    const PricePanel hourly = resample_last(panel, 3600);
    CHECK(hourly.rows() == 2);
    CHECK(hourly.timestamps[0] == 0);
    CHECK(hourly.values(0, 0) == 1.1); // NaN at the bucket end falls back
    CHECK(hourly.values(1, 0) == 2.1);
}

TEST_CASE("asset metadata sidecar parses categories") {
    const auto path = write_temp("meta.json",
                                 R"({"USDT":{"category":"fiat_backed"},)"
                                 R"("DAI":"crypto_collateralized","BTC":"CryptoAnchor"})");
    const auto meta = load_asset_meta(path);
    CHECK(meta.at("USDT") == AssetCategory::FiatBacked);
    CHECK(meta.at("DAI") == AssetCategory::CryptoCollateralized);
    CHECK(meta.at("BTC") == AssetCategory::CryptoAnchor);
    CHECK_THROWS_AS(category_from_string("junk"), IngestError);
    CHECK(to_string(AssetCategory::Algorithmic) == "algorithmic");
}
