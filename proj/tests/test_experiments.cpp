#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "test_helpers.hpp"

using namespace mra;

TEST_CASE("experiment reports are identical across worker counts", "[experiments]") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::em_compare;
  cfg.seed = 777;
  cfg.overrides["L"] = "8";
  cfg.overrides["N"] = "200";
  cfg.overrides["trials"] = "4";
  cfg.overrides["s_count"] = "2";

  cfg.threads = 1;
  ExperimentReport one = run_experiment(cfg);
  cfg.threads = 2;
  ExperimentReport two = run_experiment(cfg);

  std::ostringstream a, b;
  write_report_csv(one, a);
  write_report_csv(two, b);
  CHECK(a.str() == b.str());
  CHECK(!one.rows.empty());
}

TEST_CASE("counterexample experiment reproduces the construction", "[experiments]") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::counterexample;
  cfg.seed = 12;
  cfg.overrides["trials"] = "5";
  ExperimentReport rep = run_experiment(cfg);

  auto value_of = [&](const std::string& stat) {
    for (const ReportRow& r : rep.rows)
      if (r.statistic == stat) return r.value;
    FAIL("missing statistic " + stat);
    return 0.0;
  };
  CHECK(value_of("delta_m1_max") < 1e-10);
  CHECK(value_of("delta_m2_max") < 1e-10);
  CHECK(value_of("orbit_distance_min") > 0.1);
  CHECK(value_of("order3_count") == 5.0);
}

TEST_CASE("bounds_table emits the documented grid", "[experiments]") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::bounds_table;
  cfg.seed = 5;
  ExperimentReport rep = run_experiment(cfg);
  int orbit_rows = 0, rate_rows = 0;
  for (const ReportRow& r : rep.rows) {
    if (r.method == "orbit_bound" && r.statistic == "bound") {
      CHECK(r.value >= 0.0);
      ++orbit_rows;
    }
    if ((r.method == "corsigma4" || r.method == "corsigma6") && r.statistic == "bound")
      ++rate_rows;
  }
  CHECK(orbit_rows == 25);
  CHECK(rate_rows == 50);
}

TEST_CASE("spiked experiment summary behaves at the extremes", "[experiments]") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::spiked;
  cfg.seed = 9;
  cfg.overrides["L"] = "80";
  cfg.overrides["trials"] = "3";
  cfg.overrides["sigma_count"] = "4";
  cfg.overrides["x_norm"] = "5";
  ExperimentReport rep = run_experiment(cfg);

  double cos_low = -1, cos_high = -1, sig_low = 1e300, sig_high = -1;
  for (const ReportRow& r : rep.rows) {
    if (r.method != "cosine_empirical" || r.statistic != "mean") continue;
    if (r.sigma < sig_low) {
      sig_low = r.sigma;
      cos_low = r.value;
    }
    if (r.sigma > sig_high) {
      sig_high = r.sigma;
      cos_high = r.value;
    }
  }
  CHECK(cos_low > 0.9);   // nearly clean regime
  CHECK(cos_high < 0.5);  // far above the noise threshold
}

TEST_CASE("report SVG is emitted and well-formed", "[experiments]") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::counterexample;
  cfg.seed = 3;
  cfg.overrides["trials"] = "3";
  ExperimentReport rep = run_experiment(cfg);
  std::string path =
      (std::filesystem::temp_directory_path() / "mra_test_plot.svg").string();
  // counterexample has no sweep; use the bounds table for a line chart
  cfg.kind = ExperimentKind::bounds_table;
  rep = run_experiment(cfg);
  write_report_svg(rep, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("experiment kind names round trip", "[experiments]") {
  for (ExperimentKind k :
       {ExperimentKind::slope_random, ExperimentKind::slope_uniform,
        ExperimentKind::em_compare, ExperimentKind::method_compare,
        ExperimentKind::spiked, ExperimentKind::counterexample,
        ExperimentKind::bounds_table})
    CHECK(kind_from_name(kind_name(k)) == k);
  CHECK_THROWS_AS(kind_from_name("nope"), std::invalid_argument);
}
