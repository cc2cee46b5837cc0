#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ssac/common.hpp"
#include "ssac/metrics.hpp"

using namespace ssac;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("header is emitted exactly, even with zero rows") {
  const std::string path = temp_path("ssac_metrics_empty.csv");
  { MetricsWriter w(path); }
  const std::string contents = slurp(path);
  CHECK(contents == std::string(kMetricsHeader) + "\n");
  CHECK(read_metrics(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("rows round-trip exactly through %.17g") {
  const std::string path = temp_path("ssac_metrics_rt.csv");
  std::vector<MetricsRow> rows(3);
  rows[0].iteration = 1;
  rows[0].env_steps = 1000;
  rows[0].mean_return = -1.2345678901234567;
  rows[0].mean_episode_cost = 0.1;
  rows[0].violation_steps = 54;
  rows[0].cost_rate = 0.054;
  rows[0].cumulative_cost = 54.0;
  rows[0].mean_multiplier = 0.60653065971263342;
  rows[0].max_multiplier = 0.68229219079598601;
  rows[0].alpha = 0.2;
  rows[0].q_loss = 1e-300;  // extreme magnitudes survive
  rows[0].qc_loss = 1e300;
  rows[0].policy_loss = -3.0000000000000004;
  rows[1] = rows[0];
  rows[1].iteration = 2;
  rows[1].env_steps = 2000;
  rows[1].violation_steps = 0;
  rows[1].cost_rate = 0.027;
  rows[1].cumulative_cost = 54.0;
  rows[2] = rows[1];
  rows[2].iteration = 3;
  rows[2].env_steps = 3000;

  {
    MetricsWriter w(path);
    for (const auto& r : rows) w.write_row(r);
  }
  const auto back = read_metrics(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].iteration == rows[i].iteration);
    CHECK(back[i].env_steps == rows[i].env_steps);
    CHECK(back[i].mean_return == rows[i].mean_return);  // bitwise
    CHECK(back[i].mean_episode_cost == rows[i].mean_episode_cost);
    CHECK(back[i].violation_steps == rows[i].violation_steps);
    CHECK(back[i].cost_rate == rows[i].cost_rate);
    CHECK(back[i].cumulative_cost == rows[i].cumulative_cost);
    CHECK(back[i].mean_multiplier == rows[i].mean_multiplier);
    CHECK(back[i].max_multiplier == rows[i].max_multiplier);
    CHECK(back[i].alpha == rows[i].alpha);
    CHECK(back[i].q_loss == rows[i].q_loss);
    CHECK(back[i].qc_loss == rows[i].qc_loss);
    CHECK(back[i].policy_loss == rows[i].policy_loss);
  }
  std::remove(path.c_str());
}

TEST_CASE("format_double: full precision and integral compactness") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.0) == "0");
  // 17 significant digits preserve the exact double.
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(x) != "0.3");
}

TEST_CASE("read_metrics rejects malformed files") {
  const std::string path = temp_path("ssac_metrics_bad.csv");
  {
    std::ofstream out(path);
    out << "wrong,header\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_metrics(path), ConfigError);
  {
    std::ofstream out(path);
    out << kMetricsHeader << "\n1,2,3\n";  // truncated row
  }
  CHECK_THROWS_AS(read_metrics(path), ConfigError);
  CHECK_THROWS_AS(read_metrics(temp_path("ssac_no_such_file.csv")), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("writer refuses an unwritable path") {
  CHECK_THROWS_AS(MetricsWriter("/no/such/dir/metrics.csv"), ConfigError);
}

TEST_CASE("cost_rate invariant: recompute from columns matches emitted value") {
  // cost_rate is cumulative violation steps over cumulative env steps; the
  // emitted column must agree exactly with a recomputation from the other
  // columns of the same file.
  const std::string path = temp_path("ssac_metrics_rate.csv");
  {
    MetricsWriter w(path);
    std::size_t cumulative = 0;
    for (std::size_t i = 1; i <= 10; ++i) {
      MetricsRow r;
      r.iteration = i;
      r.env_steps = 1000 * i;
      r.violation_steps = 7 * i % 13;
      cumulative += r.violation_steps;
      r.cost_rate = static_cast<double>(cumulative) / static_cast<double>(r.env_steps);
      r.cumulative_cost = static_cast<double>(cumulative);
      w.write_row(r);
    }
  }
  const auto rows = read_metrics(path);
  std::size_t cumulative = 0;
  double prev_cc = 0.0;
  for (const auto& r : rows) {
    cumulative += r.violation_steps;
    CHECK(r.cost_rate == static_cast<double>(cumulative) / static_cast<double>(r.env_steps));
    CHECK(r.cost_rate >= 0.0);
    CHECK(r.cost_rate <= 1.0);
    CHECK(r.cumulative_cost >= prev_cc);  // non-decreasing
    prev_cc = r.cumulative_cost;
  }
  std::remove(path.c_str());
}
