#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

// Metrics CSV pipeline. Doubles are printed with %.17g so files round-trip
// exactly and identical runs produce byte-identical output.

namespace ssac {

struct MetricsRow {
  std::size_t iteration = 0;
  std::size_t env_steps = 0;
  double mean_return = 0.0;
  double mean_episode_cost = 0.0;
  std::size_t violation_steps = 0;
  double cost_rate = 0.0;        // cumulative violation steps / cumulative env steps
  double cumulative_cost = 0.0;  // non-decreasing
  double mean_multiplier = 0.0;
  double max_multiplier = 0.0;
  double alpha = 0.0;
  double q_loss = 0.0;
  double qc_loss = 0.0;
  double policy_loss = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iteration,env_steps,mean_return,mean_episode_cost,violation_steps,cost_rate,"
    "cumulative_cost,mean_multiplier,max_multiplier,alpha,q_loss,qc_loss,policy_loss";

// %.17g, shortest exact round-trip not required but precision is.
std::string format_double(double x);

class MetricsWriter {
 public:
  // Opens (truncates) and writes the header. Throws ConfigError on failure.
  explicit MetricsWriter(const std::string& path);
  void write_row(const MetricsRow& row);  // flushes; throws on I/O failure

 private:
  std::ofstream out_;
  std::string path_;
};

std::vector<MetricsRow> read_metrics(const std::string& path);  // strict parse

// Trajectory probe CSV: header "step,phi_max,transition_cost,in_safe_subset".
inline constexpr const char* kProbeHeader = "step,phi_max,transition_cost,in_safe_subset";

}  // namespace ssac
