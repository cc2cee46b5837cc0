#include "ssac/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "ssac/common.hpp"

namespace ssac {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path), path_(path) {
  require(out_.good(), "metrics: cannot open '" + path + "' for writing");
  out_ << kMetricsHeader << '\n';
  out_.flush();
  require(out_.good(), "metrics: write failure on '" + path + "'");
}

void MetricsWriter::write_row(const MetricsRow& r) {
  out_ << r.iteration << ',' << r.env_steps << ',' << format_double(r.mean_return) << ','
       << format_double(r.mean_episode_cost) << ',' << r.violation_steps << ','
       << format_double(r.cost_rate) << ',' << format_double(r.cumulative_cost) << ','
       << format_double(r.mean_multiplier) << ',' << format_double(r.max_multiplier) << ','
       << format_double(r.alpha) << ',' << format_double(r.q_loss) << ','
       << format_double(r.qc_loss) << ',' << format_double(r.policy_loss) << '\n';
  out_.flush();
  require(out_.good(), "metrics: write failure on '" + path_ + "'");
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "metrics: cannot open '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "metrics: empty file '" + path + "'");
  require(line == kMetricsHeader, "metrics: unexpected header in '" + path + "'");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MetricsRow r;
    char c;
    ss >> r.iteration >> c >> r.env_steps >> c >> r.mean_return >> c >>
        r.mean_episode_cost >> c >> r.violation_steps >> c >> r.cost_rate >> c >>
        r.cumulative_cost >> c >> r.mean_multiplier >> c >> r.max_multiplier >> c >>
        r.alpha >> c >> r.q_loss >> c >> r.qc_loss >> c >> r.policy_loss;
    require(!ss.fail(), "metrics: malformed row in '" + path + "': " + line);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ssac
