#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mavswarm/swarm.hpp"

namespace mavswarm {

inline constexpr double kHistogramBin = 0.1;

/// Flat, dot-keyed metrics. Every value is a deterministic function of the log.
struct Metrics {
  std::map<std::string, double> values;

  double at(const std::string& key) const;  // throws std::out_of_range
  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string text() const;                 // "key = value" lines, sorted by key
};

Metrics compute_metrics(const std::vector<int>& ids, const std::vector<LogRecord>& log,
                        double goal_tolerance);

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

/// Trajectory log as CSV. Columns: t, agent, 9 true states, 9 estimated
/// states, 3 inputs, 3 force estimates, 3 reference and 3 goal coordinates,
/// kkt, qp_iterations, ok, slack, clamped, then d/rmin/rth per agent id.
void write_log(std::ostream& out, const std::vector<int>& ids, const std::vector<LogRecord>& log);
std::vector<LogRecord> read_log(std::istream& in, std::vector<int>* ids);

void write_timing(std::ostream& out, const std::vector<TimingRecord>& timing);

struct TimingSummary {
  double mean_ms = 0.0;
  double max_ms = 0.0;
  long samples = 0;
};
TimingSummary summarize_timing(const std::vector<TimingRecord>& timing);

/// Parses the "key = value" format written by Metrics::text. Throws ConfigError with the line.
Metrics parse_metrics(std::istream& in);

/// Side-by-side table of a, b and b - a. Histogram bins missing on one side
/// count as zero; any other key mismatch throws ShapeMismatchError.
std::string compare_metrics(const Metrics& a, const Metrics& b);

/// Writes log.csv, metrics.txt, distances.csv, timing.csv and scenario.json into `dir`.
Metrics write_run(const std::string& dir, const RunOutput& run);

/// Recomputes metrics from dir/log.csv and dir/scenario.json and compares them
/// with dir/metrics.txt key by key, exactly.
bool replay_matches(const std::string& dir);

}  // namespace mavswarm
