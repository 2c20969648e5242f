#include "mavswarm/metrics.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mavswarm/errors.hpp"

namespace mavswarm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCloseDistance = 1.1;

std::string pair_key(int a, int b) { return "pair." + std::to_string(a) + "-" + std::to_string(b); }

std::string bin_key(const std::string& pair, int bin) {
  std::ostringstream ss;
  ss << pair << ".hist." << std::setw(3) << std::setfill('0') << bin;
  return ss.str();
}

bool is_hist_key(const std::string& key) { return key.find(".hist.") != std::string::npos; }

double parse_double(const std::string& s, const std::string& where) {
  if (s.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if (s == "nan") return kNaN;
    throw ConfigError(where, "not a number: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> log_header(const std::vector<int>& ids) {
  std::vector<std::string> h{"t", "agent"};
  const char* state[] = {"px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw"};
  for (const char* s : state) h.push_back(std::string("true_") + s);
  for (const char* s : state) h.push_back(std::string("est_") + s);
  for (const char* s : {"u_roll", "u_pitch", "u_thrust", "fx", "fy", "fz", "ref_px", "ref_py",
                        "ref_pz", "goal_px", "goal_py", "goal_pz", "kkt", "qp_iterations", "ok",
                        "slack", "clamped"})
    h.emplace_back(s);
  for (int id : ids) {
    h.push_back("d_" + std::to_string(id));
    h.push_back("rmin_" + std::to_string(id));
    h.push_back("rth_" + std::to_string(id));
  }
  return h;
}

constexpr int kFixedColumns = 2 + 9 + 9 + 3 + 3 + 3 + 3 + 5;

}  // namespace

double Metrics::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw std::out_of_range("no metric named '" + key + "'");
  return it->second;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Metrics::text() const {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + format_number(v) + "\n";
  return out;
}

Metrics compute_metrics(const std::vector<int>& ids, const std::vector<LogRecord>& log,
                        double goal_tolerance) {
  const int n = static_cast<int>(ids.size());
  std::map<int, int> index;
  for (int i = 0; i < n; ++i) index[ids[i]] = i;

  struct AgentAcc {
    long samples = 0;
    double sq_err = 0.0;
    double path = 0.0;
    Vec3 last = Vec3::Zero();
    Vec3 goal = Vec3::Zero();
    bool seen = false;
    long slack = 0;
    long failures = 0;
    long clamped = 0;
  };
  struct PairAcc {
    long samples = 0;
    long close = 0;  // at least 1.1 m
    long violations = 0;
    double min_distance = std::numeric_limits<double>::infinity();
    std::map<int, long> hist;
  };
  std::vector<AgentAcc> agents(n);
  std::map<std::pair<int, int>, PairAcc> pairs;

  for (const auto& r : log) {
    const auto it = index.find(r.agent);
    if (it == index.end()) throw ConfigError("log", "record for unknown agent " + std::to_string(r.agent));
    const int i = it->second;
    auto& a = agents[i];
    const Vec3 p = r.truth.segment<3>(idx::kPos);
    ++a.samples;
    a.sq_err += (p - r.reference).squaredNorm();
    if (a.seen) a.path += (p - a.last).norm();
    a.last = p;
    a.goal = r.goal;
    a.seen = true;
    a.slack += r.slack;
    a.failures += r.ok ? 0 : 1;
    a.clamped += r.clamped;
    // Each pair is counted once, from the lower-index agent's rows.
    for (int j = i + 1; j < n; ++j) {
      const double d = r.distance.at(j);
      auto& pa = pairs[{i, j}];
      ++pa.samples;
      pa.min_distance = std::min(pa.min_distance, d);
      if (d >= kCloseDistance) ++pa.close;
      if (d < r.r_min.at(j)) ++pa.violations;
      ++pa.hist[static_cast<int>(std::floor(d / kHistogramBin))];
    }
  }

  Metrics m;
  auto& v = m.values;
  double total_path = 0.0, max_goal = 0.0, min_distance = std::numeric_limits<double>::infinity();
  long slack = 0, failures = 0, violations = 0, clamped = 0;
  bool goals = true;
  for (int i = 0; i < n; ++i) {
    const auto& a = agents[i];
    const std::string k = "agent." + std::to_string(ids[i]);
    const double goal_err = a.seen ? (a.last - a.goal).norm() : kNaN;
    v[k + ".rms_tracking_error"] = a.samples ? std::sqrt(a.sq_err / a.samples) : kNaN;
    v[k + ".path_length"] = a.path;
    v[k + ".goal_error"] = goal_err;
    v[k + ".slack_activations"] = static_cast<double>(a.slack);
    v[k + ".solver_failures"] = static_cast<double>(a.failures);
    v[k + ".clamped_delays"] = static_cast<double>(a.clamped);
    v[k + ".samples"] = static_cast<double>(a.samples);
    total_path += a.path;
    max_goal = std::max(max_goal, goal_err);
    goals = goals && goal_err <= goal_tolerance;
    slack += a.slack;
    failures += a.failures;
    clamped += a.clamped;
  }
  for (const auto& [ij, pa] : pairs) {
    const std::string k = pair_key(ids[ij.first], ids[ij.second]);
    v[k + ".min_distance"] = pa.min_distance;
    v[k + ".samples"] = static_cast<double>(pa.samples);
    v[k + ".samples_at_least_1_1m"] = static_cast<double>(pa.close);
    v[k + ".violations"] = static_cast<double>(pa.violations);
    for (const auto& [bin, count] : pa.hist) v[bin_key(k, bin)] = static_cast<double>(count);
    min_distance = std::min(min_distance, pa.min_distance);
    violations += pa.violations;
  }
  v["run.agents"] = n;
  v["run.records"] = static_cast<double>(log.size());
  v["run.hist_bin_width"] = kHistogramBin;
  v["run.total_path_length"] = total_path;
  v["run.max_goal_error"] = max_goal;
  v["run.goal_tolerance"] = goal_tolerance;
  v["run.goals_reached"] = goals ? 1 : 0;
  v["run.min_distance"] = pairs.empty() ? kNaN : min_distance;
  v["run.violations"] = static_cast<double>(violations);
  v["run.slack_activations"] = static_cast<double>(slack);
  v["run.solver_failures"] = static_cast<double>(failures);
  v["run.clamped_delays"] = static_cast<double>(clamped);
  v["run.passed"] = (violations == 0 && goals) ? 1 : 0;
  return m;
}

void write_log(std::ostream& out, const std::vector<int>& ids, const std::vector<LogRecord>& log) {
  const auto header = log_header(ids);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  const int n = static_cast<int>(ids.size());
  std::string line;
  for (const auto& r : log) {
    line.clear();
    auto put = [&](double x) {
      if (!line.empty()) line += ',';
      if (!std::isnan(x)) line += format_number(x);
    };
    put(r.t);
    put(r.agent);
    for (int i = 0; i < kStateDim; ++i) put(r.truth(i));
    for (int i = 0; i < kStateDim; ++i) put(r.estimate(i));
    for (int i = 0; i < kInputDim; ++i) put(r.input(i));
    for (int i = 0; i < 3; ++i) put(r.force(i));
    for (int i = 0; i < 3; ++i) put(r.reference(i));
    for (int i = 0; i < 3; ++i) put(r.goal(i));
    put(r.kkt);
    put(r.iterations);
    put(r.ok ? 1 : 0);
    put(r.slack);
    put(r.clamped);
    for (int j = 0; j < n; ++j) {
      put(r.distance.at(j));
      put(r.r_min.at(j));
      put(r.r_th.at(j));
    }
    out << line << "\n";
  }
}

std::vector<LogRecord> read_log(std::istream& in, std::vector<int>* ids_out) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("log line 1", "missing header");
  const auto header = split(line, ',');
  if (header.size() < static_cast<std::size_t>(kFixedColumns) ||
      (header.size() - kFixedColumns) % 3 != 0)
    throw ConfigError("log line 1", "unexpected column count");
  std::vector<int> ids;
  for (std::size_t c = kFixedColumns; c < header.size(); c += 3) {
    if (header[c].rfind("d_", 0) != 0) throw ConfigError("log line 1", "bad column " + header[c]);
    ids.push_back(std::stoi(header[c].substr(2)));
  }
  if (log_header(ids) != header) throw ConfigError("log line 1", "header does not match the format");
  const int n = static_cast<int>(ids.size());

  std::vector<LogRecord> log;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = "log line " + std::to_string(lineno);
    if (f.size() != header.size()) throw ConfigError(where, "wrong number of fields");
    std::size_t c = 0;
    auto next = [&]() { return parse_double(f[c++], where); };
    LogRecord r;
    r.t = next();
    r.agent = static_cast<int>(next());
    for (int i = 0; i < kStateDim; ++i) r.truth(i) = next();
    for (int i = 0; i < kStateDim; ++i) r.estimate(i) = next();
    for (int i = 0; i < kInputDim; ++i) r.input(i) = next();
    for (int i = 0; i < 3; ++i) r.force(i) = next();
    for (int i = 0; i < 3; ++i) r.reference(i) = next();
    for (int i = 0; i < 3; ++i) r.goal(i) = next();
    r.kkt = next();
    r.iterations = static_cast<int>(next());
    r.ok = next() != 0.0;
    r.slack = static_cast<int>(next());
    r.clamped = static_cast<int>(next());
    for (int j = 0; j < n; ++j) {
      r.distance.push_back(next());
      r.r_min.push_back(next());
      r.r_th.push_back(next());
    }
    log.push_back(std::move(r));
  }
  if (ids_out) *ids_out = ids;
  return log;
}

void write_timing(std::ostream& out, const std::vector<TimingRecord>& timing) {
  out << "t,agent,solve_ms\n";
  for (const auto& r : timing)
    out << format_number(r.t) << ',' << r.agent << ',' << format_number(r.solve_ms) << "\n";
}

TimingSummary summarize_timing(const std::vector<TimingRecord>& timing) {
  TimingSummary s;
  double total = 0.0;
  for (const auto& r : timing) {
    total += r.solve_ms;
    s.max_ms = std::max(s.max_ms, r.solve_ms);
  }
  s.samples = static_cast<long>(timing.size());
  s.mean_ms = timing.empty() ? 0.0 : total / timing.size();
  return s;
}

Metrics parse_metrics(std::istream& in) {
  Metrics m;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    const std::string key = line.substr(0, eq);
    if (key.empty()) throw ConfigError(where, "empty key");
    if (!m.values.emplace(key, parse_double(line.substr(eq + 3), where)).second)
      throw ConfigError(where, "duplicate key " + key);
  }
  return m;
}

std::string compare_metrics(const Metrics& a, const Metrics& b) {
  std::set<std::string> keys;
  std::vector<std::string> only_a, only_b;
  for (const auto& [k, v] : a.values) {
    keys.insert(k);
    if (!b.has(k) && !is_hist_key(k)) only_a.push_back(k);
  }
  for (const auto& [k, v] : b.values) {
    keys.insert(k);
    if (!a.has(k) && !is_hist_key(k)) only_b.push_back(k);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "metrics files describe different runs:";
    for (const auto& k : only_a) msg += " -" + k;
    for (const auto& k : only_b) msg += " +" + k;
    throw ShapeMismatchError(msg);
  }
  std::size_t width = 3;
  for (const auto& k : keys) width = std::max(width, k.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "key" << "  " << std::setw(14) << "a"
      << "  " << std::setw(14) << "b" << "  delta\n";
  for (const auto& k : keys) {
    const double va = a.has(k) ? a.at(k) : 0.0;
    const double vb = b.has(k) ? b.at(k) : 0.0;
    out << std::setw(static_cast<int>(width)) << k << "  " << std::setw(14) << format_number(va)
        << "  " << std::setw(14) << format_number(vb) << "  " << format_number(vb - va) << "\n";
  }
  return out.str();
}

Metrics write_run(const std::string& dir, const RunOutput& run) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  const Metrics m = compute_metrics(run.ids, run.log, run.config.goal_tolerance);
  {
    auto f = open("log.csv");
    write_log(f, run.ids, run.log);
  }
  {
    auto f = open("metrics.txt");
    f << m.text();
  }
  {
    auto f = open("timing.csv");
    write_timing(f, run.timing);
  }
  {
    auto f = open("scenario.json");
    f << scenario_to_json(run.config) << "\n";
  }
  {
    // Plot-ready pairwise distance series.
    auto f = open("distances.csv");
    const int n = static_cast<int>(run.ids.size());
    f << "t";
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) f << ",d_" << run.ids[i] << "_" << run.ids[j];
    f << "\n";
    std::map<double, std::vector<double>> rows;
    std::map<int, int> index;
    for (int i = 0; i < n; ++i) index[run.ids[i]] = i;
    for (const auto& r : run.log) {
      const int i = index.at(r.agent);
      auto& row = rows[r.t];
      row.resize(static_cast<std::size_t>(n * (n - 1) / 2), kNaN);
      for (int j = i + 1; j < n; ++j) {
        const int col = i * n - i * (i + 1) / 2 + (j - i - 1);
        row[col] = r.distance[j];
      }
    }
    for (const auto& [t, row] : rows) {
      f << format_number(t);
      for (double d : row) f << ',' << format_number(d);
      f << "\n";
    }
  }
  return m;
}

bool replay_matches(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream log_in(fs::path(dir) / "log.csv");
  std::ifstream metrics_in(fs::path(dir) / "metrics.txt");
  std::ifstream scenario_in(fs::path(dir) / "scenario.json");
  if (!log_in || !metrics_in || !scenario_in)
    throw std::runtime_error("replay needs log.csv, metrics.txt and scenario.json in " + dir);
  std::stringstream ss;
  ss << scenario_in.rdbuf();
  const auto cfg = scenario_from_json(ss.str());
  std::vector<int> ids;
  const auto log = read_log(log_in, &ids);
  const Metrics recomputed = compute_metrics(ids, log, cfg.goal_tolerance);
  const Metrics stored = parse_metrics(metrics_in);
  if (recomputed.values.size() != stored.values.size()) return false;
  for (const auto& [k, v] : recomputed.values) {
    if (!stored.has(k)) return false;
    const double s = stored.at(k);
    if (std::isnan(v) != std::isnan(s)) return false;
    if (!std::isnan(v) && s != v) return false;
  }
  return true;
}

}  // namespace mavswarm
