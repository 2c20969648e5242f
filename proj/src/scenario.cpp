#include "mavswarm/scenario.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mavswarm/errors.hpp"

namespace mavswarm {

using nlohmann::ordered_json;

namespace {

// Reads typed fields from a JSON object, tracking the dotted path for errors
// and rejecting keys the schema does not know.
class Reader {
 public:
  Reader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown field");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const ordered_json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
    }
  }

  void integer(const std::string& key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const auto* v = find(key)) out = read_vector<N>(*v, at(key));
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> read_vector(const ordered_json& v, const std::string& path) {
    if (!v.is_array() || v.size() != N)
      throw ConfigError(path, "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) throw ConfigError(path + "." + std::to_string(i), "expected a number");
      out(i) = v[i].get<double>();
    }
    return out;
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <int N>
ordered_json to_array(const Eigen::Matrix<double, N, 1>& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < N; ++i) a.push_back(v(i));
  return a;
}

ordered_json model_json(const ModelParams& m) {
  return {{"mass", m.mass},         {"gravity", m.gravity},       {"drag", m.drag},
          {"roll_gain", m.roll_gain}, {"pitch_gain", m.pitch_gain}, {"roll_tau", m.roll_tau},
          {"pitch_tau", m.pitch_tau}};
}

void read_model(const ordered_json& j, const std::string& path, ModelParams& m) {
  Reader r(j, path);
  r.number("mass", m.mass);
  r.number("gravity", m.gravity);
  r.number("drag", m.drag);
  r.number("roll_gain", m.roll_gain);
  r.number("pitch_gain", m.pitch_gain);
  r.number("roll_tau", m.roll_tau);
  r.number("pitch_tau", m.pitch_tau);
  r.done();
}

ordered_json to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["control_rate"] = c.control_rate;
  j["plant_substeps"] = c.plant_substeps;
  j["mismatch"] = c.mismatch;
  j["compensate_delay"] = c.compensate_delay;
  j["goal_tolerance"] = c.goal_tolerance;
  j["network"] = {{"delay", c.network.delay}, {"jitter", c.network.jitter}, {"drop", c.network.drop}};
  const auto& cp = c.collision;
  j["collision"] = {{"r_min", cp.r_min},
                    {"r_th", cp.r_th},
                    {"weight", cp.weight},
                    {"kappa", cp.kappa},
                    {"velocity_threshold", cp.velocity_threshold},
                    {"process_noise", cp.process_noise}};
  const StateVec q = c.ocp.state_weight.diagonal();
  const InputVec r = c.ocp.input_weight.diagonal();
  const StateVec qt = c.ocp.terminal_weight.diagonal();
  j["ocp"] = {{"horizon", c.ocp.horizon},
              {"intervals", c.ocp.intervals},
              {"state_weight", to_array<kStateDim>(q)},
              {"input_weight", to_array<kInputDim>(r)},
              {"terminal_weight", to_array<kStateDim>(qt)},
              {"input_lower", to_array<kInputDim>(c.ocp.bounds.lower)},
              {"input_upper", to_array<kInputDim>(c.ocp.bounds.upper)}};
  j["observer"] = {{"enabled", c.observer.enabled},
                   {"process_noise", c.observer.process_noise},
                   {"measurement_variance", c.observer.measurement_variance},
                   {"initial_variance", c.observer.initial_variance},
                   {"initial_velocity_variance", c.observer.initial_velocity_variance}};
  j["sqp"] = {{"slack_penalty_factor", c.sqp.slack_penalty_factor},
              {"slack_curvature", c.sqp.slack_curvature},
              {"regularization", c.sqp.regularization},
              {"constraint_margin", c.sqp.constraint_margin},
              {"max_halvings", c.sqp.max_halvings}};
  ordered_json agents = ordered_json::array();
  for (const auto& a : c.agents) {
    ordered_json wp = ordered_json::array();
    for (const auto& w : a.waypoints) wp.push_back(to_array<3>(w));
    agents.push_back({{"id", a.id},
                      {"rank", a.rank},
                      {"waypoints", wp},
                      {"durations", a.durations},
                      {"reference_start", a.reference_start},
                      {"yaw", a.yaw},
                      {"wind", to_array<3>(a.wind)},
                      {"wind_onset", a.wind_onset},
                      {"clock_skew", a.clock_skew},
                      {"sigma_position", a.sigma_position},
                      {"sigma_velocity", a.sigma_velocity},
                      {"sigma_attitude", a.sigma_attitude},
                      {"model", model_json(a.model)}});
  }
  j["agents"] = agents;
  return j;
}

AgentConfig read_agent(const ordered_json& j, const std::string& path) {
  AgentConfig a;
  Reader r(j, path);
  r.integer("id", a.id);
  r.integer("rank", a.rank);
  if (const auto* wp = r.find("waypoints")) {
    if (!wp->is_array() || wp->empty())
      throw ConfigError(r.at("waypoints"), "expected a non-empty array of points");
    for (std::size_t i = 0; i < wp->size(); ++i)
      a.waypoints.push_back(Reader::read_vector<3>((*wp)[i], r.at("waypoints") + "." + std::to_string(i)));
  } else {
    throw ConfigError(r.at("waypoints"), "required");
  }
  if (const auto* d = r.find("durations")) {
    if (!d->is_array()) throw ConfigError(r.at("durations"), "expected an array of numbers");
    for (std::size_t i = 0; i < d->size(); ++i) {
      if (!(*d)[i].is_number())
        throw ConfigError(r.at("durations") + "." + std::to_string(i), "expected a number");
      a.durations.push_back((*d)[i].get<double>());
    }
  }
  r.number("reference_start", a.reference_start);
  r.number("yaw", a.yaw);
  r.vector<3>("wind", a.wind);
  r.number("wind_onset", a.wind_onset);
  r.number("clock_skew", a.clock_skew);
  r.number("sigma_position", a.sigma_position);
  r.number("sigma_velocity", a.sigma_velocity);
  r.number("sigma_attitude", a.sigma_attitude);
  if (const auto* m = r.find("model")) read_model(*m, r.at("model"), a.model);
  r.done();
  return a;
}

ScenarioConfig from_json(const ordered_json& j) {
  ScenarioConfig c;
  Reader r(j, "");
  r.string("name", c.name);
  if (const auto* s = r.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  } else {
    throw ConfigError("seed", "required");
  }
  r.number("duration", c.duration);
  r.number("control_rate", c.control_rate);
  r.integer("plant_substeps", c.plant_substeps);
  r.number("mismatch", c.mismatch);
  r.boolean("compensate_delay", c.compensate_delay);
  r.number("goal_tolerance", c.goal_tolerance);
  if (const auto* n = r.find("network")) {
    Reader rn(*n, "network");
    rn.number("delay", c.network.delay);
    rn.number("jitter", c.network.jitter);
    rn.number("drop", c.network.drop);
    rn.done();
  }
  if (const auto* col = r.find("collision")) {
    Reader rc(*col, "collision");
    rc.number("r_min", c.collision.r_min);
    rc.number("r_th", c.collision.r_th);
    rc.number("weight", c.collision.weight);
    rc.number("kappa", c.collision.kappa);
    rc.number("velocity_threshold", c.collision.velocity_threshold);
    rc.number("process_noise", c.collision.process_noise);
    rc.done();
  }
  if (const auto* o = r.find("ocp")) {
    Reader ro(*o, "ocp");
    ro.number("horizon", c.ocp.horizon);
    ro.integer("intervals", c.ocp.intervals);
    StateVec q = c.ocp.state_weight.diagonal(), qt = c.ocp.terminal_weight.diagonal();
    InputVec rw = c.ocp.input_weight.diagonal();
    ro.vector<kStateDim>("state_weight", q);
    ro.vector<kInputDim>("input_weight", rw);
    // A terminal weight left out follows the state weight at the default scale.
    if (ro.has("state_weight") && !ro.has("terminal_weight")) qt = 10.0 * q;
    ro.vector<kStateDim>("terminal_weight", qt);
    ro.vector<kInputDim>("input_lower", c.ocp.bounds.lower);
    ro.vector<kInputDim>("input_upper", c.ocp.bounds.upper);
    c.ocp.state_weight = q.asDiagonal();
    c.ocp.input_weight = rw.asDiagonal();
    c.ocp.terminal_weight = qt.asDiagonal();
    ro.done();
  }
  if (const auto* o = r.find("observer")) {
    Reader ro(*o, "observer");
    ro.boolean("enabled", c.observer.enabled);
    ro.number("process_noise", c.observer.process_noise);
    ro.number("measurement_variance", c.observer.measurement_variance);
    ro.number("initial_variance", c.observer.initial_variance);
    ro.number("initial_velocity_variance", c.observer.initial_velocity_variance);
    ro.done();
  }
  if (const auto* s = r.find("sqp")) {
    Reader rs(*s, "sqp");
    rs.number("slack_penalty_factor", c.sqp.slack_penalty_factor);
    rs.number("slack_curvature", c.sqp.slack_curvature);
    rs.number("regularization", c.sqp.regularization);
    rs.number("constraint_margin", c.sqp.constraint_margin);
    rs.integer("max_halvings", c.sqp.max_halvings);
    rs.done();
  }
  if (const auto* a = r.find("agents")) {
    if (!a->is_array()) throw ConfigError("agents", "expected an array");
    for (std::size_t i = 0; i < a->size(); ++i)
      c.agents.push_back(read_agent((*a)[i], "agents." + std::to_string(i)));
  }
  r.done();
  c.validate();
  return c;
}

void set_path(ordered_json& root, const std::string& key, const ordered_json& value) {
  if (key.empty()) throw ConfigError("--set", "empty key");
  ordered_json* node = &root;
  std::string walked;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (p.empty()) throw ConfigError(key, "empty path component");
    walked = walked.empty() ? p : walked + "." + p;
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(p, &used);
        if (used != p.size()) throw std::invalid_argument(p);
      } catch (const std::exception&) {
        throw ConfigError(walked, "expected an array index");
      }
      if (idx >= node->size()) throw ConfigError(walked, "index out of range");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!last && !node->contains(p)) throw ConfigError(walked, "unknown field");
      node = &(*node)[p];
    } else {
      throw ConfigError(walked, "cannot descend into a scalar");
    }
    if (last) *node = value;
  }
}

ordered_json parse_text(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    const auto pos = msg.find("syntax error");
    if (pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), msg);
  }
}

AgentConfig make_agent(int id, int rank, const Vec3& start, const Vec3& goal, double duration,
                       double start_time) {
  AgentConfig a;
  a.id = id;
  a.rank = rank;
  a.waypoints = {start};
  if ((goal - start).norm() > 0) {
    a.waypoints.push_back(goal);
    a.durations = {duration};
  }
  a.reference_start = start_time;
  return a;
}

}  // namespace

ReferenceTrajectory AgentConfig::reference() const {
  if (waypoints.size() == 1) return ReferenceTrajectory::hover(waypoints.front(), yaw, model.gravity);
  return ReferenceTrajectory::min_jerk(waypoints, durations, reference_start, yaw, model.gravity);
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const std::string& where, const std::string& what) {
    if (!ok) throw ConfigError(where, what);
  };
  check(duration > 0, "duration", "must be positive");
  check(control_rate > 0, "control_rate", "must be positive");
  check(plant_substeps >= 1, "plant_substeps", "must be at least 1");
  check(mismatch >= 0 && mismatch < 1, "mismatch", "must lie in [0, 1)");
  check(goal_tolerance > 0, "goal_tolerance", "must be positive");
  check(network.delay >= 0, "network.delay", "must be non-negative");
  check(network.jitter >= 0, "network.jitter", "must be non-negative");
  check(network.drop >= 0 && network.drop <= 1, "network.drop", "must lie in [0, 1]");
  check(!agents.empty(), "agents", "at least one agent is required");
  try {
    collision.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("collision", e.what());
  }
  try {
    ocp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("ocp", e.what());
  }
  check(observer.process_noise >= 0, "observer.process_noise", "must be non-negative");
  check(observer.measurement_variance > 0, "observer.measurement_variance", "must be positive");
  check(observer.initial_variance > 0, "observer.initial_variance", "must be positive");
  check(observer.initial_velocity_variance > 0, "observer.initial_velocity_variance",
        "must be positive");
  check(sqp.constraint_margin >= 0, "sqp.constraint_margin", "must be non-negative");
  check(sqp.slack_penalty_factor > 0, "sqp.slack_penalty_factor", "must be positive");
  check(sqp.slack_curvature > 0, "sqp.slack_curvature", "must be positive");
  check(sqp.regularization >= 0, "sqp.regularization", "must be non-negative");
  check(sqp.max_halvings >= 0, "sqp.max_halvings", "must be non-negative");

  std::set<int> ids;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string at = "agents." + std::to_string(i);
    check(ids.insert(a.id).second, at + ".id", "duplicate agent id " + std::to_string(a.id));
    check(!a.waypoints.empty(), at + ".waypoints", "required");
    check(a.durations.size() + 1 == a.waypoints.size(), at + ".durations",
          "needs one entry per waypoint segment");
    for (std::size_t k = 0; k < a.durations.size(); ++k)
      check(a.durations[k] > 0, at + ".durations." + std::to_string(k), "must be positive");
    check(a.sigma_position >= 0, at + ".sigma_position", "must be non-negative");
    check(a.sigma_velocity >= 0, at + ".sigma_velocity", "must be non-negative");
    check(a.sigma_attitude >= 0, at + ".sigma_attitude", "must be non-negative");
    try {
      a.model.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ".model", e.what());
    }
  }
}

std::vector<std::string> scenario_names() {
  return {"cross2", "hover", "hover_intruder", "swap6_priority", "swap6_reciprocal"};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.collision.weight = 300.0;  // clears the threshold radius against the default tracking weights
  const double z = 1.5;
  if (name == "cross2") {
    // 12 m legs; a rest-to-rest quintic peaks at 1.875 L / D = 2 m/s.
    c.duration = 16.0;
    c.agents.push_back(make_agent(0, 0, Vec3(-6, 0, z), Vec3(6, 0, z), 11.25, 1.0));
    c.agents.push_back(make_agent(1, 0, Vec3(0, -6, z), Vec3(0, 6, z), 11.25, 1.0));
  } else if (name == "hover") {
    c.duration = 10.0;
    c.agents.push_back(make_agent(0, 0, Vec3(0, 0, z), Vec3(0, 0, z), 0.0, 0.0));
  } else if (name == "hover_intruder") {
    c.duration = 20.0;
    c.agents.push_back(make_agent(0, 1, Vec3(0, 0, z), Vec3(0, 0, z), 0.0, 0.0));
    c.agents.push_back(make_agent(1, 0, Vec3(-6, 0, z), Vec3(6, 0, z), 15.0, 1.0));
  } else if (name == "swap6_reciprocal" || name == "swap6_priority") {
    c.duration = 20.0;
    const bool ranked = name == "swap6_priority";
    const double radius = 4.0;
    // Six-way encounters need a much stiffer logistic. With Q_c = 300 the agents drift
    // into the hard radius, and at intermediate weights a shared vertical escape can run away.
    c.collision.weight = 1e4;
    for (int i = 0; i < 6; ++i) {
      const double a = 2.0 * M_PI * i / 6.0;
      const Vec3 start(radius * std::cos(a), radius * std::sin(a), z);
      const Vec3 goal(-start.x(), -start.y(), z);
      c.agents.push_back(make_agent(i, ranked ? i : 0, start, goal, 8.0, 1.0));
    }
  } else {
    throw UnknownScenarioError("unknown scenario '" + name + "'");
  }
  c.validate();
  return c;
}

std::string scenario_to_json(const ScenarioConfig& config) { return to_json(config).dump(2); }

ScenarioConfig scenario_from_json(const std::string& text) { return from_json(parse_text(text)); }

ScenarioConfig apply_overrides(const ScenarioConfig& config,
                               const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (overrides.empty()) return config;
  ordered_json j = to_json(config);
  for (const auto& [key, raw] : overrides) {
    ordered_json value;
    try {
      value = ordered_json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      value = raw;  // bare word, e.g. a name
    }
    // Bare collision field names (r_min, r_th, ...) are accepted as shorthand.
    const bool shorthand = key.find('.') == std::string::npos && !j.contains(key) &&
                           j["collision"].contains(key);
    set_path(j, shorthand ? "collision." + key : key, value);
  }
  return from_json(j);
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
  const auto names = scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return builtin_scenario(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw UnknownScenarioError("no built-in scenario or readable file named '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return scenario_from_json(ss.str());
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const std::string detail = e.where().empty() ? what : what.substr(e.where().size() + 2);
    throw ConfigError(name_or_path + ": " + e.where(), detail);
  }
}

}  // namespace mavswarm
