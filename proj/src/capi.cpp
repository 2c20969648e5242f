#include "mavswarm/mavswarm.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

#include "mavswarm/errors.hpp"
#include "mavswarm/metrics.hpp"

struct mavswarm_scenario {
  mavswarm::ScenarioConfig config;
};

struct mavswarm_result {
  mavswarm::RunOutput run;
  mavswarm::Metrics metrics;
};

namespace {

thread_local std::string g_last_error;

mavswarm_status fail(mavswarm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions from the core onto status codes.
template <typename F>
mavswarm_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const mavswarm::ConfigError& e) {
    return fail(MAVSWARM_CONFIG_ERROR, e.what());
  } catch (const mavswarm::UnknownScenarioError& e) {
    return fail(MAVSWARM_UNKNOWN_SCENARIO, e.what());
  } catch (const mavswarm::ShapeMismatchError& e) {
    return fail(MAVSWARM_SHAPE_MISMATCH, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MAVSWARM_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(MAVSWARM_NOT_FOUND, e.what());
  } catch (const std::exception& e) {
    return fail(MAVSWARM_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(MAVSWARM_INTERNAL_ERROR, "unknown error");
  }
}

mavswarm_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (capacity < text.size() + 1) {
    if (capacity == 0 && needed) return MAVSWARM_BUFFER_TOO_SMALL;
    return fail(MAVSWARM_BUFFER_TOO_SMALL, "buffer too small");
  }
  if (!buffer) return fail(MAVSWARM_INVALID_ARGUMENT, "null buffer");
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return MAVSWARM_OK;
}

}  // namespace

extern "C" {

const char* mavswarm_last_error(void) { return g_last_error.c_str(); }

const char* mavswarm_version(void) { return "0.1.0"; }

mavswarm_status mavswarm_scenario_names(char* buffer, size_t capacity, size_t* needed) {
  return guarded([&] {
    std::string text;
    for (const auto& n : mavswarm::scenario_names()) text += n + "\n";
    return copy_out(text, buffer, capacity, needed);
  });
}

mavswarm_status mavswarm_scenario_load(const char* name_or_path, mavswarm_scenario** out) {
  if (!name_or_path || !out) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<mavswarm_scenario>();
    s->config = mavswarm::load_scenario(name_or_path);
    *out = s.release();
    return MAVSWARM_OK;
  });
}

void mavswarm_scenario_free(mavswarm_scenario* scenario) { delete scenario; }

mavswarm_status mavswarm_scenario_set(mavswarm_scenario* scenario, const char* key,
                                      const char* value) {
  if (!scenario || !key || !value) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    scenario->config = mavswarm::apply_overrides(scenario->config, {{key, value}});
    return MAVSWARM_OK;
  });
}

mavswarm_status mavswarm_scenario_set_seed(mavswarm_scenario* scenario, uint64_t seed) {
  if (!scenario) return fail(MAVSWARM_INVALID_ARGUMENT, "null scenario");
  scenario->config.seed = seed;
  return MAVSWARM_OK;
}

mavswarm_status mavswarm_scenario_set_duration(mavswarm_scenario* scenario, double seconds) {
  if (!scenario) return fail(MAVSWARM_INVALID_ARGUMENT, "null scenario");
  if (!(seconds > 0)) return fail(MAVSWARM_CONFIG_ERROR, "duration: must be positive");
  scenario->config.duration = seconds;
  return MAVSWARM_OK;
}

mavswarm_status mavswarm_scenario_json(const mavswarm_scenario* scenario, char* buffer,
                                       size_t capacity, size_t* needed) {
  if (!scenario) return fail(MAVSWARM_INVALID_ARGUMENT, "null scenario");
  return guarded([&] {
    return copy_out(mavswarm::scenario_to_json(scenario->config), buffer, capacity, needed);
  });
}

mavswarm_status mavswarm_run(const mavswarm_scenario* scenario, mavswarm_result** out) {
  if (!scenario || !out) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<mavswarm_result>();
    r->run = mavswarm::run_scenario(scenario->config);
    r->metrics =
        mavswarm::compute_metrics(r->run.ids, r->run.log, r->run.config.goal_tolerance);
    *out = r.release();
    return MAVSWARM_OK;
  });
}

void mavswarm_result_free(mavswarm_result* result) { delete result; }

mavswarm_status mavswarm_result_write(const mavswarm_result* result, const char* dir) {
  if (!result || !dir) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  const mavswarm_status s = guarded([&] {
    mavswarm::write_run(dir, result->run);
    return MAVSWARM_OK;
  });
  return s == MAVSWARM_INTERNAL_ERROR ? fail(MAVSWARM_IO_ERROR, g_last_error) : s;
}

mavswarm_status mavswarm_result_metric(const mavswarm_result* result, const char* key,
                                       double* value) {
  if (!result || !key || !value) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *value = result->metrics.at(key);
    return MAVSWARM_OK;
  });
}

mavswarm_status mavswarm_result_metrics_text(const mavswarm_result* result, char* buffer,
                                             size_t capacity, size_t* needed) {
  if (!result) return fail(MAVSWARM_INVALID_ARGUMENT, "null result");
  return guarded([&] { return copy_out(result->metrics.text(), buffer, capacity, needed); });
}

mavswarm_status mavswarm_result_timing(const mavswarm_result* result, double* mean_ms,
                                       double* max_ms) {
  if (!result || !mean_ms || !max_ms) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  const auto t = mavswarm::summarize_timing(result->run.timing);
  *mean_ms = t.mean_ms;
  *max_ms = t.max_ms;
  return MAVSWARM_OK;
}

int mavswarm_result_passed(const mavswarm_result* result) {
  if (!result) return 0;
  return result->metrics.at("run.passed") == 1.0 ? 1 : 0;
}

mavswarm_status mavswarm_compare_files(const char* metrics_a, const char* metrics_b, char* buffer,
                                       size_t capacity, size_t* needed) {
  if (!metrics_a || !metrics_b) return fail(MAVSWARM_INVALID_ARGUMENT, "null path");
  mavswarm::Metrics a, b;
  const mavswarm_status io = guarded([&] {
    std::ifstream fa(metrics_a), fb(metrics_b);
    if (!fa) throw std::runtime_error(std::string("cannot read ") + metrics_a);
    if (!fb) throw std::runtime_error(std::string("cannot read ") + metrics_b);
    try {
      a = mavswarm::parse_metrics(fa);
    } catch (const mavswarm::ConfigError& e) {
      throw mavswarm::ConfigError(std::string(metrics_a) + " " + e.where(), e.what());
    }
    try {
      b = mavswarm::parse_metrics(fb);
    } catch (const mavswarm::ConfigError& e) {
      throw mavswarm::ConfigError(std::string(metrics_b) + " " + e.where(), e.what());
    }
    return MAVSWARM_OK;
  });
  if (io == MAVSWARM_INTERNAL_ERROR) return fail(MAVSWARM_IO_ERROR, g_last_error);
  if (io != MAVSWARM_OK) return io;
  return guarded([&] { return copy_out(mavswarm::compare_metrics(a, b), buffer, capacity, needed); });
}

mavswarm_status mavswarm_replay_check(const char* dir, int* matches) {
  if (!dir || !matches) return fail(MAVSWARM_INVALID_ARGUMENT, "null argument");
  const mavswarm_status s = guarded([&] {
    *matches = mavswarm::replay_matches(dir) ? 1 : 0;
    return MAVSWARM_OK;
  });
  return s == MAVSWARM_INTERNAL_ERROR ? fail(MAVSWARM_IO_ERROR, g_last_error) : s;
}

}  // extern "C"
