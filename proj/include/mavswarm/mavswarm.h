#ifndef MAVSWARM_MAVSWARM_H
#define MAVSWARM_MAVSWARM_H

#include <stddef.h>
#include <stdint.h>

#if defined(MAVSWARM_BUILDING_LIBRARY)
#define MAVSWARM_API __attribute__((visibility("default")))
#else
#define MAVSWARM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mavswarm_status {
  MAVSWARM_OK = 0,
  MAVSWARM_INVALID_ARGUMENT = 1,
  MAVSWARM_CONFIG_ERROR = 2,
  MAVSWARM_UNKNOWN_SCENARIO = 3,
  MAVSWARM_IO_ERROR = 4,
  MAVSWARM_SHAPE_MISMATCH = 5,
  MAVSWARM_NOT_FOUND = 6,
  MAVSWARM_BUFFER_TOO_SMALL = 7,
  MAVSWARM_INTERNAL_ERROR = 8
} mavswarm_status;

typedef struct mavswarm_scenario mavswarm_scenario;
typedef struct mavswarm_result mavswarm_result;

/* Message of the last failed call on this thread; never NULL. */
MAVSWARM_API const char* mavswarm_last_error(void);
MAVSWARM_API const char* mavswarm_version(void);

/* Text outputs follow one convention: `needed` receives the length including
 * the terminating NUL; if `capacity` is too small nothing is written and
 * MAVSWARM_BUFFER_TOO_SMALL is returned. `buffer` may be NULL when capacity is 0. */
MAVSWARM_API mavswarm_status mavswarm_scenario_names(char* buffer, size_t capacity, size_t* needed);

/* A built-in name or a path to a JSON scenario file. */
MAVSWARM_API mavswarm_status mavswarm_scenario_load(const char* name_or_path, mavswarm_scenario** out);
MAVSWARM_API void mavswarm_scenario_free(mavswarm_scenario* scenario);

/* Dotted key path with a JSON value, e.g. ("collision.r_min", "0.5"). */
MAVSWARM_API mavswarm_status mavswarm_scenario_set(mavswarm_scenario* scenario, const char* key,
                                                   const char* value);
MAVSWARM_API mavswarm_status mavswarm_scenario_set_seed(mavswarm_scenario* scenario, uint64_t seed);
MAVSWARM_API mavswarm_status mavswarm_scenario_set_duration(mavswarm_scenario* scenario,
                                                            double seconds);
MAVSWARM_API mavswarm_status mavswarm_scenario_json(const mavswarm_scenario* scenario, char* buffer,
                                                    size_t capacity, size_t* needed);

MAVSWARM_API mavswarm_status mavswarm_run(const mavswarm_scenario* scenario, mavswarm_result** out);
MAVSWARM_API void mavswarm_result_free(mavswarm_result* result);

/* Writes log.csv, metrics.txt, distances.csv, timing.csv and scenario.json. */
MAVSWARM_API mavswarm_status mavswarm_result_write(const mavswarm_result* result, const char* dir);
MAVSWARM_API mavswarm_status mavswarm_result_metric(const mavswarm_result* result, const char* key,
                                                    double* value);
MAVSWARM_API mavswarm_status mavswarm_result_metrics_text(const mavswarm_result* result,
                                                          char* buffer, size_t capacity,
                                                          size_t* needed);
MAVSWARM_API mavswarm_status mavswarm_result_timing(const mavswarm_result* result, double* mean_ms,
                                                    double* max_ms);
/* 1 when no hard-radius violation occurred and every agent reached its goal. */
MAVSWARM_API int mavswarm_result_passed(const mavswarm_result* result);

MAVSWARM_API mavswarm_status mavswarm_compare_files(const char* metrics_a, const char* metrics_b,
                                                    char* buffer, size_t capacity, size_t* needed);
/* *matches = 1 when metrics recomputed from dir/log.csv equal dir/metrics.txt. */
MAVSWARM_API mavswarm_status mavswarm_replay_check(const char* dir, int* matches);

#ifdef __cplusplus
}
#endif

#endif
