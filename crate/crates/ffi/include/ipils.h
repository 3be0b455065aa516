/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef IPILS_H
#define IPILS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IpilsStatus {
  IPILS_STATUS_OK = 0,
  IPILS_STATUS_INVALID_ARGUMENT = 1,
  IPILS_STATUS_INVALID_STATE = 2,
  IPILS_STATUS_NOT_FOUND = 3,
  IPILS_STATUS_PARSE = 4,
  IPILS_STATUS_RESOURCE = 5,
  IPILS_STATUS_NO_ORACLE = 6,
  IPILS_STATUS_IO = 7,
  IPILS_STATUS_JSON = 8,
  IPILS_STATUS_NULL_POINTER = 9,
  IPILS_STATUS_UTF8 = 10,
  IPILS_STATUS_PANIC = 11,
} IpilsStatus;

/**
 * An exact Pareto front.
 */
typedef struct IpilsFront IpilsFront;

/**
 * A knapsack instance.
 */
typedef struct IpilsInstance IpilsInstance;

/**
 * A session service speaking the JSON request protocol.
 */
typedef struct IpilsService IpilsService;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *ipils_last_error(void);

/**
 * Library version as a static string.
 */
const char *ipils_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ipils_string_free(char *s);

/**
 * Parses an instance from text.
 *
 * # Safety
 * `text` and `name` must be NUL-terminated strings; `out` must be writable.
 */
enum IpilsStatus ipils_instance_parse(const char *text,
                                      const char *name,
                                      struct IpilsInstance **out);

/**
 * Loads an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum IpilsStatus ipils_instance_load(const char *path, struct IpilsInstance **out);

/**
 * # Safety
 * `instance` must come from this library and not have been freed.
 */
void ipils_instance_free(struct IpilsInstance *instance);

/**
 * Number of items, or 0 for null.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
size_t ipils_instance_num_items(const struct IpilsInstance *instance);

/**
 * Number of objectives, or 0 for null.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
size_t ipils_instance_num_objectives(const struct IpilsInstance *instance);

/**
 * Evaluates a selection given as `len` bytes (nonzero = selected). Writes
 * the objective values to `objectives` (room for `num_objectives` values)
 * and the total cost to `cost`. Feasibility is reported through
 * `feasible`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum IpilsStatus ipils_instance_evaluate(const struct IpilsInstance *instance,
                                         const uint8_t *selection,
                                         size_t len,
                                         int64_t *objectives,
                                         size_t num_objectives,
                                         int64_t *cost,
                                         bool *feasible);

/**
 * Computes the exact Pareto front (dynamic program for two objectives,
 * enumeration otherwise).
 *
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum IpilsStatus ipils_front_compute(const struct IpilsInstance *instance, struct IpilsFront **out);

/**
 * Parses a front file (`z1 ... zK bits` per line).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `instance` a live handle or null
 * (no witness validation); `out` writable.
 */
enum IpilsStatus ipils_front_parse(const char *text,
                                   const struct IpilsInstance *instance,
                                   struct IpilsFront **out);

/**
 * # Safety
 * `front` must come from this library and not have been freed.
 */
void ipils_front_free(struct IpilsFront *front);

/**
 * Number of Pareto-optimal outcomes, or 0 for null.
 *
 * # Safety
 * `front` must be a live handle or null.
 */
size_t ipils_front_len(const struct IpilsFront *front);

/**
 * Copies the objective vector of point `index` into `out` (room for `k`
 * values). Points are ordered by objective vector, descending.
 *
 * # Safety
 * `front` must be a live handle and `out` valid for `k` values.
 */
enum IpilsStatus ipils_front_point(const struct IpilsFront *front,
                                   size_t index,
                                   int64_t *out,
                                   size_t k);

/**
 * Serializes the front in the front file format.
 *
 * # Safety
 * `front` must be a live handle; `out` writable.
 */
enum IpilsStatus ipils_front_to_text(const struct IpilsFront *front, char **out);

/**
 * Fraction of the front inside the cone of `reference` that the `count`
 * approximation points (row-major, `k` values each) contain. With
 * `active == false` the cone is the whole space.
 *
 * # Safety
 * `approx` must hold `count * k` values and `reference` `k` values.
 */
enum IpilsStatus ipils_m_metric(const struct IpilsFront *front,
                                const int64_t *approx,
                                size_t count,
                                size_t k,
                                const int64_t *reference,
                                bool active,
                                double *out);

/**
 * Creates an empty session service.
 */
struct IpilsService *ipils_service_new(void);

/**
 * Stops all sessions and releases the service.
 *
 * # Safety
 * `service` must come from this library and not have been freed.
 */
void ipils_service_free(struct IpilsService *service);

/**
 * Handles one JSON request and stores the JSON response in `response`. The
 * response is written even when the request fails; the status then mirrors
 * the error kind in the response.
 *
 * # Safety
 * `service` must be a live handle, `request` a NUL-terminated string and
 * `response` writable.
 */
enum IpilsStatus ipils_service_request(const struct IpilsService *service,
                                       const char *request,
                                       char **response);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPILS_H */
