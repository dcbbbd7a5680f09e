#ifndef FIBERMAP_H
#define FIBERMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FmFloorCase {
  FM_FLOOR_CASE_NONE = 0,
  FM_FLOOR_CASE_BELOW_SMALLEST_SKU = 1,
  FM_FLOOR_CASE_SKU_GAP = 2,
} FmFloorCase;

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_UTF8 = 2,
  FM_STATUS_INVALID_INPUT = 3,
  FM_STATUS_IO = 4,
  FM_STATUS_PARSE = 5,
  FM_STATUS_DISCONNECTED = 6,
  FM_STATUS_EMPTY_STATS = 7,
  FM_STATUS_PANIC = 8,
} FmStatus;

typedef enum FmTrafficModel {
  FM_TRAFFIC_MODEL_UNIFORM = 0,
  FM_TRAFFIC_MODEL_GRAVITY = 1,
} FmTrafficModel;

/**
 * Opaque graph handle.
 */
typedef struct FmGraph FmGraph;

typedef struct FmSummary {
  double min;
  double median;
  double mean;
  double p95;
  double max;
  size_t count;
} FmSummary;

typedef struct FmProvision {
  double sku_gbps;
  uint32_t wavelength_count;
  double utilization;
  enum FmFloorCase floor;
} FmProvision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fm_last_error_message(char *buf, size_t len);

/**
 * Static, NUL-terminated version string.
 */
const char *fm_version(void);

/**
 * Loads a graph from endpoint and conduit CSV files.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be a valid pointer.
 */
enum FmStatus fm_graph_load(const char *endpoints_path,
                            const char *conduits_path,
                            bool strict,
                            struct FmGraph **out);

/**
 * Loads a graph from in-memory endpoint and conduit CSV text.
 *
 * # Safety
 * Inputs must be NUL-terminated strings; `out` must be a valid pointer.
 */
enum FmStatus fm_graph_from_csv(const char *endpoints_csv,
                                const char *conduits_csv,
                                bool strict,
                                struct FmGraph **out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from a load function and not be used afterwards.
 */
void fm_graph_free(struct FmGraph *g);

/**
 * # Safety
 * `g` must be a live handle or null; `out` must be valid.
 */
enum FmStatus fm_graph_counts(const struct FmGraph *g, size_t *endpoints, size_t *conduits);

/**
 * Shortest conduit path length between two endpoint ids. `isp` may be null
 * for no restriction. Returns `Disconnected` when no path exists.
 *
 * # Safety
 * Strings must be NUL-terminated; `g`, `out_km` and `out_conduits` must be valid.
 */
enum FmStatus fm_shortest_path_km(const struct FmGraph *g,
                                  const char *src,
                                  const char *dst,
                                  const char *isp,
                                  double *out_km,
                                  size_t *out_conduits);

/**
 * Stretch summary over all endpoint pairs. A negative `min_population`
 * disables the population filter.
 *
 * # Safety
 * `g` and `out` must be valid.
 */
enum FmStatus fm_stretch_summary(const struct FmGraph *g,
                                 enum FmTrafficModel model,
                                 int64_t min_population,
                                 struct FmSummary *out);

/**
 * Round-trip f-latency in ms of `length_km` of fiber at `speed_km_s`.
 *
 * # Safety
 * `out` must be valid.
 */
enum FmStatus fm_f_latency_rtt_ms(double length_km, double speed_km_s, double *out);

/**
 * Propagation speed in km/ms for refraction index `n`.
 *
 * # Safety
 * `out` must be valid.
 */
enum FmStatus fm_speed_from_index(double n, double *out);

/**
 * Great-circle distance in km.
 *
 * # Safety
 * `out` must be valid.
 */
enum FmStatus fm_geodesic_distance_km(double lat1,
                                      double lon1,
                                      double lat2,
                                      double lon2,
                                      double *out);

/**
 * Wavelength provisioning for `demand_gbps` with the default SKUs and band.
 *
 * # Safety
 * `out` must be valid.
 */
enum FmStatus fm_provision_link(double demand_gbps, struct FmProvision *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBERMAP_H */
