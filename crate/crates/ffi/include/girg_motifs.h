#ifndef GIRG_MOTIFS_H
#define GIRG_MOTIFS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  GM_OK = 0,
  GM_INVALID_ARGUMENT = 1,
  GM_PARSE_ERROR = 2,
  GM_SOLVE_ERROR = 3,
  GM_BUDGET_EXCEEDED = 4,
  GM_PANIC = 5,
} GmStatus;

/**
 * Opaque sampled-instance handle.
 */
typedef struct GmGraph GmGraph;

/**
 * Opaque pattern handle.
 */
typedef struct GmPattern GmPattern;

/**
 * Opaque solve-report handle.
 */
typedef struct GmReport GmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gm_last_error_message(void);

/**
 * Parses the `k=<int>; edges=<i>-<j>,...` grammar into a pattern handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
GmStatus gm_pattern_parse(const char *text, GmPattern **out);

/**
 * # Safety
 * `p` must come from `gm_pattern_parse` and not be freed twice.
 */
void gm_pattern_free(GmPattern *p);

/**
 * # Safety
 * `p` must be a live pattern handle.
 */
uintptr_t gm_pattern_k(const GmPattern *p);

/**
 * # Safety
 * `p` must be a live pattern handle.
 */
uintptr_t gm_pattern_edge_count(const GmPattern *p);

/**
 * Samples one instance. `gamma` may be +infinity for the threshold kernel.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
GmStatus gm_girg_sample(uintptr_t n,
                        uintptr_t d,
                        double tau,
                        double gamma,
                        uint64_t seed,
                        GmGraph **out);

/**
 * # Safety
 * `g` must come from `gm_girg_sample` and not be freed twice.
 */
void gm_girg_free(GmGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
uint64_t gm_girg_num_edges(const GmGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
double gm_girg_mean_degree(const GmGraph *g);

/**
 * Ordered occurrences of the pattern in the sampled graph.
 * `induced` zero counts general containment, nonzero exact equality.
 *
 * # Safety
 * `g` and `p` must be live handles; `out_count` a valid pointer.
 */
GmStatus gm_count_ordered(const GmGraph *g,
                          const GmPattern *p,
                          int32_t induced,
                          uint64_t *out_count);

/**
 * Solves the dominant-structure program and certifies uniqueness.
 *
 * # Safety
 * `p` must be a live pattern handle and `out` a valid pointer.
 */
GmStatus gm_solve(const GmPattern *p,
                  double tau,
                  double gamma,
                  uintptr_t d,
                  int32_t induced,
                  GmReport **out);

/**
 * # Safety
 * `r` must come from `gm_solve` and not be freed twice.
 */
void gm_report_free(GmReport *r);

/**
 * # Safety
 * `r` must be a live report handle.
 */
double gm_report_f_star(const GmReport *r);

/**
 * 0 unique, 1 non-unique, 2 tolerance-ambiguous, -1 on a null handle.
 *
 * # Safety
 * `r` must be a live report handle.
 */
int32_t gm_report_uniqueness(const GmReport *r);

/**
 * Weight exponent of vertex `i` (1-based); NaN when out of range.
 *
 * # Safety
 * `r` must be a live report handle.
 */
double gm_report_alpha(const GmReport *r, uintptr_t i);

/**
 * Distance exponent of the pair `{i, j}` (1-based); NaN when out of range.
 *
 * # Safety
 * `r` must be a live report handle.
 */
double gm_report_beta(const GmReport *r, uintptr_t i, uintptr_t j);

/**
 * Full report as a JSON string; free it with `gm_string_free`.
 *
 * # Safety
 * `r` must be a live report handle.
 */
char *gm_report_json(const GmReport *r);

/**
 * # Safety
 * `s` must come from `gm_report_json` and not be freed twice.
 */
void gm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIRG_MOTIFS_H */
