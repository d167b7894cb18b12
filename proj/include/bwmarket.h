/* C interface to the bandwidth-market library. All functions return a
 * bwm_status; every non-trivial result comes back through out-parameters.
 * Strings returned through char** are heap-allocated and must be released
 * with bwm_string_free. On any failure bwm_last_error() carries a message
 * for the calling thread. */
#ifndef BWMARKET_H
#define BWMARKET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BWM_API __declspec(dllexport)
#else
#define BWM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bwm_status {
    BWM_OK = 0,
    BWM_ERR_INVALID_ARGUMENT = 1, /* malformed JSON, bad config, null pointer */
    BWM_ERR_DOMAIN = 2,           /* math precondition violated */
    BWM_ERR_NUMERIC = 3,          /* solver breakdown, lost bracket, underflow */
    BWM_ERR_INFEASIBLE = 4,       /* equilibrium needs a negative allocation */
    BWM_ERR_UNKNOWN = 5
} bwm_status;

typedef struct bwm_scenario bwm_scenario; /* simulation configuration */
typedef struct bwm_report bwm_report;     /* finished simulation run */

BWM_API const char* bwm_version(void);
BWM_API const char* bwm_status_name(bwm_status status);
BWM_API const char* bwm_last_error(void);
BWM_API void bwm_string_free(char* s);

/* --- scenario configuration ------------------------------------------- */

BWM_API bwm_status bwm_scenario_default(bwm_scenario** out);
BWM_API bwm_status bwm_scenario_parse(const char* json, bwm_scenario** out);
/* Overrides one numeric field by its JSON key (e.g. "seed", "epochs",
 * "initial_budget"); the patched config is re-validated. */
BWM_API bwm_status bwm_scenario_override_u64(bwm_scenario* sc, const char* key, uint64_t value);
BWM_API bwm_status bwm_scenario_override_f64(bwm_scenario* sc, const char* key, double value);
BWM_API bwm_status bwm_scenario_json(const bwm_scenario* sc, char** out);
BWM_API void bwm_scenario_free(bwm_scenario* sc);

/* --- epoch simulation --------------------------------------------------- */

/* baseline != 0 restricts every UE to its default bandwidth. */
BWM_API bwm_status bwm_run_simulation(const bwm_scenario* sc, int baseline, bwm_report** out);
BWM_API bwm_status bwm_report_csv(const bwm_report* rep, char** out);
BWM_API bwm_status bwm_report_summary_json(const bwm_report* rep, char** out);
BWM_API bwm_status bwm_report_cumulative_data(const bwm_report* rep, double* out);
BWM_API void bwm_report_free(bwm_report* rep);

/* --- one-shot market clearing ------------------------------------------ */

/* Clearing price from explicit bids and seller conservation values.
 * When every bid is zero no market is held: *market_held = 0 and the
 * outputs are zeroed. purchases (length n_bids) and supplies (length
 * n_conservations) may be NULL. */
BWM_API bwm_status bwm_market_clear(const double* bids, size_t n_bids,
                                    const double* conservations, size_t n_conservations,
                                    double* price, int* market_held,
                                    double* purchases, double* supplies);

/* --- budget sweep -------------------------------------------------------- */

/* One market + one paired baseline run per (budget, epochs, seed) cell.
 * rows_csv gets per-cell rows, medians_csv per-sweep medians. */
BWM_API bwm_status bwm_figure1(const bwm_scenario* base,
                               const double* budgets, size_t n_budgets,
                               const uint64_t* epoch_counts, size_t n_epoch_counts,
                               const uint64_t* seeds, size_t n_seeds,
                               int jobs, char** rows_csv, char** medians_csv);

/* --- proportional share with penalty ------------------------------------ */

/* instance_json: { "R":, "se": [], "q0": []?, "delta":?, "tol":?, "max_iters":? }
 * result_json carries the final penalties, allocation, bids, and the
 * water-filling reference. trace_csv (optional, pass NULL to skip) gets
 * iter,q...,r...,X,welfare rows. */
BWM_API bwm_status bwm_penalty_auction(const char* instance_json,
                                       char** result_json, char** trace_csv);

/* --- transcribed iterative auction -------------------------------------- */

/* instance_json additionally accepts "r0": [[...], ...] with explicit initial
 * allocations; extra_inits more are drawn from `seed` (positive, summing to
 * R). At least two initial allocations must result. */
BWM_API bwm_status bwm_flawed_demo(const char* instance_json, int extra_inits,
                                   uint64_t seed, char** report_json);

/* CSV trajectory of one sample, indexed over the same list (explicit r0
 * entries first, then the generated ones). */
BWM_API bwm_status bwm_flawed_trace(const char* instance_json, int extra_inits,
                                    uint64_t seed, size_t sample_index, char** trace_csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BWMARKET_H */
