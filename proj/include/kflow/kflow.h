#ifndef KFLOW_H
#define KFLOW_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define KFLOW_API __attribute__((visibility("default")))
#else
#define KFLOW_API
#endif

typedef enum kflow_status {
	KFLOW_OK = 0,
	KFLOW_INVALID_INPUT = 1,
	KFLOW_OUT_OF_RANGE = 2,
	KFLOW_SINGULARITY = 3,
	KFLOW_HYPOTHESIS = 4,
	KFLOW_PRECISION = 5,
	KFLOW_RESOURCE = 6,
	KFLOW_CONSTRUCTION = 7,
	KFLOW_PARSE = 8,
	KFLOW_INTERNAL = 9,
	KFLOW_UNKNOWN_EXPERIMENT = 10
} kflow_status;

typedef struct kflow_config kflow_config;
typedef struct kflow_table kflow_table;
typedef struct kflow_alpha kflow_alpha;
typedef struct kflow_report kflow_report;

KFLOW_API const char *kflow_version(void);
KFLOW_API const char *kflow_status_name(kflow_status s);
/* message of the last failed call on this thread, "" after a success */
KFLOW_API const char *kflow_last_error(void);
/* strings returned through char ** are owned by the caller */
KFLOW_API void kflow_string_free(char *s);

KFLOW_API kflow_status kflow_config_new(kflow_config **out);
KFLOW_API kflow_status kflow_config_parse(const char *text, const char *source, kflow_config **out);
KFLOW_API kflow_status kflow_config_load(const char *path, kflow_config **out);
/* section "" is the top level */
KFLOW_API kflow_status kflow_config_set(kflow_config *cfg, const char *section, const char *key,
                                        const char *value);
KFLOW_API kflow_status kflow_config_get(const kflow_config *cfg, const char *section, const char *key,
                                        char **out);
KFLOW_API kflow_status kflow_config_dump(const kflow_config *cfg, char **out);
KFLOW_API void kflow_config_free(kflow_config *cfg);

KFLOW_API kflow_status kflow_table_build(uint64_t limit, unsigned threads, kflow_table **out);
KFLOW_API kflow_status kflow_table_load(const char *path, kflow_table **out);
/* [sieve] limit and cache from a config */
KFLOW_API kflow_status kflow_table_from_config(const kflow_config *cfg, kflow_table **out);
KFLOW_API kflow_status kflow_table_save(const kflow_table *t, const char *path);
KFLOW_API uint64_t kflow_table_limit(const kflow_table *t);
KFLOW_API kflow_status kflow_table_is_prime(const kflow_table *t, uint64_t n, int *out);
KFLOW_API kflow_status kflow_table_theta(const kflow_table *t, uint64_t x, double *out);
KFLOW_API kflow_status kflow_table_pi(const kflow_table *t, uint64_t x, uint64_t *out);
KFLOW_API void kflow_table_free(kflow_table *t);

/* [alpha] section of a config */
KFLOW_API kflow_status kflow_alpha_from_config(const kflow_config *cfg, kflow_alpha **out);
KFLOW_API size_t kflow_alpha_max_level(const kflow_alpha *a);
/* q_n as a decimal string */
KFLOW_API kflow_status kflow_alpha_denominator(const kflow_alpha *a, size_t n, char **out);
KFLOW_API kflow_status kflow_alpha_value(const kflow_alpha *a, double *out);
KFLOW_API kflow_status kflow_alpha_json(const kflow_alpha *a, char **out);
KFLOW_API void kflow_alpha_free(kflow_alpha *a);

KFLOW_API size_t kflow_experiment_count(void);
/* NULL when i is out of range; the strings live as long as the library */
KFLOW_API const char *kflow_experiment_name(size_t i);
KFLOW_API const char *kflow_experiment_summary(size_t i);

/* runs the experiment named by the top-level key "experiment" */
KFLOW_API kflow_status kflow_run(const kflow_config *cfg, kflow_report **out);
KFLOW_API int kflow_report_passed(const kflow_report *r);
KFLOW_API size_t kflow_report_verdict_count(const kflow_report *r);
/* status is one of pass, fail, trend_pass, trend_fail, info */
KFLOW_API kflow_status kflow_report_verdict(const kflow_report *r, size_t i, const char **criterion,
                                            const char **status, const char **detail);
KFLOW_API kflow_status kflow_report_json(const kflow_report *r, int with_timing, char **out);
KFLOW_API kflow_status kflow_report_csv(const kflow_report *r, char **out);
KFLOW_API double kflow_report_seconds(const kflow_report *r);
KFLOW_API void kflow_report_free(kflow_report *r);

#ifdef __cplusplus
}
#endif

#endif
