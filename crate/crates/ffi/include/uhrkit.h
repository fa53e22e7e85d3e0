#ifndef UHRKIT_H
#define UHRKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum UhrStatus {
  UHR_STATUS_OK = 0,
  UHR_STATUS_NULL_POINTER = 1,
  UHR_STATUS_INVALID_INPUT = 2,
  UHR_STATUS_IO = 3,
  UHR_STATUS_PARSE = 4,
  UHR_STATUS_SCORER_UNAVAILABLE = 5,
  UHR_STATUS_NUMERICAL = 6,
  UHR_STATUS_DECODE = 7,
  UHR_STATUS_OUT_OF_RANGE = 8,
  UHR_STATUS_PANIC = 9,
} UhrStatus;

/**
 * Seeded Beta(alpha, beta) timestep stream.
 */
typedef struct UhrBetaSampler UhrBetaSampler;

/**
 * Grayscale image with values in [0, 255].
 */
typedef struct UhrGrayImage UhrGrayImage;

/**
 * Loaded manifest records.
 */
typedef struct UhrManifest UhrManifest;

typedef struct UhrMetricConfig {
  size_t metric_long_side;
  size_t glcm_levels;
  size_t glcm_distance;
  double sobel_grad_threshold;
} UhrMetricConfig;

/**
 * Per-direction arrays are ordered 0, 45, 90, 135 degrees.
 */
typedef struct UhrMetrics {
  double laplacian_var;
  double sobel_edge_density;
  double glcm_aggregate;
  double glcm_contrast[4];
  double glcm_entropy[4];
  double glcm_correlation[4];
  double shannon_entropy;
} UhrMetrics;

typedef struct UhrSelectionConfig {
  double laplacian_min;
  double sobel_density_min;
  double top_fraction;
  double min_avg_resolution;
} UhrSelectionConfig;

typedef struct UhrRecordInfo {
  uint32_t width;
  uint32_t height;
  bool has_metrics;
  bool has_aesthetic;
  bool has_caption;
  uint32_t caption_len;
  bool in_s;
  bool in_sg;
  bool in_se;
  bool in_sa;
  bool selected;
} UhrRecordInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` and returns the
 * size needed including the nul terminator, or 0 if there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t uhr_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `data` must hold `width * height` doubles, row-major; `out` must be valid.
 */
enum UhrStatus uhr_gray_image_new(size_t width,
                                  size_t height,
                                  const double *data,
                                  struct UhrGrayImage **out);

/**
 * Builds a luma image from packed 8-bit RGB.
 *
 * # Safety
 * `rgb` must hold `3 * width * height` bytes; `out` must be valid.
 */
enum UhrStatus uhr_gray_image_from_rgb8(size_t width,
                                        size_t height,
                                        const uint8_t *rgb,
                                        struct UhrGrayImage **out);

/**
 * Decodes an image file into luma.
 *
 * # Safety
 * `path` must be a nul-terminated UTF-8 string; `out` must be valid.
 */
enum UhrStatus uhr_gray_image_load(const char *path, struct UhrGrayImage **out);

/**
 * # Safety
 * `img` must be null or a handle from this library, not yet freed.
 */
void uhr_gray_image_free(struct UhrGrayImage *img);

/**
 * # Safety
 * All pointers must be valid.
 */
enum UhrStatus uhr_gray_image_size(const struct UhrGrayImage *img, size_t *width, size_t *height);

struct UhrMetricConfig uhr_metric_config_default(void);

/**
 * Full metric vector. `cfg` may be null for defaults.
 *
 * # Safety
 * `img` and `out` must be valid; `cfg` null or valid.
 */
enum UhrStatus uhr_metrics_compute(const struct UhrGrayImage *img,
                                   const struct UhrMetricConfig *cfg,
                                   struct UhrMetrics *out);

/**
 * # Safety
 * `img` and `out` must be valid.
 */
enum UhrStatus uhr_laplacian_variance(const struct UhrGrayImage *img, double *out);

/**
 * # Safety
 * `img` and `out` must be valid.
 */
enum UhrStatus uhr_sobel_edge_density(const struct UhrGrayImage *img,
                                      double grad_threshold,
                                      double *out);

/**
 * # Safety
 * `img` and `out` must be valid.
 */
enum UhrStatus uhr_shannon_entropy(const struct UhrGrayImage *img, double *out);

/**
 * Radial weight `1 + lambda (e^(gamma r) - 1) / (e^gamma - 1)` for r in [0, 1].
 *
 * # Safety
 * `out` must be valid.
 */
enum UhrStatus uhr_soft_weight(double r, double lambda, double gamma, double *out);

/**
 * Weighted spectral loss between two `height x width` row-major fields.
 *
 * # Safety
 * `x` and `y` must hold `height * width` doubles; `out` must be valid.
 */
enum UhrStatus uhr_freq_loss(const double *x,
                             const double *y,
                             size_t height,
                             size_t width,
                             double lambda,
                             double gamma,
                             double *out);

/**
 * Gradient of [`uhr_freq_loss`] in `x`, written to `grad` (`height * width`).
 *
 * # Safety
 * `x`, `y` and `grad` must hold `height * width` doubles.
 */
enum UhrStatus uhr_freq_loss_grad(const double *x,
                                  const double *y,
                                  size_t height,
                                  size_t width,
                                  double lambda,
                                  double gamma,
                                  double *grad);

/**
 * # Safety
 * `out` must be valid.
 */
enum UhrStatus uhr_beta_pdf(double t, double alpha, double b, double *out);

/**
 * # Safety
 * `out` must be valid.
 */
enum UhrStatus uhr_beta_cdf(double t, double alpha, double b, double *out);

/**
 * # Safety
 * `out` must be valid.
 */
enum UhrStatus uhr_beta_sampler_new(double alpha,
                                    double b,
                                    uint64_t seed,
                                    struct UhrBetaSampler **out);

/**
 * Writes the next `n` samples into `buf`.
 *
 * # Safety
 * `sampler` must be a live handle; `buf` must hold `n` doubles.
 */
enum UhrStatus uhr_beta_sampler_fill(struct UhrBetaSampler *sampler, double *buf, size_t n);

/**
 * # Safety
 * `sampler` must be null or a live handle.
 */
void uhr_beta_sampler_free(struct UhrBetaSampler *sampler);

struct UhrSelectionConfig uhr_selection_config_default(void);

/**
 * # Safety
 * `path` must be a nul-terminated UTF-8 string; `out` must be valid.
 */
enum UhrStatus uhr_manifest_read(const char *path, struct UhrManifest **out);

/**
 * # Safety
 * `m` must be a live handle; `path` a nul-terminated UTF-8 string.
 */
enum UhrStatus uhr_manifest_write(const struct UhrManifest *m, const char *path);

/**
 * # Safety
 * `m` and `out` must be valid.
 */
enum UhrStatus uhr_manifest_len(const struct UhrManifest *m, size_t *out);

/**
 * # Safety
 * `m` and `out` must be valid.
 */
enum UhrStatus uhr_manifest_record(const struct UhrManifest *m,
                                   size_t index,
                                   struct UhrRecordInfo *out);

/**
 * Copies record `index`'s path into `buf`; `needed` receives the size
 * including the nul. A short buffer is left untouched.
 *
 * # Safety
 * `m` and `needed` must be valid; `buf` null or valid for `len` bytes.
 */
enum UhrStatus uhr_manifest_path(const struct UhrManifest *m,
                                 size_t index,
                                 char *buf,
                                 size_t len,
                                 size_t *needed);

/**
 * Recomputes subset membership in place. `cfg` may be null for defaults.
 *
 * # Safety
 * `m` must be a live handle; `cfg` null or valid; `selected` null or valid.
 */
enum UhrStatus uhr_manifest_select(struct UhrManifest *m,
                                   const struct UhrSelectionConfig *cfg,
                                   size_t *selected);

/**
 * # Safety
 * `m` must be null or a live handle.
 */
void uhr_manifest_free(struct UhrManifest *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UHRKIT_H */
