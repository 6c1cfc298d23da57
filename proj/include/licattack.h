/* licattack: white-box reconstruction-distortion attacks on learned image
 * compression. C API over the C++ core; every object is an opaque handle and
 * every call returns a status code. */
#ifndef LICATTACK_H_
#define LICATTACK_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  LICATTACK_OK = 0,
  LICATTACK_ERR_IO = 1,
  LICATTACK_ERR_FORMAT = 2,
  LICATTACK_ERR_VALIDATION = 3,
  LICATTACK_ERR_NUMERIC = 4,
  LICATTACK_ERR_TRAINING = 5,
  LICATTACK_ERR_INTERNAL = 6
};

const char* licattack_version(void);
const char* licattack_status_name(int status);

/* Message for the most recent failure on the calling thread; valid until the
 * next failing call from that thread. */
const char* licattack_last_error(void);

/* Frees strings returned through char** out-parameters. */
void licattack_free_string(char* s);

typedef struct licattack_image licattack_image;
typedef struct licattack_model licattack_model;
typedef struct licattack_attack_result licattack_attack_result;

/* ---------------- images ---------------- */

/* 8-bit grayscale or RGB PNG; pixels become value/255 in [0,1]. */
int licattack_image_load_png(const char* path, licattack_image** out);
int licattack_image_save_png(const licattack_image* img, const char* path);

/* `data` is channel-major: data[(c*height + y)*width + x], values in [0,1]. */
int licattack_image_create(const double* data, int channels, int height,
                           int width, licattack_image** out);
int licattack_image_shape(const licattack_image* img, int* channels,
                          int* height, int* width);
/* Copies channels*height*width doubles; fails if capacity is too small. */
int licattack_image_read(const licattack_image* img, double* out,
                         size_t capacity);
void licattack_image_free(licattack_image* img);

/* Deterministic procedural test corpus written as PNGs into `dir`. */
int licattack_write_synth_corpus(const char* dir, int count, int height,
                                 int width, uint64_t seed);

/* ---------------- metrics ---------------- */

int licattack_psnr(const licattack_image* a, const licattack_image* b,
                   double* out);
int licattack_ms_ssim(const licattack_image* a, const licattack_image* b,
                      double* out);

/* ---------------- codec ---------------- */

/* arch_id e.g. "factorized-d4n24m32c3" or "hyperprior-d4n24m32c3h16". */
int licattack_model_create(const char* arch_id, double lambda, uint64_t seed,
                           licattack_model** out);
int licattack_model_load(const char* path, licattack_model** out);
int licattack_model_save(licattack_model* model, const char* path);
int licattack_model_arch(const licattack_model* model, char* buf,
                         size_t buflen);
int licattack_model_lambda(const licattack_model* model, double* out);
int licattack_model_stride(const licattack_model* model, int* out);
void licattack_model_free(licattack_model* model);

typedef struct {
  int steps;
  uint64_t seed;
  int crop;
  int batch;
  double lr;
  double clip_norm;
  int log_every; /* 0 = silent */
} licattack_train_config;
void licattack_train_config_default(licattack_train_config* cfg);

/* Rate-distortion training on the PNGs under data_dir. The before/after
 * evaluation MSEs are optional out-parameters. */
int licattack_model_train(licattack_model* model, const char* data_dir,
                          const licattack_train_config* cfg,
                          double* initial_mse, double* final_mse);

/* quantizer: "hard", "cubic", "ste" or "noise". Output is clipped to [0,1]. */
int licattack_model_reconstruct(const licattack_model* model,
                                const licattack_image* img,
                                const char* quantizer, uint64_t noise_seed,
                                licattack_image** out);

/* ---------------- attack ---------------- */

typedef struct {
  double eps; /* L-inf budget on the 0..255 scale */
  double eta; /* imperceptibility-constraint weight */
  int steps;
  double alpha;        /* normalized step size; <= 0 picks 2.5*(eps/255)/steps */
  int ic_enabled;      /* nonzero enables the DCT-band constraint */
  const char* ic_band; /* "low" or "high" */
  double ic_fraction;  /* portion of DCT coefficients in the protected band */
  const char* quantizer; /* surrogate during the attack: "cubic","ste","noise" */
  const char* init;      /* "zero" or "random" */
  uint64_t seed;
  int best_tracking; /* nonzero returns the best-loss iterate */
} licattack_attack_config;
void licattack_attack_config_default(licattack_attack_config* cfg);

int licattack_attack_run(const licattack_model* model,
                         const licattack_image* img,
                         const licattack_attack_config* cfg,
                         licattack_attack_result** out);

/* which: "ae" (clipped adversarial example), "ae_8bit", "recon_ae",
 * "delta_vis". The returned image is a copy owned by the caller. */
int licattack_attack_result_image(const licattack_attack_result* res,
                                  const char* which, licattack_image** out);

/* Loss trace: `capacity` is the element count of each of the three arrays
 * (any may be NULL). Returns the trace length via trace_len. */
int licattack_attack_result_trace(const licattack_attack_result* res,
                                  double* total, double* distortion,
                                  double* ic, int capacity);
int licattack_attack_result_trace_len(const licattack_attack_result* res,
                                      int* out);

/* Metrics and bookkeeping as a JSON document (free with
 * licattack_free_string). */
int licattack_attack_result_summary_json(const licattack_attack_result* res,
                                         char** out_json);
void licattack_attack_result_free(licattack_attack_result* res);

/* ---------------- experiments ---------------- */

/* config_json is the experiment config document (same format the CLI
 * accepts). Runs or resumes the grid under out_dir and returns the report
 * JSON. */
int licattack_experiment_run(const char* config_json, const char* out_dir,
                             char** report_json);

/* Builds the with/without-IC imperceptibility table from a report document.
 * Either out-parameter may be NULL. */
int licattack_compare_ic(const char* report_json, char** table_json,
                         char** table_markdown);

/* Contact sheets from a finished experiment directory. skipped_json (optional)
 * receives a JSON array of artifacts that were missing. */
int licattack_emit_figures(const char* report_dir, const char* out_dir,
                           char** skipped_json);

#ifdef __cplusplus
}
#endif

#endif /* LICATTACK_H_ */
