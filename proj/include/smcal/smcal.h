#ifndef SMCAL_SMCAL_H
#define SMCAL_SMCAL_H

/* C interface to the system-matrix calibration library. Objects are opaque
 * handles released with the matching *_free function. Every call returns a
 * status; on failure smcal_last_error() describes the problem (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SMCAL_API __declspec(dllexport)
#else
#define SMCAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smcal_status {
  SMCAL_OK = 0,
  SMCAL_E_INVALID_ARGUMENT = 1,
  SMCAL_E_INDEX = 2,
  SMCAL_E_NOT_FOUND = 3,
  SMCAL_E_DUPLICATE_ROW = 4,
  SMCAL_E_DOMAIN = 5,
  SMCAL_E_ALIAS = 6,
  SMCAL_E_INCOMPLETE_DOMAIN = 7,
  SMCAL_E_DEGENERATE_RANGE = 8,
  SMCAL_E_TRAINING_DIVERGED = 9,
  SMCAL_E_IO = 10,
  SMCAL_E_FORMAT = 11,
  SMCAL_E_INTERNAL = 99
} smcal_status;

typedef struct smcal_sm smcal_sm;
typedef struct smcal_phantom smcal_phantom;
typedef struct smcal_model smcal_model;
typedef struct smcal_pairs smcal_pairs;

SMCAL_API const char* smcal_last_error(void);
SMCAL_API const char* smcal_status_name(smcal_status s);
SMCAL_API const char* smcal_version(void);

/* Strings and byte buffers returned by the library. */
SMCAL_API void smcal_buffer_free(char* p);

/* ---- scan sequence / simulation ---------------------------------------- */

typedef struct smcal_sequence {
  int dims;                 /* 1, 2 or 3 */
  double gradient[3];       /* T/m */
  double amplitude[3];      /* T */
  unsigned dividers[3];
  double base_period;       /* s */
  size_t n_time_samples;
  uint32_t k_max;
} smcal_sequence;

/* 1D: cosine drive; 2D: dividers 16:17 sine drive; 3D: dividers 8:9:10. */
SMCAL_API void smcal_sequence_defaults(smcal_sequence* seq, int dims);

typedef enum smcal_sim_method { SMCAL_SIM_NUMERIC = 0, SMCAL_SIM_CLOSED_FORM = 1 } smcal_sim_method;

typedef struct smcal_sim_params {
  smcal_sequence sequence;
  size_t grid[3];           /* voxels per axis; inactive axes 1 */
  double fov[3];            /* m; 0 selects 2 A / G on active axes */
  double m_sat;
  double beta;
  uint32_t k_min, k_max;
  unsigned channel_mask;    /* bit a = receive channel a; 0 selects all active */
  size_t top_rows;          /* keep the highest-energy rows; 0 keeps all */
  double time_shift;
  smcal_sim_method method;
  unsigned threads;
} smcal_sim_params;

SMCAL_API void smcal_sim_defaults(smcal_sim_params* p, int dims);
SMCAL_API smcal_status smcal_simulate(const smcal_sim_params* p, smcal_sm** out);

/* ---- system matrices ---------------------------------------------------- */

SMCAL_API smcal_status smcal_sm_read(const char* path, smcal_sm** out);
SMCAL_API smcal_status smcal_sm_write(const smcal_sm* sm, const char* path);
SMCAL_API void smcal_sm_free(smcal_sm* sm);
SMCAL_API size_t smcal_sm_num_rows(const smcal_sm* sm);
SMCAL_API void smcal_sm_dims(const smcal_sm* sm, size_t dims[3]);
SMCAL_API smcal_status smcal_sm_row_info(const smcal_sm* sm, size_t i, int* channel, uint32_t* k);
/* re/im receive nx*ny*nz doubles each. */
SMCAL_API smcal_status smcal_sm_row_values(const smcal_sm* sm, size_t i, double* re, double* im);
SMCAL_API smcal_status smcal_sm_pad(const smcal_sm* sm, size_t pre, size_t post, smcal_sm** out);
SMCAL_API smcal_status smcal_sm_crop(const smcal_sm* sm, size_t pre, size_t post, smcal_sm** out);
SMCAL_API smcal_status smcal_sm_downsample(const smcal_sm* sm, size_t ratio, smcal_sm** out);

/* ---- symmetry ----------------------------------------------------------- */

/* CSV: channel,k,derivation,rule_x..z,residual_x..z */
SMCAL_API smcal_status smcal_symmetry_csv(const smcal_sm* sm, const smcal_sequence* seq, char** csv);

typedef struct smcal_mirror_stats {
  size_t rows;
  size_t known_voxels;      /* per row */
  size_t total_voxels;
  size_t filled;
  size_t multi_path;
  double max_disagreement;
} smcal_mirror_stats;

/* Keeps the fundamental domain of every row and rebuilds the rest from the
 * parity rules. Rows without a derivable rule are an error. */
SMCAL_API smcal_status smcal_mirror_complete(const smcal_sm* sm, const smcal_sequence* seq,
                                             smcal_sm** out, smcal_mirror_stats* stats);

/* ---- pairs -------------------------------------------------------------- */

SMCAL_API smcal_status smcal_pairs_make(const smcal_sm* hr, size_t pad_pre, size_t pad_post,
                                        size_t ratio, double validation_fraction,
                                        uint64_t seed, smcal_pairs** out);
SMCAL_API smcal_status smcal_pairs_write(const smcal_pairs* pairs, const char* dir);
SMCAL_API smcal_status smcal_pairs_read(const char* dir, smcal_pairs** out);
SMCAL_API void smcal_pairs_free(smcal_pairs* pairs);

typedef struct smcal_pairs_info {
  size_t ratio;
  size_t pairs, train, validation;
  size_t source_dims[3], hr_dims[3], lr_dims[3];
} smcal_pairs_info;

SMCAL_API void smcal_pairs_get_info(const smcal_pairs* pairs, smcal_pairs_info* info);

/* ---- models ------------------------------------------------------------- */

typedef enum smcal_position_mode {
  SMCAL_POS_NONE = 0,
  SMCAL_POS_NORMALIZED = 1,
  SMCAL_POS_SYMMETRIC = 2
} smcal_position_mode;

typedef enum smcal_upsample { SMCAL_UP_NEAREST = 0, SMCAL_UP_LINEAR = 1 } smcal_upsample;

typedef struct smcal_model_params {
  smcal_position_mode mode;
  smcal_upsample upsample;
  size_t blocks, stages, features, ratio;
  int spatial_dims;
  double residual_scale, leaky_slope;
} smcal_model_params;

typedef struct smcal_train_params {
  double learning_rate;
  size_t batch_size, max_epochs, patience;
  uint64_t seed;
  int augment;
  unsigned threads;
} smcal_train_params;

typedef void (*smcal_epoch_callback)(size_t epoch, double train_loss, double val_nrmse, void* user);

SMCAL_API void smcal_model_defaults(smcal_model_params* p);
SMCAL_API void smcal_train_defaults(smcal_train_params* p);
SMCAL_API smcal_status smcal_model_init(const smcal_model_params* p, uint64_t seed, smcal_model** out);
SMCAL_API size_t smcal_model_parameter_count(const smcal_model* m);
SMCAL_API void smcal_model_get_params(const smcal_model* m, smcal_model_params* p);
SMCAL_API smcal_status smcal_model_read(const char* path, smcal_model** out);
SMCAL_API smcal_status smcal_model_write(const smcal_model* m, const char* path);
SMCAL_API void smcal_model_free(smcal_model* m);

/* Trains from `initial`; *out holds the best-validation parameters and
 * *history_csv the per-epoch log (epoch,train_loss,val_nrmse). */
SMCAL_API smcal_status smcal_train(const smcal_model* initial, const smcal_pairs* pairs,
                                   const smcal_train_params* p, smcal_epoch_callback cb,
                                   void* user, smcal_model** out, char** history_csv);

/* ---- recovery ----------------------------------------------------------- */

SMCAL_API smcal_status smcal_recover(const smcal_model* m, const smcal_sm* lr, size_t ratio,
                                     smcal_sm** out);

typedef enum smcal_interp {
  SMCAL_INTERP_NEAREST = 0,
  SMCAL_INTERP_TRILINEAR = 1,
  SMCAL_INTERP_TRICUBIC = 2
} smcal_interp;

SMCAL_API smcal_status smcal_interpolate(const smcal_sm* lr, size_t ratio, smcal_interp method,
                                         smcal_sm** out);
SMCAL_API smcal_status smcal_zero_fill(const smcal_sm* lr, size_t ratio, smcal_sm** out);

/* ---- phantoms and reconstruction --------------------------------------- */

SMCAL_API smcal_status smcal_phantom_named(const char* name, const size_t dims[3], const double fov[3],
                                           smcal_phantom** out);
SMCAL_API smcal_status smcal_phantom_read(const char* path, smcal_phantom** out);
SMCAL_API smcal_status smcal_phantom_write(const smcal_phantom* ph, const char* path);
SMCAL_API void smcal_phantom_free(smcal_phantom* ph);
SMCAL_API void smcal_phantom_dims(const smcal_phantom* ph, size_t dims[3]);
/* values receive nx*ny*nz doubles. */
SMCAL_API void smcal_phantom_values(const smcal_phantom* ph, double* values);
SMCAL_API void smcal_sm_fov(const smcal_sm* sm, double fov[3]);

typedef struct smcal_kaczmarz_params {
  double lambda;
  size_t sweeps;
  int enforce_real_nonneg;
  int shuffle_rows;
  uint64_t seed;
} smcal_kaczmarz_params;

typedef struct smcal_recon_metrics {
  double nrmse, psnr_db, ssim;
  int ssim_available;
  double lambda_effective;
  size_t skipped_rows;
} smcal_recon_metrics;

SMCAL_API void smcal_kaczmarz_defaults(smcal_kaczmarz_params* p);

/* Simulates u with `truth`, solves with `recovered`, scores against the
 * phantom. residual_csv may be NULL. */
SMCAL_API smcal_status smcal_reconstruct(const smcal_sm* recovered, const smcal_sm* truth,
                                         const smcal_phantom* phantom,
                                         const smcal_kaczmarz_params* p, smcal_phantom** out,
                                         smcal_recon_metrics* metrics, char** residual_csv);

/* ---- evaluation --------------------------------------------------------- */

typedef struct smcal_eval_result {
  double mean_nrmse, psnr_db, ssim;
} smcal_eval_result;

/* Row-wise NRMSE plus row-modulus PSNR/SSIM. rows_csv may be NULL. */
SMCAL_API smcal_status smcal_evaluate(const smcal_sm* estimate, const smcal_sm* truth,
                                      smcal_eval_result* result, char** rows_csv);

/* One-row report CSV with the standard header. */
SMCAL_API smcal_status smcal_report_csv(const char* method, size_t ratio, uint64_t seed,
                                        const smcal_eval_result* r, char** csv);

/* ---- ablation ----------------------------------------------------------- */

typedef struct smcal_ablation_params {
  size_t grid;
  size_t rows;
  double gradient, amplitude, beta;
  uint32_t k_min, k_max;
  size_t n_time_samples;
  double validation_fraction;
  uint64_t split_seed;
  size_t ratios[4];
  size_t n_ratios;
  uint64_t seeds[16];
  size_t n_seeds;
  smcal_model_params model;
  smcal_train_params train;
} smcal_ablation_params;

SMCAL_API void smcal_ablation_defaults(smcal_ablation_params* p);
/* runs_csv: one line per (method, ratio, seed); summary_csv: mean per
 * (method, ratio), column `runs` instead of `seed`. */
SMCAL_API smcal_status smcal_ablate(const smcal_ablation_params* p, smcal_epoch_callback cb,
                                    void* user, char** runs_csv, char** summary_csv);

/* ---- rendering ---------------------------------------------------------- */

/* Binary PGM of |row i| (central slice), min-max normalized. */
SMCAL_API smcal_status smcal_render_sm_row(const smcal_sm* sm, size_t i, char** pgm, size_t* size);
SMCAL_API smcal_status smcal_render_phantom(const smcal_phantom* ph, char** pgm, size_t* size);

/* Writes `size` bytes atomically (temp file + rename). */
SMCAL_API smcal_status smcal_write_bytes(const char* path, const char* data, size_t size);

#ifdef __cplusplus
}
#endif

#endif
