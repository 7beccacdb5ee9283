/* C interface to the sim2real evaluation library. */
#ifndef SIM2REAL_SIM2REAL_H_
#define SIM2REAL_SIM2REAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(SIM2REAL_BUILDING_DLL)
#define S2R_API __declspec(dllexport)
#else
#define S2R_API __declspec(dllimport)
#endif
#else
#define S2R_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum s2r_status {
  S2R_OK = 0,
  S2R_ERR_INVALID_ARGUMENT = 1,
  S2R_ERR_IO = 2,
  S2R_ERR_FORMAT = 3,
  S2R_ERR_DATA = 4,
  S2R_ERR_MODEL_MISSING = 5,
  S2R_ERR_CAPABILITY = 6,
  S2R_ERR_INTERNAL = 7
} s2r_status;

/* Message for the last failing call on this thread; "" after success. */
S2R_API const char* s2r_last_error(void);
S2R_API const char* s2r_version(void);

/* Strings returned through char** outputs are owned by the caller. */
S2R_API void s2r_string_free(char* s);

/* Images. Samples are doubles in [0, 255], interleaved row-major. */
typedef struct s2r_image s2r_image;

S2R_API s2r_status s2r_image_load(const char* path, s2r_image** out);
S2R_API s2r_status s2r_image_create(int width, int height, int channels, const double* data,
                                    s2r_image** out);
S2R_API s2r_status s2r_image_save(const s2r_image* img, const char* path);
S2R_API void s2r_image_free(s2r_image* img);
S2R_API int s2r_image_width(const s2r_image* img);
S2R_API int s2r_image_height(const s2r_image* img);
S2R_API int s2r_image_channels(const s2r_image* img);
S2R_API const double* s2r_image_data(const s2r_image* img);

/* Full-reference metrics. */
S2R_API s2r_status s2r_psnr(const s2r_image* ref, const s2r_image* test, double* out);
S2R_API s2r_status s2r_ssim(const s2r_image* ref, const s2r_image* test, double* out);
S2R_API s2r_status s2r_ms_ssim(const s2r_image* ref, const s2r_image* test, double* out);
S2R_API s2r_status s2r_cw_ssim(const s2r_image* ref, const s2r_image* test, double* out);
S2R_API s2r_status s2r_fsim(const s2r_image* ref, const s2r_image* test, double* out);
S2R_API s2r_status s2r_lpips_files(const char* weights_path, const char* shapes_path,
                                   const char* features_a, const char* features_b,
                                   double* out);

/* No-reference metrics. A NULL BRISQUE model path selects the shipped model. */
S2R_API s2r_status s2r_brisque(const s2r_image* img, const char* model_path, double* out);
S2R_API s2r_status s2r_niqe(const s2r_image* img, const char* model_path, double* out);

/* FID between two FVEC feature files. */
S2R_API s2r_status s2r_fid_files(const char* fvec_a, const char* fvec_b, double* out);

/* Label conversion: a raw simulator, colour or id PNG in `source_taxonomy`
   to a trainId PNG. `stats_json` (optional) receives per-class counts. */
S2R_API s2r_status s2r_convert_labels(const char* in_png, const char* out_png,
                                      const char* source_taxonomy, const char* data_dir,
                                      char** stats_json);

/* Dataset workflows. Option arguments are JSON objects or NULL. */
S2R_API s2r_status s2r_sample_shift(const char* scenario_root, uint64_t seed,
                                    const char* taxonomy, const char* out_manifest);
S2R_API s2r_status s2r_assemble(const char* manifest_path, const char* out_dir, int width,
                                int height, const char* data_dir);
/* options: {"metrics": [...], "brisque_model", "niqe_model", "lpips_weights", "threads"} */
S2R_API s2r_status s2r_run_iqa(const char* ref_manifest, const char* test_manifest,
                               const char* options_json, char** report_json);
/* options: {"tasks": [...], "threads", "data_dir"} */
S2R_API s2r_status s2r_run_seg_eval(const char* gt_manifest, const char* pred_manifest,
                                    const char* options_json, char** report_json);
S2R_API s2r_status s2r_fit_niqe(const char* corpus_dir, int patch, double quantile,
                                const char* out_model);

/* format: "json", "csv" or "markdown". */
S2R_API s2r_status s2r_emit_report(const char* const* report_paths, size_t count,
                                   const char* format, int allow_mixed_resolution,
                                   char** document);

/* LIBSVM model plus svm-scale range file to the JSON model format. */
S2R_API s2r_status s2r_convert_brisque_model(const char* libsvm_model, const char* range_file,
                                             const char* out_json);

#ifdef __cplusplus
}
#endif

#endif /* SIM2REAL_SIM2REAL_H_ */
