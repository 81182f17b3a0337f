#ifndef CALIBENCH_H
#define CALIBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CB_METHOD_MLR = 0,
  CB_METHOD_MLP = 1,
  CB_METHOD_SVR = 2,
  CB_METHOD_GPR = 3,
  CB_METHOD_ESN = 4,
} CbMethod;

typedef enum {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_IO = 3,
  CB_STATUS_PARSE = 4,
  CB_STATUS_DIMENSION = 5,
  CB_STATUS_NUMERICAL = 6,
  CB_STATUS_BUFFER_TOO_SMALL = 7,
  CB_STATUS_PANIC = 8,
} CbStatus;

// Opaque dataset handle.
typedef struct CbDataset CbDataset;

// Opaque trained-model handle.
typedef struct CbModel CbModel;

// Storage and per-prediction cost of a model.
typedef struct {
  // Learned numbers kept for prediction.
  size_t stored;
  // Multiply-accumulates per prediction.
  size_t macs;
  // tanh / exp / sqrt evaluations per prediction.
  size_t nonlinear;
} CbFootprint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to fit) and returns the full message length plus one. Pass a
// null `buf` to query the size.
size_t cb_last_error(char *buf, size_t len);

// Loads a dataset written by `calibench ingest` (CSV plus its metadata file).
CbStatus cb_dataset_load(const char *path, CbDataset **out);

void cb_dataset_free(CbDataset *ds);

// Number of time steps; 0 for a null handle.
size_t cb_dataset_rows(const CbDataset *ds);

size_t cb_dataset_channels(const CbDataset *ds);

// Seconds between samples; NaN for a null handle.
double cb_dataset_sampling_period(const CbDataset *ds);

// Row-major `rows x channels` sensor readings; missing values are NaN.
CbStatus cb_dataset_copy_channels(const CbDataset *ds, double *out, size_t len);

// Reference series of the named target, one value per row (NaN if missing).
CbStatus cb_dataset_copy_target(const CbDataset *ds, const char *name, double *out, size_t len);

// Parses a model from its text serialization (`model.txt` contents).
CbStatus cb_model_from_text(const char *text, CbModel **out);

CbStatus cb_model_load(const char *path, CbModel **out);

void cb_model_free(CbModel *m);

CbStatus cb_model_method(const CbModel *m, CbMethod *out);

// Feature count per input row; 0 for a null handle.
size_t cb_model_input_dim(const CbModel *m);

// Predicts one value per row of the row-major `rows x cols` input. Inputs
// and outputs are in the model's standardized space; the winner's
// `preprocessing.txt` holds the scaling. Reservoir models read the rows as
// one sequence starting from rest.
CbStatus cb_model_predict(const CbModel *m,
                          const double *x,
                          size_t rows,
                          size_t cols,
                          double *out,
                          size_t out_len);

CbStatus cb_model_footprint(const CbModel *m, CbFootprint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CALIBENCH_H */
