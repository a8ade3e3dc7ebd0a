#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmmssl/fisher.hpp"
#include "gmmssl/fit.hpp"
#include "gmmssl/linalg.hpp"
#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

// In-memory form of a dataset CSV. Feature columns are every column not named
// `truth` or `label`, kept in file order. An empty cell or `NA` in the label
// column marks a missing label.
struct Dataset {
  RowMatrix y;
  std::vector<std::string> feature_names;
  std::vector<int> truth;                  // empty unless has_truth
  std::vector<std::optional<int>> label;   // empty unless has_label
  bool has_truth = false;
  bool has_label = false;

  int n() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
  // observed labels when present, otherwise fully unlabeled
  PartiallyLabeledSample to_sample() const;
};

Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const RowMatrix& y,
                       const std::vector<int>* truth,
                       const std::vector<std::optional<int>>* label);

// Persisted fit artifact. Reals round-trip exactly through save/load.
struct ModelRecord {
  int format_version = 1;
  FitType fit_type = FitType::full;
  GmmParams theta;
  std::optional<MissingnessParams> xi;
  EntropyCovariate covariate = EntropyCovariate::log_entropy;
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string status;
  int iterations = 0;
};

ModelRecord model_record(const FitReport& report, FitType fit_type,
                         EntropyCovariate covariate);
void save_model(const std::string& path, const ModelRecord& record);
ModelRecord load_model(const std::string& path);

FitType fit_type_from_string(const std::string& s);
const char* to_string(EntropyCovariate c);
EntropyCovariate covariate_from_string(const std::string& s);

// formats with 17 significant digits, enough to recover the double exactly
std::string format_real(double x);

std::string diagnostics_to_json(const CompensationReport& report);

// temp file + rename so readers never observe a partial file
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace gmmssl
