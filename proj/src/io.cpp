#include "gmmssl/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gmmssl/errors.hpp"

namespace gmmssl {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const size_t b = f.find_first_not_of(" \t");
    if (b == std::string::npos) {
      f.clear();
    } else {
      const size_t e = f.find_last_not_of(" \t");
      f = f.substr(b, e - b + 1);
    }
  }
  return fields;
}

double parse_feature(const std::string& field, const std::string& path, int line_no,
                     const std::string& column) {
  if (field.empty()) {
    throw DataError(path + ": line " + std::to_string(line_no) + ": empty value in column " +
                    column);
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v)) {
    throw DataError(path + ": line " + std::to_string(line_no) + ": non-numeric value '" +
                    field + "' in column " + column);
  }
  return v;
}

int parse_class(const std::string& field, const std::string& path, int line_no,
                const std::string& column) {
  char* end = nullptr;
  const long v = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size() || v < 1 || v > 1000000) {
    throw DataError(path + ": line " + std::to_string(line_no) + ": column " + column +
                    " must hold a class index >= 1, got '" + field + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

PartiallyLabeledSample Dataset::to_sample() const {
  std::vector<std::optional<int>> lab =
      has_label ? label : std::vector<std::optional<int>>(static_cast<size_t>(n()));
  return PartiallyLabeledSample::make(y, std::move(lab));
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);

  Dataset ds;
  int truth_col = -1, label_col = -1;
  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == "truth") {
      if (truth_col >= 0) throw DataError(path + ": duplicate truth column");
      truth_col = c;
    } else if (header[c] == "label") {
      if (label_col >= 0) throw DataError(path + ": duplicate label column");
      label_col = c;
    } else {
      if (header[c].empty()) {
        throw DataError(path + ": line 1: empty column name");
      }
      feature_cols.push_back(c);
      ds.feature_names.push_back(header[c]);
    }
  }
  if (feature_cols.empty()) throw DataError(path + ": no feature columns");
  ds.has_truth = truth_col >= 0;
  ds.has_label = label_col >= 0;

  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(feature_cols.size());
  ds.y.resize(n, p);
  if (ds.has_truth) ds.truth.resize(n);
  if (ds.has_label) ds.label.resize(n);
  for (int i = 0; i < n; ++i) {
    const int line_ref = i + 2;
    for (int c = 0; c < p; ++c) {
      ds.y(i, c) = parse_feature(rows[i][feature_cols[c]], path, line_ref,
                                 ds.feature_names[c]);
    }
    if (ds.has_truth) ds.truth[i] = parse_class(rows[i][truth_col], path, line_ref, "truth");
    if (ds.has_label) {
      const std::string& f = rows[i][label_col];
      if (f.empty() || f == "NA") {
        ds.label[i] = std::nullopt;
      } else {
        ds.label[i] = parse_class(f, path, line_ref, "label");
      }
    }
  }
  return ds;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_dataset_csv(const std::string& path, const RowMatrix& y,
                       const std::vector<int>* truth,
                       const std::vector<std::optional<int>>* label) {
  const int n = static_cast<int>(y.rows());
  const int p = static_cast<int>(y.cols());
  if (truth && static_cast<int>(truth->size()) != n) {
    throw Error("truth column length mismatch");
  }
  if (label && static_cast<int>(label->size()) != n) {
    throw Error("label column length mismatch");
  }
  std::string out;
  for (int c = 0; c < p; ++c) {
    if (c) out += ',';
    out += "f" + std::to_string(c + 1);
  }
  if (truth) out += ",truth";
  if (label) out += ",label";
  out += '\n';
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < p; ++c) {
      if (c) out += ',';
      out += format_real(y(i, c));
    }
    if (truth) out += ',' + std::to_string((*truth)[i]);
    if (label) {
      out += ',';
      out += (*label)[i] ? std::to_string(*(*label)[i]) : std::string("NA");
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

FitType fit_type_from_string(const std::string& s) {
  if (s == "com") return FitType::com;
  if (s == "ign") return FitType::ign;
  if (s == "full") return FitType::full;
  throw DataError("unknown fit type '" + s + "' (expected com, ign, or full)");
}

const char* to_string(EntropyCovariate c) {
  return c == EntropyCovariate::log_entropy ? "log-entropy" : "raw-entropy";
}

EntropyCovariate covariate_from_string(const std::string& s) {
  if (s == "log-entropy" || s == "log") return EntropyCovariate::log_entropy;
  if (s == "raw-entropy" || s == "raw") return EntropyCovariate::raw_entropy;
  throw DataError("unknown entropy covariate '" + s +
                  "' (expected log-entropy or raw-entropy)");
}

ModelRecord model_record(const FitReport& report, FitType fit_type,
                         EntropyCovariate covariate) {
  ModelRecord rec;
  rec.fit_type = fit_type;
  rec.theta = report.theta;
  rec.xi = report.xi;
  rec.covariate = covariate;
  rec.objective = report.objective;
  rec.converged = report.converged;
  rec.status = to_string(report.status);
  rec.iterations = report.iterations;
  return rec;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw DataError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw DataError(what + ": expected " + std::to_string(cols) + " columns");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const std::string& path, const ModelRecord& record) {
  const GmmParams& th = record.theta;
  json j;
  j["format_version"] = record.format_version;
  j["fit_type"] = to_string(record.fit_type);
  j["ncov"] = static_cast<int>(th.cov_mode);
  j["g"] = th.g;
  j["p"] = th.p;
  json pi = json::array();
  for (int i = 0; i < th.g; ++i) pi.push_back(th.pi[i]);
  j["pi"] = std::move(pi);
  json mu = json::array();
  for (int i = 0; i < th.g; ++i) {
    json row = json::array();
    for (int c = 0; c < th.p; ++c) row.push_back(th.mu[i][c]);
    mu.push_back(std::move(row));
  }
  j["mu"] = std::move(mu);
  json sigma = json::array();
  for (const auto& s : th.sigma) sigma.push_back(matrix_to_json(s));
  j["sigma"] = std::move(sigma);
  if (record.xi) j["xi"] = {record.xi->xi0, record.xi->xi1};
  j["covariate"] = to_string(record.covariate);
  j["objective"] = record.objective;
  j["converged"] = record.converged;
  j["status"] = record.status;
  j["iterations"] = record.iterations;
  write_file_atomic(path, j.dump(2) + "\n");
}

ModelRecord load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  try {
    ModelRecord rec;
    rec.format_version = j.at("format_version").get<int>();
    if (rec.format_version != 1) {
      throw DataError(path + ": unsupported format_version " +
                      std::to_string(rec.format_version));
    }
    rec.fit_type = fit_type_from_string(j.at("fit_type").get<std::string>());
    const int ncov = j.at("ncov").get<int>();
    if (ncov != 1 && ncov != 2) throw DataError(path + ": ncov must be 1 or 2");
    const auto mode = static_cast<CovarianceMode>(ncov);
    const int g = j.at("g").get<int>();
    const int p = j.at("p").get<int>();
    if (g < 2 || p < 1) throw DataError(path + ": invalid dimensions");

    const json& jpi = j.at("pi");
    if (static_cast<int>(jpi.size()) != g) throw DataError(path + ": pi length mismatch");
    Vector pi(g);
    for (int i = 0; i < g; ++i) pi[i] = jpi[i].get<double>();

    const Matrix mu_all = matrix_from_json(j.at("mu"), g, p, path + ": mu");
    std::vector<Vector> mu(g);
    for (int i = 0; i < g; ++i) mu[i] = mu_all.row(i).transpose();

    const json& jsig = j.at("sigma");
    const int n_cov = mode == CovarianceMode::common ? 1 : g;
    if (static_cast<int>(jsig.size()) != n_cov) {
      throw DataError(path + ": expected " + std::to_string(n_cov) +
                      " covariance matrices");
    }
    std::vector<Matrix> sigma(n_cov);
    for (int i = 0; i < n_cov; ++i) {
      sigma[i] = matrix_from_json(jsig[i], p, p, path + ": sigma");
    }
    rec.theta = GmmParams::make(pi, mu, sigma, mode);

    if (j.contains("xi") && !j.at("xi").is_null()) {
      const json& jxi = j.at("xi");
      if (jxi.size() != 2) throw DataError(path + ": xi must hold two reals");
      rec.xi = MissingnessParams{jxi[0].get<double>(), jxi[1].get<double>()};
    }
    if (j.contains("covariate")) {
      rec.covariate = covariate_from_string(j.at("covariate").get<std::string>());
    }
    const json& jobj = j.at("objective");
    rec.objective = jobj.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                   : jobj.get<double>();
    rec.converged = j.at("converged").get<bool>();
    rec.status = j.value("status", std::string());
    rec.iterations = j.at("iterations").get<int>();
    return rec;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string diagnostics_to_json(const CompensationReport& report) {
  json j;
  j["model"] = {{"delta", report.model.delta},
                {"pi1", report.model.pi1},
                {"p", report.model.p}};
  j["xi"] = {report.xi.xi0, report.xi.xi1};
  j["covariate"] = to_string(report.mode);
  j["n_mc"] = report.n_mc;
  j["seed"] = report.seed;
  j["nonfinite_draws"] = report.nonfinite;
  j["gamma"] = report.gamma;
  j["info_cc"] = matrix_to_json(report.i_cc);
  j["info_pc_ignore"] = matrix_to_json(report.i_pc_ig);
  j["info_pc_full"] = matrix_to_json(report.i_pc_full);
  j["info_missing"] = matrix_to_json(report.i_miss);
  j["info_clr"] = matrix_to_json(report.i_clr);
  j["info_clr_weighted"] = matrix_to_json(report.i_clr_weighted);
  j["compensation"] = matrix_to_json(report.compensation);
  j["min_eig_compensation"] = report.min_eig_compensation;
  j["min_eig_compensation_unweighted"] = report.min_eig_compensation_unweighted;
  j["identity_residual"] = report.identity_residual;
  j["identity_residual_unweighted"] = report.identity_residual_unweighted;
  j["mcar_residual"] = report.mcar_residual;
  j["compensation_positive"] = report.min_eig_compensation > 0.0;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move " + tmp + " into place");
  }
}

}  // namespace gmmssl
