#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/evaluate.hpp"
#include "gmmssl/fisher.hpp"
#include "gmmssl/fit.hpp"
#include "gmmssl/initial.hpp"
#include "gmmssl/io.hpp"
#include "gmmssl/params.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/simulate.hpp"

namespace {

using namespace gmmssl;

// bad flag combinations that CLI11 cannot detect at parse time -> exit 1
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string real(double x) { return format_real(x); }

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  int n = 100;
  int g = 2;
  int p = 1;
  std::vector<double> pi;
  std::vector<double> mu;
  std::vector<double> sigma_scale;
  std::string sigma_file;
  std::vector<double> xi{-0.5, 1.0};
  std::string covariate = "log-entropy";
  uint64_t seed = 0;
  std::string out;
};

GmmParams build_simulation_model(const SimulateArgs& a) {
  if (a.g < 2) throw UsageError("--g must be at least 2");
  if (a.p < 1) throw UsageError("--p must be at least 1");
  if (a.n < 1) throw UsageError("--n must be at least 1");

  Vector pi(a.g);
  if (a.pi.empty()) {
    pi.setConstant(1.0 / a.g);
  } else if (static_cast<int>(a.pi.size()) == a.g) {
    for (int i = 0; i < a.g; ++i) pi[i] = a.pi[i];
  } else {
    throw UsageError("--pi needs exactly g values");
  }

  std::vector<Vector> mu(a.g, Vector::Zero(a.p));
  if (a.mu.empty()) {
    for (int i = 0; i < a.g; ++i) mu[i][0] = i;  // unit spacing along f1
  } else if (static_cast<int>(a.mu.size()) == a.g * a.p) {
    for (int i = 0; i < a.g; ++i) {
      for (int c = 0; c < a.p; ++c) mu[i][c] = a.mu[static_cast<size_t>(i) * a.p + c];
    }
  } else {
    throw UsageError("--mu needs g*p values, one mean vector per class in class order");
  }

  std::vector<Matrix> sigma;
  CovarianceMode mode;
  if (!a.sigma_file.empty()) {
    if (!a.sigma_scale.empty()) {
      throw UsageError("--sigma-scale and --sigma-file are mutually exclusive");
    }
    std::ifstream in(a.sigma_file);
    if (!in) throw DataError("cannot open " + a.sigma_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(a.sigma_file + ": invalid JSON: " + e.what());
    }
    if (!j.is_array() || (j.size() != 1 && static_cast<int>(j.size()) != a.g)) {
      throw DataError(a.sigma_file + ": expected an array of 1 or g matrices");
    }
    for (const auto& jm : j) {
      Matrix m(a.p, a.p);
      if (!jm.is_array() || static_cast<int>(jm.size()) != a.p) {
        throw DataError(a.sigma_file + ": each matrix needs p rows of p values");
      }
      for (int r = 0; r < a.p; ++r) {
        if (!jm[r].is_array() || static_cast<int>(jm[r].size()) != a.p) {
          throw DataError(a.sigma_file + ": each matrix needs p rows of p values");
        }
        for (int c = 0; c < a.p; ++c) m(r, c) = jm[r][c].get<double>();
      }
      sigma.push_back(std::move(m));
    }
    mode = sigma.size() == 1 ? CovarianceMode::common : CovarianceMode::unequal;
  } else {
    std::vector<double> scale = a.sigma_scale.empty() ? std::vector<double>{1.0}
                                                      : a.sigma_scale;
    if (scale.size() != 1 && static_cast<int>(scale.size()) != a.g) {
      throw UsageError("--sigma-scale needs 1 value (common) or g values");
    }
    for (const double s : scale) {
      sigma.push_back(s * Matrix::Identity(a.p, a.p));
    }
    mode = sigma.size() == 1 ? CovarianceMode::common : CovarianceMode::unequal;
  }

  try {
    return GmmParams::make(pi, mu, sigma, mode);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int run_simulate(const SimulateArgs& a) {
  if (a.xi.size() != 2) throw UsageError("--xi needs two values");
  if (a.out.empty()) throw UsageError("--out is required");
  const GmmParams theta = build_simulation_model(a);
  const MissingnessParams xi{a.xi[0], a.xi[1]};
  const EntropyCovariate mode = covariate_from_string(a.covariate);

  const MixtureDraw draw = rmix(a.n, theta, Rng::derive_seed(a.seed, 0));
  const std::vector<int> missing =
      rlabel(draw.y, FullParams{theta, xi}, Rng::derive_seed(a.seed, 1), mode);

  std::vector<std::optional<int>> label(a.n);
  long hidden = 0;
  for (int i = 0; i < a.n; ++i) {
    if (missing[i]) {
      ++hidden;
    } else {
      label[i] = draw.labels[i];
    }
  }
  write_dataset_csv(a.out, draw.y, &draw.labels, &label);

  std::cout << "n: " << a.n << "\n"
            << "missing fraction: " << real(static_cast<double>(hidden) / a.n) << " ("
            << hidden << " of " << a.n << ")\n"
            << "wrote " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------------- fit/loocv

struct CommonFitArgs {
  std::string type = "full";
  int ncov = 2;
  int g = 0;
  int iter_max = 500;
  int eval_max = 500;
  double rel_tol = 1e-15;
  double sing_tol = 1e-15;
  uint64_t seed = 0;
  std::string covariate = "log-entropy";
  bool fix_xi1_zero = false;
};

void add_common_fit_options(CLI::App* cmd, CommonFitArgs& a) {
  cmd->add_option("--type", a.type, "likelihood to maximize: com, ign, or full");
  cmd->add_option("--ncov", a.ncov, "1 for a common covariance, 2 for one per class");
  cmd->add_option("--g", a.g, "number of classes (default: largest label seen)");
  cmd->add_option("--iter-max", a.iter_max, "iteration cap");
  cmd->add_option("--eval-max", a.eval_max, "objective evaluations per CM step");
  cmd->add_option("--rel-tol", a.rel_tol, "relative log-likelihood gain to stop at");
  cmd->add_option("--sing-tol", a.sing_tol, "parameter-change floor to stop at");
  cmd->add_option("--seed", a.seed, "seed for initialization");
  cmd->add_option("--entropy-covariate", a.covariate,
                  "missingness covariate: log-entropy or raw-entropy");
  cmd->add_flag("--fix-xi1-zero", a.fix_xi1_zero,
                "hold the entropy slope at zero (MCAR mechanism)");
}

FitConfig to_config(const CommonFitArgs& a) {
  FitConfig cfg;
  try {
    cfg.fit_type = fit_type_from_string(a.type);
    if (a.ncov != 1 && a.ncov != 2) throw UsageError("--ncov must be 1 or 2");
    cfg.ncov = static_cast<CovarianceMode>(a.ncov);
    cfg.iter_max = a.iter_max;
    cfg.eval_max = a.eval_max;
    cfg.rel_tol = a.rel_tol;
    cfg.sing_tol = a.sing_tol;
    cfg.seed = a.seed;
    cfg.covariate = covariate_from_string(a.covariate);
    cfg.fix_xi1_zero = a.fix_xi1_zero;
    cfg.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct FitArgs {
  std::string data;
  std::string init = "auto";
  std::string out_model;
  bool strict = false;
  CommonFitArgs common;
};

int run_fit(const FitArgs& a) {
  const FitConfig cfg = to_config(a.common);
  const Dataset ds = read_dataset_csv(a.data);
  const PartiallyLabeledSample sample = ds.to_sample();

  std::optional<ModelRecord> init_rec;
  if (a.init != "auto") init_rec = load_model(a.init);

  int g = a.common.g;
  if (g == 0) g = init_rec ? init_rec->theta.g : sample.max_label();
  if (g < 2) {
    throw UsageError("--g is required when the data carry no labels");
  }
  sample.check_labels_within(g);

  FitReport rep;
  if (cfg.fit_type == FitType::com) {
    rep = fit_complete(sample, cfg, g);
  } else {
    GmmParams theta0;
    if (init_rec) {
      theta0 = init_rec->theta;
      if (theta0.g != g || theta0.p != sample.p()) {
        throw DataError(a.init + ": initial model dimensions do not match the data");
      }
      if (theta0.cov_mode != cfg.ncov) {
        throw DataError(a.init + ": initial model covariance structure conflicts with --ncov");
      }
    } else {
      theta0 = initial_values(sample, g, cfg.ncov, cfg.seed);
    }
    if (cfg.fit_type == FitType::ign) {
      rep = fit_ignore(sample, theta0, cfg);
    } else {
      const MissingnessParams xi0 = init_rec && init_rec->xi
                                        ? *init_rec->xi
                                        : initial_xi(sample, theta0, cfg.covariate).xi;
      rep = fit_full(sample, theta0, xi0, cfg);
    }
  }

  if (!a.out_model.empty()) {
    save_model(a.out_model, model_record(rep, cfg.fit_type, cfg.covariate));
  }

  std::cout << "fit type: " << to_string(cfg.fit_type) << "\n"
            << "objective: " << real(rep.objective) << "\n"
            << "log likelihood: " << real(rep.loglik()) << "\n"
            << "converged: " << (rep.converged ? "yes" : "no") << " ("
            << to_string(rep.status) << ")\n"
            << "iterations: " << rep.iterations << "\n";
  if (rep.xi) {
    std::cout << "xi: " << real(rep.xi->xi0) << " " << real(rep.xi->xi1) << "\n";
  }
  if (!rep.message.empty()) std::cout << "note: " << rep.message << "\n";
  if (!a.out_model.empty()) std::cout << "wrote " << a.out_model << "\n";

  if (a.strict && !rep.converged) {
    std::cerr << "error: fit did not converge\n";
    return 3;
  }
  return 0;
}

struct LoocvArgs {
  std::string data;
  int threads = 1;
  CommonFitArgs common;
};

int run_loocv(const LoocvArgs& a) {
  const FitConfig cfg = to_config(a.common);
  if (a.threads < 1) throw UsageError("--threads must be at least 1");
  const Dataset ds = read_dataset_csv(a.data);
  if (!ds.has_truth) throw DataError(a.data + ": loocv needs a truth column");
  const PartiallyLabeledSample sample = ds.to_sample();

  int g = a.common.g;
  if (g == 0) {
    for (const int t : ds.truth) g = std::max(g, t);
  }
  if (g < 2) throw UsageError("--g must be at least 2");

  const LoocvResult res = loocv_error(sample, ds.truth, g, cfg, a.threads);
  std::cout << "folds: " << res.folds << "\n"
            << "failed folds: " << res.failed_folds << "\n"
            << "loocv error rate: " << real(res.error_rate) << "\n";
  return 0;
}

// ------------------------------------------------------------ predict & co.

struct PredictArgs {
  std::string data, model, out;
};

int run_predict(const PredictArgs& a) {
  const ModelRecord rec = load_model(a.model);
  const Dataset ds = read_dataset_csv(a.data);
  if (ds.p() != rec.theta.p) {
    throw DataError(a.data + ": expected " + std::to_string(rec.theta.p) +
                    " feature columns, found " + std::to_string(ds.p()));
  }
  const Matrix tau = posterior(ds.y, rec.theta);
  const std::vector<int> label = bayes_classify(ds.y, rec.theta);
  const Vector ent = posterior_entropy(ds.y, rec.theta);

  std::string out = "label";
  for (int i = 0; i < rec.theta.g; ++i) out += ",tau" + std::to_string(i + 1);
  out += ",entropy\n";
  for (int j = 0; j < ds.n(); ++j) {
    out += std::to_string(label[j]);
    for (int i = 0; i < rec.theta.g; ++i) out += ',' + real(tau(j, i));
    out += ',' + real(ent[j]);
    out += '\n';
  }
  write_file_atomic(a.out, out);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string data, model;
};

int run_evaluate(const EvaluateArgs& a) {
  const ModelRecord rec = load_model(a.model);
  const Dataset ds = read_dataset_csv(a.data);
  if (!ds.has_truth) throw DataError(a.data + ": evaluate needs a truth column");
  if (ds.p() != rec.theta.p) {
    throw DataError(a.data + ": expected " + std::to_string(rec.theta.p) +
                    " feature columns, found " + std::to_string(ds.p()));
  }
  for (size_t j = 0; j < ds.truth.size(); ++j) {
    if (ds.truth[j] > rec.theta.g) {
      throw DataError(a.data + ": line " + std::to_string(j + 2) +
                      ": truth label exceeds the model's g");
    }
  }
  const std::vector<int> label = bayes_classify(ds.y, rec.theta);
  long wrong = 0;
  for (int j = 0; j < ds.n(); ++j) {
    if (label[j] != ds.truth[j]) ++wrong;
  }
  std::cout << "n: " << ds.n() << "\n"
            << "error rate: " << real(static_cast<double>(wrong) / ds.n()) << " ("
            << wrong << " of " << ds.n() << " misclassified)\n";
  return 0;
}

// ------------------------------------------------------------------ diagnose

struct DiagnoseArgs {
  std::string model;
  double delta = 1.0;
  double pi1 = 0.5;
  int p = 1;
  double xi0 = -0.5;
  double xi1 = 1.0;
  bool xi_given = false;
  std::string covariate;
  long n_mc = 1000000;
  uint64_t seed = 0;
  std::string out_report;
};

int run_diagnose(const DiagnoseArgs& a) {
  CanonicalTwoClassModel model;
  MissingnessParams xi{a.xi0, a.xi1};
  std::string covariate = a.covariate.empty() ? "log-entropy" : a.covariate;

  if (!a.model.empty()) {
    const ModelRecord rec = load_model(a.model);
    if (rec.theta.g != 2 || rec.theta.cov_mode != CovarianceMode::common) {
      throw DataError(a.model +
                      ": diagnostics need a two-class common-covariance model");
    }
    const DiscriminantCoefficients b =
        discriminant_coefficients(rec.theta.mu[0], rec.theta.mu[1], rec.theta.sigma[0]);
    const Vector d = rec.theta.mu[0] - rec.theta.mu[1];
    model.delta = std::sqrt(d.dot(b.beta1));
    model.pi1 = rec.theta.pi[0];
    model.p = rec.theta.p;
    if (!a.xi_given) {
      if (!rec.xi) {
        throw DataError(a.model +
                        ": model carries no missingness parameters; pass --xi0/--xi1");
      }
      xi = *rec.xi;
    }
    if (a.covariate.empty()) covariate = to_string(rec.covariate);
  } else {
    model.delta = a.delta;
    model.pi1 = a.pi1;
    model.p = a.p;
  }
  const EntropyCovariate mode = covariate_from_string(covariate);
  if (a.n_mc < 1) throw UsageError("--n-mc must be positive");

  const CompensationReport rep = compensation_check(model, xi, a.n_mc, a.seed, mode);
  const std::string doc = diagnostics_to_json(rep);
  if (a.out_report.empty()) {
    std::cout << doc;
  } else {
    write_file_atomic(a.out_report, doc);
    std::cout << "gamma: " << real(rep.gamma) << "\n"
              << "identity residual: " << real(rep.identity_residual) << "\n"
              << "min eigenvalue of compensation: " << real(rep.min_eig_compensation)
              << "\n"
              << "compensation positive: "
              << (rep.min_eig_compensation > 0.0 ? "yes" : "no") << "\n"
              << "wrote " << a.out_report << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian mixture classification with entropy-driven missing labels"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate",
                                 "draw a mixture sample and hide labels at random");
  sim->add_option("--n", sim_args.n, "sample size");
  sim->add_option("--g", sim_args.g, "number of classes");
  sim->add_option("--p", sim_args.p, "feature dimension");
  sim->add_option("--pi", sim_args.pi, "g mixing proportions (default uniform)");
  sim->add_option("--mu", sim_args.mu, "g*p mean entries, class by class");
  sim->add_option("--sigma-scale", sim_args.sigma_scale,
                  "s*I covariances: 1 value (common) or g values");
  sim->add_option("--sigma-file", sim_args.sigma_file,
                  "JSON array of 1 or g covariance matrices");
  sim->add_option("--xi", sim_args.xi, "missingness intercept and entropy slope");
  sim->add_option("--covariate", sim_args.covariate, "log-entropy or raw-entropy");
  sim->add_option("--seed", sim_args.seed, "RNG seed");
  sim->add_option("--out", sim_args.out, "output CSV")->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "estimate the mixture from a dataset");
  fit->add_option("--data", fit_args.data, "input CSV")->required();
  add_common_fit_options(fit, fit_args.common);
  fit->add_option("--init", fit_args.init, "auto or a model file to start from");
  fit->add_option("--out-model", fit_args.out_model, "where to write the fitted model");
  fit->add_flag("--strict", fit_args.strict, "exit 3 when the fit does not converge");

  PredictArgs pred_args;
  auto* pred = app.add_subcommand("predict", "classify rows under a fitted model");
  pred->add_option("--data", pred_args.data, "input CSV")->required();
  pred->add_option("--model", pred_args.model, "model file")->required();
  pred->add_option("--out", pred_args.out, "output CSV")->required();

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "error rate against the truth column");
  eval->add_option("--data", eval_args.data, "input CSV with a truth column")->required();
  eval->add_option("--model", eval_args.model, "model file")->required();

  LoocvArgs loocv_args;
  auto* loocv = app.add_subcommand("loocv", "leave-one-out cross-validated error");
  loocv->add_option("--data", loocv_args.data, "input CSV with a truth column")
      ->required();
  add_common_fit_options(loocv, loocv_args.common);
  loocv->add_option("--threads", loocv_args.threads, "worker threads for the folds");

  DiagnoseArgs diag_args;
  auto* diag = app.add_subcommand(
      "diagnose", "Monte-Carlo information diagnostics for a two-class model");
  diag->add_option("--model", diag_args.model,
                   "two-class common-covariance model file (default: canonical flags)");
  diag->add_option("--delta", diag_args.delta, "Mahalanobis distance between classes");
  diag->add_option("--pi1", diag_args.pi1, "first class proportion");
  diag->add_option("--p", diag_args.p, "feature dimension");
  auto* xi0_opt = diag->add_option("--xi0", diag_args.xi0, "missingness intercept");
  auto* xi1_opt = diag->add_option("--xi1", diag_args.xi1, "missingness entropy slope");
  diag->add_option("--covariate", diag_args.covariate, "log-entropy or raw-entropy");
  diag->add_option("--n-mc", diag_args.n_mc, "Monte-Carlo draws");
  diag->add_option("--seed", diag_args.seed, "RNG seed");
  diag->add_option("--out-report", diag_args.out_report,
                   "write the JSON report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  diag_args.xi_given = xi0_opt->count() > 0 || xi1_opt->count() > 0;

  try {
    if (sim->parsed()) return run_simulate(sim_args);
    if (fit->parsed()) return run_fit(fit_args);
    if (pred->parsed()) return run_predict(pred_args);
    if (eval->parsed()) return run_evaluate(eval_args);
    if (loocv->parsed()) return run_loocv(loocv_args);
    if (diag->parsed()) return run_diagnose(diag_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
