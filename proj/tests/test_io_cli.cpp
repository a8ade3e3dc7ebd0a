#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmmssl/errors.hpp"
#include "gmmssl/fit.hpp"
#include "gmmssl/io.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/simulate.hpp"

using namespace gmmssl;

namespace {

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/gmmssl_test_XXXXXX";
    REQUIRE(mkdtemp(tmpl) != nullptr);
    path = tmpl;
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

const char* cli_path() {
  const char* cli = std::getenv("GMMSSL_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "GMMSSL_CLI must point at the built binary");
  return cli;
}

int run_cli(const TempDir& dir, const std::string& args, std::string* out = nullptr,
            std::string* err = nullptr) {
  const std::string out_f = dir.file("_stdout"), err_f = dir.file("_stderr");
  const std::string cmd =
      std::string(cli_path()) + " " + args + " > " + out_f + " 2> " + err_f;
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  if (out) *out = slurp(out_f);
  if (err) *err = slurp(err_f);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// "iterations: 12" -> 12
int parse_field_int(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  REQUIRE(at != std::string::npos);
  return std::atoi(text.c_str() + at + key.size() + 2);
}

GmmParams small_model() {
  Vector pi(2);
  pi << 0.4, 0.6;
  Vector m1(2), m2(2);
  m1 << 0.0, 1.0;
  m2 << 3.0, -1.0;
  Matrix s1(2, 2), s2(2, 2);
  s1 << 1.0, 0.2, 0.2, 0.8;
  s2 << 1.5, -0.3, -0.3, 1.1;
  return GmmParams::make(pi, {m1, m2}, {s1, s2}, CovarianceMode::unequal);
}

}  // namespace

TEST_CASE("reals survive text round trips exactly") {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const double mant = 2.0 * rng.uniform() - 1.0;
    const int expo = static_cast<int>(rng.uniform() * 600) - 300;
    const double x = std::ldexp(mant, expo);
    CHECK(std::strtod(format_real(x).c_str(), nullptr) == x);
  }
  for (const double x : {0.0, 1.0, -1.5, 0.1, 1e300, 1e-300, 2.2250738585072014e-308}) {
    CHECK(std::strtod(format_real(x).c_str(), nullptr) == x);
  }
  CHECK(format_real(1.0) == "1");
}

TEST_CASE("dataset files round trip bit for bit") {
  TempDir dir;
  Rng rng(9);
  RowMatrix y(7, 3);
  for (int j = 0; j < 7; ++j)
    for (int c = 0; c < 3; ++c) y(j, c) = rng.normal() * std::exp(rng.normal());
  std::vector<int> truth{1, 2, 1, 2, 2, 1, 2};
  std::vector<std::optional<int>> label{1, std::nullopt, 1, 2, std::nullopt, 1, 2};

  const std::string path = dir.file("d.csv");
  write_dataset_csv(path, y, &truth, &label);
  const Dataset ds = read_dataset_csv(path);
  REQUIRE(ds.n() == 7);
  REQUIRE(ds.p() == 3);
  CHECK(ds.feature_names == std::vector<std::string>{"f1", "f2", "f3"});
  CHECK(ds.has_truth);
  CHECK(ds.has_label);
  CHECK((ds.y - y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ds.truth == truth);
  CHECK(ds.label == label);

  const PartiallyLabeledSample sample = ds.to_sample();
  CHECK(sample.n_labeled() == 5);

  // features only
  const std::string bare = dir.file("bare.csv");
  write_dataset_csv(bare, y, nullptr, nullptr);
  const Dataset ds2 = read_dataset_csv(bare);
  CHECK_FALSE(ds2.has_truth);
  CHECK_FALSE(ds2.has_label);
  CHECK((ds2.y - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dataset parser reports the offending line") {
  TempDir dir;
  const std::string p = dir.file("bad.csv");

  spit(p, "f1,f2\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(p), doctest::Contains("no data rows"),
                       DataError);

  spit(p, "f1,f2\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(p), doctest::Contains("line 3"), DataError);
  try {
    read_dataset_csv(p);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("expected 2 fields") != std::string::npos);
  }

  spit(p, "f1,truth\noops,1\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(p), doctest::Contains("line 2"), DataError);
  try {
    read_dataset_csv(p);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
  }

  spit(p, "f1,label\n1.0,0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(p), doctest::Contains("line 2"), DataError);

  spit(p, "f1,truth\n1.0,NA\n");
  CHECK_THROWS_AS(read_dataset_csv(p), DataError);

  spit(p, "truth,f1,truth\n1,2,1\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(p), doctest::Contains("duplicate"), DataError);

  CHECK_THROWS_AS(read_dataset_csv(dir.file("absent.csv")), DataError);
}

TEST_CASE("blank lines and NA labels are tolerated") {
  TempDir dir;
  const std::string p = dir.file("ok.csv");
  spit(p, "f1,label\n1.0,NA\n\n2.0,\n3.0,2\n");
  const Dataset ds = read_dataset_csv(p);
  REQUIRE(ds.n() == 3);
  CHECK_FALSE(ds.label[0].has_value());
  CHECK_FALSE(ds.label[1].has_value());
  CHECK(ds.label[2] == 2);
}

TEST_CASE("model files round trip every field exactly") {
  TempDir dir;
  ModelRecord rec;
  rec.fit_type = FitType::full;
  rec.theta = small_model();
  rec.xi = MissingnessParams{-0.123456789123456789, 3.9999999999999996};
  rec.covariate = EntropyCovariate::raw_entropy;
  rec.objective = 1234.5678901234567;
  rec.converged = true;
  rec.status = "converged";
  rec.iterations = 41;

  const std::string p = dir.file("m.json");
  save_model(p, rec);
  const ModelRecord back = load_model(p);
  CHECK(back.format_version == 1);
  CHECK(back.fit_type == FitType::full);
  CHECK(back.covariate == EntropyCovariate::raw_entropy);
  CHECK(back.objective == rec.objective);
  CHECK(back.converged);
  CHECK(back.status == "converged");
  CHECK(back.iterations == 41);
  REQUIRE(back.xi.has_value());
  CHECK(back.xi->xi0 == rec.xi->xi0);
  CHECK(back.xi->xi1 == rec.xi->xi1);
  CHECK(back.theta.g == 2);
  CHECK(back.theta.cov_mode == CovarianceMode::unequal);
  CHECK((back.theta.pi - rec.theta.pi).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) {
    CHECK((back.theta.mu[i] - rec.theta.mu[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.theta.sigma[i] - rec.theta.sigma[i]).cwiseAbs().maxCoeff() == 0.0);
  }

  // identical record serializes identically
  const std::string p2 = dir.file("m2.json");
  save_model(p2, back);
  CHECK(slurp(p2) == slurp(p));

  // a missing objective is JSON null, not a string
  ModelRecord nullobj = rec;
  nullobj.objective = std::numeric_limits<double>::quiet_NaN();
  nullobj.xi.reset();
  save_model(p, nullobj);
  const auto j = nlohmann::json::parse(slurp(p));
  CHECK(j.at("objective").is_null());
  CHECK(j.at("format_version") == 1);
  CHECK_FALSE(j.contains("xi"));
  const ModelRecord back2 = load_model(p);
  CHECK(std::isnan(back2.objective));
  CHECK_FALSE(back2.xi.has_value());
}

TEST_CASE("model loader rejects broken files with the path in the message") {
  TempDir dir;
  const std::string p = dir.file("broken.json");
  spit(p, "this is not json");
  CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains(p.c_str()), DataError);
  spit(p, "{\"format_version\": 1}");
  CHECK_THROWS_AS(load_model(p), DataError);
  CHECK_THROWS_AS(load_model(dir.file("gone.json")), DataError);
}

TEST_CASE("atomic writes leave no partial files behind") {
  TempDir dir;
  const std::string p = dir.file("atomic.txt");
  write_file_atomic(p, "first");
  CHECK(slurp(p) == "first");
  write_file_atomic(p, "second version");
  CHECK(slurp(p) == "second version");
  int files = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir.path)) {
    ++files;
  }
  CHECK(files == 1);  // no stray temp file
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  TempDir dir;
  std::string out1, out2;
  const std::string base = "simulate --n 200 --g 3 --p 2 --xi 0 1 --seed 11 --out ";
  CHECK(run_cli(dir, base + dir.file("a.csv"), &out1) == 0);
  CHECK(run_cli(dir, base + dir.file("b.csv"), &out2) == 0);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
  CHECK(out1.find("missing fraction: ") != std::string::npos);
  CHECK(out1.find("wrote " + dir.file("a.csv")) != std::string::npos);

  CHECK(run_cli(dir, "simulate --n 200 --g 3 --p 2 --xi 0 1 --seed 12 --out " +
                         dir.file("c.csv")) == 0);
  CHECK(slurp(dir.file("a.csv")) != slurp(dir.file("c.csv")));

  const Dataset ds = read_dataset_csv(dir.file("a.csv"));
  CHECK(ds.n() == 200);
  CHECK(ds.p() == 2);
  CHECK(ds.has_truth);
  CHECK(ds.has_label);
}

TEST_CASE("fit writes a loadable model and refits from it in place") {
  TempDir dir;
  const std::string data = dir.file("d.csv");
  REQUIRE(run_cli(dir, "simulate --n 150 --g 2 --p 1 --xi -1 1 --seed 5 --out " +
                           data) == 0);

  const std::string model = dir.file("m.json");
  std::string out;
  CHECK(run_cli(dir,
                "fit --data " + data + " --type full --ncov 1 --seed 1 --out-model " +
                    model,
                &out) == 0);
  CHECK(out.find("fit type: full") != std::string::npos);
  CHECK(out.find("converged: yes") != std::string::npos);
  CHECK(out.find("xi: ") != std::string::npos);

  const ModelRecord rec = load_model(model);
  CHECK(rec.fit_type == FitType::full);
  CHECK(rec.converged);
  CHECK(rec.status == "converged");
  CHECK(rec.theta.g == 2);
  CHECK(rec.theta.p == 1);
  REQUIRE(rec.xi.has_value());

  // same command, same bytes
  const std::string model2 = dir.file("m2.json");
  CHECK(run_cli(dir, "fit --data " + data +
                         " --type full --ncov 1 --seed 1 --out-model " + model2) == 0);
  CHECK(slurp(model2) == slurp(model));

  // restarting at the solution terminates immediately
  std::string refit_out;
  CHECK(run_cli(dir,
                "fit --data " + data + " --type full --ncov 1 --init " + model +
                    " --out-model " + dir.file("m3.json"),
                &refit_out) == 0);
  CHECK(parse_field_int(refit_out, "iterations") <= 2);
}

TEST_CASE("supervised fit through the command line matches the library") {
  TempDir dir;
  const GmmParams truth = small_model();
  const MixtureDraw draw = rmix(40, truth, 77);
  const std::string data = dir.file("full.csv");
  std::vector<std::optional<int>> label(40);
  for (int j = 0; j < 40; ++j) label[j] = draw.labels[j];
  write_dataset_csv(data, draw.y, &draw.labels, &label);

  const std::string model = dir.file("com.json");
  CHECK(run_cli(dir, "fit --data " + data + " --type com --ncov 2 --out-model " +
                         model) == 0);
  const ModelRecord rec = load_model(model);

  FitConfig cfg;
  cfg.fit_type = FitType::com;
  cfg.ncov = CovarianceMode::unequal;
  const FitReport direct =
      fit_complete(PartiallyLabeledSample::make(draw.y, label), cfg);
  CHECK(rec.converged);
  CHECK((rec.theta.pi - direct.theta.pi).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) {
    CHECK((rec.theta.mu[i] - direct.theta.mu[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rec.theta.sigma[i] - direct.theta.sigma[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(rec.objective == direct.objective);
}

TEST_CASE("predict and evaluate report the plug-in classifications") {
  TempDir dir;
  // rule is fixed by hand: boundary at 5, so predictions are known
  Vector pi(2);
  pi << 0.5, 0.5;
  Vector m1(1), m2(1);
  m1 << 0.0;
  m2 << 10.0;
  ModelRecord rec;
  rec.fit_type = FitType::com;
  rec.theta =
      GmmParams::make(pi, {m1, m2}, {Matrix::Identity(1, 1)}, CovarianceMode::common);
  rec.converged = true;
  rec.status = "converged";
  const std::string model = dir.file("hand.json");
  save_model(model, rec);

  RowMatrix y(8, 1);
  y << 0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 9.0, 10.0;
  std::vector<int> truth{1, 1, 1, 2, 1, 2, 2, 2};  // rows 4 and 5 are wrong
  write_dataset_csv(dir.file("pts.csv"), y, &truth, nullptr);

  const std::string pred = dir.file("pred.csv");
  CHECK(run_cli(dir, "predict --data " + dir.file("pts.csv") + " --model " + model +
                         " --out " + pred) == 0);
  const std::string text = slurp(pred);
  CHECK(text.rfind("label,tau1,tau2,entropy\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);
  CHECK(text.find("\n1,") != std::string::npos);

  std::string eval_out;
  CHECK(run_cli(dir, "evaluate --data " + dir.file("pts.csv") + " --model " + model,
                &eval_out) == 0);
  CHECK(eval_out.find("error rate: 0.25 (2 of 8 misclassified)") != std::string::npos);
}

TEST_CASE("cross-validation through the command line") {
  TempDir dir;
  const std::string data = dir.file("d.csv");
  REQUIRE(run_cli(dir, "simulate --n 30 --g 2 --p 1 --mu 0 6 --xi -1 1 --seed 3 --out " +
                           data) == 0);
  std::string out1, out2;
  const std::string cmd = "loocv --data " + data + " --type ign --ncov 1 --seed 2";
  CHECK(run_cli(dir, cmd, &out1) == 0);
  CHECK(out1.find("folds: 30") != std::string::npos);
  CHECK(out1.find("failed folds: ") != std::string::npos);
  CHECK(out1.find("loocv error rate: ") != std::string::npos);
  CHECK(run_cli(dir, cmd + " --threads 3", &out2) == 0);
  CHECK(out1 == out2);
}

TEST_CASE("diagnose writes a stable report and always finishes") {
  TempDir dir;
  const std::string rep = dir.file("rep.json");
  const std::string cmd =
      "diagnose --delta 1 --pi1 0.5 --xi0 1 --xi1 5 --n-mc 20000 --seed 4"
      " --out-report ";
  std::string out1, out2;
  CHECK(run_cli(dir, cmd + rep, &out1) == 0);
  CHECK(run_cli(dir, cmd + dir.file("rep2.json"), &out2) == 0);
  CHECK(slurp(rep) == slurp(dir.file("rep2.json")));

  const auto j = nlohmann::json::parse(slurp(rep));
  CHECK(j.at("model").at("delta") == 1.0);
  CHECK(j.at("n_mc") == 20000);
  CHECK(j.at("info_cc").is_array());
  CHECK(j.at("compensation_positive").is_boolean());
  CHECK(j.at("identity_residual").get<double>() < 0.2);

  // a non-compensating mechanism is an answer, not an error
  std::string out3;
  CHECK(run_cli(dir,
                "diagnose --delta 2 --pi1 0.5 --xi0 0 --xi1 0 --n-mc 20000 --seed 4",
                &out3) == 0);
  CHECK(out3.find("\"compensation_positive\": false") != std::string::npos);
}

TEST_CASE("exit codes distinguish usage, data, and convergence failures") {
  TempDir dir;
  std::string out, err;

  CHECK(run_cli(dir, "", &out, &err) == 1);               // subcommand required
  CHECK(run_cli(dir, "frobnicate", &out, &err) == 1);     // unknown subcommand
  CHECK(run_cli(dir, "simulate --n 10", &out, &err) == 1);  // --out is required
  CHECK(run_cli(dir, "fit --data x.csv --type bogus", &out, &err) == 1);
  CHECK(run_cli(dir, "fit --data x.csv --ncov 7", &out, &err) == 1);

  CHECK(run_cli(dir, "fit --data " + dir.file("absent.csv"), &out, &err) == 2);
  spit(dir.file("bad.csv"), "f1\noops\n");
  CHECK(run_cli(dir, "fit --data " + dir.file("bad.csv"), &out, &err) == 2);
  CHECK(run_cli(dir, "evaluate --data " + dir.file("bad.csv") + " --model " +
                         dir.file("no.json"),
                &out, &err) == 2);

  const std::string data = dir.file("d.csv");
  REQUIRE(run_cli(dir, "simulate --n 120 --g 2 --p 1 --mu 0 1.5 --xi 0 1 --seed 8 "
                       "--out " + data) == 0);
  const std::string hard =
      "fit --data " + data + " --type full --ncov 1 --iter-max 1 --strict";
  CHECK(run_cli(dir, hard, &out, &err) == 3);
  CHECK(err.find("did not converge") != std::string::npos);
  // same non-convergence without --strict is reported, not fatal
  CHECK(run_cli(dir, "fit --data " + data + " --type full --ncov 1 --iter-max 1",
                &out, &err) == 0);
  CHECK(out.find("converged: no") != std::string::npos);
}
