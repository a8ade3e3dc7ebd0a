#include "gmmssl/initial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/rng.hpp"

namespace gmmssl {

namespace {

// class statistics from a hard assignment; divisor for covariances is the
// class count (pooled: the total count)
GmmParams hard_assignment_params(const RowMatrix& y, const std::vector<int>& assign,
                                 const std::vector<bool>& use_row, int g,
                                 CovarianceMode mode) {
  const int p = static_cast<int>(y.cols());
  std::vector<double> count(g, 0.0);
  std::vector<Vector> mu(g, Vector::Zero(p));
  double total = 0.0;
  for (size_t j = 0; j < assign.size(); ++j) {
    if (!use_row[j]) continue;
    count[assign[j]] += 1.0;
    mu[assign[j]] += y.row(j).transpose();
    total += 1.0;
  }
  for (int i = 0; i < g; ++i) {
    if (count[i] < 1.0) {
      throw Error("class " + std::to_string(i + 1) + " has no points to initialize from");
    }
    mu[i] /= count[i];
  }

  std::vector<Matrix> scatter(g, Matrix::Zero(p, p));
  for (size_t j = 0; j < assign.size(); ++j) {
    if (!use_row[j]) continue;
    const Vector d = y.row(j).transpose() - mu[assign[j]];
    scatter[assign[j]].noalias() += d * d.transpose();
  }

  // a cluster too small for a stable covariance borrows the overall scatter
  Matrix overall = Matrix::Zero(p, p);
  if (total > 1.0) {
    Vector grand = Vector::Zero(p);
    for (size_t j = 0; j < assign.size(); ++j) {
      if (use_row[j]) grand += y.row(j).transpose();
    }
    grand /= total;
    for (size_t j = 0; j < assign.size(); ++j) {
      if (!use_row[j]) continue;
      const Vector d = y.row(j).transpose() - grand;
      overall.noalias() += d * d.transpose();
    }
    overall /= total;
  } else {
    overall = Matrix::Identity(p, p);
  }

  Vector pi(g);
  std::vector<Matrix> sigma;
  if (mode == CovarianceMode::common) {
    Matrix pooled = Matrix::Zero(p, p);
    for (int i = 0; i < g; ++i) pooled += scatter[i];
    pooled /= total;
    if (!(pooled.diagonal().minCoeff() > 0.0)) pooled = overall;
    sigma.push_back(pooled);
  } else {
    for (int i = 0; i < g; ++i) {
      if (count[i] > p) {
        sigma.push_back(scatter[i] / count[i]);
      } else {
        sigma.push_back(overall);
      }
    }
  }
  for (int i = 0; i < g; ++i) pi[i] = count[i] / total;
  return GmmParams::make(std::move(pi), std::move(mu), std::move(sigma), mode);
}

struct KmeansRun {
  std::vector<int> assign;  // 0-based cluster per row
  double wcss = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const RowMatrix& y, int g, Rng& rng) {
  const int n = static_cast<int>(y.rows());
  const int p = static_cast<int>(y.cols());

  std::vector<int> center_rows;
  while (static_cast<int>(center_rows.size()) < g) {
    const int cand = static_cast<int>(rng.uniform() * n);
    if (std::find(center_rows.begin(), center_rows.end(), cand) == center_rows.end()) {
      center_rows.push_back(std::min(cand, n - 1));
    }
  }
  RowMatrix centers(g, p);
  for (int i = 0; i < g; ++i) centers.row(i) = y.row(center_rows[i]);

  KmeansRun run;
  run.assign.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int j = 0; j < n; ++j) {
      int best = 0;
      double best_d = (y.row(j) - centers.row(0)).squaredNorm();
      for (int i = 1; i < g; ++i) {
        const double d = (y.row(j) - centers.row(i)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      if (run.assign[j] != best) {
        run.assign[j] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    RowMatrix sums = RowMatrix::Zero(g, p);
    std::vector<int> counts(g, 0);
    for (int j = 0; j < n; ++j) {
      sums.row(run.assign[j]) += y.row(j);
      ++counts[run.assign[j]];
    }
    for (int i = 0; i < g; ++i) {
      if (counts[i] > 0) {
        centers.row(i) = sums.row(i) / counts[i];
      } else {
        centers.row(i) = y.row(static_cast<int>(rng.uniform() * n) % n);
      }
    }
  }

  run.wcss = 0.0;
  for (int j = 0; j < n; ++j) {
    run.wcss += (y.row(j) - centers.row(run.assign[j])).squaredNorm();
  }
  return run;
}

// clusters -> class labels: majority vote first, leftovers by size order
std::vector<int> match_clusters(const std::vector<int>& assign,
                                const std::vector<std::optional<int>>& labels, int g) {
  std::vector<std::vector<int>> votes(g, std::vector<int>(g, 0));
  std::vector<int> size(g, 0);
  for (size_t j = 0; j < assign.size(); ++j) {
    ++size[assign[j]];
    if (labels[j]) ++votes[assign[j]][*labels[j] - 1];
  }

  std::vector<int> cluster_to_class(g, -1);
  std::vector<bool> class_taken(g, false);
  for (int round = 0; round < g; ++round) {
    int best_c = -1, best_l = -1, best_v = 0;
    for (int c = 0; c < g; ++c) {
      if (cluster_to_class[c] >= 0) continue;
      for (int l = 0; l < g; ++l) {
        if (class_taken[l]) continue;
        if (votes[c][l] > best_v) {
          best_v = votes[c][l];
          best_c = c;
          best_l = l;
        }
      }
    }
    if (best_c < 0) break;
    cluster_to_class[best_c] = best_l;
    class_taken[best_l] = true;
  }

  std::vector<int> leftovers;
  for (int c = 0; c < g; ++c) {
    if (cluster_to_class[c] < 0) leftovers.push_back(c);
  }
  std::sort(leftovers.begin(), leftovers.end(), [&](int a, int b) {
    if (size[a] != size[b]) return size[a] > size[b];
    return a < b;
  });
  for (int c : leftovers) {
    for (int l = 0; l < g; ++l) {
      if (!class_taken[l]) {
        cluster_to_class[c] = l;
        class_taken[l] = true;
        break;
      }
    }
  }
  return cluster_to_class;
}

}  // namespace

GmmParams initial_values(const PartiallyLabeledSample& sample, int g,
                         CovarianceMode mode, uint64_t seed) {
  if (g < 2) throw Error("initialization needs at least 2 classes");
  const int n = sample.n();
  const int p = sample.p();
  if (n < g) throw Error("fewer rows than classes");
  sample.check_labels_within(g);

  std::vector<int> labeled_count(g, 0);
  for (int j = 0; j < n; ++j) {
    if (sample.is_labeled(j)) ++labeled_count[sample.label(j) - 1];
  }
  const bool labeled_enough =
      std::all_of(labeled_count.begin(), labeled_count.end(),
                  [&](int c) { return c >= p + 1; });

  if (labeled_enough) {
    std::vector<int> assign(n, 0);
    std::vector<bool> use(n, false);
    for (int j = 0; j < n; ++j) {
      if (sample.is_labeled(j)) {
        assign[j] = sample.label(j) - 1;
        use[j] = true;
      }
    }
    return hard_assignment_params(sample.y, assign, use, g, mode);
  }

  KmeansRun best;
  for (int restart = 0; restart < 10; ++restart) {
    Rng rng(Rng::derive(seed, static_cast<uint64_t>(restart)));
    KmeansRun run = kmeans_once(sample.y, g, rng);
    if (run.wcss < best.wcss) best = std::move(run);
  }

  const std::vector<int> cluster_to_class = match_clusters(best.assign, sample.labels, g);
  std::vector<int> assign(n);
  for (int j = 0; j < n; ++j) assign[j] = cluster_to_class[best.assign[j]];
  return hard_assignment_params(sample.y, assign, std::vector<bool>(n, true), g, mode);
}

LogisticFit initial_xi(const PartiallyLabeledSample& sample, const GmmParams& theta0,
                       EntropyCovariate mode) {
  const Vector ent = posterior_entropy(sample.y, theta0);
  Vector x(ent.size());
  for (Eigen::Index j = 0; j < ent.size(); ++j) {
    x[j] = entropy_covariate(ent[j], mode);
  }
  std::vector<int> m(sample.n());
  for (int j = 0; j < sample.n(); ++j) m[j] = sample.is_labeled(j) ? 0 : 1;
  return fit_logistic(x, m);
}

}  // namespace gmmssl
