#include "swvi/sliced_wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "swvi/parallel.hpp"

namespace swvi {

ProjectionSet sample_projections(int d, int m, RngStream rng) {
  if (d < 1) throw ValidationError("sample_projections: d must be >= 1");
  if (m < 1) throw ValidationError("sample_projections: m must be >= 1");
  ProjectionSet out;
  out.seed_tag = rng.state();
  out.directions.resize(m, d);
  for (int k = 0; k < m; ++k) {
    double norm = 0.0;
    do {
      for (int j = 0; j < d; ++j) out.directions(k, j) = rng.next_gaussian();
      norm = out.directions.row(k).norm();
    } while (norm == 0.0);
    out.directions.row(k) /= norm;
  }
  return out;
}

double wasserstein_1d(std::span<const double> xs, std::span<const double> ys, double p) {
  if (xs.size() != ys.size())
    throw ValidationError("wasserstein_1d: length mismatch (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  if (xs.empty()) throw ValidationError("wasserstein_1d: empty input");
  if (p < 1.0) throw ValidationError("wasserstein_1d: order p must be >= 1");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size();
  double s = 0.0;
  if (p == 1.0) {
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a[j] - b[j]);
  } else if (p == 2.0) {
    for (std::size_t j = 0; j < n; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  } else {
    for (std::size_t j = 0; j < n; ++j) s += std::pow(std::abs(a[j] - b[j]), p);
  }
  return std::pow(s / static_cast<double>(n), 1.0 / p);
}

namespace {

// Projections are processed in fixed-size chunks whose partial results are
// reduced in chunk order, so sums do not depend on the worker count.
constexpr int kProjChunk = 32;

inline void sort_indices_by(std::vector<int>& idx, const double* vals) {
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [vals](int a, int b) { return vals[a] < vals[b]; });
}

}  // namespace

SwEvaluation sliced_wasserstein(const ParticleCloud& x, const ParticleCloud& y,
                                const ProjectionSet& proj, double p, bool want_grad) {
  validate_cloud(x, "sliced_wasserstein: x");
  validate_cloud(y, "sliced_wasserstein: y");
  if (x.size() != y.size())
    throw ValidationError("sliced_wasserstein: clouds must have equal sizes, got " +
                          std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.dim() != y.dim() || x.dim() != proj.dim())
    throw ValidationError("sliced_wasserstein: dimension mismatch (x " + std::to_string(x.dim()) +
                          ", y " + std::to_string(y.dim()) + ", proj " +
                          std::to_string(proj.dim()) + ")");
  if (proj.count() < 1) throw ValidationError("sliced_wasserstein: empty projection set");
  if (p < 1.0) throw ValidationError("sliced_wasserstein: order p must be >= 1");

  const int n = x.size();
  const int d = x.dim();
  const int m = proj.count();

  // n x m slices; column k holds <., theta_k>
  const Eigen::MatrixXd px = x.points * proj.directions.transpose();
  const Eigen::MatrixXd py = y.points * proj.directions.transpose();

  const int n_chunks = (m + kProjChunk - 1) / kProjChunk;
  std::vector<double> chunk_cost(n_chunks, 0.0);
  std::vector<Eigen::MatrixXd> chunk_grad;
  if (want_grad) chunk_grad.assign(n_chunks, Eigen::MatrixXd());

  parallel_for(n_chunks, [&](int c) {
    const int k_lo = c * kProjChunk;
    const int k_hi = std::min(m, k_lo + kProjChunk);
    double cost = 0.0;
    Eigen::MatrixXd grad_raw;  // sum of |delta|^(p-1) sign(delta) theta per row
    if (want_grad) grad_raw = Eigen::MatrixXd::Zero(n, d);

    std::vector<double> ax(n), ay(n);
    std::vector<int> ix(n), iy(n);
    for (int k = k_lo; k < k_hi; ++k) {
      const double* colx = px.col(k).data();
      const double* coly = py.col(k).data();
      if (!want_grad) {
        std::copy(colx, colx + n, ax.begin());
        std::copy(coly, coly + n, ay.begin());
        std::sort(ax.begin(), ax.end());
        std::sort(ay.begin(), ay.end());
        if (p == 1.0) {
          for (int j = 0; j < n; ++j) cost += std::abs(ax[j] - ay[j]);
        } else if (p == 2.0) {
          for (int j = 0; j < n; ++j) cost += (ax[j] - ay[j]) * (ax[j] - ay[j]);
        } else {
          for (int j = 0; j < n; ++j) cost += std::pow(std::abs(ax[j] - ay[j]), p);
        }
      } else {
        sort_indices_by(ix, colx);
        sort_indices_by(iy, coly);
        for (int j = 0; j < n; ++j) {
          const double delta = colx[ix[j]] - coly[iy[j]];
          double w;  // |delta|^(p-1) * sign(delta)
          if (p == 1.0) {
            cost += std::abs(delta);
            w = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
          } else if (p == 2.0) {
            cost += delta * delta;
            w = delta;
          } else {
            const double ad = std::abs(delta);
            cost += std::pow(ad, p);
            w = ad == 0.0 ? 0.0 : std::pow(ad, p - 1.0) * (delta > 0.0 ? 1.0 : -1.0);
          }
          if (w != 0.0) grad_raw.row(ix[j]) += w * proj.directions.row(k);
        }
      }
    }
    chunk_cost[c] = cost;
    if (want_grad) chunk_grad[c] = std::move(grad_raw);
  });

  double total = 0.0;
  for (int c = 0; c < n_chunks; ++c) total += chunk_cost[c];
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));

  SwEvaluation eval;
  eval.p = p;
  eval.value = std::pow(total * scale, 1.0 / p);
  if (want_grad) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, d);
    for (int c = 0; c < n_chunks; ++c) acc += chunk_grad[c];
    if (eval.value == 0.0 && p > 1.0) {
      eval.grad_x = Eigen::MatrixXd::Zero(n, d);  // subgradient choice at the kink
    } else {
      const double factor = p == 1.0 ? scale : scale * std::pow(eval.value, 1.0 - p);
      eval.grad_x = factor * acc;
    }
    if (!eval.grad_x->allFinite())
      throw NumericError("sliced_wasserstein: non-finite subgradient");
  }
  return eval;
}

}  // namespace swvi
