#include "swvi/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace swvi {

ElboTrace run_elbo_vi(const Target& target, const FamilyParams& family, const ElboConfig& cfg) {
  validate_family(family);
  if (family.kind == FamilyKind::mlp)
    throw ValidationError("run_elbo_vi: mlp families have no tractable entropy; "
                          "use the SWVI engine instead");
  if (target.dim != family.dim) throw ValidationError("run_elbo_vi: dimension mismatch");
  if (cfg.iterations < 1) throw ValidationError("run_elbo_vi: iterations must be >= 1");
  if (cfg.batch < 1) throw ValidationError("run_elbo_vi: batch must be >= 1");
  if (cfg.learning_rate < 0.0) throw ValidationError("run_elbo_vi: learning rate must be >= 0");

  const RngStream root(cfg.seed);
  FamilyParams params = family;
  OptimizerState state;
  ElboTrace trace;
  trace.elbo.reserve(cfg.iterations);
  const Eigen::VectorXd h_grad = entropy_grad(params);

  for (int t = 0; t < cfg.iterations; ++t) {
    SampleBatch batch = forward(params, cfg.batch, root.substream(1, t));

    Eigen::VectorXd lp(cfg.batch);
    Eigen::MatrixXd grad_z(cfg.batch, params.dim);
    if (target.log_unnorm_batch && target.grad_log_unnorm_batch) {
      lp = target.log_unnorm_batch(batch.cloud.points);
      grad_z = target.grad_log_unnorm_batch(batch.cloud.points) / cfg.batch;
    } else {
      for (int i = 0; i < cfg.batch; ++i) {
        lp(i) = target.log_unnorm(batch.cloud.points.row(i));
        grad_z.row(i) = target.grad_log_unnorm(batch.cloud.points.row(i)).transpose() / cfg.batch;
      }
    }

    const double entropy = 0.5 * params.dim * (1.0 + 1.8378770664093454835606594728112) +
                           params.values.tail(params.dim).sum();
    trace.elbo.push_back(lp.mean() + entropy);

    Eigen::VectorXd ascent = backward(batch, grad_z) + h_grad;
    if (!ascent.allFinite())
      throw NumericError("run_elbo_vi: non-finite gradient at iteration " + std::to_string(t));
    params.values += optimizer_step(state, Eigen::VectorXd(-ascent), cfg.learning_rate,
                                    cfg.optimizer);
  }
  trace.final_params = std::move(params);
  return trace;
}

double exact_ot(const ParticleCloud& x, const ParticleCloud& y, double p) {
  validate_cloud(x, "exact_ot: x");
  validate_cloud(y, "exact_ot: y");
  if (x.size() != y.size()) throw ValidationError("exact_ot: clouds must have equal sizes");
  if (x.dim() != y.dim()) throw ValidationError("exact_ot: dimension mismatch");
  if (p < 1.0) throw ValidationError("exact_ot: order p must be >= 1");
  const int n = x.size();
  if (n > 8)
    throw ValidationError("exact_ot: brute-force assignment supports n <= 8, got " +
                          std::to_string(n));

  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = std::pow((x.points.row(i) - y.points.row(j)).norm(), p);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / n, 1.0 / p);
}

namespace {

// One entropic OT problem, log-domain; returns the dual objective
// sum_i a_i f_i + sum_j b_j g_j.
SinkhornResult entropic_cost(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                             const SinkhornConfig& cfg) {
  const int nx = static_cast<int>(xs.rows());
  const int ny = static_cast<int>(ys.rows());
  const double log_a = -std::log(static_cast<double>(nx));
  const double log_b = -std::log(static_cast<double>(ny));
  const double eps = cfg.epsilon;

  Eigen::MatrixXd cost(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) cost(i, j) = (xs.row(i) - ys.row(j)).squaredNorm();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ny);
  Eigen::VectorXd f_new(nx);
  bool converged = false;

  for (int it = 0; it < cfg.max_iters && !converged; ++it) {
    for (int i = 0; i < nx; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < ny; ++j) mx = std::max(mx, log_b + (g(j) - cost(i, j)) / eps);
      double s = 0.0;
      for (int j = 0; j < ny; ++j) s += std::exp(log_b + (g(j) - cost(i, j)) / eps - mx);
      f_new(i) = -eps * (mx + std::log(s));
    }
    // row-marginal violation of the plan implied by (f, g); columns are exact
    // after every g-update, so this measures total marginal error
    if (it > 0) {
      double viol = 0.0;
      for (int i = 0; i < nx; ++i)
        viol += std::exp(log_a) * std::abs(std::exp((f(i) - f_new(i)) / eps) - 1.0);
      converged = viol <= cfg.tolerance;
    }
    f = f_new;
    for (int j = 0; j < ny; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < nx; ++i) mx = std::max(mx, log_a + (f(i) - cost(i, j)) / eps);
      double s = 0.0;
      for (int i = 0; i < nx; ++i) s += std::exp(log_a + (f(i) - cost(i, j)) / eps - mx);
      g(j) = -eps * (mx + std::log(s));
    }
  }

  SinkhornResult r;
  r.value = std::exp(log_a) * f.sum() + std::exp(log_b) * g.sum();
  r.converged = converged;
  return r;
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

void check_spd(const GaussianSpec& s, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s.covariance);
  if (llt.info() != Eigen::Success)
    throw ValidationError(std::string(what) + ": covariance is not positive definite");
}

bool is_isotropic(const Eigen::MatrixXd& s) {
  const double v = s(0, 0);
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (std::abs(s(i, j) - (i == j ? v : 0.0)) > 1e-12) return false;
  return true;
}

// E|N(mu, sigma^2)|
double folded_normal_mean(double mu, double sigma) {
  if (sigma == 0.0) return std::abs(mu);
  return sigma * std::sqrt(2.0 / M_PI) * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
         mu * std::erf(mu / (sigma * std::sqrt(2.0)));
}

}  // namespace

SinkhornResult sinkhorn_divergence(const ParticleCloud& x, const ParticleCloud& y,
                                   const SinkhornConfig& cfg) {
  validate_cloud(x, "sinkhorn_divergence: x");
  validate_cloud(y, "sinkhorn_divergence: y");
  if (x.dim() != y.dim()) throw ValidationError("sinkhorn_divergence: dimension mismatch");
  if (!(cfg.epsilon > 0.0)) throw ValidationError("sinkhorn_divergence: epsilon must be > 0");
  if (cfg.max_iters < 1) throw ValidationError("sinkhorn_divergence: max_iters must be >= 1");

  const SinkhornResult xy = entropic_cost(x.points, y.points, cfg);
  const SinkhornResult xx = entropic_cost(x.points, x.points, cfg);
  const SinkhornResult yy = entropic_cost(y.points, y.points, cfg);
  SinkhornResult r;
  r.value = xy.value - 0.5 * xx.value - 0.5 * yy.value;
  r.converged = xy.converged && xx.converged && yy.converged;
  return r;
}

double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b) {
  if (a.dim() != b.dim()) throw ValidationError("gaussian_w2: dimension mismatch");
  check_spd(a, "gaussian_w2: a");
  check_spd(b, "gaussian_w2: b");
  const Eigen::MatrixXd rb = sym_sqrt(b.covariance);
  const Eigen::MatrixXd cross = sym_sqrt(rb * a.covariance * rb);
  const double tr = a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  const double d2 = (a.mean - b.mean).squaredNorm() + std::max(tr, 0.0);
  return std::sqrt(std::max(d2, 0.0));
}

double gaussian_sw(const GaussianSpec& a, const GaussianSpec& b, double p, int resolution) {
  if (a.dim() != b.dim()) throw ValidationError("gaussian_sw: dimension mismatch");
  if (p != 1.0 && p != 2.0) throw ValidationError("gaussian_sw: only p in {1, 2} supported");
  if (resolution < 2) throw ValidationError("gaussian_sw: resolution must be >= 2");
  check_spd(a, "gaussian_sw: a");
  check_spd(b, "gaussian_sw: b");
  const int d = a.dim();

  if (d == 2) {
    // midpoint rule over half the circle (slices are sign-invariant)
    double acc = 0.0;
    for (int i = 0; i < resolution; ++i) {
      const double phi = M_PI * (i + 0.5) / resolution;
      Eigen::Vector2d theta(std::cos(phi), std::sin(phi));
      const double dm = theta.dot(a.mean - b.mean);
      const double sa = std::sqrt(theta.dot(a.covariance * theta));
      const double sb = std::sqrt(theta.dot(b.covariance * theta));
      acc += p == 2.0 ? dm * dm + (sa - sb) * (sa - sb) : folded_normal_mean(dm, std::abs(sa - sb));
    }
    return std::pow(acc / resolution, 1.0 / p);
  }

  if (is_isotropic(a.covariance) && is_isotropic(b.covariance)) {
    const double sa = std::sqrt(a.covariance(0, 0));
    const double sb = std::sqrt(b.covariance(0, 0));
    const double dm2 = (a.mean - b.mean).squaredNorm();
    if (p == 2.0) {
      // E_theta (theta^T dm)^2 = |dm|^2 / d on the unit sphere
      return std::sqrt(dm2 / d + (sa - sb) * (sa - sb));
    }
    if (d == 1) return folded_normal_mean(a.mean(0) - b.mean(0), std::abs(sa - sb));
  }
  throw ValidationError("gaussian_sw: supported cases are d == 2, isotropic p == 2 (any d), "
                        "and d == 1");
}

}  // namespace swvi
