#include "swvi/mcmc.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "swvi/parallel.hpp"

namespace swvi {

namespace {

// Per-particle draw order is fixed (proposal gaussians, then the accept
// uniform) so the per-particle and batched paths consume identical streams.
void draw_sweep_noise(const RngStream& sweep_rng, int n, int d, bool with_uniform,
                      const KernelHooks* hooks, Eigen::MatrixXd& noise, Eigen::VectorXd& us) {
  noise.resize(n, d);
  if (with_uniform) us.resize(n);
  for (int i = 0; i < n; ++i) {
    RngStream rs = sweep_rng.substream(static_cast<std::uint64_t>(i));
    if (hooks != nullptr && hooks->noise != nullptr) {
      noise.row(i) = hooks->noise->row(i);
    } else {
      for (int j = 0; j < d; ++j) noise(i, j) = rs.next_gaussian();
    }
    if (with_uniform) {
      us(i) = (hooks != nullptr && hooks->accept_u != nullptr) ? (*hooks->accept_u)(i)
                                                               : rs.next_uniform();
    }
  }
}

double finite_log_ratio(double proposed, double current) {
  // -inf proposals are legal (zero density); anything else non-finite is not
  if (std::isnan(proposed) || proposed == std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::quiet_NaN();
  return proposed - current;
}

}  // namespace

void validate_kernel_config(const KernelConfig& cfg) {
  switch (cfg.kind) {
    case KernelKind::rwmh:
      if (!(cfg.rwmh_std > 0.0)) throw ValidationError("kernel: rwmh_std must be > 0");
      break;
    case KernelKind::ula:
      if (!(cfg.ula_step > 0.0)) throw ValidationError("kernel: ula_step must be > 0");
      break;
    case KernelKind::hmc:
      if (!(cfg.hmc_step > 0.0)) throw ValidationError("kernel: hmc_step must be > 0");
      if (cfg.hmc_leapfrogs < 1) throw ValidationError("kernel: hmc_leapfrogs must be >= 1");
      break;
  }
}

std::pair<ParticleCloud, ChainStats> step_rwmh(const ParticleCloud& cloud, const Target& target,
                                               double proposal_std, const RngStream& sweep_rng,
                                               const KernelHooks* hooks) {
  if (!(proposal_std > 0.0)) throw ValidationError("step_rwmh: proposal std must be > 0");
  const int n = cloud.size();
  const int d = cloud.dim();

  Eigen::MatrixXd noise;
  Eigen::VectorXd us;
  draw_sweep_noise(sweep_rng, n, d, /*with_uniform=*/true, hooks, noise, us);

  Eigen::MatrixXd proposed = cloud.points + proposal_std * noise;
  ParticleCloud next;
  next.points.resize(n, d);
  std::vector<char> accepted(n, 0);

  if (target.log_unnorm_batch) {
    Eigen::VectorXd la = target.log_unnorm_batch(cloud.points);
    Eigen::VectorXd lp = target.log_unnorm_batch(proposed);
    for (int i = 0; i < n; ++i) {
      const double ratio = finite_log_ratio(lp(i), la(i));
      const bool acc = !std::isnan(ratio) && std::log(us(i)) < ratio;
      if (acc)
        next.points.row(i) = proposed.row(i);
      else
        next.points.row(i) = cloud.points.row(i);
      accepted[i] = acc;
    }
  } else {
    parallel_for(n, [&](int i) {
      const double la = target.log_unnorm(cloud.points.row(i));
      const double lp = target.log_unnorm(proposed.row(i));
      const double ratio = finite_log_ratio(lp, la);
      const bool acc = !std::isnan(ratio) && std::log(us(i)) < ratio;
      if (acc)
        next.points.row(i) = proposed.row(i);
      else
        next.points.row(i) = cloud.points.row(i);
      accepted[i] = acc;
    });
  }

  ChainStats stats;
  long n_acc = 0;
  for (char a : accepted) n_acc += a;
  stats.acceptance_rate = static_cast<double>(n_acc) / n;
  return {std::move(next), stats};
}

std::pair<ParticleCloud, ChainStats> step_ula(const ParticleCloud& cloud, const Target& target,
                                              double eps, const RngStream& sweep_rng,
                                              const KernelHooks* hooks) {
  if (!(eps > 0.0)) throw ValidationError("step_ula: step size must be > 0");
  const int n = cloud.size();
  const int d = cloud.dim();

  Eigen::MatrixXd noise;
  Eigen::VectorXd unused;
  draw_sweep_noise(sweep_rng, n, d, /*with_uniform=*/false, hooks, noise, unused);

  Eigen::MatrixXd grads(n, d);
  if (target.grad_log_unnorm_batch) {
    grads = target.grad_log_unnorm_batch(cloud.points);
  } else {
    parallel_for(n, [&](int i) {
      grads.row(i) = target.grad_log_unnorm(cloud.points.row(i)).transpose();
    });
  }
  for (int i = 0; i < n; ++i)
    if (!grads.row(i).allFinite())
      throw NumericError("step_ula: non-finite gradient at particle " + std::to_string(i));

  ParticleCloud next;
  next.points = cloud.points + eps * grads + std::sqrt(2.0 * eps) * noise;
  ChainStats stats;
  stats.acceptance_rate = 1.0;  // unadjusted
  return {std::move(next), stats};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog(const Target& target,
                                                     const Eigen::VectorXd& z,
                                                     const Eigen::VectorXd& r, double step,
                                                     int n_steps) {
  Eigen::VectorXd zc = z;
  Eigen::VectorXd rc = r + 0.5 * step * target.grad_log_unnorm(zc);
  for (int l = 0; l < n_steps; ++l) {
    zc += step * rc;
    Eigen::VectorXd g = target.grad_log_unnorm(zc);
    rc += (l + 1 < n_steps ? step : 0.5 * step) * g;
  }
  return {std::move(zc), std::move(rc)};
}

std::pair<ParticleCloud, ChainStats> step_hmc(const ParticleCloud& cloud, const Target& target,
                                              double step, int leapfrogs,
                                              const RngStream& sweep_rng,
                                              const KernelHooks* hooks) {
  if (!(step > 0.0)) throw ValidationError("step_hmc: step size must be > 0");
  if (leapfrogs < 1) throw ValidationError("step_hmc: leapfrog count must be >= 1");
  const int n = cloud.size();
  const int d = cloud.dim();

  Eigen::MatrixXd momenta;
  Eigen::VectorXd us;
  draw_sweep_noise(sweep_rng, n, d, /*with_uniform=*/true, hooks, momenta, us);

  ParticleCloud next;
  next.points.resize(n, d);
  std::vector<char> accepted(n, 0);

  parallel_for(n, [&](int i) {
    const Eigen::VectorXd z0 = cloud.points.row(i);
    const Eigen::VectorXd r0 = momenta.row(i);
    const double h0 = -target.log_unnorm(z0) + 0.5 * r0.squaredNorm();
    auto [z1, r1] = leapfrog(target, z0, r0, step, leapfrogs);
    bool acc = false;
    if (z1.allFinite() && r1.allFinite()) {
      const double h1 = -target.log_unnorm(z1) + 0.5 * r1.squaredNorm();
      acc = std::isfinite(h1) && std::log(us(i)) < (h0 - h1);
    }
    if (acc)
      next.points.row(i) = z1.transpose();
    else
      next.points.row(i) = z0.transpose();
    accepted[i] = acc;
  });

  ChainStats stats;
  long n_acc = 0;
  for (char a : accepted) n_acc += a;
  stats.acceptance_rate = static_cast<double>(n_acc) / n;
  return {std::move(next), stats};
}

std::pair<ParticleCloud, ChainStats> apply_kernel(const ParticleCloud& cloud,
                                                  const Target& target, const KernelConfig& cfg,
                                                  const RngStream& sweep_rng,
                                                  const KernelHooks* hooks) {
  validate_kernel_config(cfg);
  switch (cfg.kind) {
    case KernelKind::rwmh:
      return step_rwmh(cloud, target, cfg.rwmh_std, sweep_rng, hooks);
    case KernelKind::ula:
      return step_ula(cloud, target, cfg.ula_step, sweep_rng, hooks);
    case KernelKind::hmc:
      return step_hmc(cloud, target, cfg.hmc_step, cfg.hmc_leapfrogs, sweep_rng, hooks);
  }
  throw ValidationError("apply_kernel: unknown kernel kind");
}

}  // namespace swvi
