#pragma once

#include <utility>

#include "swvi/rng.hpp"
#include "swvi/targets.hpp"
#include "swvi/types.hpp"

namespace swvi {

enum class KernelKind { rwmh, ula, hmc };

struct KernelConfig {
  KernelKind kind = KernelKind::rwmh;
  double rwmh_std = 1.0;
  double ula_step = 1e-4;
  double hmc_step = 0.05;
  int hmc_leapfrogs = 10;
};

struct ChainStats {
  double acceptance_rate = 1.0;  // over the last sweep; 1.0 by definition for ULA
  long step_index = 0;
};

// Test-only overrides for the per-particle draws. `noise` replaces the
// proposal/momentum gaussians (row i for particle i), `accept_u` the
// accept/reject uniforms.
struct KernelHooks {
  const Eigen::MatrixXd* noise = nullptr;
  const Eigen::VectorXd* accept_u = nullptr;
};

// One sweep of each kernel: particle i consumes only sweep_rng.substream(i),
// so results are identical for any worker count. sweep_rng itself should be
// derived from (seed, sweep index).
std::pair<ParticleCloud, ChainStats> step_rwmh(const ParticleCloud& cloud, const Target& target,
                                               double proposal_std, const RngStream& sweep_rng,
                                               const KernelHooks* hooks = nullptr);

std::pair<ParticleCloud, ChainStats> step_ula(const ParticleCloud& cloud, const Target& target,
                                              double eps, const RngStream& sweep_rng,
                                              const KernelHooks* hooks = nullptr);

std::pair<ParticleCloud, ChainStats> step_hmc(const ParticleCloud& cloud, const Target& target,
                                              double step, int leapfrogs,
                                              const RngStream& sweep_rng,
                                              const KernelHooks* hooks = nullptr);

std::pair<ParticleCloud, ChainStats> apply_kernel(const ParticleCloud& cloud,
                                                  const Target& target, const KernelConfig& cfg,
                                                  const RngStream& sweep_rng,
                                                  const KernelHooks* hooks = nullptr);

// Leapfrog integration of H(z, r) = -log mu(z) + |r|^2 / 2. Exposed for the
// reversibility and hand-arithmetic checks.
std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog(const Target& target,
                                                     const Eigen::VectorXd& z,
                                                     const Eigen::VectorXd& r, double step,
                                                     int n_steps);

void validate_kernel_config(const KernelConfig& cfg);

}  // namespace swvi
