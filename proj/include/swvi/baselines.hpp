#pragma once

#include <vector>

#include "swvi/family.hpp"
#include "swvi/optimizer.hpp"
#include "swvi/targets.hpp"

namespace swvi {

struct ElboConfig {
  int iterations = 2000;
  int batch = 128;
  double learning_rate = 0.02;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

struct ElboTrace {
  std::vector<double> elbo;  // Monte Carlo estimate per iteration, before the step
  FamilyParams final_params;
};

// Reverse-KL baseline: maximizes E[log mu_bar(z)] + H(v_phi) with
// reparameterized gradients and the closed-form entropy. Gaussian kinds only.
ElboTrace run_elbo_vi(const Target& target, const FamilyParams& family, const ElboConfig& cfg);

// Exact p-Wasserstein between equal-size, equal-weight clouds by brute force
// over assignments; n <= 8.
double exact_ot(const ParticleCloud& x, const ParticleCloud& y, double p);

struct SinkhornConfig {
  double epsilon = 0.01;
  int max_iters = 50000;
  double tolerance = 1e-6;  // L1 marginal violation
};

struct SinkhornResult {
  double value = 0.0;
  bool converged = false;
};

// Debiased entropic OT on the squared-Euclidean cost, log-domain iterations:
// S_eps(x, y) = OT_eps(x, y) - OT_eps(x, x)/2 - OT_eps(y, y)/2.
SinkhornResult sinkhorn_divergence(const ParticleCloud& x, const ParticleCloud& y,
                                   const SinkhornConfig& cfg);

// Closed-form 2-Wasserstein between Gaussians (Bures metric).
double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b);

// Quadrature SW_p between Gaussians: every slice is the 1-D Gaussian
// N(theta^T m, theta^T Sigma theta). Supports d == 2 via an angle grid, and
// isotropic covariances in any dimension (p == 2 closed form, p == 1 via the
// folded-normal mean for d <= 2).
double gaussian_sw(const GaussianSpec& a, const GaussianSpec& b, double p = 2.0,
                   int resolution = 4096);

}  // namespace swvi
