#pragma once

#include <optional>
#include <span>
#include <vector>

#include "swvi/family.hpp"
#include "swvi/mcmc.hpp"
#include "swvi/optimizer.hpp"
#include "swvi/targets.hpp"

namespace swvi {

struct SwviConfig {
  int iterations = 500;  // T, iterations are indexed t = 0..T-1
  int warmup = 50;       // L, kernel-only iterations (t < L)
  int particles = 500;   // n, parallel chains == variational batch size
  int projections = 100; // m
  double p = 1.0;
  double learning_rate = 0.02;
  OptimizerConfig optimizer;
  KernelConfig kernel;
  bool resample_projections = true;  // false: one frozen set for the whole run
  std::optional<ParticleCloud> init_cloud;  // default: sample mu_0 from the family
  std::uint64_t seed = 0;
  int stationarity_window = 25;
  double stationarity_tol = 0.02;
  const KernelHooks* kernel_hooks = nullptr;  // test-only noise overrides
};

void validate_config(const SwviConfig& cfg);

struct IterationRecord {
  int t = 0;
  double sw_loss = 0.0;
  double acceptance_rate = 1.0;
  double wall_ms = 0.0;
};

struct StationarityReport {
  std::optional<int> burn_in;  // M, absent when the loss never settles
  int window = 0;
  double tol = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;  // exactly T entries
  FamilyParams final_params;
  ParticleCloud final_cloud;
  StationarityReport stationarity;

  std::vector<double> sw_losses() const {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(r.sw_loss);
    return v;
  }
};

// The SWVI loop: per iteration one kernel sweep over the particle cloud, a
// fresh reparameterized batch, the sample-based SW loss, and (after warmup)
// one optimizer step on the family parameters. The loss is recorded before
// the update; during warmup it is recorded for monitoring only.
RunTrace run_swvi(const Target& target, const FamilyParams& family, const SwviConfig& config);

// Smallest index M such that the trailing-mean smoothed series changes by
// less than tol (relatively) between consecutive points over [M, M + window].
std::optional<int> detect_stationarity(std::span<const double> series, int window, double tol);

}  // namespace swvi
