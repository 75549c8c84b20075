#include "swvi/engine.hpp"

#include <chrono>
#include <cmath>

#include "swvi/sliced_wasserstein.hpp"

namespace swvi {

namespace {

// purpose tags for the per-run substreams
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamKernel = 2;
constexpr std::uint64_t kStreamProjections = 3;
constexpr std::uint64_t kStreamBatch = 4;

}  // namespace

Eigen::VectorXd optimizer_step(OptimizerState& state, const Eigen::VectorXd& grad, double alpha,
                               const OptimizerConfig& cfg) {
  if (cfg.kind == OptimizerKind::sgd) return -alpha * grad;
  if (state.t == 0) {
    state.m = Eigen::VectorXd::Zero(grad.size());
    state.v = Eigen::VectorXd::Zero(grad.size());
  }
  if (state.m.size() != grad.size())
    throw ValidationError("optimizer_step: gradient size changed mid-run");
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  Eigen::ArrayXd m_hat = state.m.array() / c1;
  Eigen::ArrayXd v_hat = state.v.array() / c2;
  return (-alpha * m_hat / (v_hat.sqrt() + cfg.eps_num)).matrix();
}

void validate_config(const SwviConfig& cfg) {
  if (cfg.iterations < 1) throw ValidationError("config: iterations must be >= 1");
  if (cfg.warmup < 0 || cfg.warmup > cfg.iterations)
    throw ValidationError("config: need iterations >= warmup >= 0");
  if (cfg.particles < 2) throw ValidationError("config: particles must be >= 2");
  if (cfg.projections < 1) throw ValidationError("config: projections must be >= 1");
  if (cfg.p < 1.0) throw ValidationError("config: order p must be >= 1");
  if (cfg.learning_rate < 0.0) throw ValidationError("config: learning rate must be >= 0");
  validate_kernel_config(cfg.kernel);
}

RunTrace run_swvi(const Target& target, const FamilyParams& family, const SwviConfig& config) {
  validate_config(config);
  validate_family(family);
  if (target.dim != family.dim)
    throw ValidationError("run_swvi: target dim " + std::to_string(target.dim) +
                          " != family dim " + std::to_string(family.dim));

  const RngStream root(config.seed);
  const int n = config.particles;

  ParticleCloud cloud;
  if (config.init_cloud.has_value()) {
    cloud = *config.init_cloud;
    validate_cloud(cloud, "run_swvi: init cloud");
    if (cloud.size() != n || cloud.dim() != target.dim)
      throw ValidationError("run_swvi: init cloud shape does not match config");
  } else {
    cloud = forward(family, n, root.substream(kStreamInit)).cloud;
  }

  FamilyParams params = family;
  OptimizerState opt_state;
  RunTrace trace;
  trace.records.reserve(config.iterations);

  ProjectionSet frozen;
  if (!config.resample_projections)
    frozen = sample_projections(target.dim, config.projections, root.substream(kStreamProjections, 0));

  for (int t = 0; t < config.iterations; ++t) {
    const auto tic = std::chrono::steady_clock::now();

    auto [next_cloud, stats] = apply_kernel(cloud, target, config.kernel,
                                            root.substream(kStreamKernel, t),
                                            config.kernel_hooks);
    cloud = std::move(next_cloud);
    stats.step_index = t;

    ProjectionSet fresh;
    if (config.resample_projections)
      fresh = sample_projections(target.dim, config.projections,
                                 root.substream(kStreamProjections, t));
    const ProjectionSet& proj = config.resample_projections ? fresh : frozen;

    SampleBatch batch = forward(params, n, root.substream(kStreamBatch, t));
    const bool update = t >= config.warmup;
    SwEvaluation eval = sliced_wasserstein(batch.cloud, cloud, proj, config.p, update);
    if (!std::isfinite(eval.value))
      throw NumericError("run_swvi: non-finite loss at iteration " + std::to_string(t));

    if (update) {
      Eigen::VectorXd grad_phi = backward(batch, *eval.grad_x);
      if (!grad_phi.allFinite())
        throw NumericError("run_swvi: non-finite gradient at iteration " + std::to_string(t));
      params.values += optimizer_step(opt_state, grad_phi, config.learning_rate, config.optimizer);
      if (!params.values.allFinite())
        throw NumericError("run_swvi: non-finite parameters at iteration " + std::to_string(t));
    }

    const auto toc = std::chrono::steady_clock::now();
    trace.records.push_back(
        {t, eval.value, stats.acceptance_rate,
         std::chrono::duration<double, std::milli>(toc - tic).count()});
  }

  trace.final_params = std::move(params);
  trace.final_cloud = std::move(cloud);
  trace.stationarity.window = config.stationarity_window;
  trace.stationarity.tol = config.stationarity_tol;
  const auto losses = trace.sw_losses();
  if (static_cast<int>(losses.size()) >= 2 * config.stationarity_window)
    trace.stationarity.burn_in =
        detect_stationarity(losses, config.stationarity_window, config.stationarity_tol);
  return trace;
}

std::optional<int> detect_stationarity(std::span<const double> series, int window, double tol) {
  if (window < 2) throw ValidationError("detect_stationarity: window must be >= 2");
  if (!(tol > 0.0)) throw ValidationError("detect_stationarity: tol must be > 0");
  const int len = static_cast<int>(series.size());
  if (len < 2 * window)
    throw ValidationError("detect_stationarity: series of length " + std::to_string(len) +
                          " is shorter than twice the window");

  // trailing mean of width `window` (partial windows at the start)
  std::vector<double> smooth(len);
  double acc = 0.0;
  for (int i = 0; i < len; ++i) {
    acc += series[i];
    if (i >= window) acc -= series[i - window];
    smooth[i] = acc / std::min(i + 1, window);
  }

  for (int m = 0; m + window < len; ++m) {
    bool ok = true;
    for (int i = m; i < m + window; ++i) {
      const double denom = std::max(std::abs(smooth[i]), 1e-300);
      if (std::abs(smooth[i + 1] - smooth[i]) / denom >= tol) {
        ok = false;
        break;
      }
    }
    if (ok) return m;
  }
  return std::nullopt;
}

}  // namespace swvi
