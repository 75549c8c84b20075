#include <doctest.h>

#include <cmath>

#include "swvi/mcmc.hpp"
#include "swvi/parallel.hpp"
#include "test_util.hpp"

using namespace swvi;

namespace {

Target standard_gaussian(int d) {
  GaussianSpec s;
  s.mean = Eigen::VectorXd::Zero(d);
  s.covariance = Eigen::MatrixXd::Identity(d, d);
  return gaussian_target(s);
}

Target flat_target(int d) {
  Target t;
  t.dim = d;
  t.log_unnorm = [](const Eigen::VectorXd&) { return 0.0; };
  t.grad_log_unnorm = [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d); };
  return t;
}

std::pair<double, double> cloud_moments(const ParticleCloud& c, int col) {
  const double mean = c.points.col(col).mean();
  const double var = (c.points.col(col).array() - mean).square().mean();
  return {mean, var};
}

}  // namespace

TEST_CASE("rwmh: identity proposal is always accepted and changes nothing") {
  auto target = standard_gaussian(2);
  auto cloud = test::random_cloud(16, 2, 1);
  Eigen::MatrixXd zero_noise = Eigen::MatrixXd::Zero(16, 2);
  KernelHooks hooks{&zero_noise, nullptr};
  auto [next, stats] = step_rwmh(cloud, target, 2.5, RngStream(2), &hooks);
  CHECK(stats.acceptance_rate == 1.0);
  CHECK((next.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rwmh: uphill proposals are always accepted") {
  auto target = standard_gaussian(1);
  ParticleCloud cloud(Eigen::MatrixXd::Constant(8, 1, 3.0));
  Eigen::MatrixXd downhill_noise = Eigen::MatrixXd::Constant(8, 1, -1.0);  // toward the mode
  Eigen::VectorXd worst_u = Eigen::VectorXd::Constant(8, 1.0 - 1e-12);
  KernelHooks hooks{&downhill_noise, &worst_u};
  auto [next, stats] = step_rwmh(cloud, target, 2.0, RngStream(3), &hooks);
  CHECK(stats.acceptance_rate == 1.0);
  CHECK(next.points(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("rwmh: long run recovers standard normal moments") {
  auto target = standard_gaussian(1);
  ParticleCloud cloud(Eigen::MatrixXd::Constant(2000, 1, 3.0));
  const RngStream root(12345);
  ChainStats stats;
  for (int t = 0; t < 5000; ++t) std::tie(cloud, stats) = step_rwmh(cloud, target, 2.5, root.substream(t));
  auto [mean, var] = cloud_moments(cloud, 0);
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::abs(var - 1.0) < 0.15);
  CHECK(stats.acceptance_rate > 0.1);
  CHECK(stats.acceptance_rate < 0.9);
}

TEST_CASE("ula: drift-only update matches hand arithmetic") {
  auto target = standard_gaussian(1);
  ParticleCloud cloud(Eigen::MatrixXd::Constant(1, 1, 1.0));
  Eigen::MatrixXd zero_noise = Eigen::MatrixXd::Zero(1, 1);
  KernelHooks hooks{&zero_noise, nullptr};
  auto [next, stats] = step_ula(cloud, target, 0.1, RngStream(4), &hooks);
  CHECK(next.points(0, 0) == doctest::Approx(0.9));  // 1 + 0.1 * (-1)
  CHECK(stats.acceptance_rate == 1.0);
}

TEST_CASE("ula: flat target with zero noise stays put") {
  auto target = flat_target(3);
  auto cloud = test::random_cloud(6, 3, 5);
  Eigen::MatrixXd zero_noise = Eigen::MatrixXd::Zero(6, 3);
  KernelHooks hooks{&zero_noise, nullptr};
  auto [next, stats] = step_ula(cloud, target, 0.2, RngStream(6), &hooks);
  CHECK((next.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ula: long run variance close to the target") {
  auto target = standard_gaussian(2);
  ParticleCloud cloud(Eigen::MatrixXd::Zero(2000, 2));
  const RngStream root(999);
  ChainStats stats;
  for (int t = 0; t < 10000; ++t) std::tie(cloud, stats) = step_ula(cloud, target, 0.01, root.substream(t));
  // discrete-time fixed point: var = 2 eps / (1 - (1 - eps)^2) ~ 1.005 at eps = 0.01
  for (int col = 0; col < 2; ++col) {
    auto [mean, var] = cloud_moments(cloud, col);
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::abs(var - 1.0) < 0.1);
  }
}

TEST_CASE("ula: non-finite gradient names the particle") {
  Target bad = flat_target(1);
  bad.grad_log_unnorm = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd g(1);
    g(0) = z(0) > 100.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    return g;
  };
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(5, 1);
  pts(3, 0) = 200.0;
  try {
    step_ula(ParticleCloud(pts), bad, 0.1, RngStream(7));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("particle 3") != std::string::npos);
  }
}

TEST_CASE("hmc: one leapfrog step by hand") {
  auto target = standard_gaussian(1);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(1);
  auto [z1, r1] = leapfrog(target, z, r, 0.1, 1);
  // half kick: r = -0.05; drift: z = 1 - 0.005 = 0.995; half kick: r = -0.05 - 0.04975
  CHECK(z1(0) == doctest::Approx(0.995));
  CHECK(r1(0) == doctest::Approx(-0.09975));
  CHECK((z1(0) - z(0)) / 0.1 == doctest::Approx(-0.05));  // implied half-step momentum
}

TEST_CASE("hmc: vanishing step size accepts everything") {
  auto target = standard_gaussian(3);
  auto cloud = test::random_cloud(64, 3, 8);
  auto [next, stats] = step_hmc(cloud, target, 1e-8, 3, RngStream(9));
  CHECK(stats.acceptance_rate == 1.0);
}

TEST_CASE("hmc: leapfrog is time-reversible") {
  GaussianSpec s;
  s.mean = Eigen::VectorXd::Zero(2);
  s.covariance.resize(2, 2);
  s.covariance << 2.0, 0.5, 0.5, 1.0;
  auto target = gaussian_target(s);
  RngStream rng(10);
  Eigen::VectorXd z0 = rng.gaussian_vector(2);
  Eigen::VectorXd r0 = rng.gaussian_vector(2);
  auto [z1, r1] = leapfrog(target, z0, r0, 0.13, 7);
  auto [z2, r2] = leapfrog(target, z1, Eigen::VectorXd(-r1), 0.13, 7);
  CHECK((z2 - z0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((r2 + r0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hmc: long run recovers the target moments") {
  auto target = standard_gaussian(1);
  ParticleCloud cloud(Eigen::MatrixXd::Constant(1000, 1, 2.0));
  const RngStream root(77);
  ChainStats stats;
  for (int t = 0; t < 300; ++t)
    std::tie(cloud, stats) = step_hmc(cloud, target, 0.2, 8, root.substream(t));
  auto [mean, var] = cloud_moments(cloud, 0);
  CHECK(std::abs(mean) < 0.12);
  CHECK(std::abs(var - 1.0) < 0.15);
  CHECK(stats.acceptance_rate > 0.9);  // near-exact integration at this step size
}

TEST_CASE("kernels: config validation") {
  KernelConfig cfg;
  cfg.kind = KernelKind::rwmh;
  cfg.rwmh_std = 0.0;
  CHECK_THROWS_AS(validate_kernel_config(cfg), ValidationError);
  cfg.kind = KernelKind::ula;
  cfg.ula_step = -1.0;
  CHECK_THROWS_AS(validate_kernel_config(cfg), ValidationError);
  cfg.kind = KernelKind::hmc;
  cfg.hmc_step = 0.1;
  cfg.hmc_leapfrogs = 0;
  CHECK_THROWS_AS(validate_kernel_config(cfg), ValidationError);
}

TEST_CASE("kernels: identical seeds give bit-identical sweeps at any worker count") {
  auto target = standard_gaussian(3);
  // no batch form: force the per-particle parallel path
  Target pointwise = target;
  pointwise.log_unnorm_batch = nullptr;
  pointwise.grad_log_unnorm_batch = nullptr;
  auto cloud = test::random_cloud(101, 3, 11);
  const RngStream sweep(13);

  for (auto kind : {KernelKind::rwmh, KernelKind::ula, KernelKind::hmc}) {
    KernelConfig cfg;
    cfg.kind = kind;
    cfg.rwmh_std = 1.1;
    cfg.ula_step = 0.02;
    cfg.hmc_step = 0.1;
    cfg.hmc_leapfrogs = 4;
    set_max_threads(1);
    auto [serial, s1] = apply_kernel(cloud, pointwise, cfg, sweep);
    set_max_threads(4);
    auto [threaded, s2] = apply_kernel(cloud, pointwise, cfg, sweep);
    set_max_threads(0);
    CHECK((serial.points - threaded.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.acceptance_rate == s2.acceptance_rate);
  }
}

TEST_CASE("kernels: batch and pointwise target paths agree") {
  auto target = standard_gaussian(2);
  Target pointwise = target;
  pointwise.log_unnorm_batch = nullptr;
  pointwise.grad_log_unnorm_batch = nullptr;
  auto cloud = test::random_cloud(37, 2, 15);
  const RngStream sweep(17);

  auto [a1, s1] = step_rwmh(cloud, target, 1.7, sweep);
  auto [a2, s2] = step_rwmh(cloud, pointwise, 1.7, sweep);
  CHECK((a1.points - a2.points).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s1.acceptance_rate == s2.acceptance_rate);

  auto [b1, t1] = step_ula(cloud, target, 0.03, sweep);
  auto [b2, t2] = step_ula(cloud, pointwise, 0.03, sweep);
  CHECK((b1.points - b2.points).cwiseAbs().maxCoeff() < 1e-12);
}
