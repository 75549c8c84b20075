#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

#include "swvi/baselines.hpp"
#include "swvi/sliced_wasserstein.hpp"
#include "test_util.hpp"

using namespace swvi;

namespace {

GaussianSpec make_spec(std::initializer_list<double> mean, std::initializer_list<double> cov) {
  GaussianSpec s;
  s.mean.resize(mean.size());
  int i = 0;
  for (double v : mean) s.mean(i++) = v;
  const int d = static_cast<int>(mean.size());
  s.covariance.resize(d, d);
  i = 0;
  for (double v : cov) s.covariance(i / d, i % d) = v, ++i;
  return s;
}

ParticleCloud gaussian_cloud(const GaussianSpec& spec, int n, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  Eigen::MatrixXd noise = rng.gaussian_matrix(n, spec.dim());
  return ParticleCloud((noise * llt.matrixL().transpose()).rowwise() + spec.mean.transpose());
}

}  // namespace

TEST_CASE("elbo vi: standard gaussian target is recovered") {
  auto target = gaussian_target(make_spec({0.0}, {1.0}));
  auto family = meanfield_family(Eigen::VectorXd::Constant(1, 2.0),
                                 Eigen::VectorXd::Constant(1, 0.5));
  ElboConfig cfg;
  cfg.iterations = 3000;
  cfg.batch = 256;
  cfg.learning_rate = 0.01;
  cfg.seed = 1;
  auto trace = run_elbo_vi(target, family, cfg);
  CHECK(std::abs(trace.final_params.mean()(0)) < 0.05);
  CHECK(std::abs(std::exp(trace.final_params.log_std()(0)) - 1.0) < 0.05);
  CHECK(trace.elbo.back() > trace.elbo.front());
}

TEST_CASE("elbo vi: mean-field precisions match the target precision diagonal") {
  auto spec = make_spec({0.0, 0.0}, {1.0, 0.7, 0.7, 1.0});
  auto target = gaussian_target(spec);
  auto family = meanfield_family(Eigen::VectorXd::Zero(2),
                                 Eigen::VectorXd::Constant(2, 0.3));
  ElboConfig cfg;
  cfg.iterations = 4000;
  cfg.batch = 256;
  cfg.learning_rate = 0.01;
  cfg.seed = 2;
  auto trace = run_elbo_vi(target, family, cfg);
  const Eigen::MatrixXd precision = spec.covariance.inverse();
  for (int j = 0; j < 2; ++j) {
    const double fitted_precision = std::exp(-2.0 * trace.final_params.log_std()(j));
    CHECK(std::abs(fitted_precision - precision(j, j)) / precision(j, j) < 0.05);
  }
}

TEST_CASE("elbo vi: zero learning rate leaves parameters unchanged") {
  auto target = gaussian_target(make_spec({0.0}, {1.0}));
  auto family = meanfield_family(Eigen::VectorXd::Constant(1, 1.0),
                                 Eigen::VectorXd::Zero(1));
  ElboConfig cfg;
  cfg.iterations = 50;
  cfg.batch = 32;
  cfg.learning_rate = 0.0;
  auto trace = run_elbo_vi(target, family, cfg);
  CHECK((trace.final_params.values - family.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("elbo vi: rejects mlp families") {
  auto target = gaussian_target(make_spec({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}));
  auto family = mlp_family(2, 2, {8}, Activation::tanh, RngStream(3));
  ElboConfig cfg;
  CHECK_THROWS_AS(run_elbo_vi(target, family, cfg), ValidationError);
}

TEST_CASE("exact_ot: identical clouds cost nothing") {
  auto x = test::random_cloud(6, 2, 4);
  CHECK(exact_ot(x, x, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("exact_ot: 1-D enumeration agrees with sorting") {
  ParticleCloud x((Eigen::MatrixXd(2, 1) << 1.0, 3.0).finished());
  ParticleCloud y((Eigen::MatrixXd(2, 1) << 2.0, 4.0).finished());
  const double ot = exact_ot(x, y, 1.0);
  CHECK(ot == doctest::Approx(1.0));
  std::vector<double> xs{1.0, 3.0}, ys{2.0, 4.0};
  CHECK(ot == doctest::Approx(wasserstein_1d(xs, ys, 1.0)));
}

TEST_CASE("exact_ot: crossed pairs are matched by permutation") {
  ParticleCloud x((Eigen::MatrixXd(2, 2) << 0, 0, 1, 1).finished());
  ParticleCloud y((Eigen::MatrixXd(2, 2) << 1, 1, 0, 0).finished());
  CHECK(exact_ot(x, y, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("exact_ot: rejects large clouds") {
  auto x = test::random_cloud(9, 2, 5);
  auto y = test::random_cloud(9, 2, 6);
  CHECK_THROWS_AS(exact_ot(x, y, 2.0), ValidationError);
}

TEST_CASE("sinkhorn: self divergence vanishes") {
  auto x = test::random_cloud(10, 2, 7);
  SinkhornConfig cfg;
  cfg.epsilon = 0.05;
  cfg.max_iters = 50000;
  auto r = sinkhorn_divergence(x, x, cfg);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1e-9);
}

TEST_CASE("sinkhorn: point masses give the squared distance") {
  ParticleCloud x((Eigen::MatrixXd(1, 2) << 0.3, -0.4).finished());
  ParticleCloud y((Eigen::MatrixXd(1, 2) << 1.3, 0.6).finished());
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  auto r = sinkhorn_divergence(x, y, cfg);
  CHECK(r.converged);
  CHECK(std::abs(r.value - 2.0) <= 1e-9);  // |a - b|^2 = 1 + 1
}

TEST_CASE("sinkhorn: small epsilon approaches the brute-force cost") {
  SinkhornConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.max_iters = 200000;
  cfg.tolerance = 1e-4;
  for (int trial = 0; trial < 3; ++trial) {
    auto x = test::random_cloud(6, 2, 100 + trial);
    auto y = test::random_cloud(6, 2, 200 + trial);
    const double exact_sq = std::pow(exact_ot(x, y, 2.0), 2.0);
    auto r = sinkhorn_divergence(x, y, cfg);
    CHECK(r.converged);
    CHECK(std::abs(r.value - exact_sq) / exact_sq < 0.05);
  }
}

TEST_CASE("sinkhorn: symmetric and nonnegative on random clouds") {
  SinkhornConfig cfg;
  cfg.epsilon = 0.05;
  for (int trial = 0; trial < 3; ++trial) {
    auto x = test::random_cloud(12, 3, 300 + trial);
    auto y = test::random_cloud(15, 3, 400 + trial);  // sizes may differ
    auto ab = sinkhorn_divergence(x, y, cfg);
    auto ba = sinkhorn_divergence(y, x, cfg);
    CHECK(std::abs(ab.value - ba.value) <= 1e-9);
    CHECK(ab.value >= -1e-9);
  }
}

TEST_CASE("sinkhorn: iteration cap flags non-convergence") {
  auto x = test::random_cloud(8, 2, 17);
  auto y = test::random_cloud(8, 2, 18);
  SinkhornConfig cfg;
  cfg.epsilon = 1e-4;
  cfg.max_iters = 2;
  cfg.tolerance = 1e-14;
  CHECK_FALSE(sinkhorn_divergence(x, y, cfg).converged);
}

TEST_CASE("gaussian_w2: examples") {
  auto a = make_spec({0.0}, {1.0});
  CHECK(gaussian_w2(a, a) == doctest::Approx(0.0));
  auto b = make_spec({2.0}, {1.0});
  CHECK(gaussian_w2(a, b) == doctest::Approx(2.0));
  // commuting diagonal case
  auto c = make_spec({0.0, 0.0}, {4.0, 0.0, 0.0, 1.0});
  auto d = make_spec({1.0, -1.0}, {1.0, 0.0, 0.0, 9.0});
  const double expect = std::sqrt(2.0 + (2.0 - 1.0) * (2.0 - 1.0) + (1.0 - 3.0) * (1.0 - 3.0));
  CHECK(gaussian_w2(c, d) == doctest::Approx(expect).epsilon(1e-10));

  auto bad = make_spec({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0});
  CHECK_THROWS_AS(gaussian_w2(bad, c), ValidationError);
}

TEST_CASE("gaussian_sw: examples") {
  auto a = make_spec({0.0}, {1.0});
  CHECK(gaussian_sw(a, a, 2.0) == doctest::Approx(0.0));
  auto b = make_spec({2.0}, {1.0});
  CHECK(gaussian_sw(a, b, 2.0) == doctest::Approx(2.0));
  CHECK(gaussian_sw(a, b, 1.0) == doctest::Approx(2.0));  // slices are the distributions

  // isotropic d = 2: mean gap c along e1 averages to c / sqrt(2)
  const double c = 3.0;
  auto i0 = make_spec({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
  auto i1 = make_spec({c, 0.0}, {1.0, 0.0, 0.0, 1.0});
  CHECK(gaussian_sw(i0, i1, 2.0, 8192) == doctest::Approx(c / std::sqrt(2.0)).epsilon(1e-6));

  CHECK_THROWS_AS(gaussian_sw(a, b, 3.0), ValidationError);
  auto high_aniso_a = make_spec({0.0, 0.0, 0.0},
                                {2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(gaussian_sw(high_aniso_a, high_aniso_a, 2.0), ValidationError);
}

TEST_CASE("gaussian_sw: monte carlo SW matches the quadrature oracle within 5%") {
  const int n = 5000, m = 5000;
  std::vector<std::pair<GaussianSpec, GaussianSpec>> pairs;
  pairs.emplace_back(make_spec({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}),
                     make_spec({2.0, 0.0}, {1.0, 0.0, 0.0, 1.0}));
  pairs.emplace_back(make_spec({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}),
                     make_spec({0.0, 0.0}, {4.0, 0.0, 0.0, 1.0}));
  pairs.emplace_back(make_spec({1.0, -1.0}, {1.0, 0.7, 0.7, 1.0}),
                     make_spec({0.0, 0.5}, {1.0, -0.3, -0.3, 2.0}));
  int k = 0;
  for (const auto& [a, b] : pairs) {
    const double oracle = gaussian_sw(a, b, 2.0, 8192);
    auto proj = sample_projections(2, m, RngStream(900 + k));
    auto est = sliced_wasserstein(gaussian_cloud(a, n, 910 + k), gaussian_cloud(b, n, 920 + k),
                                  proj, 2.0);
    CHECK(std::abs(est.value - oracle) / oracle < 0.05);
    ++k;
  }
}

TEST_CASE("baselines: 1-D sliced value equals the brute-force cost") {
  for (double p : {1.0, 2.0}) {
    auto x = test::random_cloud(7, 1, 21);
    auto y = test::random_cloud(7, 1, 22);
    auto proj = sample_projections(1, 5, RngStream(23));
    const double sliced = sliced_wasserstein(x, y, proj, p).value;
    CHECK(std::abs(sliced - exact_ot(x, y, p)) <= 1e-12);
  }
}
