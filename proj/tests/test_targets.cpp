#include <doctest.h>

#include <cmath>

#include "swvi/mcmc.hpp"
#include "swvi/targets.hpp"
#include "test_util.hpp"

using namespace swvi;

namespace {

GaussianSpec standard_spec(int d) {
  GaussianSpec s;
  s.mean = Eigen::VectorXd::Zero(d);
  s.covariance = Eigen::MatrixXd::Identity(d, d);
  return s;
}

GaussianSpec correlated_2d(double rho) {
  GaussianSpec s;
  s.mean = Eigen::VectorXd::Zero(2);
  s.covariance.resize(2, 2);
  s.covariance << 1.0, rho, rho, 1.0;
  return s;
}

void check_grad_fd(const Target& t, int n_points, std::uint64_t seed, double tol = 1e-5) {
  RngStream rng(seed);
  for (int k = 0; k < n_points; ++k) {
    Eigen::VectorXd z = rng.gaussian_vector(t.dim) * 2.0;
    Eigen::VectorXd fd = test::central_diff(t.log_unnorm, z);
    CHECK(test::max_rel_error(t.grad_log_unnorm(z), fd, 1e-8) < tol);
  }
}

}  // namespace

TEST_CASE("gaussian_target: standard 1-D values") {
  auto t = gaussian_target(standard_spec(1));
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd z2 = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(t.log_unnorm(z0) == doctest::Approx(0.0));
  CHECK(t.grad_log_unnorm(z0)(0) == doctest::Approx(0.0));
  CHECK(t.log_unnorm(z2) == doctest::Approx(-2.0));
  CHECK(t.grad_log_unnorm(z2)(0) == doctest::Approx(-2.0));
}

TEST_CASE("gaussian_target: gradient vanishes at the mean") {
  GaussianSpec s = correlated_2d(0.6);
  s.mean << 1.5, -0.5;
  auto t = gaussian_target(s);
  CHECK(t.grad_log_unnorm(s.mean).norm() == doctest::Approx(0.0));
}

TEST_CASE("gaussian_target: rejects non-SPD covariance") {
  GaussianSpec s;
  s.mean = Eigen::VectorXd::Zero(2);
  s.covariance.resize(2, 2);
  s.covariance << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(gaussian_target(s), ValidationError);
  s.covariance << 1.0, 0.5, 0.4, 1.0;  // asymmetric
  CHECK_THROWS_AS(gaussian_target(s), ValidationError);
}

TEST_CASE("gaussian_target: batch forms agree with pointwise forms") {
  GaussianSpec s = correlated_2d(0.7);
  s.mean << 0.3, -1.0;
  auto t = gaussian_target(s);
  auto cloud = test::random_cloud(13, 2, 5);
  Eigen::VectorXd lp = t.log_unnorm_batch(cloud.points);
  Eigen::MatrixXd gr = t.grad_log_unnorm_batch(cloud.points);
  for (int i = 0; i < 13; ++i) {
    CHECK(lp(i) == doctest::Approx(t.log_unnorm(cloud.points.row(i))).epsilon(1e-12));
    CHECK((gr.row(i).transpose() - t.grad_log_unnorm(cloud.points.row(i))).norm() < 1e-12);
  }
}

TEST_CASE("mixture_target: single component matches the plain gaussian up to a constant") {
  GaussianSpec g = correlated_2d(0.4);
  g.mean << 0.5, 2.0;
  MixtureSpec mix;
  mix.weights = {1.0};
  mix.components = {g};
  auto tm = mixture_target(mix);
  auto tg = gaussian_target(g);
  RngStream rng(17);
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(2);
  const double offset = tm.log_unnorm(z0) - tg.log_unnorm(z0);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd z = rng.gaussian_vector(2) * 2.0;
    CHECK(tm.log_unnorm(z) - tg.log_unnorm(z) == doctest::Approx(offset).epsilon(1e-10));
    CHECK((tm.grad_log_unnorm(z) - tg.grad_log_unnorm(z)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("mixture_target: symmetric bimodal has zero gradient at the midpoint") {
  GaussianSpec a = standard_spec(1), b = standard_spec(1);
  a.mean << -2.0;
  b.mean << 2.0;
  MixtureSpec mix;
  mix.weights = {0.5, 0.5};
  mix.components = {a, b};
  auto t = mixture_target(mix);
  CHECK(std::abs(t.grad_log_unnorm(Eigen::VectorXd::Zero(1))(0)) < 1e-14);
}

TEST_CASE("mixture_target: gradient matches finite differences") {
  GaussianSpec a = correlated_2d(0.3), b = standard_spec(2);
  a.mean << -1.0, 0.5;
  b.mean << 2.0, -1.0;
  b.covariance *= 0.25;
  MixtureSpec mix;
  mix.weights = {0.3, 0.7};
  mix.components = {a, b};
  check_grad_fd(mixture_target(mix), 20, 19);
}

TEST_CASE("mixture_target: spec validation") {
  MixtureSpec mix;
  CHECK_THROWS_AS(mixture_target(mix), ValidationError);
  mix.weights = {0.5, 0.6};
  mix.components = {standard_spec(1), standard_spec(1)};
  CHECK_THROWS_AS(mixture_target(mix), ValidationError);  // weights don't sum to 1
  mix.weights = {0.5, 0.5};
  mix.components = {standard_spec(1), standard_spec(2)};
  CHECK_THROWS_AS(mixture_target(mix), ValidationError);  // dims differ
}

TEST_CASE("logistic_posterior: w = 0 gives -N log 2") {
  LogisticPosteriorSpec spec;
  spec.features = Eigen::MatrixXd::Random(11, 3);
  spec.labels = (Eigen::VectorXd::Random(11).array() > 0.0).cast<double>();
  auto t = logistic_posterior(spec);
  CHECK(t.log_unnorm(Eigen::VectorXd::Zero(3)) ==
        doctest::Approx(-11.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic_posterior: single-sample gradient at zero") {
  LogisticPosteriorSpec spec;
  spec.features = Eigen::MatrixXd::Ones(1, 1);
  spec.labels = Eigen::VectorXd::Ones(1);
  auto t = logistic_posterior(spec);
  CHECK(t.grad_log_unnorm(Eigen::VectorXd::Zero(1))(0) == doctest::Approx(0.5));
}

TEST_CASE("logistic_posterior: gradient matches finite differences") {
  RngStream rng(23);
  LogisticPosteriorSpec spec;
  spec.features = rng.gaussian_matrix(40, 4);
  spec.labels = (rng.gaussian_matrix(40, 1).array() > 0.0).cast<double>();
  check_grad_fd(logistic_posterior(spec), 20, 29);
}

TEST_CASE("logistic_posterior: stable at extreme scores") {
  LogisticPosteriorSpec spec;
  spec.features = Eigen::MatrixXd::Ones(2, 1) * 1000.0;
  spec.labels.resize(2);
  spec.labels << 1.0, 0.0;
  auto t = logistic_posterior(spec);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  CHECK(std::isfinite(t.log_unnorm(w)));
  CHECK(t.log_unnorm(w) == doctest::Approx(-1000.0));  // the y=0 row at score 1000
}

TEST_CASE("logistic_posterior: validation") {
  LogisticPosteriorSpec spec;
  spec.features = Eigen::MatrixXd::Ones(3, 2);
  spec.labels.resize(3);
  spec.labels << 0.0, 1.0, 2.0;
  CHECK_THROWS_AS(logistic_posterior(spec), ValidationError);
  spec.labels << 0.0, 1.0, 1.0;
  auto t = logistic_posterior(spec);
  CHECK_THROWS_AS(t.log_unnorm(Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST_CASE("logistic_posterior: batch forms agree with pointwise forms") {
  RngStream rng(31);
  LogisticPosteriorSpec spec;
  spec.features = rng.gaussian_matrix(25, 3);
  spec.labels = (rng.gaussian_matrix(25, 1).array() > 0.0).cast<double>();
  auto t = logistic_posterior(spec);
  auto W = test::random_cloud(9, 3, 37);
  Eigen::VectorXd lp = t.log_unnorm_batch(W.points);
  Eigen::MatrixXd gr = t.grad_log_unnorm_batch(W.points);
  for (int i = 0; i < 9; ++i) {
    CHECK(lp(i) == doctest::Approx(t.log_unnorm(W.points.row(i))).epsilon(1e-12));
    CHECK((gr.row(i).transpose() - t.grad_log_unnorm(W.points.row(i))).norm() < 1e-10);
  }
}

TEST_CASE("predict_logistic: spec examples") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 0, 1, 1, 1, -2, 0.5;

  ParticleCloud zeros(Eigen::MatrixXd::Zero(5, 2));
  Eigen::VectorXd p0 = predict_logistic(zeros, X);
  for (int i = 0; i < 4; ++i) CHECK(p0(i) == doctest::Approx(0.5));

  ParticleCloud single(Eigen::MatrixXd::Ones(1, 2));
  Eigen::VectorXd p1 = predict_logistic(single, X);
  for (int i = 0; i < 4; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-X.row(i).sum()));
    CHECK(p1(i) == doctest::Approx(s).epsilon(1e-12));
  }

  Eigen::MatrixXd pm(2, 2);
  pm << 0.7, -1.3, -0.7, 1.3;
  Eigen::VectorXd p2 = predict_logistic(ParticleCloud(pm), X);
  for (int i = 0; i < 4; ++i) CHECK(p2(i) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(predict_logistic(single, Eigen::MatrixXd::Ones(3, 5)), ValidationError);
}

TEST_CASE("targets: generic finite-difference suite at 50 points") {
  GaussianSpec g = correlated_2d(0.7);
  g.mean << 0.4, -0.6;
  check_grad_fd(gaussian_target(g), 50, 41);

  MixtureSpec mix;
  GaussianSpec a = standard_spec(2), b = standard_spec(2);
  a.mean << -2.0, 0.0;
  b.mean << 2.0, 0.0;
  b.covariance *= 4.0;
  mix.weights = {0.5, 0.5};
  mix.components = {a, b};
  check_grad_fd(mixture_target(mix), 50, 43);

  RngStream rng(47);
  LogisticPosteriorSpec spec;
  spec.features = rng.gaussian_matrix(30, 3);
  spec.labels = (rng.gaussian_matrix(30, 1).array() > 0.0).cast<double>();
  check_grad_fd(logistic_posterior(spec), 50, 53);
}

TEST_CASE("targets: kernels see only differences, so constant shifts change nothing") {
  auto base = gaussian_target(correlated_2d(0.5));
  Target shifted = base;
  auto lf = base.log_unnorm;
  auto lfb = base.log_unnorm_batch;
  shifted.log_unnorm = [lf](const Eigen::VectorXd& z) { return lf(z) + 1234.5; };
  shifted.log_unnorm_batch = [lfb](const Eigen::MatrixXd& z) {
    return Eigen::VectorXd(lfb(z).array() + 1234.5);
  };

  auto cloud = test::random_cloud(50, 2, 61);
  const RngStream sweep(777);
  auto [c1, s1] = step_rwmh(cloud, base, 1.3, sweep);
  auto [c2, s2] = step_rwmh(cloud, shifted, 1.3, sweep);
  CHECK((c1.points - c2.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.acceptance_rate == s2.acceptance_rate);

  auto [u1, t1] = step_ula(cloud, base, 0.05, sweep);
  auto [u2, t2] = step_ula(cloud, shifted, 0.05, sweep);
  CHECK((u1.points - u2.points).cwiseAbs().maxCoeff() == 0.0);

  auto [h1, v1] = step_hmc(cloud, base, 0.1, 5, sweep);
  auto [h2, v2] = step_hmc(cloud, shifted, 0.1, 5, sweep);
  CHECK((h1.points - h2.points).cwiseAbs().maxCoeff() == 0.0);
}
