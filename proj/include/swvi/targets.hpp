#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "swvi/types.hpp"

namespace swvi {

// Unnormalized log-density with gradient; the normalizing constant is never
// computed anywhere. Batch forms evaluate one particle per row and must agree
// with the pointwise forms; kernels prefer them when present.
struct Target {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> log_unnorm;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_unnorm;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> log_unnorm_batch;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> grad_log_unnorm_batch;
};

struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  int dim() const { return static_cast<int>(mean.size()); }
};

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<GaussianSpec> components;

  int dim() const { return components.empty() ? 0 : components.front().dim(); }
};

struct LogisticPosteriorSpec {
  Eigen::MatrixXd features;  // N x d
  Eigen::VectorXd labels;    // entries in {0, 1}
};

Target gaussian_target(const GaussianSpec& spec);
Target mixture_target(const MixtureSpec& spec);

// Flat prior: log posterior = Bernoulli log likelihood, evaluated via
// log s(t) = -softplus(-t).
Target logistic_posterior(const LogisticPosteriorSpec& spec);

// Posterior-mean probability of class 1 for each feature row, averaging
// s(x^T w) over the weight samples.
Eigen::VectorXd predict_logistic(const ParticleCloud& weight_samples,
                                 const Eigen::MatrixXd& features);

}  // namespace swvi
