#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swvi/rng.hpp"
#include "swvi/types.hpp"

namespace swvi {

enum class FamilyKind { meanfield, fullcov, mlp };
enum class Activation { tanh, relu };

std::string to_string(FamilyKind kind);
std::string to_string(Activation act);
FamilyKind family_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

// Reparameterized sampler z = g_phi(eps). One flat parameter vector plus the
// shape metadata needed to interpret it:
//   meanfield: [mean(d) | log_std(d)]
//   fullcov:   [mean(d) | strict lower triangle, row-major | log diagonal(d)]
//   mlp:       per layer [W row-major (out x in) | b(out)], noise -> hidden... -> d
struct FamilyParams {
  FamilyKind kind = FamilyKind::meanfield;
  int dim = 0;
  int noise_dim = 0;
  std::vector<int> hidden;  // mlp only
  Activation activation = Activation::tanh;
  Eigen::VectorXd values;

  int param_count() const { return static_cast<int>(values.size()); }

  // gaussian-family views
  Eigen::VectorXd mean() const;
  Eigen::VectorXd log_std() const;       // meanfield
  Eigen::MatrixXd scale_tril() const;    // fullcov: L with exp(log diag)
  Eigen::MatrixXd covariance() const;    // gaussian kinds: L L^T (or diag)

  // mlp layer views: widths [noise_dim, hidden..., dim]
  std::vector<int> layer_widths() const;
};

FamilyParams meanfield_family(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);
FamilyParams fullcov_family(const Eigen::VectorXd& mean, const Eigen::MatrixXd& scale_tril);
// Glorot-uniform weights, zero biases.
FamilyParams mlp_family(int dim, int noise_dim, const std::vector<int>& hidden,
                        Activation activation, RngStream init_rng);

void validate_family(const FamilyParams& params);

// One reparameterized draw batch together with the intermediates needed to
// run the backward pass. Single consumer: backward() invalidates the tape.
struct SampleBatch {
  FamilyParams params;
  Eigen::MatrixXd noise;  // n x noise_dim
  ParticleCloud cloud;    // n x dim
  std::vector<Eigen::MatrixXd> hidden_pre;  // mlp pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> hidden_act;  // mlp activations per hidden layer
  bool consumed = false;
};

SampleBatch forward(const FamilyParams& params, int n, RngStream rng);

// Same forward pass with caller-supplied noise (one draw per row); used for
// frozen-noise gradient checks.
SampleBatch forward_with_noise(const FamilyParams& params, Eigen::MatrixXd noise);

// sum_i (dz_i/dphi)^T grad_z_i, reverse accumulation through the stored tape.
Eigen::VectorXd backward(SampleBatch& batch, const Eigen::MatrixXd& grad_z);

// Closed-form Gaussian entropy and exact per-sample log density; rejects mlp.
std::pair<double, Eigen::VectorXd> entropy_and_logdensity(const FamilyParams& params,
                                                          const ParticleCloud& cloud);

// Gradient of the closed-form entropy w.r.t. phi (gaussian kinds only).
Eigen::VectorXd entropy_grad(const FamilyParams& params);

std::string family_to_json(const FamilyParams& params);
FamilyParams family_from_json(const std::string& text);

}  // namespace swvi
