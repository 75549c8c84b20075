#include "swvi/targets.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <memory>

namespace swvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::LLT<Eigen::MatrixXd> checked_llt(const GaussianSpec& spec, const char* what) {
  const auto d = spec.mean.size();
  if (spec.covariance.rows() != d || spec.covariance.cols() != d)
    throw ValidationError(std::string(what) + ": covariance shape does not match mean");
  if (d < 1) throw ValidationError(std::string(what) + ": dimension must be >= 1");
  if (!spec.mean.allFinite() || !spec.covariance.allFinite())
    throw NumericError(std::string(what) + ": non-finite spec");
  if ((spec.covariance - spec.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ValidationError(std::string(what) + ": covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success)
    throw ValidationError(std::string(what) + ": covariance is not positive definite");
  return llt;
}

inline double softplus(double t) {
  // overflow-safe: softplus(t) = max(t, 0) + log1p(exp(-|t|))
  return (t > 0.0 ? t : 0.0) + std::log1p(std::exp(-std::abs(t)));
}

}  // namespace

Target gaussian_target(const GaussianSpec& spec) {
  auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(checked_llt(spec, "gaussian_target"));
  auto mean = std::make_shared<Eigen::VectorXd>(spec.mean);

  Target t;
  t.dim = spec.dim();
  t.log_unnorm = [llt, mean](const Eigen::VectorXd& z) {
    Eigen::VectorXd u = llt->matrixL().solve(z - *mean);
    return -0.5 * u.squaredNorm();
  };
  t.grad_log_unnorm = [llt, mean](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(-llt->solve(z - *mean));
  };
  t.log_unnorm_batch = [llt, mean](const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd U = llt->matrixL().solve((Z.rowwise() - mean->transpose()).transpose());
    return Eigen::VectorXd(-0.5 * U.colwise().squaredNorm().transpose());
  };
  t.grad_log_unnorm_batch = [llt, mean](const Eigen::MatrixXd& Z) {
    return Eigen::MatrixXd(-llt->solve((Z.rowwise() - mean->transpose()).transpose()).transpose());
  };
  return t;
}

Target mixture_target(const MixtureSpec& spec) {
  const int c = static_cast<int>(spec.components.size());
  if (c < 1) throw ValidationError("mixture_target: need at least one component");
  if (static_cast<int>(spec.weights.size()) != c)
    throw ValidationError("mixture_target: weights/components size mismatch");
  const int d = spec.dim();
  double wsum = 0.0;
  for (double w : spec.weights) {
    if (w <= 0.0) throw ValidationError("mixture_target: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw ValidationError("mixture_target: weights must sum to 1");

  struct Component {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_norm;  // log w_c - (d/2) log 2pi - (1/2) log det Sigma_c
  };
  auto comps = std::make_shared<std::vector<Component>>();
  comps->reserve(c);
  for (int i = 0; i < c; ++i) {
    const auto& g = spec.components[i];
    if (g.dim() != d) throw ValidationError("mixture_target: component dims differ");
    auto llt = checked_llt(g, "mixture_target");
    double logdet = 0.0;
    for (int j = 0; j < d; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
    comps->push_back({g.mean, std::move(llt),
                      std::log(spec.weights[i]) - 0.5 * d * kLog2Pi - 0.5 * logdet});
  }

  // per-component log densities at z, returned for reuse by the gradient
  auto comp_logs = [comps](const Eigen::VectorXd& z) {
    Eigen::VectorXd logs(comps->size());
    for (std::size_t i = 0; i < comps->size(); ++i) {
      const auto& cm = (*comps)[i];
      Eigen::VectorXd u = cm.llt.matrixL().solve(z - cm.mean);
      logs(i) = cm.log_norm - 0.5 * u.squaredNorm();
    }
    return logs;
  };

  Target t;
  t.dim = d;
  t.log_unnorm = [comp_logs](const Eigen::VectorXd& z) {
    Eigen::VectorXd logs = comp_logs(z);
    double mx = logs.maxCoeff();
    return mx + std::log((logs.array() - mx).exp().sum());
  };
  t.grad_log_unnorm = [comps, comp_logs](const Eigen::VectorXd& z) {
    Eigen::VectorXd logs = comp_logs(z);
    double mx = logs.maxCoeff();
    Eigen::VectorXd resp = (logs.array() - mx).exp();
    resp /= resp.sum();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
    for (std::size_t i = 0; i < comps->size(); ++i)
      g -= resp(i) * (*comps)[i].llt.solve(z - (*comps)[i].mean);
    return g;
  };
  auto pointwise_log = t.log_unnorm;
  auto pointwise_grad = t.grad_log_unnorm;
  t.log_unnorm_batch = [pointwise_log](const Eigen::MatrixXd& Z) {
    Eigen::VectorXd out(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) out(i) = pointwise_log(Z.row(i));
    return out;
  };
  t.grad_log_unnorm_batch = [pointwise_grad](const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd out(Z.rows(), Z.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      out.row(i) = pointwise_grad(Z.row(i)).transpose();
    return out;
  };
  return t;
}

Target logistic_posterior(const LogisticPosteriorSpec& spec) {
  const auto n_rows = spec.features.rows();
  if (n_rows < 1) throw ValidationError("logistic_posterior: empty design matrix");
  if (spec.labels.size() != n_rows)
    throw ValidationError("logistic_posterior: labels/features row mismatch");
  if (!spec.features.allFinite()) throw NumericError("logistic_posterior: non-finite features");
  for (Eigen::Index i = 0; i < spec.labels.size(); ++i)
    if (spec.labels(i) != 0.0 && spec.labels(i) != 1.0)
      throw ValidationError("logistic_posterior: labels must be 0/1");

  auto X = std::make_shared<Eigen::MatrixXd>(spec.features);
  auto y = std::make_shared<Eigen::VectorXd>(spec.labels);
  const int d = static_cast<int>(spec.features.cols());

  Target t;
  t.dim = d;
  t.log_unnorm = [X, y, d](const Eigen::VectorXd& w) {
    if (w.size() != d) throw ValidationError("logistic posterior: weight dimension mismatch");
    Eigen::VectorXd tv = (*X) * w;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < tv.size(); ++i)
      ll -= (*y)(i) == 1.0 ? softplus(-tv(i)) : softplus(tv(i));
    return ll;
  };
  t.grad_log_unnorm = [X, y, d](const Eigen::VectorXd& w) {
    if (w.size() != d) throw ValidationError("logistic posterior: weight dimension mismatch");
    Eigen::VectorXd s = (1.0 + (-((*X) * w).array()).exp()).inverse();
    return Eigen::VectorXd(X->transpose() * (*y - s.matrix()));
  };
  t.log_unnorm_batch = [X, y](const Eigen::MatrixXd& W) {
    Eigen::MatrixXd T = (*X) * W.transpose();  // N x n
    Eigen::VectorXd out = Eigen::VectorXd::Zero(W.rows());
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const bool pos = (*y)(i) == 1.0;
      for (Eigen::Index k = 0; k < T.cols(); ++k)
        out(k) -= pos ? softplus(-T(i, k)) : softplus(T(i, k));
    }
    return out;
  };
  t.grad_log_unnorm_batch = [X, y](const Eigen::MatrixXd& W) {
    Eigen::MatrixXd S = (1.0 + (-((*X) * W.transpose()).array()).exp()).inverse();  // N x n
    Eigen::MatrixXd R = ((-S).colwise() + *y).transpose();                          // n x N
    return Eigen::MatrixXd(R * (*X));
  };
  return t;
}

Eigen::VectorXd predict_logistic(const ParticleCloud& weight_samples,
                                 const Eigen::MatrixXd& features) {
  validate_cloud(weight_samples, "predict_logistic");
  if (weight_samples.dim() != features.cols())
    throw ValidationError("predict_logistic: weight dimension " +
                          std::to_string(weight_samples.dim()) + " != feature count " +
                          std::to_string(features.cols()));
  Eigen::MatrixXd T = features * weight_samples.points.transpose();  // N x n
  Eigen::MatrixXd S = (1.0 + (-T.array()).exp()).inverse();
  return S.rowwise().mean();
}

}  // namespace swvi
