#include "swvi/family.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace swvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

int gaussian_param_count(FamilyKind kind, int d) {
  return kind == FamilyKind::meanfield ? 2 * d : 2 * d + d * (d - 1) / 2;
}

int mlp_param_count(const std::vector<int>& widths) {
  int c = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) c += widths[l + 1] * (widths[l] + 1);
  return c;
}

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::meanfield: return "meanfield";
    case FamilyKind::fullcov: return "fullcov";
    case FamilyKind::mlp: return "mlp";
  }
  return "?";
}

std::string to_string(Activation act) { return act == Activation::tanh ? "tanh" : "relu"; }

FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "meanfield") return FamilyKind::meanfield;
  if (s == "fullcov") return FamilyKind::fullcov;
  if (s == "mlp") return FamilyKind::mlp;
  throw ValidationError("unknown family kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ValidationError("unknown activation '" + s + "'");
}

Eigen::VectorXd FamilyParams::mean() const { return values.head(dim); }

Eigen::VectorXd FamilyParams::log_std() const {
  if (kind != FamilyKind::meanfield) throw ValidationError("log_std: meanfield only");
  return values.segment(dim, dim);
}

Eigen::MatrixXd FamilyParams::scale_tril() const {
  if (kind == FamilyKind::meanfield) {
    return Eigen::MatrixXd(values.segment(dim, dim).array().exp().matrix().asDiagonal());
  }
  if (kind != FamilyKind::fullcov) throw ValidationError("scale_tril: gaussian kinds only");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
  int k = dim;
  for (int i = 1; i < dim; ++i)
    for (int j = 0; j < i; ++j) L(i, j) = values(k++);
  for (int i = 0; i < dim; ++i) L(i, i) = std::exp(values(k++));
  return L;
}

Eigen::MatrixXd FamilyParams::covariance() const {
  Eigen::MatrixXd L = scale_tril();
  return L * L.transpose();
}

std::vector<int> FamilyParams::layer_widths() const {
  std::vector<int> w;
  w.push_back(noise_dim);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dim);
  return w;
}

FamilyParams meanfield_family(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  if (mean.size() != log_std.size() || mean.size() < 1)
    throw ValidationError("meanfield_family: mean/log_std size mismatch");
  FamilyParams p;
  p.kind = FamilyKind::meanfield;
  p.dim = static_cast<int>(mean.size());
  p.noise_dim = p.dim;
  p.values.resize(2 * p.dim);
  p.values << mean, log_std;
  validate_family(p);
  return p;
}

FamilyParams fullcov_family(const Eigen::VectorXd& mean, const Eigen::MatrixXd& scale_tril) {
  const int d = static_cast<int>(mean.size());
  if (d < 1 || scale_tril.rows() != d || scale_tril.cols() != d)
    throw ValidationError("fullcov_family: shape mismatch");
  for (int i = 0; i < d; ++i) {
    if (!(scale_tril(i, i) > 0.0))
      throw ValidationError("fullcov_family: diagonal of L must be positive");
    for (int j = i + 1; j < d; ++j)
      if (scale_tril(i, j) != 0.0)
        throw ValidationError("fullcov_family: L must be lower triangular");
  }
  FamilyParams p;
  p.kind = FamilyKind::fullcov;
  p.dim = d;
  p.noise_dim = d;
  p.values.resize(gaussian_param_count(p.kind, d));
  p.values.head(d) = mean;
  int k = d;
  for (int i = 1; i < d; ++i)
    for (int j = 0; j < i; ++j) p.values(k++) = scale_tril(i, j);
  for (int i = 0; i < d; ++i) p.values(k++) = std::log(scale_tril(i, i));
  validate_family(p);
  return p;
}

FamilyParams mlp_family(int dim, int noise_dim, const std::vector<int>& hidden,
                        Activation activation, RngStream init_rng) {
  if (dim < 1 || noise_dim < 1) throw ValidationError("mlp_family: dims must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ValidationError("mlp_family: hidden widths must be >= 1");
  FamilyParams p;
  p.kind = FamilyKind::mlp;
  p.dim = dim;
  p.noise_dim = noise_dim;
  p.hidden = hidden;
  p.activation = activation;
  const auto widths = p.layer_widths();
  p.values.resize(mlp_param_count(widths));
  int off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i)
      p.values(off + i) = bound * (2.0 * init_rng.next_uniform() - 1.0);
    off += fan_out * fan_in;
    p.values.segment(off, fan_out).setZero();  // biases
    off += fan_out;
  }
  validate_family(p);
  return p;
}

void validate_family(const FamilyParams& p) {
  if (p.dim < 1) throw ValidationError("family: dim must be >= 1");
  if (!p.values.allFinite()) throw NumericError("family: non-finite parameters");
  int expected = 0;
  switch (p.kind) {
    case FamilyKind::meanfield:
    case FamilyKind::fullcov:
      if (p.noise_dim != p.dim) throw ValidationError("family: gaussian noise_dim must equal dim");
      expected = gaussian_param_count(p.kind, p.dim);
      break;
    case FamilyKind::mlp:
      if (p.noise_dim < 1) throw ValidationError("family: mlp noise_dim must be >= 1");
      expected = mlp_param_count(p.layer_widths());
      break;
  }
  if (p.param_count() != expected)
    throw ValidationError("family: expected " + std::to_string(expected) + " parameters, got " +
                          std::to_string(p.param_count()));
}

SampleBatch forward(const FamilyParams& params, int n, RngStream rng) {
  if (n < 1) throw ValidationError("forward: sample count must be >= 1");
  validate_family(params);
  return forward_with_noise(params, rng.gaussian_matrix(n, params.noise_dim));
}

SampleBatch forward_with_noise(const FamilyParams& params, Eigen::MatrixXd noise) {
  validate_family(params);
  if (noise.rows() < 1 || noise.cols() != params.noise_dim)
    throw ValidationError("forward_with_noise: noise must be n x noise_dim");

  SampleBatch batch;
  batch.params = params;
  batch.noise = std::move(noise);

  switch (params.kind) {
    case FamilyKind::meanfield: {
      const Eigen::ArrayXd scale = params.log_std().array().exp();
      batch.cloud.points =
          (batch.noise.array().rowwise() * scale.transpose()).rowwise() +
          params.mean().transpose().array();
      break;
    }
    case FamilyKind::fullcov: {
      const Eigen::MatrixXd L = params.scale_tril();
      batch.cloud.points =
          (batch.noise * L.transpose()).rowwise() + params.mean().transpose();
      break;
    }
    case FamilyKind::mlp: {
      const auto widths = params.layer_widths();
      const int n_layers = static_cast<int>(widths.size()) - 1;
      Eigen::MatrixXd a = batch.noise;
      int off = 0;
      for (int l = 0; l < n_layers; ++l) {
        RowMajorMap W(params.values.data() + off, widths[l + 1], widths[l]);
        off += widths[l + 1] * widths[l];
        const auto b = params.values.segment(off, widths[l + 1]);
        off += widths[l + 1];
        Eigen::MatrixXd pre = (a * W.transpose()).rowwise() + b.transpose();
        if (l + 1 < n_layers) {
          batch.hidden_pre.push_back(pre);
          if (params.activation == Activation::tanh)
            a = pre.array().tanh().matrix();
          else
            a = pre.cwiseMax(0.0);
          batch.hidden_act.push_back(a);
        } else {
          a = std::move(pre);  // linear output
        }
      }
      batch.cloud.points = std::move(a);
      break;
    }
  }
  return batch;
}

Eigen::VectorXd backward(SampleBatch& batch, const Eigen::MatrixXd& grad_z) {
  if (batch.consumed) throw ValidationError("backward: sample batch already consumed");
  if (grad_z.rows() != batch.cloud.points.rows() || grad_z.cols() != batch.cloud.points.cols())
    throw ValidationError("backward: grad_z shape does not match the batch");
  batch.consumed = true;

  const FamilyParams& p = batch.params;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.param_count());
  const int d = p.dim;

  switch (p.kind) {
    case FamilyKind::meanfield: {
      grad.head(d) = grad_z.colwise().sum();
      const Eigen::ArrayXd scale = p.log_std().array().exp();
      grad.segment(d, d) =
          ((grad_z.array() * batch.noise.array()).colwise().sum().transpose() * scale).matrix();
      break;
    }
    case FamilyKind::fullcov: {
      grad.head(d) = grad_z.colwise().sum();
      const Eigen::MatrixXd G = grad_z.transpose() * batch.noise;  // d x d
      int k = d;
      for (int i = 1; i < d; ++i)
        for (int j = 0; j < i; ++j) grad(k++) = G(i, j);
      const Eigen::MatrixXd L = p.scale_tril();
      for (int i = 0; i < d; ++i) grad(k++) = G(i, i) * L(i, i);
      break;
    }
    case FamilyKind::mlp: {
      const auto widths = p.layer_widths();
      const int n_layers = static_cast<int>(widths.size()) - 1;
      std::vector<int> w_off(n_layers), b_off(n_layers);
      int off = 0;
      for (int l = 0; l < n_layers; ++l) {
        w_off[l] = off;
        off += widths[l + 1] * widths[l];
        b_off[l] = off;
        off += widths[l + 1];
      }
      Eigen::MatrixXd delta = grad_z;
      for (int l = n_layers - 1; l >= 0; --l) {
        const Eigen::MatrixXd& input = l == 0 ? batch.noise : batch.hidden_act[l - 1];
        RowMajorMutMap gW(grad.data() + w_off[l], widths[l + 1], widths[l]);
        gW = delta.transpose() * input;
        grad.segment(b_off[l], widths[l + 1]) = delta.colwise().sum();
        if (l > 0) {
          RowMajorMap W(p.values.data() + w_off[l], widths[l + 1], widths[l]);
          Eigen::MatrixXd back = delta * W;
          if (p.activation == Activation::tanh) {
            delta = back.array() * (1.0 - batch.hidden_act[l - 1].array().square());
          } else {
            delta = back.array() * (batch.hidden_pre[l - 1].array() > 0.0).cast<double>();
          }
        }
      }
      break;
    }
  }
  return grad;
}

std::pair<double, Eigen::VectorXd> entropy_and_logdensity(const FamilyParams& params,
                                                          const ParticleCloud& cloud) {
  validate_family(params);
  if (params.kind == FamilyKind::mlp)
    throw ValidationError("entropy_and_logdensity: unsupported for mlp families "
                          "(no tractable density)");
  validate_cloud(cloud, "entropy_and_logdensity");
  if (cloud.dim() != params.dim)
    throw ValidationError("entropy_and_logdensity: cloud dimension mismatch");

  const int d = params.dim;
  const Eigen::MatrixXd L = params.scale_tril();
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += std::log(L(i, i));
  const double entropy = 0.5 * d * (1.0 + kLog2Pi) + log_det;

  const Eigen::MatrixXd centered = cloud.points.rowwise() - params.mean().transpose();
  const Eigen::MatrixXd U =
      L.triangularView<Eigen::Lower>().solve(centered.transpose());  // d x n
  Eigen::VectorXd logdens =
      (-0.5 * U.colwise().squaredNorm().transpose().array() - 0.5 * d * kLog2Pi - log_det)
          .matrix();
  return {entropy, std::move(logdens)};
}

Eigen::VectorXd entropy_grad(const FamilyParams& params) {
  if (params.kind == FamilyKind::mlp)
    throw ValidationError("entropy_grad: unsupported for mlp families");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params.param_count());
  // entropy = const + sum(log scale diagonal); both kinds store log-diagonal
  // entries in the trailing d slots
  g.tail(params.dim).setOnes();
  return g;
}

std::string family_to_json(const FamilyParams& params) {
  nlohmann::json j;
  j["kind"] = to_string(params.kind);
  j["dim"] = params.dim;
  j["noise_dim"] = params.noise_dim;
  j["hidden"] = params.hidden;
  j["activation"] = to_string(params.activation);
  j["values"] = std::vector<double>(params.values.data(),
                                    params.values.data() + params.values.size());
  return j.dump(2);
}

FamilyParams family_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FamilyParams p;
  p.kind = family_kind_from_string(j.at("kind").get<std::string>());
  p.dim = j.at("dim").get<int>();
  p.noise_dim = j.at("noise_dim").get<int>();
  p.hidden = j.at("hidden").get<std::vector<int>>();
  p.activation = activation_from_string(j.at("activation").get<std::string>());
  const auto vals = j.at("values").get<std::vector<double>>();
  p.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  validate_family(p);
  return p;
}

}  // namespace swvi
