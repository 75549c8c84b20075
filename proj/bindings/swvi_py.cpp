#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swvi/baselines.hpp"
#include "swvi/data_io.hpp"
#include "swvi/engine.hpp"
#include "swvi/sliced_wasserstein.hpp"

namespace py = pybind11;
using namespace swvi;

namespace {

ParticleCloud as_cloud(const Eigen::MatrixXd& pts, const char* what) {
  ParticleCloud c(pts);
  validate_cloud(c, what);
  return c;
}

KernelConfig kernel_from_kwargs(const std::string& kind, double rwmh_std, double ula_step,
                                double hmc_step, int hmc_leapfrogs) {
  KernelConfig k;
  if (kind == "rwmh")
    k.kind = KernelKind::rwmh;
  else if (kind == "ula")
    k.kind = KernelKind::ula;
  else if (kind == "hmc")
    k.kind = KernelKind::hmc;
  else
    throw ValidationError("kernel must be rwmh|ula|hmc");
  k.rwmh_std = rwmh_std;
  k.ula_step = ula_step;
  k.hmc_step = hmc_step;
  k.hmc_leapfrogs = hmc_leapfrogs;
  return k;
}

}  // namespace

PYBIND11_MODULE(_swvi, m) {
  m.doc() = "Sliced Wasserstein variational inference: SW estimator, MCMC kernels, "
            "reparameterized families, and the SWVI loop";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Target>(m, "Target")
      .def_readonly("dim", &Target::dim)
      .def("log_unnorm", [](const Target& t, const Eigen::VectorXd& z) { return t.log_unnorm(z); })
      .def("grad_log_unnorm",
           [](const Target& t, const Eigen::VectorXd& z) { return t.grad_log_unnorm(z); });

  py::class_<FamilyParams>(m, "FamilyParams")
      .def_property_readonly("kind", [](const FamilyParams& p) { return to_string(p.kind); })
      .def_readonly("dim", &FamilyParams::dim)
      .def_readonly("noise_dim", &FamilyParams::noise_dim)
      .def_readonly("values", &FamilyParams::values)
      .def("mean", &FamilyParams::mean)
      .def("covariance", &FamilyParams::covariance)
      .def("to_json", [](const FamilyParams& p) { return family_to_json(p); })
      .def_static("from_json", [](const std::string& s) { return family_from_json(s); });

  m.def("sample_projections",
        [](int d, int m_count, std::uint64_t seed) {
          return sample_projections(d, m_count, RngStream(seed)).directions;
        },
        py::arg("d"), py::arg("m"), py::arg("seed") = 0,
        "m uniform unit directions on S^(d-1), one per row");

  m.def("wasserstein_1d",
        [](const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double p) {
          return wasserstein_1d({xs.data(), static_cast<std::size_t>(xs.size())},
                                {ys.data(), static_cast<std::size_t>(ys.size())}, p);
        },
        py::arg("xs"), py::arg("ys"), py::arg("p") = 1.0);

  m.def("sliced_wasserstein",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int n_projections, double p,
           std::uint64_t seed, bool grad) -> py::object {
          auto proj = sample_projections(static_cast<int>(x.cols()), n_projections,
                                         RngStream(seed));
          auto eval = sliced_wasserstein(as_cloud(x, "x"), as_cloud(y, "y"), proj, p, grad);
          if (!grad) return py::float_(eval.value);
          return py::make_tuple(eval.value, *eval.grad_x);
        },
        py::arg("x"), py::arg("y"), py::arg("n_projections") = 100, py::arg("p") = 1.0,
        py::arg("seed") = 0, py::arg("grad") = false,
        "Monte Carlo SW_p between two equal-size sample clouds; with grad=True returns "
        "(value, d value/d x)");

  m.def("exact_ot",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double p) {
          return exact_ot(as_cloud(x, "x"), as_cloud(y, "y"), p);
        },
        py::arg("x"), py::arg("y"), py::arg("p") = 2.0,
        "exact p-Wasserstein by brute force over assignments (n <= 8)");

  m.def("sinkhorn_divergence",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double epsilon, int max_iters,
           double tolerance) {
          SinkhornConfig cfg;
          cfg.epsilon = epsilon;
          cfg.max_iters = max_iters;
          cfg.tolerance = tolerance;
          auto r = sinkhorn_divergence(as_cloud(x, "x"), as_cloud(y, "y"), cfg);
          return py::make_tuple(r.value, r.converged);
        },
        py::arg("x"), py::arg("y"), py::arg("epsilon") = 0.01, py::arg("max_iters") = 50000,
        py::arg("tolerance") = 1e-6,
        "debiased entropic OT on the squared-Euclidean cost; returns (value, converged)");

  m.def("gaussian_w2",
        [](const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
           const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b) {
          return gaussian_w2({mean_a, cov_a}, {mean_b, cov_b});
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));

  m.def("gaussian_sw",
        [](const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
           const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b, double p,
           int resolution) {
          return gaussian_sw({mean_a, cov_a}, {mean_b, cov_b}, p, resolution);
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"),
        py::arg("p") = 2.0, py::arg("resolution") = 4096);

  m.def("gaussian_target",
        [](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
          return gaussian_target({mean, cov});
        },
        py::arg("mean"), py::arg("cov"));

  m.def("mixture_target",
        [](const std::vector<double>& weights, const std::vector<Eigen::VectorXd>& means,
           const std::vector<Eigen::MatrixXd>& covs) {
          MixtureSpec spec;
          spec.weights = weights;
          if (means.size() != covs.size() || means.size() != weights.size())
            throw ValidationError("mixture_target: weights/means/covs length mismatch");
          for (std::size_t i = 0; i < means.size(); ++i)
            spec.components.push_back({means[i], covs[i]});
          return mixture_target(spec);
        },
        py::arg("weights"), py::arg("means"), py::arg("covs"));

  m.def("logistic_posterior",
        [](const Eigen::MatrixXd& features, const Eigen::VectorXd& labels) {
          return logistic_posterior({features, labels});
        },
        py::arg("features"), py::arg("labels"), "flat-prior Bayesian logistic posterior");

  m.def("predict_logistic",
        [](const Eigen::MatrixXd& weight_samples, const Eigen::MatrixXd& features) {
          return predict_logistic(ParticleCloud(weight_samples), features);
        },
        py::arg("weight_samples"), py::arg("features"));

  m.def("meanfield_family", &meanfield_family, py::arg("mean"), py::arg("log_std"));
  m.def("fullcov_family", &fullcov_family, py::arg("mean"), py::arg("scale_tril"));
  m.def("mlp_family",
        [](int dim, int noise_dim, const std::vector<int>& hidden, const std::string& activation,
           std::uint64_t seed) {
          return mlp_family(dim, noise_dim, hidden, activation_from_string(activation),
                            RngStream(seed));
        },
        py::arg("dim"), py::arg("noise_dim"), py::arg("hidden"),
        py::arg("activation") = "tanh", py::arg("seed") = 0);

  m.def("family_sample",
        [](const FamilyParams& params, int n, std::uint64_t seed) {
          return forward(params, n, RngStream(seed)).cloud.points;
        },
        py::arg("params"), py::arg("n"), py::arg("seed") = 0,
        "n reparameterized draws from the family");

  m.def("run_swvi",
        [](const Target& target, const FamilyParams& family, int iterations, int warmup,
           int particles, int projections, double p, double learning_rate,
           const std::string& optimizer, const std::string& kernel, double rwmh_std,
           double ula_step, double hmc_step, int hmc_leapfrogs, bool resample_projections,
           std::uint64_t seed) {
          SwviConfig cfg;
          cfg.iterations = iterations;
          cfg.warmup = warmup;
          cfg.particles = particles;
          cfg.projections = projections;
          cfg.p = p;
          cfg.learning_rate = learning_rate;
          if (optimizer == "adam")
            cfg.optimizer.kind = OptimizerKind::adam;
          else if (optimizer == "sgd")
            cfg.optimizer.kind = OptimizerKind::sgd;
          else
            throw ValidationError("optimizer must be adam|sgd");
          cfg.kernel = kernel_from_kwargs(kernel, rwmh_std, ula_step, hmc_step, hmc_leapfrogs);
          cfg.resample_projections = resample_projections;
          cfg.seed = seed;
          RunTrace trace = run_swvi(target, family, cfg);

          py::dict out;
          Eigen::VectorXd losses(trace.records.size());
          Eigen::VectorXd acc(trace.records.size());
          for (std::size_t t = 0; t < trace.records.size(); ++t) {
            losses(t) = trace.records[t].sw_loss;
            acc(t) = trace.records[t].acceptance_rate;
          }
          out["sw_loss"] = losses;
          out["acceptance_rate"] = acc;
          out["final_params"] = trace.final_params;
          out["final_cloud"] = trace.final_cloud.points;
          out["burn_in"] = trace.stationarity.burn_in.has_value()
                               ? py::object(py::int_(*trace.stationarity.burn_in))
                               : py::object(py::none());
          return out;
        },
        py::arg("target"), py::arg("family"), py::arg("iterations") = 500,
        py::arg("warmup") = 50, py::arg("particles") = 500, py::arg("projections") = 100,
        py::arg("p") = 1.0, py::arg("learning_rate") = 0.02, py::arg("optimizer") = "adam",
        py::arg("kernel") = "rwmh", py::arg("rwmh_std") = 1.0, py::arg("ula_step") = 1e-4,
        py::arg("hmc_step") = 0.05, py::arg("hmc_leapfrogs") = 10,
        py::arg("resample_projections") = true, py::arg("seed") = 0,
        "run the SWVI loop; returns a dict with the loss trace, final parameters, and the "
        "final chain cloud");

  m.def("run_elbo_vi",
        [](const Target& target, const FamilyParams& family, int iterations, int batch,
           double learning_rate, std::uint64_t seed) {
          ElboConfig cfg;
          cfg.iterations = iterations;
          cfg.batch = batch;
          cfg.learning_rate = learning_rate;
          cfg.seed = seed;
          ElboTrace trace = run_elbo_vi(target, family, cfg);
          py::dict out;
          out["elbo"] = Eigen::VectorXd(
              Eigen::Map<const Eigen::VectorXd>(trace.elbo.data(), trace.elbo.size()));
          out["final_params"] = trace.final_params;
          return out;
        },
        py::arg("target"), py::arg("family"), py::arg("iterations") = 2000,
        py::arg("batch") = 128, py::arg("learning_rate") = 0.02, py::arg("seed") = 0,
        "reverse-KL (ELBO) baseline for gaussian families");

  m.def("detect_stationarity",
        [](const std::vector<double>& series, int window, double tol) -> py::object {
          auto m_idx = detect_stationarity(series, window, tol);
          if (m_idx.has_value()) return py::int_(*m_idx);
          return py::none();
        },
        py::arg("series"), py::arg("window") = 25, py::arg("tol") = 0.02,
        "burn-in index of a loss series, or None if it never settles");
}
