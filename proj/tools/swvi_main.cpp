#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "swvi/baselines.hpp"
#include "swvi/data_io.hpp"
#include "swvi/engine.hpp"
#include "swvi/sliced_wasserstein.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace swvi;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const char* what) {
  if (rows.empty()) throw ValidationError(std::string(what) + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw ValidationError(std::string(what) + ": ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

GaussianSpec parse_gaussian_spec(const json& j) {
  GaussianSpec s;
  s.mean = to_vector(j.at("mean").get<std::vector<double>>());
  s.covariance = to_matrix(j.at("cov").get<std::vector<std::vector<double>>>(), "cov");
  return s;
}

Target load_target(const std::string& kind, const std::string& spec_path, int& dim) {
  json j = json::parse(read_text_file(spec_path));  // parse errors carry the line number
  if (kind == "gaussian") {
    GaussianSpec s = parse_gaussian_spec(j);
    dim = s.dim();
    return gaussian_target(s);
  }
  if (kind == "gmm") {
    MixtureSpec mix;
    for (const auto& c : j.at("components")) {
      mix.weights.push_back(c.at("weight").get<double>());
      mix.components.push_back(parse_gaussian_spec(c));
    }
    dim = mix.dim();
    return mixture_target(mix);
  }
  throw ValidationError("unknown target kind '" + kind + "'");
}

struct FamilyFlags {
  std::string kind = "meanfield";
  std::vector<double> init_mean;  // empty = zeros
  double init_logstd = 0.0;
  std::vector<int> mlp_hidden{64, 64};
  std::string activation = "tanh";
};

FamilyParams build_family(const FamilyFlags& f, int dim, std::uint64_t seed) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  if (!f.init_mean.empty()) {
    if (static_cast<int>(f.init_mean.size()) != dim)
      throw ValidationError("--init-mean must have " + std::to_string(dim) + " entries");
    mean = to_vector(f.init_mean);
  }
  const FamilyKind kind = family_kind_from_string(f.kind);
  if (kind == FamilyKind::meanfield)
    return meanfield_family(mean, Eigen::VectorXd::Constant(dim, f.init_logstd));
  if (kind == FamilyKind::fullcov) {
    Eigen::MatrixXd L =
        std::exp(f.init_logstd) * Eigen::MatrixXd::Identity(dim, dim);
    return fullcov_family(mean, L);
  }
  return mlp_family(dim, dim, f.mlp_hidden, activation_from_string(f.activation),
                    RngStream(seed).substream(0xF0));
}

struct KernelFlags {
  std::string kind = "rwmh";
  double rwmh_std = 1.0;
  double ula_eps = 1e-4;
  double hmc_step = 0.05;
  int hmc_leapfrogs = 10;
};

KernelConfig build_kernel(const KernelFlags& k) {
  KernelConfig cfg;
  if (k.kind == "rwmh")
    cfg.kind = KernelKind::rwmh;
  else if (k.kind == "ula")
    cfg.kind = KernelKind::ula;
  else if (k.kind == "hmc")
    cfg.kind = KernelKind::hmc;
  else
    throw ValidationError("unknown kernel '" + k.kind + "'");
  cfg.rwmh_std = k.rwmh_std;
  cfg.ula_step = k.ula_eps;
  cfg.hmc_step = k.hmc_step;
  cfg.hmc_leapfrogs = k.hmc_leapfrogs;
  return cfg;
}

struct EngineFlags {
  int iters = 500;
  int warmup = 50;
  int particles = 500;
  int projections = 100;
  double p = 1.0;
  double lr = 0.02;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  int stat_window = 25;
  double stat_tol = 0.02;
};

SwviConfig build_config(const EngineFlags& e, const KernelFlags& k) {
  SwviConfig cfg;
  cfg.iterations = e.iters;
  cfg.warmup = e.warmup;
  cfg.particles = e.particles;
  cfg.projections = e.projections;
  cfg.p = e.p;
  cfg.learning_rate = e.lr;
  if (e.optimizer == "adam")
    cfg.optimizer.kind = OptimizerKind::adam;
  else if (e.optimizer == "sgd")
    cfg.optimizer.kind = OptimizerKind::sgd;
  else
    throw ValidationError("unknown optimizer '" + e.optimizer + "'");
  cfg.kernel = build_kernel(k);
  cfg.seed = e.seed;
  cfg.stationarity_window = e.stat_window;
  cfg.stationarity_tol = e.stat_tol;
  return cfg;
}

void add_kernel_flags(CLI::App* cmd, KernelFlags& k) {
  cmd->add_option("--kernel", k.kind, "MCMC kernel: rwmh|ula|hmc")->capture_default_str();
  cmd->add_option("--rwmh-std", k.rwmh_std, "RWMH proposal standard deviation")
      ->capture_default_str();
  cmd->add_option("--ula-eps", k.ula_eps, "ULA step size")->capture_default_str();
  cmd->add_option("--hmc-step", k.hmc_step, "HMC leapfrog step size")->capture_default_str();
  cmd->add_option("--hmc-leapfrogs", k.hmc_leapfrogs, "HMC leapfrog steps")
      ->capture_default_str();
}

void add_engine_flags(CLI::App* cmd, EngineFlags& e) {
  cmd->add_option("-T,--iters", e.iters, "total iterations T")->capture_default_str();
  cmd->add_option("-L,--warmup", e.warmup, "warm-up lag L (kernel-only iterations)")
      ->capture_default_str();
  cmd->add_option("-n,--particles", e.particles, "parallel chains / batch size")
      ->capture_default_str();
  cmd->add_option("-m,--projections", e.projections, "projection count per SW estimate")
      ->capture_default_str();
  cmd->add_option("-p,--order", e.p, "Wasserstein order p >= 1")->capture_default_str();
  cmd->add_option("--lr", e.lr, "learning rate")->capture_default_str();
  cmd->add_option("--optimizer", e.optimizer, "adam|sgd")->capture_default_str();
  cmd->add_option("--seed", e.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--stat-window", e.stat_window, "stationarity detector window")
      ->capture_default_str();
  cmd->add_option("--stat-tol", e.stat_tol, "stationarity relative tolerance")
      ->capture_default_str();
}

void add_family_flags(CLI::App* cmd, FamilyFlags& f, bool allow_mlp) {
  cmd->add_option("--family", f.kind,
                  allow_mlp ? "variational family: meanfield|fullcov|mlp"
                            : "variational family: meanfield|fullcov")
      ->capture_default_str();
  cmd->add_option("--init-mean", f.init_mean, "initial mean (defaults to zeros)")
      ->delimiter(',');
  cmd->add_option("--init-logstd", f.init_logstd, "initial log standard deviation")
      ->capture_default_str();
  if (allow_mlp) {
    cmd->add_option("--mlp-hidden", f.mlp_hidden, "mlp hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--activation", f.activation, "mlp activation: tanh|relu")
        ->capture_default_str();
  }
}

void write_family_samples(const FamilyParams& params, int n, std::uint64_t seed,
                          const std::string& path) {
  auto batch = forward(params, n, RngStream(seed).substream(0x5A));
  write_matrix_csv(path, batch.cloud.points);
}

struct KlFlags {
  int iters = 2000;
  int batch = 128;
  double lr = 0.02;
};

void add_kl_flags(CLI::App* cmd, KlFlags& k) {
  cmd->add_option("--kl-iters", k.iters, "KL-VI baseline iterations")->capture_default_str();
  cmd->add_option("--kl-batch", k.batch, "KL-VI baseline batch size")->capture_default_str();
  cmd->add_option("--kl-lr", k.lr, "KL-VI baseline learning rate")->capture_default_str();
}

ElboTrace run_kl_baseline(const Target& target, const FamilyParams& init, const KlFlags& kl,
                          std::uint64_t seed, const std::string& out_dir) {
  ElboConfig ecfg;
  ecfg.iterations = kl.iters;
  ecfg.batch = kl.batch;
  ecfg.learning_rate = kl.lr;
  ecfg.seed = seed + 1;
  ElboTrace et = run_elbo_vi(target, init, ecfg);
  std::string csv = "iter,elbo\n";
  for (std::size_t t = 0; t < et.elbo.size(); ++t)
    csv += std::to_string(t) + "," + format_double(et.elbo[t]) + "\n";
  write_text_file((fs::path(out_dir) / "kl_trace.csv").string(), csv);
  write_text_file((fs::path(out_dir) / "kl_summary.json").string(),
                  family_to_json(et.final_params) + "\n");
  return et;
}

int cmd_fit_toy(const std::string& target_kind, const std::string& spec_path,
                const FamilyFlags& family_flags, const KernelFlags& kernel_flags,
                const EngineFlags& engine_flags, bool with_kl, const KlFlags& kl_flags,
                const std::string& out_dir) {
  int dim = 0;
  Target target = load_target(target_kind, spec_path, dim);
  FamilyParams family = build_family(family_flags, dim, engine_flags.seed);
  SwviConfig cfg = build_config(engine_flags, kernel_flags);

  RunTrace trace = run_swvi(target, family, cfg);
  fs::create_directories(out_dir);
  write_trace(trace, cfg, out_dir);
  write_family_samples(trace.final_params, cfg.particles, cfg.seed,
                       (fs::path(out_dir) / "samples.csv").string());
  write_matrix_csv((fs::path(out_dir) / "chain.csv").string(), trace.final_cloud.points);

  if (with_kl) {
    if (family.kind == FamilyKind::mlp)
      throw ValidationError("--with-kl-baseline requires a gaussian family");
    ElboTrace et = run_kl_baseline(target, family, kl_flags, cfg.seed, out_dir);
    write_family_samples(et.final_params, cfg.particles, cfg.seed + 2,
                         (fs::path(out_dir) / "kl_samples.csv").string());
  }
  std::cout << "wrote " << (fs::path(out_dir) / "trace.csv").string() << "\n";
  return 0;
}

double accuracy(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels) {
  double correct = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    correct += (probs(i) >= 0.5 ? 1.0 : 0.0) == labels(i) ? 1.0 : 0.0;
  return correct / static_cast<double>(probs.size());
}

int cmd_fit_logistic(const std::string& data_path, int label_column,
                     const std::string& positive_label, char delimiter,
                     const std::string& header_mode, double test_fraction, int n_seeds,
                     const FamilyFlags& family_flags, const KernelFlags& kernel_flags,
                     const EngineFlags& engine_flags, const KlFlags& kl_flags,
                     int posterior_samples, const std::string& out_dir) {
  if (n_seeds < 1) throw ValidationError("--seeds must be >= 1");
  if (posterior_samples < 1) throw ValidationError("--posterior-samples must be >= 1");
  if (family_flags.kind == "mlp")
    throw ValidationError("fit-logistic supports gaussian families only");

  HeaderMode hm = HeaderMode::automatic;
  if (header_mode == "yes")
    hm = HeaderMode::present;
  else if (header_mode == "no")
    hm = HeaderMode::absent;
  else if (header_mode != "auto")
    throw ValidationError("--header must be auto|yes|no");

  Dataset full = load_csv(data_path, label_column, positive_label, delimiter, hm);
  fs::create_directories(out_dir);

  std::vector<double> acc_swvi, acc_kl;
  json per_seed = json::array();
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = engine_flags.seed + static_cast<std::uint64_t>(s);
    auto [train, test] = split(full, test_fraction, seed);
    const double label_sum = train.labels.sum();
    if (label_sum == 0.0 || label_sum == static_cast<double>(train.size()))
      throw ValidationError("training labels are single-class for seed " + std::to_string(seed));
    Dataset train_b = append_bias(train);
    Dataset test_b = append_bias(test);

    LogisticPosteriorSpec spec;
    spec.features = train_b.features;
    spec.labels = train_b.labels;
    Target target = logistic_posterior(spec);

    EngineFlags ef = engine_flags;
    ef.seed = seed;
    FamilyParams family = build_family(family_flags, train_b.dim(), seed);
    SwviConfig cfg = build_config(ef, kernel_flags);
    RunTrace trace = run_swvi(target, family, cfg);

    const std::string seed_dir = (fs::path(out_dir) / ("seed_" + std::to_string(s))).string();
    write_trace(trace, cfg, seed_dir);

    auto posterior = forward(trace.final_params, posterior_samples,
                             RngStream(seed).substream(0x9C));
    const double a_swvi = accuracy(predict_logistic(posterior.cloud, test_b.features),
                                   test_b.labels);
    acc_swvi.push_back(a_swvi);

    ElboTrace et = run_kl_baseline(target, family, kl_flags, seed, seed_dir);
    auto kl_posterior = forward(et.final_params, posterior_samples,
                                RngStream(seed).substream(0x9D));
    const double a_kl = accuracy(predict_logistic(kl_posterior.cloud, test_b.features),
                                 test_b.labels);
    acc_kl.push_back(a_kl);

    per_seed.push_back({{"seed", seed},
                        {"swvi_accuracy", a_swvi},
                        {"kl_vi_accuracy", a_kl},
                        {"train_rows", train.size()},
                        {"test_rows", test.size()}});
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair<double, double>(mean, std::sqrt(var / v.size()));
  };
  auto [ms, ss] = mean_std(acc_swvi);
  auto [mk, sk] = mean_std(acc_kl);

  json report;
  report["swvi"] = {{"mean_accuracy", ms}, {"std_accuracy", ss}};
  report["kl_vi"] = {{"mean_accuracy", mk}, {"std_accuracy", sk}};
  report["per_seed"] = per_seed;
  report["posterior_samples"] = posterior_samples;
  report["dataset"] = {{"path", data_path},
                       {"rows", full.size()},
                       {"features", full.dim()},
                       {"rejected_rows", full.rejected_rows}};
  const std::string report_path = (fs::path(out_dir) / "report.json").string();
  write_text_file(report_path, report.dump(2) + "\n");
  std::cout << "swvi accuracy " << ms << " +- " << ss << "\n"
            << "kl-vi accuracy " << mk << " +- " << sk << "\n"
            << "wrote " << report_path << "\n";
  return 0;
}

int cmd_sw_eval(const std::string& x_path, const std::string& y_path, int m, double p,
                std::uint64_t seed, bool exact, double sinkhorn_eps, int sinkhorn_iters,
                double sinkhorn_tol) {
  ParticleCloud x(read_matrix_csv(x_path));
  ParticleCloud y(read_matrix_csv(y_path));
  auto proj = sample_projections(x.dim(), m, RngStream(seed));
  auto eval = sliced_wasserstein(x, y, proj, p);
  std::cout << "sw " << format_double(eval.value) << "\n";
  if (exact) {
    std::cout << "exact_ot " << format_double(exact_ot(x, y, p)) << "\n";
  }
  if (sinkhorn_eps > 0.0) {
    SinkhornConfig scfg;
    scfg.epsilon = sinkhorn_eps;
    scfg.max_iters = sinkhorn_iters;
    scfg.tolerance = sinkhorn_tol;
    auto r = sinkhorn_divergence(x, y, scfg);
    std::cout << "sinkhorn " << format_double(r.value) << (r.converged ? "" : " unconverged")
              << "\n";
  }
  return 0;
}

int cmd_diagnose(const std::string& trace_path, int window, double tol) {
  const auto losses = read_csv_column(trace_path, "sw_loss");
  auto m = detect_stationarity(losses, window, tol);
  if (m.has_value())
    std::cout << "burn-in index " << *m << "\n";
  else
    std::cout << "not stationary\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SWVI: variational inference by minimizing the sliced Wasserstein distance "
               "to MCMC chain marginals"};
  app.require_subcommand(1);

  // fit-toy
  auto* fit_toy = app.add_subcommand("fit-toy", "fit a synthetic gaussian/gmm target");
  std::string toy_target = "gaussian", toy_spec, toy_out;
  bool with_kl = false;
  FamilyFlags toy_family;
  KernelFlags toy_kernel;
  EngineFlags toy_engine;
  KlFlags toy_kl;
  fit_toy->add_option("--target", toy_target, "target kind: gaussian|gmm")
      ->required()
      ->capture_default_str();
  fit_toy->add_option("--spec", toy_spec, "target spec JSON file")->required();
  fit_toy->add_option("--out", toy_out, "output directory")->required();
  fit_toy->add_flag("--with-kl-baseline", with_kl, "also run the reverse-KL VI baseline");
  add_family_flags(fit_toy, toy_family, /*allow_mlp=*/true);
  add_kernel_flags(fit_toy, toy_kernel);
  add_engine_flags(fit_toy, toy_engine);
  add_kl_flags(fit_toy, toy_kl);

  // fit-logistic
  auto* fit_log = app.add_subcommand("fit-logistic", "bayesian logistic regression on a CSV");
  std::string log_data, log_positive = "1", log_header = "auto", log_out;
  int log_label_column = -1, log_seeds = 5, log_posterior_samples = 32;
  std::string log_delim = ",";
  double log_test_fraction = 0.2;
  FamilyFlags log_family;
  KernelFlags log_kernel;
  log_kernel.kind = "ula";
  EngineFlags log_engine;
  log_engine.iters = 1500;
  log_engine.warmup = 100;
  log_engine.particles = 256;
  KlFlags log_kl;
  fit_log->add_option("--data", log_data, "CSV dataset path")->required();
  fit_log->add_option("--label-column", log_label_column,
                      "label column index (negative counts from the end)")
      ->capture_default_str();
  fit_log->add_option("--positive-label", log_positive, "token mapped to class 1")
      ->capture_default_str();
  fit_log->add_option("--delimiter", log_delim, "cell delimiter")->capture_default_str();
  fit_log->add_option("--header", log_header, "header row: auto|yes|no")->capture_default_str();
  fit_log->add_option("--test-fraction", log_test_fraction, "held-out fraction")
      ->capture_default_str();
  fit_log->add_option("--seeds", log_seeds, "number of train/test splits")
      ->capture_default_str();
  fit_log->add_option("--posterior-samples", log_posterior_samples,
                      "posterior samples for prediction")
      ->capture_default_str();
  fit_log->add_option("--out", log_out, "output directory")->required();
  add_family_flags(fit_log, log_family, /*allow_mlp=*/false);
  add_kernel_flags(fit_log, log_kernel);
  add_engine_flags(fit_log, log_engine);
  add_kl_flags(fit_log, log_kl);

  // sw-eval
  auto* sw_eval = app.add_subcommand("sw-eval", "sliced Wasserstein between two sample CSVs");
  std::string eval_x, eval_y;
  int eval_m = 100, eval_sink_iters = 50000;
  double eval_p = 1.0, eval_sink_eps = 0.0, eval_sink_tol = 1e-9;
  std::uint64_t eval_seed = 0;
  bool eval_exact = false;
  sw_eval->add_option("--x", eval_x, "first sample cloud CSV")->required();
  sw_eval->add_option("--y", eval_y, "second sample cloud CSV")->required();
  sw_eval->add_option("-m,--projections", eval_m, "projection count")->capture_default_str();
  sw_eval->add_option("-p,--order", eval_p, "Wasserstein order")->capture_default_str();
  sw_eval->add_option("--seed", eval_seed, "projection RNG seed")->capture_default_str();
  sw_eval->add_flag("--exact", eval_exact, "also print brute-force OT (n <= 8)");
  sw_eval->add_option("--sinkhorn", eval_sink_eps,
                      "also print the sinkhorn divergence at this epsilon");
  sw_eval->add_option("--sinkhorn-iters", eval_sink_iters, "sinkhorn iteration cap")
      ->capture_default_str();
  sw_eval->add_option("--sinkhorn-tol", eval_sink_tol, "sinkhorn marginal tolerance")
      ->capture_default_str();

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "burn-in detection on a trace.csv");
  std::string diag_trace;
  int diag_window = 25;
  double diag_tol = 0.02;
  diagnose->add_option("--trace", diag_trace, "trace.csv path")->required();
  diagnose->add_option("--window", diag_window, "detector window")->capture_default_str();
  diagnose->add_option("--tol", diag_tol, "relative tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit_toy))
      return cmd_fit_toy(toy_target, toy_spec, toy_family, toy_kernel, toy_engine, with_kl,
                         toy_kl, toy_out);
    if (app.got_subcommand(fit_log))
      return cmd_fit_logistic(log_data, log_label_column, log_positive,
                              log_delim.empty() ? ',' : log_delim[0], log_header,
                              log_test_fraction, log_seeds, log_family, log_kernel, log_engine,
                              log_kl, log_posterior_samples, log_out);
    if (app.got_subcommand(sw_eval))
      return cmd_sw_eval(eval_x, eval_y, eval_m, eval_p, eval_seed, eval_exact, eval_sink_eps,
                         eval_sink_iters, eval_sink_tol);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(diag_trace, diag_window, diag_tol);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
