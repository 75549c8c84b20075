#pragma once

#include <cstdlib>
#include <functional>
#include <string>

#include "swvi/rng.hpp"
#include "swvi/types.hpp"

namespace swvi::test {

inline ParticleCloud random_cloud(int n, int d, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed);
  return ParticleCloud(scale * rng.gaussian_matrix(n, d));
}

// max_i |a_i - b_i| / max(||a||_inf, floor)
inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            double floor = 1e-12) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// central finite differences of a scalar function of a flat vector
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& at, double h = 1e-5) {
  Eigen::VectorXd g(at.size());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    Eigen::VectorXd hi = at, lo = at;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline const char* env_or_null(const char* name) { return std::getenv(name); }

}  // namespace swvi::test
