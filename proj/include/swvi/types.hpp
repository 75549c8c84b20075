#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

#include "swvi/errors.hpp"

namespace swvi {

// Equal-weight empirical measure (1/n) sum_i delta_{x_i}; one particle per row.
struct ParticleCloud {
  Eigen::MatrixXd points;  // n x d

  ParticleCloud() = default;
  explicit ParticleCloud(Eigen::MatrixXd pts) : points(std::move(pts)) {}

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

inline void validate_cloud(const ParticleCloud& c, const std::string& what) {
  if (c.size() < 1 || c.dim() < 1)
    throw ValidationError(what + ": cloud must be n>=1 by d>=1, got " +
                          std::to_string(c.size()) + "x" + std::to_string(c.dim()));
  if (!c.points.allFinite()) throw NumericError(what + ": cloud has non-finite coordinates");
}

// m unit directions on S^{d-1}, one per row.
struct ProjectionSet {
  Eigen::MatrixXd directions;  // m x d
  std::uint64_t seed_tag = 0;  // state of the stream that produced them

  int count() const { return static_cast<int>(directions.rows()); }
  int dim() const { return static_cast<int>(directions.cols()); }
};

struct SwEvaluation {
  double value = 0.0;
  double p = 1.0;
  std::optional<Eigen::MatrixXd> grad_x;  // d value / d(first cloud), n x d
};

}  // namespace swvi
