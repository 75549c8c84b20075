#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace swvi {

// Counter-style splittable RNG built on the splitmix64 finalizer.
// Substreams are derived by hashing (state, a, b), so a stream for
// (seed, sweep, particle) can be reconstructed from anywhere; results never
// depend on how work is scheduled across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ 0x9E3779B97F4A7C15ull)) {}

  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const {
    std::uint64_t h = state_;
    h = mix(h ^ (0xA24BAED4963EE407ull * (a + 0x9E3779B97F4A7C15ull)));
    h = mix(h ^ (0x9FB21C651E98DF25ull * (b + 0x6A09E667F3BCC909ull)));
    return RngStream(FromState{}, h);
  }

  std::uint64_t state() const { return state_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // uniform in [0, 1)
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller, caching the second draw
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_uniform();  // (0, 1]
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = next_gaussian();
    return v;
  }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = next_gaussian();
    return m;
  }

 private:
  struct FromState {};
  RngStream(FromState, std::uint64_t s) : state_(s) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace swvi
