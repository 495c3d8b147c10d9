#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace crvar {

/// Seeded random stream owned by a single chain or job.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent child stream keyed by (seed, stream id).
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  double uniform();          ///< U(0,1), never exactly 0
  double normal();           ///< N(0,1)
  double normal(double mean, double sd);
  double gamma(double shape, double rate);
  double inverse_gamma(double shape, double scale);
  /// Inverse Gaussian with mean mu and shape parameter (Michael–Schucany–Haas).
  double inverse_gaussian(double mu, double shape);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

}  // namespace crvar
