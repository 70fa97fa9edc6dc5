#pragma once

#include <random>

#include <Eigen/Dense>

#include "csteer/grid.hpp"

namespace csteer::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double scale = 1.0) {
  return random_matrix(rng, size, 1, scale);
}

inline MultivectorField<double> random_field(std::mt19937_64& rng, const GridSpec& spec,
                                             const Signature& sig, int channels) {
  MultivectorField<double> f(spec, sig, channels);
  f.data() = random_matrix(rng, channels * sig.blades(), spec.points());
  return f;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace csteer::testing
