#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csteer/conv.hpp"

namespace csteer {

/// Periodic advection-diffusion of a scalar s and a velocity u on a square
/// grid with unit spacing:
///   s_t = -u . grad s + kappa lap s
///   u_t = -ubar . grad u + kappa lap u
/// where ubar is the (conserved) mean velocity. The velocity is a uniform
/// drift plus a divergence-free swirl drawn from a random stream function.
struct PdeConfig {
  int extent = 32;
  int train_trajectories = 6;
  int test_trajectories = 3;
  /// Input/target pairs per trajectory.
  int pairs_per_trajectory = 4;
  double sample_dt = 1.0;
  double substep = 0.05;
  double diffusion = 0.05;
  double drift = 1.0;
  double swirl = 0.2;
  /// Fourier modes |k| <= modes per axis in the random initial data.
  int modes = 3;
  /// Target equals input.
  bool zero_dynamics = false;

  int support = 5;
  int hidden = 8;
  int depth = 2;
  /// Head weights start at zero, so both models start as the identity map.
  bool zero_init_head = true;
  int iterations = 300;
  double step = 1e-2;
  /// Learning rate decays geometrically to step * final_step_ratio.
  double final_step_ratio = 0.01;
};

/// One-step pairs. Each field has one Cl(2,0) channel: s on the scalar,
/// u on the vector, zero bivector.
struct PdeDataset {
  std::vector<MultivectorField<double>> inputs;
  std::vector<MultivectorField<double>> targets;
};

/// Advance a (s, u) field by `duration` with Heun substeps of at most `substep`.
MultivectorField<double> advect_diffuse(const MultivectorField<double>& f, double duration,
                                        double substep, double diffusion);

PdeDataset make_pde_dataset(const PdeConfig& config, int trajectories, std::uint64_t seed);

/// f -> f + L(f) with one periodic steerable convolution L.
class ResidualModel {
 public:
  ResidualModel(ConvLayer layer) : layer_(std::move(layer)) {}

  MultivectorField<double> predict(const MultivectorField<double>& f) const;
  /// Mean squared error over points and blades, averaged over the pairs.
  double mse(const PdeDataset& data) const;
  /// Same loss with its gradient in the layer's flat parameters.
  double loss_and_gradient(const PdeDataset& data, Eigen::VectorXd& grad) const;

  const ConvLayer& layer() const { return layer_; }
  ConvLayer& layer() { return layer_; }

 private:
  ConvLayer layer_;
};

struct ModelReport {
  std::string name;
  int params = 0;
  double initial_mse = 0.0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  /// Test pairs under every exact grid symmetry, worst case.
  double rotated_test_mse = 0.0;
  int iterations = 0;
  bool diverged = false;
};

struct DemoResult {
  std::uint64_t seed = 0;
  ModelReport unconditional;
  ModelReport conditional;
};

struct TrainOutcome {
  int iterations = 0;
  bool diverged = false;
  std::vector<double> trace;
};

/// Adam on the training MSE with geometric step decay; keeps the best
/// iterate. A non-finite loss or one above 1e3 times the initial loss stops
/// training and sets the divergence flag.
TrainOutcome train_model(ResidualModel& model, const PdeDataset& train, const PdeConfig& config);

/// Both models share the data and the initial weights: the conditional
/// network starts from the unconditional one with zero weights on the
/// conditioning inputs, so the two start as the same function.
DemoResult pde_demo(const PdeConfig& config, std::uint64_t seed);

}  // namespace csteer
