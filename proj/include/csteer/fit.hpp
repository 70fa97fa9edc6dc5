#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csteer/conv.hpp"

namespace csteer {

enum class TargetKind {
  /// G(r) I on the vector block.
  Frequency0,
  /// G(r) [[cos 2phi, sin 2phi], [sin 2phi, -cos 2phi]], the O(2)-steerable
  /// vector-to-vector basis element of angular frequency 2.
  Frequency2,
  /// G(r) cos(2 phi) I: frequency 2 carried by the identity component.
  Frequency2Isotropic,
};

TargetKind parse_target(const std::string& name);
std::string target_name(TargetKind kind);

/// Ring bump G(r) = exp(-(r - center)^2 / (2 width^2)) in normalized offset
/// coordinates; frequency-2 targets vanish at r = 0.
struct RadialProfile {
  double center = 0.5;
  double width = 0.25;
  double operator()(double r) const;
};

/// 2x2 target blocks on the support offsets of a Cl(2,0) layer (zero where
/// the support mask is off).
struct TargetKernel {
  TargetKind kind = TargetKind::Frequency0;
  RadialProfile profile;
  GridSpec support;
  std::vector<Eigen::Matrix2d> blocks;
  std::vector<std::uint8_t> active;

  double norm() const;
};

TargetKernel make_target(const ConvLayer& layer, TargetKind kind, RadialProfile profile = {});

enum class OptimizerMethod {
  /// Adam with beta = (momentum, 0.999); every step is taken and the best
  /// iterate is kept.
  Adam,
  /// Heavy-ball momentum; a step that raises the loss is rejected, the
  /// velocity resets and the step halves.
  Momentum,
};

struct OptimizerSpec {
  OptimizerMethod method = OptimizerMethod::Adam;
  int iterations = 2000;
  double step = 1e-2;
  double momentum = 0.9;
  /// Conditional layers only: conditioning stack is learned from this seed.
  std::uint64_t cond_seed = 1;
};

struct FitResult {
  double residual = 1.0;
  int iterations = 0;
  /// Iterations that lowered the best loss.
  int accepted = 0;
  /// Loss (squared residual) after each iteration, best-so-far.
  std::vector<double> trace;
  /// True when the loop ends because the iteration budget ran out.
  bool budget_exhausted = false;
  Eigen::VectorXd params;
  MultivectorStack<double> cond;
};

/// Residual |K11 - T| / |T| over the support, K11 the vector-to-vector block
/// of channel pair (0, 0).
double fit_residual(const ConvLayer& layer, const TargetKernel& target,
                    const MultivectorStack<double>* cond);

/// Minimizes |K11 - T|^2 / |T|^2 with analytic gradients. The layer ends
/// holding the best parameters found.
FitResult fit_to_target(ConvLayer& layer, const TargetKernel& target, const OptimizerSpec& spec);

}  // namespace csteer
