#include "csteer/fit.hpp"

#include <cmath>
#include <random>

#include "csteer/adam.hpp"

namespace csteer {

TargetKind parse_target(const std::string& name) {
  if (name == "freq0") return TargetKind::Frequency0;
  if (name == "freq2") return TargetKind::Frequency2;
  if (name == "freq2-iso") return TargetKind::Frequency2Isotropic;
  throw std::invalid_argument("unknown target '" + name + "' (expected freq0, freq2 or freq2-iso)");
}

std::string target_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::Frequency0: return "freq0";
    case TargetKind::Frequency2: return "freq2";
    case TargetKind::Frequency2Isotropic: return "freq2-iso";
  }
  return "unknown";
}

double RadialProfile::operator()(double r) const {
  const double u = (r - center) / width;
  return std::exp(-0.5 * u * u);
}

double TargetKernel::norm() const {
  double sum = 0.0;
  for (std::size_t o = 0; o < blocks.size(); ++o)
    if (active[o]) sum += blocks[o].squaredNorm();
  return std::sqrt(sum);
}

TargetKernel make_target(const ConvLayer& layer, TargetKind kind, RadialProfile profile) {
  if (!(layer.signature() == Signature(2, 0))) {
    throw std::invalid_argument("kernel targets are defined for Cl(2,0) only");
  }
  TargetKernel t{kind, profile, layer.support_grid(), {}, {}};
  for (int o = 0; o < t.support.points(); ++o) {
    const Eigen::VectorXd x = t.support.position(o);
    const double r = x.norm();
    const double phi = std::atan2(x(1), x(0));
    const double g = profile(r);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    switch (kind) {
      case TargetKind::Frequency0:
        m = g * Eigen::Matrix2d::Identity();
        break;
      case TargetKind::Frequency2:
        if (r > 0) m << std::cos(2 * phi), std::sin(2 * phi), std::sin(2 * phi), -std::cos(2 * phi);
        m *= g;
        break;
      case TargetKind::Frequency2Isotropic:
        if (r > 0) m = g * std::cos(2 * phi) * Eigen::Matrix2d::Identity();
        break;
    }
    const bool on = layer.offset_active(o);
    t.blocks.push_back(on ? m : Eigen::Matrix2d::Zero());
    t.active.push_back(on ? 1 : 0);
  }
  return t;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Loss |K11 - T|^2 / |T|^2 and its gradient with respect to [params; cond].
Evaluation evaluate(ConvLayer& layer, const TargetKernel& target, const Eigen::VectorXd& z,
                    bool with_grad) {
  const int n_params = layer.num_params();
  const bool conditional = layer.config().conditional;
  const int blades = layer.algebra().blades();
  const int c_in = layer.config().in_channels;
  layer.set_flat_params(z.head(n_params));
  MultivectorStack<double> cond;
  if (conditional) cond = Eigen::Map<const Eigen::MatrixXd>(z.data() + n_params, blades, c_in);
  const MultivectorStack<double>* cp = conditional ? &cond : nullptr;
  const KernelBank<double> bank = evaluate_kernel_bank<double>(layer, cp);
  const double scale = 1.0 / std::max(target.norm() * target.norm(), 1e-300);

  Evaluation e;
  std::vector<KernelMatrix<double>> d_bank;
  if (with_grad) d_bank.reserve(bank.kernels.size());
  for (std::size_t o = 0; o < bank.kernels.size(); ++o) {
    const Eigen::Matrix2d diff = bank.kernels[o].block(1, 1, 2, 2) - target.blocks[o];
    if (bank.active[o]) e.loss += diff.squaredNorm() * scale;
    if (with_grad) {
      KernelMatrix<double> d = KernelMatrix<double>::Zero(bank.kernels[o].rows(), bank.kernels[o].cols());
      if (bank.active[o]) d.block(1, 1, 2, 2) = 2.0 * scale * diff;
      d_bank.push_back(std::move(d));
    }
  }
  if (with_grad) {
    e.grad = Eigen::VectorXd::Zero(z.size());
    MultivectorStack<double> d_cond;
    accumulate_kernel_gradient(layer, cp, d_bank, e.grad.head(n_params),
                               conditional ? &d_cond : nullptr);
    if (conditional) e.grad.tail(blades * c_in) = d_cond.reshaped();
  }
  return e;
}

}  // namespace

double fit_residual(const ConvLayer& layer, const TargetKernel& target,
                    const MultivectorStack<double>* cond) {
  const KernelBank<double> bank = evaluate_kernel_bank<double>(layer, cond);
  double num = 0.0;
  for (std::size_t o = 0; o < bank.kernels.size(); ++o) {
    if (bank.active[o]) num += (bank.kernels[o].block(1, 1, 2, 2) - target.blocks[o]).squaredNorm();
  }
  return std::sqrt(num) / std::max(target.norm(), 1e-300);
}

FitResult fit_to_target(ConvLayer& layer, const TargetKernel& target, const OptimizerSpec& spec) {
  if (!(layer.signature() == Signature(2, 0))) {
    throw std::invalid_argument("fit_to_target needs a Cl(2,0) layer");
  }
  if (!(target.support == layer.support_grid())) {
    throw std::invalid_argument("target support does not match the layer");
  }
  if (spec.iterations < 0 || !(spec.step > 0.0) || spec.momentum < 0.0 || spec.momentum >= 1.0) {
    throw std::invalid_argument("optimizer needs iterations >= 0, step > 0 and momentum in [0, 1)");
  }
  const int n_params = layer.num_params();
  const int blades = layer.algebra().blades();
  const int c_in = layer.config().in_channels;
  const bool conditional = layer.config().conditional;
  Eigen::VectorXd z(n_params + (conditional ? blades * c_in : 0));
  z.head(n_params) = layer.flat_params();
  if (conditional) {
    std::mt19937_64 rng(spec.cond_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = n_params; i < z.size(); ++i) z(i) = u(rng);
  }

  Evaluation current = evaluate(layer, target, z, true);
  Eigen::VectorXd best = z;
  double best_loss = current.loss;
  FitResult result;
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(z.size());
  Adam adam(z.size(), spec.momentum);
  double step = spec.step;
  for (int it = 0; it < spec.iterations && best_loss >= 1e-28; ++it) {
    if (spec.method == OptimizerMethod::Adam) {
      adam.step(z, current.grad, spec.step);
      current = evaluate(layer, target, z, true);
    } else {
      velocity = spec.momentum * velocity - step * current.grad;
      Evaluation next = evaluate(layer, target, z + velocity, true);
      if (std::isfinite(next.loss) && next.loss <= current.loss) {
        z += velocity;
        current = std::move(next);
        step = std::min(spec.step, step * 1.1);
      } else {
        velocity.setZero();
        step *= 0.5;
      }
    }
    if (std::isfinite(current.loss) && current.loss < best_loss) {
      best_loss = current.loss;
      best = z;
      ++result.accepted;
    }
    result.trace.push_back(best_loss);
    result.iterations = it + 1;
  }
  z = best;
  result.budget_exhausted = result.iterations == spec.iterations && spec.iterations > 0;
  layer.set_flat_params(z.head(n_params));
  result.params = z.head(n_params);
  if (conditional) {
    result.cond = Eigen::Map<const Eigen::MatrixXd>(z.data() + n_params, blades, c_in);
  }
  result.residual = fit_residual(layer, target, conditional ? &result.cond : nullptr);
  return result;
}

}  // namespace csteer
