#include "csteer/pde.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "csteer/adam.hpp"

namespace csteer {

namespace {

constexpr int kScalar = 0;
constexpr int kU0 = 1;
constexpr int kU1 = 2;

void check_square_2d(const MultivectorField<double>& f) {
  if (!(f.signature() == Signature(2, 0)) || f.channels() != 1 || f.spec().extent(0) != f.spec().extent(1)) {
    throw std::invalid_argument("advection-diffusion state must be a one-channel Cl(2,0) field on a square grid");
  }
}

// Central difference along `axis` and five-point Laplacian, periodic, unit spacing.
Eigen::RowVectorXd diff(const Eigen::RowVectorXd& v, int n, int axis) {
  Eigen::RowVectorXd out(v.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int ip = axis == 0 ? (i + 1) % n : i, im = axis == 0 ? (i + n - 1) % n : i;
      const int jp = axis == 1 ? (j + 1) % n : j, jm = axis == 1 ? (j + n - 1) % n : j;
      out(i * n + j) = 0.5 * (v(ip * n + jp) - v(im * n + jm));
    }
  return out;
}

Eigen::RowVectorXd laplacian(const Eigen::RowVectorXd& v, int n) {
  Eigen::RowVectorXd out(v.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out(i * n + j) = v(((i + 1) % n) * n + j) + v(((i + n - 1) % n) * n + j) +
                       v(i * n + (j + 1) % n) + v(i * n + (j + n - 1) % n) - 4.0 * v(i * n + j);
    }
  return out;
}

Eigen::MatrixXd rhs(const Eigen::MatrixXd& x, int n, double kappa, const Eigen::Vector2d& ubar) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const Eigen::RowVectorXd s = x.row(kScalar);
  r.row(kScalar) = -(x.row(kU0).cwiseProduct(diff(s, n, 0)) + x.row(kU1).cwiseProduct(diff(s, n, 1))) +
                   kappa * laplacian(s, n);
  for (int c : {kU0, kU1}) {
    const Eigen::RowVectorXd u = x.row(c);
    r.row(c) = -(ubar(0) * diff(u, n, 0) + ubar(1) * diff(u, n, 1)) + kappa * laplacian(u, n);
  }
  return r;
}

struct Mode {
  int k0, k1;
  double amplitude, phase;
};

std::vector<Mode> random_modes(std::mt19937_64& rng, int max_mode) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> modes;
  for (int k0 = -max_mode; k0 <= max_mode; ++k0)
    for (int k1 = 0; k1 <= max_mode; ++k1) {
      if (k1 == 0 && k0 <= 0) continue;
      const double decay = 1.0 / (1.0 + k0 * k0 + k1 * k1);
      const double a = normal(rng) * decay;
      modes.push_back({k0, k1, a, angle(rng)});
    }
  return modes;
}

// Samples sum_k a_k cos(w (k . idx) + phase_k) and its two partial derivatives.
void synthesize(const std::vector<Mode>& modes, int n, Eigen::RowVectorXd& value, Eigen::RowVectorXd& d0,
                Eigen::RowVectorXd& d1) {
  const double w = 2.0 * std::numbers::pi / n;
  value = d0 = d1 = Eigen::RowVectorXd::Zero(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (const Mode& m : modes) {
        const double arg = w * (m.k0 * i + m.k1 * j) + m.phase;
        value(i * n + j) += m.amplitude * std::cos(arg);
        d0(i * n + j) -= m.amplitude * w * m.k0 * std::sin(arg);
        d1(i * n + j) -= m.amplitude * w * m.k1 * std::sin(arg);
      }
}

double rms(const Eigen::RowVectorXd& v) { return std::sqrt(v.squaredNorm() / std::max<Eigen::Index>(v.size(), 1)); }

}  // namespace

MultivectorField<double> advect_diffuse(const MultivectorField<double>& f, double duration, double substep,
                                        double diffusion) {
  check_square_2d(f);
  if (!(substep > 0.0) || duration < 0.0) {
    throw std::invalid_argument("advect_diffuse: need substep > 0 and duration >= 0");
  }
  const int n = f.spec().extent(0);
  const int steps = static_cast<int>(std::ceil(duration / substep - 1e-12));
  const double dt = steps > 0 ? duration / steps : 0.0;
  const Eigen::Vector2d ubar(f.data().row(kU0).mean(), f.data().row(kU1).mean());
  MultivectorField<double> out = f;
  Eigen::MatrixXd& x = out.data();
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd k1 = rhs(x, n, diffusion, ubar);
    const Eigen::MatrixXd k2 = rhs(x + dt * k1, n, diffusion, ubar);
    x += 0.5 * dt * (k1 + k2);
  }
  return out;
}

PdeDataset make_pde_dataset(const PdeConfig& config, int trajectories, std::uint64_t seed) {
  if (config.extent < 4 || trajectories < 0 || config.pairs_per_trajectory < 1 || config.modes < 1) {
    throw std::invalid_argument("pde dataset: need extent >= 4, modes >= 1 and at least one pair per trajectory");
  }
  const int n = config.extent;
  const GridSpec grid = GridSpec::cube(2, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  PdeDataset data;
  for (int t = 0; t < trajectories; ++t) {
    Eigen::RowVectorXd s, sd0, sd1, psi, p0, p1;
    synthesize(random_modes(rng, config.modes), n, s, sd0, sd1);
    synthesize(random_modes(rng, config.modes), n, psi, p0, p1);
    s /= std::max(rms(s), 1e-300);
    const double swirl_scale = config.swirl / std::max(std::sqrt(0.5 * (p0.squaredNorm() + p1.squaredNorm()) / (n * n)), 1e-300);
    const double theta = angle(rng);
    MultivectorField<double> f(grid, Signature(2, 0), 1);
    f.data().row(kScalar) = s;
    f.data().row(kU0) = swirl_scale * p1;
    f.data().row(kU1) = -swirl_scale * p0;
    f.data().row(kU0).array() += config.drift * std::cos(theta);
    f.data().row(kU1).array() += config.drift * std::sin(theta);
    for (int k = 0; k < config.pairs_per_trajectory; ++k) {
      MultivectorField<double> next =
          config.zero_dynamics ? f : advect_diffuse(f, config.sample_dt, config.substep, config.diffusion);
      data.inputs.push_back(f);
      data.targets.push_back(next);
      f = std::move(next);
    }
  }
  return data;
}

MultivectorField<double> ResidualModel::predict(const MultivectorField<double>& f) const {
  MultivectorField<double> out = convolve<double>(layer_, f);
  out.data() += f.data();
  return out;
}

double ResidualModel::mse(const PdeDataset& data) const {
  if (data.inputs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    sum += (predict(data.inputs[i]).data() - data.targets[i].data()).squaredNorm() / data.targets[i].data().size();
  }
  return sum / data.inputs.size();
}

double ResidualModel::loss_and_gradient(const PdeDataset& data, Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(layer_.num_params());
  if (data.inputs.empty()) return 0.0;
  const Padding padding = layer_.config().padding;
  const int out_channels = layer_.config().out_channels;
  const double pairs = static_cast<double>(data.inputs.size());
  double loss = 0.0;

  auto accumulate_pair = [&](const KernelBank<double>& bank, std::size_t i,
                             std::vector<KernelMatrix<double>>& d_bank) {
    const MultivectorField<double>& f = data.inputs[i];
    MultivectorField<double> d_out = convolve_with_bank(bank, f, out_channels, padding);
    d_out.data() += f.data() - data.targets[i].data();
    const double scale = 1.0 / (pairs * d_out.data().size());
    loss += d_out.data().squaredNorm() * scale;
    d_out.data() *= 2.0 * scale;
    const std::vector<KernelMatrix<double>> g = kernel_bank_gradient(bank, f, d_out, padding);
    if (d_bank.empty()) {
      d_bank = g;
    } else {
      for (std::size_t o = 0; o < g.size(); ++o) d_bank[o] += g[o];
    }
  };

  if (!layer_.config().conditional) {
    const KernelBank<double> bank = evaluate_kernel_bank<double>(layer_, nullptr);
    std::vector<KernelMatrix<double>> d_bank;
    for (std::size_t i = 0; i < data.inputs.size(); ++i) accumulate_pair(bank, i, d_bank);
    accumulate_kernel_gradient(layer_, nullptr, d_bank, grad);
  } else {
    for (std::size_t i = 0; i < data.inputs.size(); ++i) {
      const MultivectorStack<double> cond = conditioning(layer_, data.inputs[i]);
      const KernelBank<double> bank = evaluate_kernel_bank<double>(layer_, &cond);
      std::vector<KernelMatrix<double>> d_bank;
      accumulate_pair(bank, i, d_bank);
      accumulate_kernel_gradient(layer_, &cond, d_bank, grad);
    }
  }
  return loss;
}

TrainOutcome train_model(ResidualModel& model, const PdeDataset& train, const PdeConfig& config) {
  if (config.iterations < 0 || !(config.step > 0.0) || !(config.final_step_ratio > 0.0)) {
    throw std::invalid_argument("train_model: need iterations >= 0, step > 0 and final_step_ratio > 0");
  }
  ConvLayer& layer = model.layer();
  Eigen::VectorXd z = layer.flat_params();
  Eigen::VectorXd grad;
  double loss = model.loss_and_gradient(train, grad);
  const double initial = loss;
  double best_loss = loss;
  Eigen::VectorXd best = z;
  Adam adam(z.size());
  const double decay = config.iterations > 0 ? std::pow(config.final_step_ratio, 1.0 / config.iterations) : 1.0;
  double lr = config.step;
  TrainOutcome outcome;
  for (int it = 0; it < config.iterations; ++it) {
    adam.step(z, grad, lr);
    lr *= decay;
    layer.set_flat_params(z);
    loss = model.loss_and_gradient(train, grad);
    outcome.iterations = it + 1;
    if (!std::isfinite(loss) || loss > 1e3 * std::max(initial, 1e-300)) {
      outcome.diverged = true;
      break;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = z;
    }
    outcome.trace.push_back(best_loss);
  }
  layer.set_flat_params(best);
  return outcome;
}

namespace {

double worst_rotated_mse(const ResidualModel& model, const PdeDataset& test) {
  double worst = 0.0;
  for (const GroupElement& g : exact_grid_symmetries(Signature(2, 0))) {
    PdeDataset moved;
    for (std::size_t i = 0; i < test.inputs.size(); ++i) {
      moved.inputs.push_back(transform_field(test.inputs[i], g, TransformMode::ExactGrid));
      moved.targets.push_back(transform_field(test.targets[i], g, TransformMode::ExactGrid));
    }
    worst = std::max(worst, model.mse(moved));
  }
  return worst;
}

ModelReport run_model(const std::string& name, ResidualModel& model, const PdeDataset& train,
                      const PdeDataset& test, const PdeConfig& config) {
  ModelReport r;
  r.name = name;
  r.params = model.layer().num_params();
  r.initial_mse = model.mse(train);
  const TrainOutcome outcome = train_model(model, train, config);
  r.iterations = outcome.iterations;
  r.diverged = outcome.diverged;
  r.train_mse = model.mse(train);
  r.test_mse = model.mse(test);
  r.rotated_test_mse = worst_rotated_mse(model, test);
  return r;
}

}  // namespace

DemoResult pde_demo(const PdeConfig& config, std::uint64_t seed) {
  const PdeDataset train = make_pde_dataset(config, config.train_trajectories, seed);
  const PdeDataset test = make_pde_dataset(config, config.test_trajectories, seed ^ 0x9E3779B97F4A7C15ull);

  ConvLayerConfig base;
  base.support = config.support;
  base.hidden = config.hidden;
  base.depth = config.depth;
  base.padding = Padding::Periodic;
  ConvLayer plain_layer(Signature(2, 0), base, seed);
  if (config.zero_init_head) plain_layer.params().head.w.setZero();
  ResidualModel plain(std::move(plain_layer));

  ConvLayerConfig cond_cfg = base;
  cond_cfg.conditional = true;
  ConvLayer cond_layer(Signature(2, 0), cond_cfg, seed);
  cond_layer.params().net = widen_input(plain.layer().network(), plain.layer().params().net,
                                        cond_layer.network(), 0.0);
  cond_layer.params().head = plain.layer().params().head;
  ResidualModel conditioned(std::move(cond_layer));

  DemoResult result;
  result.seed = seed;
  result.unconditional = run_model("unconditional", plain, train, test, config);
  result.conditional = run_model("conditional", conditioned, train, test, config);
  return result;
}

}  // namespace csteer
