#include "csteer/audit.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include <unsupported/Eigen/FFT>

#include "csteer/format.hpp"

namespace csteer {

FrequencySpectrum ring_spectrum(const RingSampler& sample, double radius, int samples,
                                int max_freq, bool rotation_basis) {
  if (max_freq < 0) throw std::invalid_argument("ring_spectrum: max frequency must be >= 0");
  if (samples < 4 * max_freq + 4) {
    throw std::invalid_argument("ring_spectrum: " + std::to_string(samples) +
                                " samples cannot resolve frequency " + std::to_string(max_freq) +
                                " (need at least " + std::to_string(4 * max_freq + 4) + ")");
  }
  std::vector<std::vector<double>> series;
  FrequencySpectrum spec;
  spec.radius = radius;
  spec.samples = samples;
  spec.max_freq = max_freq;
  for (int s = 0; s < samples; ++s) {
    const double phi = 2.0 * std::numbers::pi * s / samples;
    const Eigen::MatrixXd m = sample(phi);
    std::vector<double> values;
    if (rotation_basis) {
      if (m.rows() != 2 || m.cols() != 2) {
        throw std::invalid_argument("ring_spectrum: rotation basis needs 2x2 blocks");
      }
      values = {0.5 * (m(0, 0) + m(1, 1)), 0.5 * (m(1, 0) - m(0, 1)), 0.5 * (m(0, 0) - m(1, 1)),
                0.5 * (m(0, 1) + m(1, 0))};
    } else {
      values.assign(m.data(), m.data() + m.size());
    }
    if (s == 0) {
      series.resize(values.size());
      if (rotation_basis) {
        spec.components = {"identity", "rotation", "reflection_diag", "reflection_offdiag"};
      } else {
        for (int c = 0; c < m.cols(); ++c)
          for (int r = 0; r < m.rows(); ++r)
            spec.components.push_back("entry_" + std::to_string(r) + "_" + std::to_string(c));
      }
    } else if (values.size() != series.size()) {
      throw std::invalid_argument("ring_spectrum: sampled blocks change shape");
    }
    for (std::size_t c = 0; c < values.size(); ++c) series[c].push_back(values[c]);
  }

  Eigen::FFT<double> fft;
  spec.bins.resize(static_cast<int>(series.size()), samples);
  double energy_samples = 0.0;
  double energy_bins = 0.0;
  for (std::size_t c = 0; c < series.size(); ++c) {
    std::vector<std::complex<double>> out;
    fft.fwd(out, series[c]);
    for (int j = 0; j < samples; ++j) {
      spec.bins(static_cast<int>(c), j) = out[j] / static_cast<double>(samples);
      energy_bins += std::norm(spec.bins(static_cast<int>(c), j));
    }
    for (double v : series[c]) energy_samples += v * v / samples;
  }
  spec.parseval_defect = std::abs(energy_bins - energy_samples) / std::max(energy_samples, 1e-300);
  spec.amplitude = Eigen::VectorXd::Zero(max_freq + 1);
  for (int k = 0; k <= max_freq; ++k) {
    double sum = 0.0;
    for (int c = 0; c < spec.bins.rows(); ++c) {
      sum += std::norm(spec.bins(c, k));
      if (k > 0) sum += std::norm(spec.bins(c, samples - k));
    }
    spec.amplitude(k) = std::sqrt(sum);
  }
  return spec;
}

Eigen::MatrixXd kernel_block(const KernelMatrix<double>& k, const Algebra& algebra, int k_in,
                             int k_out, int out_channel, int in_channel) {
  if (k_in < 0 || k_in >= algebra.grades() || k_out < 0 || k_out >= algebra.grades()) {
    throw std::invalid_argument("kernel_block: grade out of range");
  }
  const int blades = algebra.blades();
  const auto& rows = algebra.blades_of_grade(k_out);
  const auto& cols = algebra.blades_of_grade(k_in);
  Eigen::MatrixXd block(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      block(r, c) = k(out_channel * blades + rows[r], in_channel * blades + cols[c]);
  return block;
}

FrequencySpectrum ring_spectrum(const ConvLayer& layer, int k_in, int k_out, double radius,
                                int samples, int max_freq, const MultivectorStack<double>* cond) {
  if (!(layer.signature() == Signature(2, 0))) {
    throw std::invalid_argument("ring_spectrum is defined for Cl(2,0) only, got " +
                                layer.signature().to_string());
  }
  const bool rotation = k_in == 1 && k_out == 1;
  return ring_spectrum(
      [&](double phi) {
        Eigen::VectorXd x(2);
        x << radius * std::cos(phi), radius * std::sin(phi);
        return kernel_block(kernel_at<double>(layer, x, cond), layer.algebra(), k_in, k_out);
      },
      radius, samples, max_freq, rotation);
}

Eigen::MatrixXd rho_channels(const GroupElement& g, int channels) {
  const int b = g.signature().blades();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b * channels, b * channels);
  for (int c = 0; c < channels; ++c) out.block(c * b, c * b, b, b) = g.rho();
  return out;
}

namespace {

Eigen::VectorXd random_in_ball(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(n);
  do {
    for (int i = 0; i < n; ++i) x(i) = u(rng);
  } while (x.norm() > 1.0 || x.norm() < 0.05);
  return x;
}

Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace

double check_kernel_constraint(const ConvLayer& layer, int trials, const GroupSampler& sampler,
                               std::uint64_t seed, const ConstraintOptions& options) {
  const Signature& sig = layer.signature();
  const int c_in = layer.config().in_channels;
  const int c_out = layer.config().out_channels;
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GroupElement g = sampler.sample(rng);
    const Eigen::VectorXd x = random_in_ball(rng, sig.dim());
    MultivectorStack<double> cond;
    if (layer.config().conditional) cond = uniform_matrix(rng, sig.blades(), c_in, 0.5);
    const MultivectorStack<double>* cp = layer.config().conditional ? &cond : nullptr;
    const KernelMatrix<double> k = kernel_at<double>(layer, x, cp);
    const Eigen::VectorXd gx = g.matrix() * x;
    MultivectorStack<double> gc;
    if (cp) gc = g.rho() * cond;
    const KernelMatrix<double> kg = kernel_at<double>(layer, gx, cp ? &gc : nullptr);
    const Eigen::MatrixXd rho_out = rho_channels(g, c_out);
    const Eigen::MatrixXd rho_in_inv = rho_channels(g.inverse(), c_in);
    const Eigen::MatrixXd expect = options.transpose_hom
                                       ? Eigen::MatrixXd(rho_out.transpose() * k * rho_in_inv.transpose())
                                       : Eigen::MatrixXd(rho_out * k * rho_in_inv);
    const double scale = std::max(k.norm(), 1e-300);
    worst = std::max(worst, (kg - expect).norm() / scale);
  }
  return worst;
}

double check_pooling_equivariance(const Signature& sig, int trials, std::uint64_t seed,
                                  const PoolingAuditOptions& options) {
  const GridSpec spec = GridSpec::cube(sig.dim(), options.extent);
  const CircularMask mask = options.full_mask ? make_full_mask(spec) : make_circular_mask(spec);
  const auto symmetries = exact_grid_symmetries(sig);
  const GroupSampler sampler(sig, GroupSampler::Kind::Orthogonal);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    MultivectorField<double> f(spec, sig, options.channels);
    std::optional<GroupElement> g;
    if (options.mode == TransformMode::ExactGrid) {
      f.data() = uniform_matrix(rng, f.data().rows(), f.data().cols(), 1.0);
      g = symmetries.size() > 1 ? symmetries[1 + t % (symmetries.size() - 1)] : symmetries[0];
    } else {
      // Affine in x, so multilinear resampling is exact.
      const Eigen::VectorXd offset = uniform_matrix(rng, f.data().rows(), 1, 1.0);
      const Eigen::MatrixXd slope = uniform_matrix(rng, f.data().rows(), sig.dim(), 0.2);
      for (int p = 0; p < spec.points(); ++p) f.data().col(p) = offset + slope * spec.position(p);
      g = sampler.sample(rng);
    }
    const MultivectorStack<double> lhs = masked_mean_pool(transform_field(f, *g, options.mode), mask);
    const MultivectorStack<double> rhs = g->rho() * masked_mean_pool(f, mask);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

double audit_equivariance_error(const ConvLayer& layer, int extent, int trials, std::uint64_t seed) {
  const Signature& sig = layer.signature();
  const GridSpec spec = GridSpec::cube(sig.dim(), extent);
  const auto symmetries = exact_grid_symmetries(sig);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    MultivectorField<double> f(spec, sig, layer.config().in_channels);
    f.data() = uniform_matrix(rng, f.data().rows(), f.data().cols(), 1.0);
    const auto& g = symmetries.size() > 1 ? symmetries[1 + rng() % (symmetries.size() - 1)]
                                          : symmetries[0];
    worst = std::max(worst, relative_equivariance_error(layer, f, g));
  }
  return worst;
}

double kernel_constraint_threshold(const Signature& sig) { return sig.definite() ? 1e-8 : 1e-6; }

std::vector<AuditRow> run_audits(const AuditConfig& config) {
  const Signature& sig = config.sig;
  const std::string name = sig.to_string();
  std::vector<AuditRow> rows;
  auto add = [&](const std::string& audit, int trials, double stat, double threshold) {
    rows.push_back({audit, name, config.seed, trials, stat, threshold, stat <= threshold});
  };

  ConvLayerConfig base;
  base.in_channels = config.channels;
  base.out_channels = config.channels;
  base.support = config.support;
  base.hidden = config.hidden;
  base.depth = config.depth;
  base.grade_mixing_defect = config.break_kernel;
  base.mask_kernel = !config.break_mask;
  base.full_pool_mask = config.break_mask;
  ConvLayerConfig cond_cfg = base;
  cond_cfg.conditional = true;
  const ConvLayer plain(sig, base, config.seed);
  const ConvLayer cond(sig, cond_cfg, config.seed + 1);

  const GroupSampler sampler(sig,
                             sig.definite() ? GroupSampler::Kind::Orthogonal
                                            : GroupSampler::Kind::WithBoosts,
                             config.max_rapidity);
  const ConstraintOptions opts{config.transpose_hom};
  const double kt = kernel_constraint_threshold(sig);
  add("kernel_constraint_unconditional", config.trials,
      check_kernel_constraint(plain, config.trials, sampler, config.seed + 10, opts), kt);
  add("kernel_constraint_conditional", config.trials,
      check_kernel_constraint(cond, config.trials, sampler, config.seed + 11, opts), kt);

  const int extent = config.extent > 0 ? config.extent : (sig.dim() <= 2 ? 32 : sig.dim() == 3 ? 12 : 6);
  PoolingAuditOptions pool;
  pool.extent = extent;
  pool.channels = config.channels;
  pool.full_mask = config.break_mask;
  pool.mode = TransformMode::ExactGrid;
  add("pooling_exact_grid", config.trials,
      check_pooling_equivariance(sig, config.trials, config.seed + 20, pool), kPoolingThreshold);
  pool.mode = TransformMode::Resample;
  add("pooling_rotation_affine", config.trials,
      check_pooling_equivariance(sig, config.trials, config.seed + 21, pool), kPoolingThreshold);

  const int conv_trials = std::max(1, std::min(config.trials, config.conv_trials));
  add("equivariance_error_unconditional", conv_trials,
      audit_equivariance_error(plain, extent, conv_trials, config.seed + 30), kEquivarianceThreshold);
  add("equivariance_error_conditional", conv_trials,
      audit_equivariance_error(cond, extent, conv_trials, config.seed + 31), kEquivarianceThreshold);
  return rows;
}

void write_audit_csv(std::ostream& os, const std::vector<AuditRow>& rows) {
  os << "audit,signature,seed,trials,statistic,threshold,result\n";
  for (const auto& r : rows) {
    os << r.name << ",\"" << r.signature << "\"," << r.seed << ',' << r.trials << ','
       << format_real(r.statistic) << ',' << format_real(r.threshold) << ',' << (r.passed ? "pass" : "fail")
       << '\n';
  }
}

}  // namespace csteer
