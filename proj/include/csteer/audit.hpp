#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csteer/conv.hpp"
#include "csteer/group.hpp"

namespace csteer {

/// Angular DFT of a kernel block sampled on a ring. Each component is one
/// scalar function of the angle; for a 2x2 block the components are the
/// coefficients on I, J and the reflection pair diag(1,-1), offdiag(1,1).
struct FrequencySpectrum {
  double radius = 0.0;
  int samples = 0;
  int max_freq = 0;
  std::vector<std::string> components;
  /// components x samples, bin j holds sum_s f(phi_s) exp(-i j phi_s) / samples.
  Eigen::MatrixXcd bins;
  /// amplitude(k) = sqrt(sum over components of |bin k|^2 + |bin -k|^2).
  Eigen::VectorXd amplitude;
  /// |sum of |bins|^2 - mean squared sample| relative to the latter.
  double parseval_defect = 0.0;

  double ratio(int k, int base = 0, double eps = 1e-30) const {
    return amplitude(k) / std::max(amplitude(base), eps);
  }
};

using RingSampler = std::function<Eigen::MatrixXd(double phi)>;

/// Requires samples >= 4 * max_freq + 4. With rotation_basis the sampled
/// matrices must be 2x2.
FrequencySpectrum ring_spectrum(const RingSampler& sample, double radius, int samples,
                                int max_freq, bool rotation_basis);

/// Block (grade k_in -> grade k_out, channel pair (0, 0)) of a Cl(2,0) layer's
/// kernel on the ring |x| = radius in normalized offset coordinates.
FrequencySpectrum ring_spectrum(const ConvLayer& layer, int k_in, int k_out, double radius,
                                int samples, int max_freq,
                                const MultivectorStack<double>* cond = nullptr);

/// Rows of grade k_out and columns of grade k_in of one channel pair.
Eigen::MatrixXd kernel_block(const KernelMatrix<double>& k, const Algebra& algebra, int k_in,
                             int k_out, int out_channel = 0, int in_channel = 0);

/// Channel-wise copies of rho_Cl(g).
Eigen::MatrixXd rho_channels(const GroupElement& g, int channels);

struct ConstraintOptions {
  /// Negative control: use rho_out^T K rho_in^{-T} as the transformed kernel.
  bool transpose_hom = false;
};

/// max over trials of |K(gx, rho cond) - rho_out K(x, cond) rho_in^{-1}| / |K(x, cond)|
/// (Frobenius norms). Offsets and conditioning are drawn inside the unit ball.
double check_kernel_constraint(const ConvLayer& layer, int trials, const GroupSampler& sampler,
                               std::uint64_t seed, const ConstraintOptions& options = {});

struct PoolingAuditOptions {
  int extent = 16;
  int channels = 2;
  bool full_mask = false;
  /// ExactGrid: random fields under exact grid symmetries. Resample: random
  /// affine fields under continuous rotations.
  TransformMode mode = TransformMode::ExactGrid;
};

/// max over trials of max|T[g f] - rho_Cl(g) T[f]|.
double check_pooling_equivariance(const Signature& sig, int trials, std::uint64_t seed,
                                  const PoolingAuditOptions& options = {});

/// Mean relative equivariance error of `layer` over random fields and exact
/// grid symmetries, worst trial returned.
double audit_equivariance_error(const ConvLayer& layer, int extent, int trials, std::uint64_t seed);

struct AuditRow {
  std::string name;
  std::string signature;
  std::uint64_t seed = 0;
  int trials = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct AuditConfig {
  Signature sig{2, 0};
  std::uint64_t seed = 7;
  int trials = 256;
  /// Grid extent for pooling and end-to-end audits; 0 picks 32, 12 or 6 for
  /// n <= 2, 3, 4.
  int extent = 0;
  /// End-to-end audits use min(trials, conv_trials) random fields.
  int conv_trials = 16;
  int support = 7;
  int hidden = 12;
  int depth = 4;
  int channels = 2;
  double max_rapidity = 1.0;
  bool break_mask = false;
  bool break_kernel = false;
  bool transpose_hom = false;
};

/// Kernel constraint, pooling and end-to-end audits for one signature.
std::vector<AuditRow> run_audits(const AuditConfig& config);

/// Thresholds: kernel level 1e-8 (definite) or 1e-6 (with boosts), pooling
/// 1e-12, end-to-end 1e-6.
double kernel_constraint_threshold(const Signature& sig);
inline constexpr double kPoolingThreshold = 1e-12;
inline constexpr double kEquivarianceThreshold = 1e-6;

void write_audit_csv(std::ostream& os, const std::vector<AuditRow>& rows);

}  // namespace csteer
