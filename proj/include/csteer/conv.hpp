#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "csteer/grid.hpp"
#include "csteer/kernel_net.hpp"

namespace csteer {

enum class Padding { Zero, Periodic };

struct ConvLayerConfig {
  int in_channels = 1;
  int out_channels = 1;
  /// Kernel support per axis; must be odd.
  int support = 7;
  bool conditional = false;
  int hidden = 12;
  int depth = 4;
  Padding padding = Padding::Zero;
  /// Zero kernel values outside the inscribed ball of the support.
  bool mask_kernel = true;
  /// Pool over every cell instead of the inscribed ball of the field grid.
  bool full_pool_mask = false;
  /// Grade-wise normalization of T[f] before it enters the kernel network.
  bool normalize_cond = false;
  bool grade_mixing_defect = false;
};

/// Steerable convolution layer. The kernel network sees offsets scaled so the
/// support's inscribed ball has radius 1.
class ConvLayer {
 public:
  ConvLayer(const Signature& sig, const ConvLayerConfig& config, std::uint64_t seed);
  ConvLayer(std::shared_ptr<const Algebra> algebra, const ConvLayerConfig& config,
            KernelParamSet params);

  const ConvLayerConfig& config() const { return config_; }
  const Algebra& algebra() const { return network_.algebra(); }
  const Signature& signature() const { return network_.algebra().signature(); }
  const KernelNetwork& network() const { return network_; }
  const KernelParamSet& params() const { return params_; }
  KernelParamSet& params() { return params_; }
  Eigen::VectorXd& norm_scales() { return norm_scales_; }
  const Eigen::VectorXd& norm_scales() const { return norm_scales_; }

  /// Grid of support offsets and its inscribed-ball mask.
  const GridSpec& support_grid() const { return support_grid_; }
  const CircularMask& support_mask() const { return support_mask_; }
  bool offset_active(int index) const {
    return !config_.mask_kernel || support_mask_.indicator[index] != 0;
  }

  /// Learnable parameters as one vector: network values, then head weights
  /// (column-major).
  int num_params() const;
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& flat);

 private:
  static KernelNetArch arch_for(const ConvLayerConfig& config);

  ConvLayerConfig config_;
  KernelNetwork network_;
  KernelParamSet params_;
  GridSpec support_grid_;
  CircularMask support_mask_;
  Eigen::VectorXd norm_scales_;
};

/// One kernel matrix per support offset, in the support grid's linear order.
/// Masked offsets hold zero matrices.
template <typename Scalar>
struct KernelBank {
  GridSpec support;
  std::vector<KernelMatrix<Scalar>> kernels;
  std::vector<std::uint8_t> active;
};

/// K(x) or K-hat(x, cond) at one (normalized) offset.
template <typename Scalar>
KernelMatrix<Scalar> kernel_at(const ConvLayer& layer, const Eigen::Matrix<Scalar, -1, 1>& x,
                               const MultivectorStack<Scalar>* cond = nullptr) {
  if (layer.config().conditional != (cond != nullptr)) {
    throw std::invalid_argument(layer.config().conditional
                                    ? "conditional layer needs a conditioning stack"
                                    : "unconditional layer takes no conditioning stack");
  }
  const auto net_params = layer.params().net.template cast<Scalar>();
  const auto head = layer.params().head.template cast<Scalar>();
  const MultivectorStack<Scalar> mv =
      cond ? cond_kernel_net_forward(layer.network(), net_params, x, *cond)
           : kernel_net_forward(layer.network(), net_params, x);
  return kernel_head(mv, head, layer.algebra());
}

template <typename Scalar>
KernelBank<Scalar> evaluate_kernel_bank(const ConvLayer& layer,
                                        const MultivectorStack<Scalar>* cond = nullptr) {
  if (layer.config().conditional != (cond != nullptr)) {
    throw std::invalid_argument(layer.config().conditional
                                    ? "conditional layer needs a conditioning stack"
                                    : "unconditional layer takes no conditioning stack");
  }
  if (cond && (cond->rows() != layer.algebra().blades() ||
               cond->cols() != layer.config().in_channels)) {
    throw std::invalid_argument("conditioning stack must be blades x c_in");
  }
  const auto net_params = layer.params().net.template cast<Scalar>();
  const auto head = layer.params().head.template cast<Scalar>();
  const int blades = layer.algebra().blades();
  const GridSpec& support = layer.support_grid();
  KernelBank<Scalar> bank{support, {}, {}};
  bank.kernels.reserve(support.points());
  for (int o = 0; o < support.points(); ++o) {
    const bool on = layer.offset_active(o);
    bank.active.push_back(on ? 1 : 0);
    if (!on) {
      bank.kernels.push_back(KernelMatrix<Scalar>::Zero(layer.config().out_channels * blades,
                                                        layer.config().in_channels * blades));
      continue;
    }
    const Eigen::Matrix<Scalar, -1, 1> x = support.position(o).template cast<Scalar>();
    const MultivectorStack<Scalar> mv =
        cond ? cond_kernel_net_forward(layer.network(), net_params, x, *cond)
             : kernel_net_forward(layer.network(), net_params, x);
    bank.kernels.push_back(kernel_head(mv, head, layer.algebra()));
  }
  return bank;
}

namespace detail {

// Calls visit(out_begin, in_begin, length) for every contiguous last-axis run
// where output point x receives input point x - z.
template <typename Visit>
void for_each_run(const GridSpec& grid, const std::vector<int>& z, Padding padding, Visit&& visit) {
  const int d = grid.dims();
  const int last = d - 1;
  const int n_last = grid.extent(last);
  const int rows = grid.points() / n_last;
  std::vector<int> multi(d, 0);
  std::vector<int> src(d, 0);
  for (int r = 0; r < rows; ++r) {
    grid.unravel(r * n_last, multi.data());
    bool inside = true;
    for (int a = 0; a < last; ++a) {
      int y = multi[a] - z[a];
      const int n = grid.extent(a);
      if (padding == Padding::Periodic) {
        y = ((y % n) + n) % n;
      } else if (y < 0 || y >= n) {
        inside = false;
        break;
      }
      src[a] = y;
    }
    if (!inside) continue;
    src[last] = 0;
    const int row_out = r * n_last;
    const int row_in = grid.ravel(src.data());
    const int shift = z[last];
    if (padding == Padding::Periodic) {
      const int s = ((shift % n_last) + n_last) % n_last;
      // x in [s, n): y = x - s;  x in [0, s): y = x - s + n.
      if (n_last - s > 0) visit(row_out + s, row_in, n_last - s);
      if (s > 0) visit(row_out, row_in + n_last - s, s);
    } else {
      const int lo = std::max(0, shift);
      const int hi = std::min(n_last, n_last + shift);
      if (hi > lo) visit(row_out + lo, row_in + lo - shift, hi - lo);
    }
  }
}

inline std::vector<int> support_shift(const GridSpec& support, int offset) {
  std::vector<int> z(support.dims());
  support.unravel(offset, z.data());
  for (int a = 0; a < support.dims(); ++a) z[a] -= (support.extent(a) - 1) / 2;
  return z;
}

}  // namespace detail

/// f_out(x) = sum_z K_z f(x - z), cell volume 1.
template <typename Scalar>
MultivectorField<Scalar> convolve_with_bank(const KernelBank<Scalar>& bank,
                                            const MultivectorField<Scalar>& f, int out_channels,
                                            Padding padding = Padding::Zero) {
  if (bank.support.dims() != f.spec().dims()) {
    throw std::invalid_argument("kernel support and field differ in dimension");
  }
  const int blades = f.blades();
  if (!bank.kernels.empty() && bank.kernels.front().cols() != f.channels() * blades) {
    throw std::invalid_argument("field has " + std::to_string(f.channels()) +
                                " channels, kernel expects " +
                                std::to_string(bank.kernels.front().cols() / blades));
  }
  MultivectorField<Scalar> out(f.spec(), f.signature(), out_channels);
  auto& dst = out.data();
  const auto& src = f.data();
  for (std::size_t o = 0; o < bank.kernels.size(); ++o) {
    if (!bank.active[o]) continue;
    const auto& k = bank.kernels[o];
    const std::vector<int> z = detail::support_shift(bank.support, static_cast<int>(o));
    detail::for_each_run(f.spec(), z, padding, [&](int out_begin, int in_begin, int len) {
      dst.middleCols(out_begin, len).noalias() += k * src.middleCols(in_begin, len);
    });
  }
  return out;
}

/// T[f]: masked spatial mean, optionally grade-wise normalized.
template <typename Scalar>
MultivectorStack<Scalar> conditioning(const ConvLayer& layer, const MultivectorField<Scalar>& f) {
  const CircularMask mask = layer.config().full_pool_mask ? make_full_mask(f.spec())
                                                          : make_circular_mask(f.spec());
  MultivectorStack<Scalar> cond = masked_mean_pool(f, mask);
  if (layer.config().normalize_cond) {
    cond = gradewise_normalize<Scalar>(cond, layer.norm_scales().template cast<Scalar>(),
                                       layer.signature());
  }
  return cond;
}

/// Convolution with an explicit conditioning stack (ignored = nullptr for
/// unconditional layers).
template <typename Scalar>
MultivectorField<Scalar> convolve_with_cond(const ConvLayer& layer, const MultivectorField<Scalar>& f,
                                            const MultivectorStack<Scalar>* cond) {
  if (f.channels() != layer.config().in_channels) {
    throw std::invalid_argument("convolve: field has " + std::to_string(f.channels()) +
                                " channels, layer expects " +
                                std::to_string(layer.config().in_channels));
  }
  if (!(f.signature() == layer.signature())) {
    throw std::invalid_argument("convolve: field signature does not match layer");
  }
  const KernelBank<Scalar> bank = evaluate_kernel_bank<Scalar>(layer, cond);
  return convolve_with_bank(bank, f, layer.config().out_channels, layer.config().padding);
}

template <typename Scalar>
MultivectorField<Scalar> convolve(const ConvLayer& layer, const MultivectorField<Scalar>& f) {
  if (!layer.config().conditional) return convolve_with_cond<Scalar>(layer, f, nullptr);
  if (f.channels() != layer.config().in_channels) {
    throw std::invalid_argument("convolve: field has " + std::to_string(f.channels()) +
                                " channels, layer expects " +
                                std::to_string(layer.config().in_channels));
  }
  const MultivectorStack<Scalar> cond = conditioning(layer, f);
  return convolve_with_cond<Scalar>(layer, f, &cond);
}

/// dL/dK_z for every offset given dL/df_out, with f the layer input.
std::vector<KernelMatrix<double>> kernel_bank_gradient(const KernelBank<double>& bank,
                                                       const MultivectorField<double>& f,
                                                       const MultivectorField<double>& d_out,
                                                       Padding padding);

/// Pulls dL/dK_z back to the layer's flat parameters (added into d_flat) and,
/// when d_cond is given, to the conditioning stack (added into d_cond).
void accumulate_kernel_gradient(const ConvLayer& layer, const MultivectorStack<double>* cond,
                                const std::vector<KernelMatrix<double>>& d_bank,
                                Eigen::Ref<Eigen::VectorXd> d_flat,
                                MultivectorStack<double>* d_cond = nullptr);

/// Multivector coefficient norm per (point, channel); mean over both of
/// |a - b| / (|a + b| + 1e-30).
double relative_field_error(const MultivectorField<double>& a, const MultivectorField<double>& b);

using FieldOperator = std::function<MultivectorField<double>(const MultivectorField<double>&)>;

/// err(f; g) for an arbitrary field operator, e.g. a stack of layers.
double relative_equivariance_error(const FieldOperator& op, const MultivectorField<double>& f,
                                   const GroupElement& g,
                                   TransformMode mode = TransformMode::ExactGrid);

double relative_equivariance_error(const ConvLayer& layer, const MultivectorField<double>& f,
                                   const GroupElement& g,
                                   TransformMode mode = TransformMode::ExactGrid);

/// Single-precision variant of the same measurement.
double relative_equivariance_error_float(const ConvLayer& layer, const MultivectorField<double>& f,
                                         const GroupElement& g);

}  // namespace csteer
