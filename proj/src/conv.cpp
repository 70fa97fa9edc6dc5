#include "csteer/conv.hpp"

namespace csteer {

namespace {

GridSpec make_support(int dims, int support) {
  if (support < 1 || support % 2 == 0) {
    throw std::invalid_argument("kernel support must be odd and positive, got " +
                                std::to_string(support));
  }
  return GridSpec::cube(dims, support, support > 1 ? 2.0 / (support - 1) : 1.0);
}

}  // namespace

KernelNetArch ConvLayer::arch_for(const ConvLayerConfig& config) {
  if (config.in_channels < 1 || config.out_channels < 1) {
    throw std::invalid_argument("conv layer needs positive channel counts");
  }
  KernelNetArch arch;
  arch.input_channels = config.conditional ? 1 + config.in_channels : 1;
  arch.hidden = config.hidden;
  arch.depth = config.depth;
  arch.output_channels = config.in_channels * config.out_channels;
  arch.grade_mixing_defect = config.grade_mixing_defect;
  return arch;
}

ConvLayer::ConvLayer(const Signature& sig, const ConvLayerConfig& config, std::uint64_t seed)
    : config_(config),
      network_(Algebra::make(sig), arch_for(config)),
      params_(init_params(network_, config.out_channels, config.in_channels, seed)),
      support_grid_(make_support(sig.dim(), config.support)),
      support_mask_(make_circular_mask(support_grid_)),
      norm_scales_(Eigen::VectorXd::Ones(sig.grades())) {}

ConvLayer::ConvLayer(std::shared_ptr<const Algebra> algebra, const ConvLayerConfig& config,
                     KernelParamSet params)
    : config_(config),
      network_(std::move(algebra), arch_for(config)),
      params_(std::move(params)),
      support_grid_(make_support(network_.algebra().dim(), config.support)),
      support_mask_(make_circular_mask(support_grid_)),
      norm_scales_(Eigen::VectorXd::Ones(network_.algebra().grades())) {
  if (params_.net.values.size() != network_.num_params()) {
    throw std::invalid_argument("conv layer parameters do not match its kernel network");
  }
  if (params_.head.out_channels != config.out_channels ||
      params_.head.in_channels != config.in_channels ||
      params_.head.w.rows() != config.out_channels * config.in_channels ||
      params_.head.w.cols() != static_cast<int>(network_.algebra().triples().size())) {
    throw std::invalid_argument("conv layer head weights have the wrong shape");
  }
}

int ConvLayer::num_params() const {
  return network_.num_params() + static_cast<int>(params_.head.w.size());
}

Eigen::VectorXd ConvLayer::flat_params() const {
  Eigen::VectorXd flat(num_params());
  flat.head(network_.num_params()) = params_.net.values;
  flat.tail(params_.head.w.size()) = params_.head.w.reshaped();
  return flat;
}

void ConvLayer::set_flat_params(const Eigen::VectorXd& flat) {
  if (flat.size() != num_params()) {
    throw std::invalid_argument("set_flat_params: expected " + std::to_string(num_params()) +
                                " values, got " + std::to_string(flat.size()));
  }
  params_.net.values = flat.head(network_.num_params());
  params_.head.w.reshaped() = flat.tail(params_.head.w.size());
}

std::vector<KernelMatrix<double>> kernel_bank_gradient(const KernelBank<double>& bank,
                                                       const MultivectorField<double>& f,
                                                       const MultivectorField<double>& d_out,
                                                       Padding padding) {
  if (!(f.spec() == d_out.spec())) {
    throw std::invalid_argument("kernel_bank_gradient: field grids differ");
  }
  std::vector<KernelMatrix<double>> grads;
  grads.reserve(bank.kernels.size());
  for (std::size_t o = 0; o < bank.kernels.size(); ++o) {
    KernelMatrix<double> g = KernelMatrix<double>::Zero(d_out.data().rows(), f.data().rows());
    if (bank.active[o]) {
      const std::vector<int> z = detail::support_shift(bank.support, static_cast<int>(o));
      detail::for_each_run(f.spec(), z, padding, [&](int out_begin, int in_begin, int len) {
        g.noalias() +=
            d_out.data().middleCols(out_begin, len) * f.data().middleCols(in_begin, len).transpose();
      });
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

void accumulate_kernel_gradient(const ConvLayer& layer, const MultivectorStack<double>* cond,
                                const std::vector<KernelMatrix<double>>& d_bank,
                                Eigen::Ref<Eigen::VectorXd> d_flat,
                                MultivectorStack<double>* d_cond) {
  if (layer.config().conditional != (cond != nullptr)) {
    throw std::invalid_argument("accumulate_kernel_gradient: conditioning stack mismatch");
  }
  if (d_flat.size() != layer.num_params()) {
    throw std::invalid_argument("accumulate_kernel_gradient: gradient buffer has wrong size");
  }
  const GridSpec& support = layer.support_grid();
  if (static_cast<int>(d_bank.size()) != support.points()) {
    throw std::invalid_argument("accumulate_kernel_gradient: one gradient per offset required");
  }
  const KernelNetwork& net = layer.network();
  const auto& params = layer.params();
  const int n_net = net.num_params();
  const int n_head = static_cast<int>(params.head.w.size());
  if (d_cond && cond) {
    if (d_cond->rows() != cond->rows() || d_cond->cols() != cond->cols()) {
      *d_cond = MultivectorStack<double>::Zero(cond->rows(), cond->cols());
    }
  }
  NetTape<double> tape;
  MultivectorStack<double> d_mv;
  Eigen::MatrixXd d_head;
  MultivectorStack<double> d_input;
  for (int o = 0; o < support.points(); ++o) {
    if (!layer.offset_active(o)) continue;
    const Eigen::VectorXd x = support.position(o);
    const MultivectorStack<double> input = kernel_input<double>(layer.algebra(), x, cond);
    const MultivectorStack<double> mv = net.forward(params.net, input, &tape);
    kernel_head_backward(mv, params.head, layer.algebra(), d_bank[o], d_mv, d_head);
    net.backward(params.net, tape, d_mv, d_flat.head(n_net), d_cond ? &d_input : nullptr);
    d_flat.tail(n_head) += d_head.reshaped();
    if (d_cond && cond) *d_cond += d_input.rightCols(cond->cols());
  }
}

double relative_field_error(const MultivectorField<double>& a, const MultivectorField<double>& b) {
  if (!(a.spec() == b.spec()) || a.channels() != b.channels()) {
    throw std::invalid_argument("relative_field_error: fields differ in shape");
  }
  double total = 0.0;
  for (int p = 0; p < a.points(); ++p) {
    for (int c = 0; c < a.channels(); ++c) {
      const auto u = a.value(p, c);
      const auto v = b.value(p, c);
      total += (u - v).norm() / ((u + v).norm() + 1e-30);
    }
  }
  return total / (static_cast<double>(a.points()) * a.channels());
}

double relative_equivariance_error(const FieldOperator& op, const MultivectorField<double>& f,
                                   const GroupElement& g, TransformMode mode) {
  const MultivectorField<double> lhs = op(transform_field(f, g, mode));
  const MultivectorField<double> rhs = transform_field(op(f), g, mode);
  return relative_field_error(lhs, rhs);
}

double relative_equivariance_error(const ConvLayer& layer, const MultivectorField<double>& f,
                                   const GroupElement& g, TransformMode mode) {
  return relative_equivariance_error(
      [&layer](const MultivectorField<double>& x) { return convolve<double>(layer, x); }, f, g,
      mode);
}

double relative_equivariance_error_float(const ConvLayer& layer, const MultivectorField<double>& f,
                                         const GroupElement& g) {
  const MultivectorField<float> ff = f.cast<float>();
  const MultivectorField<double> lhs =
      convolve<float>(layer, transform_field(ff, g)).cast<double>();
  const MultivectorField<double> rhs =
      transform_field(convolve<float>(layer, ff), g).cast<double>();
  return relative_field_error(lhs, rhs);
}

}  // namespace csteer
