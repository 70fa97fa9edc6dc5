#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "csteer/algebra.hpp"
#include "csteer/multivector.hpp"

namespace csteer {

/// Shape of an O(p,q)-equivariant kernel network. Channels are multivector
/// channels. The network is
///   input linear -> depth x [weighted geometric product block] -> output linear
/// where a block computes gate(L_u h + wgp(h, L_m h)).
struct KernelNetArch {
  int input_channels = 1;
  int hidden = 12;
  int depth = 4;
  int output_channels = 1;
  /// Negative control: the input layer leaks e1 into the scalar channel.
  bool grade_mixing_defect = false;

  friend bool operator==(const KernelNetArch&, const KernelNetArch&) = default;
};

template <typename Scalar>
struct KernelNetParams {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;

  template <typename Other>
  KernelNetParams<Other> cast() const {
    return {values.template cast<Other>()};
  }
};

/// Learnable w^k_{mn} for every channel pair (row o * c_in + i) and every
/// grade triple with nonzero Lambda (column = Algebra::triple_index).
template <typename Scalar>
struct HeadWeights {
  int out_channels = 1;
  int in_channels = 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w;

  template <typename Other>
  HeadWeights<Other> cast() const {
    return {out_channels, in_channels, w.template cast<Other>()};
  }
};

/// (c_out * 2^n) x (c_in * 2^n): entry (o * B + r, i * B + s) maps blade s of
/// input channel i to blade r of output channel o.
template <typename Scalar>
using KernelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Intermediate activations kept for the backward pass.
template <typename Scalar>
struct NetTape {
  MultivectorStack<Scalar> input;
  std::vector<MultivectorStack<Scalar>> block_in;
  std::vector<MultivectorStack<Scalar>> mixed;
  std::vector<MultivectorStack<Scalar>> pre_gate;
  MultivectorStack<Scalar> last;
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  return Scalar(1) / (Scalar(1) + exp(-z));
}

class KernelNetwork {
 public:
  KernelNetwork(std::shared_ptr<const Algebra> algebra, KernelNetArch arch);

  const KernelNetArch& arch() const { return arch_; }
  const Algebra& algebra() const { return *algebra_; }
  const std::shared_ptr<const Algebra>& algebra_ptr() const { return algebra_; }
  int num_params() const { return num_params_; }

  /// input: blades x input_channels. Returns blades x output_channels.
  template <typename Scalar>
  MultivectorStack<Scalar> forward(const KernelNetParams<Scalar>& params,
                                   const MultivectorStack<Scalar>& input,
                                   NetTape<Scalar>* tape = nullptr) const;

  /// Accumulates dL/dparams into d_params and, when d_input is given, writes
  /// dL/dinput there.
  void backward(const KernelNetParams<double>& params, const NetTape<double>& tape,
                const MultivectorStack<double>& d_output, Eigen::Ref<Eigen::VectorXd> d_params,
                MultivectorStack<double>* d_input = nullptr) const;

  /// Parameter indices of the input layer weight column for grade k that
  /// multiplies input channel `channel`. Used to widen networks.
  struct LinearSlot {
    int offset = 0;
    int out = 0;
    int in = 0;
    bool bias = false;
    int weight_offset(int grade) const { return offset + grade * out * in; }
    int bias_offset(int grades) const { return offset + grades * out * in; }
    int size(int grades) const { return grades * out * in + (bias ? out : 0); }
  };
  struct BlockSlots {
    LinearSlot mix;
    int gp_offset = 0;
    LinearSlot update;
  };
  const LinearSlot& input_slot() const { return input_; }
  const LinearSlot& output_slot() const { return output_; }
  const std::vector<BlockSlots>& block_slots() const { return blocks_; }

 private:
  template <typename Scalar>
  MultivectorStack<Scalar> linear(const LinearSlot& slot, const Eigen::Matrix<Scalar, -1, 1>& p,
                                  const MultivectorStack<Scalar>& x) const;
  void linear_backward(const LinearSlot& slot, const Eigen::VectorXd& p,
                       const MultivectorStack<double>& x, const MultivectorStack<double>& dy,
                       Eigen::Ref<Eigen::VectorXd> dp, MultivectorStack<double>& dx) const;

  std::shared_ptr<const Algebra> algebra_;
  KernelNetArch arch_;
  LinearSlot input_;
  LinearSlot output_;
  std::vector<BlockSlots> blocks_;
  int num_params_ = 0;
};

template <typename Scalar>
MultivectorStack<Scalar> KernelNetwork::linear(const LinearSlot& slot,
                                               const Eigen::Matrix<Scalar, -1, 1>& p,
                                               const MultivectorStack<Scalar>& x) const {
  using ConstMap = Eigen::Map<const Eigen::Matrix<Scalar, -1, -1>>;
  const int blades = algebra_->blades();
  MultivectorStack<Scalar> y(blades, slot.out);
  for (int b = 0; b < blades; ++b) {
    ConstMap w(p.data() + slot.weight_offset(blade_grade(b)), slot.out, slot.in);
    y.row(b).noalias() = x.row(b) * w.transpose();
  }
  if (slot.bias) {
    y.row(0) += Eigen::Map<const Eigen::Matrix<Scalar, 1, -1>>(
        p.data() + slot.bias_offset(algebra_->grades()), slot.out);
  }
  return y;
}

template <typename Scalar>
MultivectorStack<Scalar> KernelNetwork::forward(const KernelNetParams<Scalar>& params,
                                                const MultivectorStack<Scalar>& input,
                                                NetTape<Scalar>* tape) const {
  if (params.values.size() != num_params_) {
    throw std::invalid_argument("kernel network expects " + std::to_string(num_params_) +
                                " parameters, got " + std::to_string(params.values.size()));
  }
  if (input.rows() != algebra_->blades() || input.cols() != arch_.input_channels) {
    throw std::invalid_argument("kernel network input must be " +
                                std::to_string(algebra_->blades()) + " x " +
                                std::to_string(arch_.input_channels));
  }
  const auto& p = params.values;
  MultivectorStack<Scalar> h = linear(input_, p, input);
  if (arch_.grade_mixing_defect && algebra_->blades() > 1) {
    using ConstMap = Eigen::Map<const Eigen::Matrix<Scalar, -1, -1>>;
    ConstMap w(p.data() + input_.weight_offset(0), input_.out, input_.in);
    h.row(0) += input.row(1) * w.transpose();
  }
  if (tape) {
    tape->input = input;
    tape->block_in.clear();
    tape->mixed.clear();
    tape->pre_gate.clear();
  }
  const auto& terms = algebra_->terms();
  for (const BlockSlots& block : blocks_) {
    MultivectorStack<Scalar> mixed = linear(block.mix, p, h);
    MultivectorStack<Scalar> z = linear(block.update, p, h);
    for (int c = 0; c < arch_.hidden; ++c) {
      for (const ProductTerm& t : terms) {
        const Scalar w = p(block.gp_offset + t.triple * arch_.hidden + c);
        z(t.result, c) += w * Scalar(t.sign) * h(t.lhs, c) * mixed(t.rhs, c);
      }
    }
    if (tape) {
      tape->block_in.push_back(h);
      tape->mixed.push_back(mixed);
      tape->pre_gate.push_back(z);
    }
    for (int c = 0; c < arch_.hidden; ++c) {
      const Scalar gate = sigmoid(z(0, c));
      h.col(c) = z.col(c) * gate;
    }
  }
  if (tape) tape->last = h;
  return linear(output_, p, h);
}

/// Kernel network on a single spatial offset (grade-1 embedding).
template <typename Scalar>
MultivectorStack<Scalar> kernel_net_forward(const KernelNetwork& net,
                                            const KernelNetParams<Scalar>& params,
                                            const Eigen::Matrix<Scalar, -1, 1>& x,
                                            NetTape<Scalar>* tape = nullptr);

/// Offset concatenated with a spatially constant conditioning stack.
template <typename Scalar>
MultivectorStack<Scalar> cond_kernel_net_forward(const KernelNetwork& net,
                                                 const KernelNetParams<Scalar>& params,
                                                 const Eigen::Matrix<Scalar, -1, 1>& x,
                                                 const MultivectorStack<Scalar>& cond,
                                                 NetTape<Scalar>* tape = nullptr);

/// Network input stack: column 0 is x on grade 1, then the conditioning channels.
template <typename Scalar>
MultivectorStack<Scalar> kernel_input(const Algebra& algebra, const Eigen::Matrix<Scalar, -1, 1>& x,
                                      const MultivectorStack<Scalar>* cond) {
  if (x.size() != algebra.dim()) {
    throw std::invalid_argument("offset dimension does not match n = " +
                                std::to_string(algebra.dim()));
  }
  const int extra = cond ? static_cast<int>(cond->cols()) : 0;
  MultivectorStack<Scalar> input = MultivectorStack<Scalar>::Zero(algebra.blades(), 1 + extra);
  for (int i = 0; i < algebra.dim(); ++i) input(1 << i, 0) = x(i);
  if (cond) {
    if (cond->rows() != algebra.blades()) {
      throw std::invalid_argument("conditioning stack has wrong blade count");
    }
    input.rightCols(extra) = *cond;
  }
  return input;
}

template <typename Scalar>
MultivectorStack<Scalar> kernel_net_forward(const KernelNetwork& net,
                                            const KernelNetParams<Scalar>& params,
                                            const Eigen::Matrix<Scalar, -1, 1>& x,
                                            NetTape<Scalar>* tape) {
  if (net.arch().input_channels != 1) {
    throw std::invalid_argument("unconditional kernel network must have one input channel");
  }
  return net.forward(params, kernel_input<Scalar>(net.algebra(), x, nullptr), tape);
}

template <typename Scalar>
MultivectorStack<Scalar> cond_kernel_net_forward(const KernelNetwork& net,
                                                 const KernelNetParams<Scalar>& params,
                                                 const Eigen::Matrix<Scalar, -1, 1>& x,
                                                 const MultivectorStack<Scalar>& cond,
                                                 NetTape<Scalar>* tape) {
  if (net.arch().input_channels != 1 + cond.cols()) {
    throw std::invalid_argument("conditioning stack has " + std::to_string(cond.cols()) +
                                " channels, network expects " +
                                std::to_string(net.arch().input_channels - 1));
  }
  return net.forward(params, kernel_input<Scalar>(net.algebra(), x, &cond), tape);
}

/// H: block (k, n) of each channel pair is sum_m w^k_{mn} times left
/// multiplication by <mv>_m, restricted to grade n -> grade k.
template <typename Scalar>
KernelMatrix<Scalar> kernel_head(const MultivectorStack<Scalar>& mv, const HeadWeights<Scalar>& head,
                                 const Algebra& algebra) {
  const int blades = algebra.blades();
  const int pairs = head.out_channels * head.in_channels;
  if (mv.rows() != blades || mv.cols() != pairs || head.w.rows() != pairs ||
      head.w.cols() != static_cast<int>(algebra.triples().size())) {
    throw std::invalid_argument("kernel_head: shapes do not match");
  }
  KernelMatrix<Scalar> k = KernelMatrix<Scalar>::Zero(head.out_channels * blades,
                                                      head.in_channels * blades);
  for (int o = 0; o < head.out_channels; ++o) {
    for (int i = 0; i < head.in_channels; ++i) {
      const int pair = o * head.in_channels + i;
      for (const ProductTerm& t : algebra.terms()) {
        k(o * blades + t.result, i * blades + t.rhs) +=
            head.w(pair, t.triple) * Scalar(t.sign) * mv(t.lhs, pair);
      }
    }
  }
  return k;
}

void kernel_head_backward(const MultivectorStack<double>& mv, const HeadWeights<double>& head,
                          const Algebra& algebra, const KernelMatrix<double>& d_kernel,
                          MultivectorStack<double>& d_mv, Eigen::MatrixXd& d_head);

struct KernelParamSet {
  KernelNetParams<double> net;
  HeadWeights<double> head;
};

/// Deterministic given the seed. Linear and product weights are normal with
/// variance 1/fan-in; biases start at zero.
KernelParamSet init_params(const KernelNetwork& net, int out_channels, int in_channels,
                           std::uint64_t seed);

/// Copies weights from a network with fewer input channels; the extra input
/// columns are set to `fill`. Everything else is identical.
KernelNetParams<double> widen_input(const KernelNetwork& from, const KernelNetParams<double>& params,
                                    const KernelNetwork& to, double fill = 0.0);

/// Text blob keyed by signature, architecture and seed.
void save_params(std::ostream& os, const KernelNetwork& net, const KernelParamSet& params,
                 std::uint64_t seed);

struct LoadedParams {
  Signature sig;
  KernelNetArch arch;
  std::uint64_t seed = 0;
  KernelParamSet params;
};
LoadedParams load_params(std::istream& is);

}  // namespace csteer
