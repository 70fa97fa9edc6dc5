#include "csteer/kernel_net.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace csteer {

KernelNetwork::KernelNetwork(std::shared_ptr<const Algebra> algebra, KernelNetArch arch)
    : algebra_(std::move(algebra)), arch_(arch) {
  if (!algebra_) throw std::invalid_argument("kernel network needs an algebra");
  if (arch_.input_channels < 1 || arch_.output_channels < 1) {
    throw std::invalid_argument("kernel network needs at least one input and output channel");
  }
  if (arch_.hidden < 1 || arch_.depth < 0) {
    throw std::invalid_argument("kernel network hidden width must be >= 1 and depth >= 0");
  }
  const int grades = algebra_->grades();
  const int triples = static_cast<int>(algebra_->triples().size());
  int offset = 0;
  auto take = [&](int out, int in, bool bias) {
    LinearSlot slot{offset, out, in, bias};
    offset += slot.size(grades);
    return slot;
  };
  input_ = take(arch_.hidden, arch_.input_channels, true);
  for (int d = 0; d < arch_.depth; ++d) {
    BlockSlots block;
    block.mix = take(arch_.hidden, arch_.hidden, false);
    block.gp_offset = offset;
    offset += triples * arch_.hidden;
    block.update = take(arch_.hidden, arch_.hidden, true);
    blocks_.push_back(block);
  }
  output_ = take(arch_.output_channels, arch_.hidden, true);
  num_params_ = offset;
}

void KernelNetwork::linear_backward(const LinearSlot& slot, const Eigen::VectorXd& p,
                                    const MultivectorStack<double>& x,
                                    const MultivectorStack<double>& dy,
                                    Eigen::Ref<Eigen::VectorXd> dp,
                                    MultivectorStack<double>& dx) const {
  const int blades = algebra_->blades();
  for (int b = 0; b < blades; ++b) {
    const int w_off = slot.weight_offset(blade_grade(b));
    Eigen::Map<const Eigen::MatrixXd> w(p.data() + w_off, slot.out, slot.in);
    Eigen::Map<Eigen::MatrixXd> dw(dp.data() + w_off, slot.out, slot.in);
    dw.noalias() += dy.row(b).transpose() * x.row(b);
    dx.row(b).noalias() += dy.row(b) * w;
  }
  if (slot.bias) {
    Eigen::Map<Eigen::RowVectorXd>(dp.data() + slot.bias_offset(algebra_->grades()), slot.out) +=
        dy.row(0);
  }
}

void KernelNetwork::backward(const KernelNetParams<double>& params, const NetTape<double>& tape,
                             const MultivectorStack<double>& d_output,
                             Eigen::Ref<Eigen::VectorXd> d_params,
                             MultivectorStack<double>* d_input) const {
  if (d_params.size() != num_params_) {
    throw std::invalid_argument("kernel network gradient buffer has wrong size");
  }
  if (static_cast<int>(tape.block_in.size()) != arch_.depth) {
    throw std::invalid_argument("kernel network tape does not match depth");
  }
  const auto& p = params.values;
  const int blades = algebra_->blades();
  const int hidden = arch_.hidden;
  MultivectorStack<double> dh = MultivectorStack<double>::Zero(blades, hidden);
  linear_backward(output_, p, tape.last, d_output, d_params, dh);

  const auto& terms = algebra_->terms();
  for (int d = arch_.depth - 1; d >= 0; --d) {
    const BlockSlots& block = blocks_[d];
    const auto& h = tape.block_in[d];
    const auto& mixed = tape.mixed[d];
    const auto& z = tape.pre_gate[d];

    MultivectorStack<double> dz(blades, hidden);
    for (int c = 0; c < hidden; ++c) {
      const double s = sigmoid(z(0, c));
      dz.col(c) = dh.col(c) * s;
      dz(0, c) += dh.col(c).dot(z.col(c)) * s * (1.0 - s);
    }

    MultivectorStack<double> dh_prev = MultivectorStack<double>::Zero(blades, hidden);
    MultivectorStack<double> dmixed = MultivectorStack<double>::Zero(blades, hidden);
    for (int c = 0; c < hidden; ++c) {
      for (const ProductTerm& t : terms) {
        const int idx = block.gp_offset + t.triple * hidden + c;
        const double g = dz(t.result, c) * t.sign;
        d_params(idx) += g * h(t.lhs, c) * mixed(t.rhs, c);
        dh_prev(t.lhs, c) += g * p(idx) * mixed(t.rhs, c);
        dmixed(t.rhs, c) += g * p(idx) * h(t.lhs, c);
      }
    }
    linear_backward(block.update, p, h, dz, d_params, dh_prev);
    linear_backward(block.mix, p, h, dmixed, d_params, dh_prev);
    dh = std::move(dh_prev);
  }

  MultivectorStack<double> dx = MultivectorStack<double>::Zero(blades, arch_.input_channels);
  linear_backward(input_, p, tape.input, dh, d_params, dx);
  if (arch_.grade_mixing_defect && blades > 1) {
    const int w_off = input_.weight_offset(0);
    Eigen::Map<const Eigen::MatrixXd> w(p.data() + w_off, input_.out, input_.in);
    Eigen::Map<Eigen::MatrixXd> dw(d_params.data() + w_off, input_.out, input_.in);
    dw.noalias() += dh.row(0).transpose() * tape.input.row(1);
    dx.row(1).noalias() += dh.row(0) * w;
  }
  if (d_input) *d_input = std::move(dx);
}

void kernel_head_backward(const MultivectorStack<double>& mv, const HeadWeights<double>& head,
                          const Algebra& algebra, const KernelMatrix<double>& d_kernel,
                          MultivectorStack<double>& d_mv, Eigen::MatrixXd& d_head) {
  const int blades = algebra.blades();
  const int pairs = head.out_channels * head.in_channels;
  if (d_kernel.rows() != head.out_channels * blades || d_kernel.cols() != head.in_channels * blades) {
    throw std::invalid_argument("kernel_head_backward: gradient has wrong shape");
  }
  d_mv = MultivectorStack<double>::Zero(blades, pairs);
  d_head = Eigen::MatrixXd::Zero(head.w.rows(), head.w.cols());
  for (int o = 0; o < head.out_channels; ++o) {
    for (int i = 0; i < head.in_channels; ++i) {
      const int pair = o * head.in_channels + i;
      for (const ProductTerm& t : algebra.terms()) {
        const double g = d_kernel(o * blades + t.result, i * blades + t.rhs) * t.sign;
        d_head(pair, t.triple) += g * mv(t.lhs, pair);
        d_mv(t.lhs, pair) += g * head.w(pair, t.triple);
      }
    }
  }
}

KernelParamSet init_params(const KernelNetwork& net, int out_channels, int in_channels,
                           std::uint64_t seed) {
  if (out_channels * in_channels != net.arch().output_channels) {
    throw std::invalid_argument("init_params: c_out * c_in must equal the network output channels");
  }
  const Algebra& algebra = net.algebra();
  const int grades = algebra.grades();
  const auto& triples = algebra.triples();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  KernelParamSet set;
  set.net.values = Eigen::VectorXd::Zero(net.num_params());
  auto fill_linear = [&](const KernelNetwork::LinearSlot& slot) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(slot.in));
    for (int i = 0; i < grades * slot.out * slot.in; ++i) {
      set.net.values(slot.offset + i) = scale * normal(rng);
    }
  };
  // Fan-in of a product weight: the number of triples feeding its output grade.
  std::vector<int> into(grades, 0);
  for (const auto& t : triples) ++into[t.k];

  fill_linear(net.input_slot());
  const int hidden = net.arch().hidden;
  for (const auto& block : net.block_slots()) {
    fill_linear(block.mix);
    for (std::size_t t = 0; t < triples.size(); ++t) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(into[triples[t].k]));
      for (int c = 0; c < hidden; ++c) {
        set.net.values(block.gp_offset + static_cast<int>(t) * hidden + c) = scale * normal(rng);
      }
    }
    fill_linear(block.update);
  }
  fill_linear(net.output_slot());

  // Head fan-in for block (k, n): the operand grades m with Lambda^k_{mn} != 0.
  std::vector<int> head_in((grades) * (grades), 0);
  for (const auto& t : triples) ++head_in[t.k * grades + t.n];
  set.head.out_channels = out_channels;
  set.head.in_channels = in_channels;
  set.head.w.resize(out_channels * in_channels, static_cast<int>(triples.size()));
  for (int r = 0; r < set.head.w.rows(); ++r) {
    for (std::size_t t = 0; t < triples.size(); ++t) {
      const double fan = head_in[triples[t].k * grades + triples[t].n];
      set.head.w(r, static_cast<int>(t)) = normal(rng) / std::sqrt(fan);
    }
  }
  return set;
}

KernelNetParams<double> widen_input(const KernelNetwork& from, const KernelNetParams<double>& params,
                                    const KernelNetwork& to, double fill) {
  const auto& a = from.arch();
  const auto& b = to.arch();
  if (a.hidden != b.hidden || a.depth != b.depth || a.output_channels != b.output_channels ||
      b.input_channels < a.input_channels ||
      !(from.algebra().signature() == to.algebra().signature())) {
    throw std::invalid_argument("widen_input: networks differ in more than input width");
  }
  if (params.values.size() != from.num_params()) {
    throw std::invalid_argument("widen_input: parameter vector does not match network");
  }
  const int grades = from.algebra().grades();
  KernelNetParams<double> out{Eigen::VectorXd::Zero(to.num_params())};
  const auto& src = from.input_slot();
  const auto& dst = to.input_slot();
  for (int k = 0; k < grades; ++k) {
    Eigen::Map<const Eigen::MatrixXd> w(params.values.data() + src.weight_offset(k), src.out, src.in);
    Eigen::Map<Eigen::MatrixXd> v(out.values.data() + dst.weight_offset(k), dst.out, dst.in);
    v.setConstant(fill);
    v.leftCols(src.in) = w;
  }
  out.values.segment(dst.bias_offset(grades), dst.out) =
      params.values.segment(src.bias_offset(grades), src.out);
  const int tail_src = src.offset + src.size(grades);
  const int tail_dst = dst.offset + dst.size(grades);
  out.values.segment(tail_dst, to.num_params() - tail_dst) =
      params.values.segment(tail_src, from.num_params() - tail_src);
  return out;
}

void save_params(std::ostream& os, const KernelNetwork& net, const KernelParamSet& params,
                 std::uint64_t seed) {
  const auto& arch = net.arch();
  os << "csteer-params v1\n"
     << "signature=" << net.algebra().signature().p() << ',' << net.algebra().signature().q()
     << " input_channels=" << arch.input_channels << " hidden=" << arch.hidden
     << " depth=" << arch.depth << " output_channels=" << arch.output_channels
     << " head_out=" << params.head.out_channels << " head_in=" << params.head.in_channels
     << " seed=" << seed << '\n';
  os << std::setprecision(17);
  os << "net " << params.net.values.size() << '\n';
  for (int i = 0; i < params.net.values.size(); ++i) os << params.net.values(i) << '\n';
  os << "head " << params.head.w.rows() << ' ' << params.head.w.cols() << '\n';
  for (int r = 0; r < params.head.w.rows(); ++r) {
    for (int c = 0; c < params.head.w.cols(); ++c) os << (c ? " " : "") << params.head.w(r, c);
    os << '\n';
  }
}

LoadedParams load_params(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "csteer-params v1") {
    throw std::runtime_error("not a csteer parameter file");
  }
  std::getline(is, line);
  std::istringstream header(line);
  std::string token;
  int p = -1, q = -1, head_out = 0, head_in = 0;
  KernelNetArch arch;
  std::uint64_t seed = 0;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "signature") {
      const Signature sig = Signature::parse(value);
      p = sig.p();
      q = sig.q();
    } else if (key == "input_channels") {
      arch.input_channels = std::stoi(value);
    } else if (key == "hidden") {
      arch.hidden = std::stoi(value);
    } else if (key == "depth") {
      arch.depth = std::stoi(value);
    } else if (key == "output_channels") {
      arch.output_channels = std::stoi(value);
    } else if (key == "head_out") {
      head_out = std::stoi(value);
    } else if (key == "head_in") {
      head_in = std::stoi(value);
    } else if (key == "seed") {
      seed = std::stoull(value);
    }
  }
  if (p < 0) throw std::runtime_error("parameter file lacks a signature");
  LoadedParams loaded{Signature(p, q), arch, seed, {}};
  std::string tag;
  long count = 0;
  if (!(is >> tag >> count) || tag != "net") throw std::runtime_error("parameter file lacks net block");
  loaded.params.net.values.resize(count);
  for (long i = 0; i < count; ++i) {
    if (!(is >> loaded.params.net.values(i))) throw std::runtime_error("parameter file truncated");
  }
  long rows = 0, cols = 0;
  if (!(is >> tag >> rows >> cols) || tag != "head") {
    throw std::runtime_error("parameter file lacks head block");
  }
  loaded.params.head.out_channels = head_out;
  loaded.params.head.in_channels = head_in;
  loaded.params.head.w.resize(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!(is >> loaded.params.head.w(r, c))) throw std::runtime_error("parameter file truncated");
    }
  }
  KernelNetwork check(Algebra::make(loaded.sig), loaded.arch);
  if (check.num_params() != count) {
    throw std::runtime_error("parameter count does not match the recorded architecture");
  }
  return loaded;
}

}  // namespace csteer
