#include "csteer/algebra.hpp"

#include <sstream>
#include <stdexcept>

namespace csteer {

Signature::Signature(int p, int q) : p_(p), q_(q) {
  if (p < 0 || q < 0) {
    throw std::invalid_argument("signature counts must be non-negative");
  }
  if (p + q < 1 || p + q > kMaxDim) {
    throw std::invalid_argument("unsupported dimension n = " + std::to_string(p + q) +
                                " (supported: 1 <= n <= 4)");
  }
}

Signature Signature::parse(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw std::invalid_argument("signature must be given as P,Q: '" + text + "'");
  }
  std::size_t used_p = 0;
  std::size_t used_q = 0;
  int p = 0;
  int q = 0;
  try {
    p = std::stoi(text.substr(0, comma), &used_p);
    q = std::stoi(text.substr(comma + 1), &used_q);
  } catch (const std::exception&) {
    throw std::invalid_argument("signature must be given as P,Q: '" + text + "'");
  }
  if (used_p != comma || used_q != text.size() - comma - 1) {
    throw std::invalid_argument("signature must be given as P,Q: '" + text + "'");
  }
  return Signature(p, q);
}

Eigen::MatrixXd Signature::metric_matrix() const {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(dim(), dim());
  for (int i = 0; i < dim(); ++i) eta(i, i) = metric(i);
  return eta;
}

std::string Signature::to_string() const {
  return std::to_string(p_) + "," + std::to_string(q_);
}

std::string blade_name(unsigned blade) {
  if (blade == 0) return "1";
  std::string name = "e";
  for (int i = 0; i < kMaxDim; ++i) {
    if (blade & (1u << i)) name += std::to_string(i + 1);
  }
  return name;
}

CayleyTable build_cayley_table(const Signature& sig) {
  CayleyTable table{sig};
  const unsigned count = static_cast<unsigned>(sig.blades());
  for (unsigned a = 0; a < count; ++a) {
    for (unsigned b = 0; b < count; ++b) {
      // Moving each factor of b leftwards past the larger factors of a.
      int swaps = 0;
      for (unsigned rest = a >> 1; rest != 0; rest >>= 1) {
        swaps += std::popcount(rest & b);
      }
      int sign = (swaps & 1) ? -1 : 1;
      const unsigned shared = a & b;
      for (int i = 0; i < sig.dim(); ++i) {
        if (shared & (1u << i)) sign *= sig.metric(i);
      }
      table.sign[a][b] = static_cast<std::int8_t>(sign);
      table.result[a][b] = static_cast<std::uint8_t>(a ^ b);
    }
  }
  return table;
}

LambdaTensor build_lambda(const CayleyTable& table) {
  const int grades = table.sig.grades();
  // 0: nothing lands, 1: all +1, 2: all -1, 3: mixed
  std::vector<int> seen(grades * grades * grades, 0);
  for (int a = 0; a < table.blades(); ++a) {
    for (int b = 0; b < table.blades(); ++b) {
      const int m = blade_grade(a);
      const int n = blade_grade(b);
      const int k = blade_grade(table.result[a][b]);
      seen[(k * grades + m) * grades + n] |= table.sign[a][b] > 0 ? 1 : 2;
    }
  }
  LambdaTensor lambda;
  lambda.grades = grades;
  for (int k = 0; k < grades; ++k) {
    for (int m = 0; m < grades; ++m) {
      for (int n = 0; n < grades; ++n) {
        const int s = seen[(k * grades + m) * grades + n];
        lambda.at(k, m, n) = static_cast<std::int8_t>(s == 0 ? 0 : (s == 2 ? -1 : 1));
      }
    }
  }
  return lambda;
}

LambdaTensor build_lambda(const Signature& sig) {
  return build_lambda(build_cayley_table(sig));
}

Algebra::Algebra(const Signature& sig)
    : table_(build_cayley_table(sig)), lambda_(build_lambda(table_)) {
  const int g = grades();
  triple_lookup_.assign(g * g * g, -1);
  for (int k = 0; k < g; ++k) {
    for (int m = 0; m < g; ++m) {
      for (int n = 0; n < g; ++n) {
        if (lambda_.at(k, m, n) != 0) {
          triple_lookup_[(m * g + n) * g + k] = static_cast<int>(triples_.size());
          triples_.push_back({m, n, k});
        }
      }
    }
  }
  for (int a = 0; a < blades(); ++a) {
    for (int b = 0; b < blades(); ++b) {
      const int r = table_.result[a][b];
      terms_.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                        static_cast<std::uint8_t>(r), table_.sign[a][b],
                        static_cast<std::uint8_t>(triple_index(
                            blade_grade(a), blade_grade(b), blade_grade(r)))});
    }
  }
  by_grade_.resize(g);
  for (int a = 0; a < blades(); ++a) by_grade_[blade_grade(a)].push_back(a);
}

int Algebra::triple_index(int m, int n, int k) const {
  const int g = grades();
  if (m < 0 || n < 0 || k < 0 || m >= g || n >= g || k >= g) return -1;
  return triple_lookup_[(m * g + n) * g + k];
}

}  // namespace csteer
