#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "csteer/signature.hpp"

namespace csteer {

/// Geometric product of basis blades: e_a e_b = sign[a][b] e_{a xor b}.
struct CayleyTable {
  Signature sig;
  std::array<std::array<std::int8_t, kMaxBlades>, kMaxBlades> sign{};
  std::array<std::array<std::uint8_t, kMaxBlades>, kMaxBlades> result{};

  int blades() const { return sig.blades(); }
};

/// Rejects n > 4 and negative counts.
CayleyTable build_cayley_table(const Signature& sig);

/// Grade-level interaction tensor. at(k, m, n) is nonzero iff a grade-m blade
/// times a grade-n blade can land in grade k. The value is the common sign of
/// those products when it is uniform and +1 when the signs are mixed; the
/// per-blade sign always lives in the Cayley table.
struct LambdaTensor {
  int grades = 0;
  std::array<std::int8_t, (kMaxDim + 1) * (kMaxDim + 1) * (kMaxDim + 1)> entries{};

  int at(int k, int m, int n) const { return entries[index(k, m, n)]; }
  std::int8_t& at(int k, int m, int n) { return entries[index(k, m, n)]; }

 private:
  static int index(int k, int m, int n) {
    return (k * (kMaxDim + 1) + m) * (kMaxDim + 1) + n;
  }
};

LambdaTensor build_lambda(const Signature& sig);
LambdaTensor build_lambda(const CayleyTable& table);

/// A grade triple (m, n) -> k with a nonzero Lambda entry. Weighted geometric
/// products and the kernel head carry one weight per triple.
struct GradeTriple {
  int m;
  int n;
  int k;
};

/// One nonzero term of the geometric product: (a_i b_j) contributes
/// sign * a_i * b_j to blade result; triple indexes the grade triple.
struct ProductTerm {
  std::uint8_t lhs;
  std::uint8_t rhs;
  std::uint8_t result;
  std::int8_t sign;
  std::uint8_t triple;
};

/// Immutable bundle of everything derived from a signature. Shared between
/// layers and networks.
class Algebra {
 public:
  explicit Algebra(const Signature& sig);

  static std::shared_ptr<const Algebra> make(const Signature& sig) {
    return std::make_shared<const Algebra>(sig);
  }

  const Signature& signature() const { return table_.sig; }
  const CayleyTable& table() const { return table_; }
  const LambdaTensor& lambda() const { return lambda_; }
  int dim() const { return table_.sig.dim(); }
  int blades() const { return table_.sig.blades(); }
  int grades() const { return table_.sig.grades(); }

  const std::vector<GradeTriple>& triples() const { return triples_; }
  /// Index into triples(), or -1 when Lambda^k_{mn} = 0.
  int triple_index(int m, int n, int k) const;
  const std::vector<ProductTerm>& terms() const { return terms_; }

  /// Blades of grade k in ascending bitmask order.
  const std::vector<int>& blades_of_grade(int k) const { return by_grade_[k]; }

 private:
  CayleyTable table_;
  LambdaTensor lambda_;
  std::vector<GradeTriple> triples_;
  std::vector<int> triple_lookup_;
  std::vector<ProductTerm> terms_;
  std::vector<std::vector<int>> by_grade_;
};

}  // namespace csteer
