#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "csteer/algebra.hpp"

namespace csteer {

/// 2^n coefficients indexed by blade bitmask. Capacity is fixed at 16 so
/// multivectors never touch the heap.
template <typename Scalar>
using Multivector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxBlades, 1>;

/// c multivectors side by side: blades x channels, one column per channel.
template <typename Scalar>
using MultivectorStack = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using BladeMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxBlades, kMaxBlades>;

template <typename DerivedA, typename DerivedB>
Multivector<typename DerivedA::Scalar> geometric_product(const Eigen::MatrixBase<DerivedA>& a,
                                                         const Eigen::MatrixBase<DerivedB>& b,
                                                         const CayleyTable& table) {
  using Scalar = typename DerivedA::Scalar;
  const int count = table.blades();
  if (a.size() != count || b.size() != count) {
    throw std::invalid_argument("geometric_product: operands do not match signature " +
                                table.sig.to_string());
  }
  Multivector<Scalar> out = Multivector<Scalar>::Zero(count);
  for (int i = 0; i < count; ++i) {
    if (a(i) == Scalar(0)) continue;
    for (int j = 0; j < count; ++j) {
      out(table.result[i][j]) += Scalar(table.sign[i][j]) * a(i) * b(j);
    }
  }
  return out;
}

template <typename Derived>
Multivector<typename Derived::Scalar> grade_project(const Eigen::MatrixBase<Derived>& a, int k,
                                                    const Signature& sig) {
  if (k < 0 || k > sig.dim()) {
    throw std::invalid_argument("grade_project: grade " + std::to_string(k) +
                                " out of range for n = " + std::to_string(sig.dim()));
  }
  if (a.size() != sig.blades()) {
    throw std::invalid_argument("grade_project: multivector does not match signature");
  }
  Multivector<typename Derived::Scalar> out = a;
  for (int i = 0; i < sig.blades(); ++i) {
    if (blade_grade(i) != k) out(i) = 0;
  }
  return out;
}

/// Matrix L with L * b == geometric_product(a, b).
template <typename Derived>
BladeMatrix<typename Derived::Scalar> left_multiplication_matrix(
    const Eigen::MatrixBase<Derived>& a, const CayleyTable& table) {
  using Scalar = typename Derived::Scalar;
  const int count = table.blades();
  BladeMatrix<Scalar> left = BladeMatrix<Scalar>::Zero(count, count);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) {
      left(table.result[i][j], j) += Scalar(table.sign[i][j]) * a(i);
    }
  }
  return left;
}

/// Euclidean norm of the grade-k coefficients.
template <typename Derived>
typename Derived::Scalar grade_norm(const Eigen::MatrixBase<Derived>& a, int k) {
  typename Derived::Scalar sum(0);
  for (int i = 0; i < a.size(); ++i) {
    if (blade_grade(i) == k) sum += a(i) * a(i);
  }
  using std::sqrt;
  return sqrt(sum);
}

}  // namespace csteer
