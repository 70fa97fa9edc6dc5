#pragma once

#include <bit>
#include <string>

#include <Eigen/Dense>

namespace csteer {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxBlades = 1 << kMaxDim;

/// Metric signature (p, q) of R^{p,q}. The first p basis vectors square to +1,
/// the remaining q to -1.
class Signature {
 public:
  Signature(int p, int q);

  /// Parses "P,Q".
  static Signature parse(const std::string& text);

  int p() const { return p_; }
  int q() const { return q_; }
  int dim() const { return p_ + q_; }
  int blades() const { return 1 << dim(); }
  int grades() const { return dim() + 1; }

  /// Diagonal metric entry eta_ii.
  int metric(int axis) const { return axis < p_ ? 1 : -1; }
  Eigen::MatrixXd metric_matrix() const;
  bool definite() const { return p_ == 0 || q_ == 0; }

  std::string to_string() const;

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.p_ == b.p_ && a.q_ == b.q_;
  }

 private:
  int p_;
  int q_;
};

/// Blades are bitmasks over basis vectors: bit i set means e_{i+1} is a factor.
inline int blade_grade(unsigned blade) { return std::popcount(blade); }

/// Human-readable blade name, e.g. "1", "e1", "e12".
std::string blade_name(unsigned blade);

}  // namespace csteer
