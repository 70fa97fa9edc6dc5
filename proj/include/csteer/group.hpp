#pragma once

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "csteer/signature.hpp"

namespace csteer {

inline constexpr double kPseudoOrthogonalTolerance = 1e-12;

/// max |g^T eta g - eta|, relative to max(1, |g|_max^2) so boosts with large
/// cosh entries are judged on the same footing as rotations.
double pseudo_orthogonality_defect(const Signature& sig, const Eigen::MatrixXd& g);
bool is_pseudo_orthogonal(const Signature& sig, const Eigen::MatrixXd& g,
                          double tol = kPseudoOrthogonalTolerance);

/// Outermorphism of g on Cl(p,q): the grade-k block holds the k x k minors of g.
Eigen::MatrixXd extend_to_rho_cl(const Eigen::MatrixXd& g, const Signature& sig);

/// Pseudo-orthogonal matrix g together with its multivector representation.
class GroupElement {
 public:
  /// Validates g^T eta g = eta and builds rho_Cl(g).
  GroupElement(const Signature& sig, const Eigen::MatrixXd& g);

  static GroupElement identity(const Signature& sig);

  const Signature& signature() const { return sig_; }
  const Eigen::MatrixXd& matrix() const { return g_; }
  const Eigen::MatrixXd& rho() const { return rho_; }
  double determinant() const { return g_.determinant(); }

  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& other) const;

 private:
  Signature sig_;
  Eigen::MatrixXd g_;
  Eigen::MatrixXd rho_;
};

/// Rotation in plane (i, j) when eta_ii = eta_jj, hyperbolic boost (the angle
/// is a rapidity) otherwise. An optional axis flip is applied first.
GroupElement orthogonal_from_generator(const Signature& sig, int i, int j, double angle,
                                       std::optional<int> flip_axis = std::nullopt);

/// Entries in {-1, 0, 1} with one nonzero per row and column.
bool is_signed_permutation(const Eigen::MatrixXd& g, double tol = 1e-12);

/// Signed axis permutations that preserve eta, identity first.
std::vector<GroupElement> exact_grid_symmetries(const Signature& sig);

/// Random group elements for audits.
class GroupSampler {
 public:
  enum class Kind {
    IdentityOnly,
    /// Rotations and reflections; boosts are excluded.
    Orthogonal,
    /// Orthogonal, plus one boost with |rapidity| <= max_rapidity for
    /// indefinite signatures.
    WithBoosts,
  };

  GroupSampler(const Signature& sig, Kind kind, double max_rapidity = 1.0);

  GroupElement sample(std::mt19937_64& rng) const;
  Kind kind() const { return kind_; }

 private:
  GroupElement random_rotation(std::mt19937_64& rng) const;

  Signature sig_;
  Kind kind_;
  double max_rapidity_;
};

}  // namespace csteer
