#include "csteer/group.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace csteer {

double pseudo_orthogonality_defect(const Signature& sig, const Eigen::MatrixXd& g) {
  if (g.rows() != sig.dim() || g.cols() != sig.dim()) {
    throw std::invalid_argument("group matrix must be n x n for signature " + sig.to_string());
  }
  const Eigen::MatrixXd eta = sig.metric_matrix();
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff());
  return (g.transpose() * eta * g - eta).cwiseAbs().maxCoeff() / scale;
}

bool is_pseudo_orthogonal(const Signature& sig, const Eigen::MatrixXd& g, double tol) {
  return pseudo_orthogonality_defect(sig, g) <= tol;
}

Eigen::MatrixXd extend_to_rho_cl(const Eigen::MatrixXd& g, const Signature& sig) {
  if (!is_pseudo_orthogonal(sig, g)) {
    throw std::invalid_argument("extend_to_rho_cl: matrix is not pseudo-orthogonal for " +
                                sig.to_string());
  }
  const int blades = sig.blades();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(blades, blades);
  std::vector<int> rows;
  std::vector<int> cols;
  for (int out = 0; out < blades; ++out) {
    for (int in = 0; in < blades; ++in) {
      if (blade_grade(out) != blade_grade(in)) continue;
      const int k = blade_grade(in);
      if (k == 0) {
        rho(out, in) = 1.0;
        continue;
      }
      rows.clear();
      cols.clear();
      for (int i = 0; i < sig.dim(); ++i) {
        if (out & (1 << i)) rows.push_back(i);
        if (in & (1 << i)) cols.push_back(i);
      }
      Eigen::MatrixXd minor(k, k);
      for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) minor(r, c) = g(rows[r], cols[c]);
      }
      rho(out, in) = minor.determinant();
    }
  }
  return rho;
}

GroupElement::GroupElement(const Signature& sig, const Eigen::MatrixXd& g)
    : sig_(sig), g_(g), rho_(extend_to_rho_cl(g, sig)) {}

GroupElement GroupElement::identity(const Signature& sig) {
  return GroupElement(sig, Eigen::MatrixXd::Identity(sig.dim(), sig.dim()));
}

GroupElement GroupElement::inverse() const {
  // g^{-1} = eta g^T eta for pseudo-orthogonal g.
  const Eigen::MatrixXd eta = sig_.metric_matrix();
  return GroupElement(sig_, eta * g_.transpose() * eta);
}

GroupElement GroupElement::operator*(const GroupElement& other) const {
  if (!(sig_ == other.sig_)) {
    throw std::invalid_argument("cannot compose group elements of different signatures");
  }
  return GroupElement(sig_, g_ * other.g_);
}

GroupElement orthogonal_from_generator(const Signature& sig, int i, int j, double angle,
                                       std::optional<int> flip_axis) {
  const int n = sig.dim();
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    throw std::invalid_argument("degenerate generator plane (" + std::to_string(i) + "," +
                                std::to_string(j) + ") for n = " + std::to_string(n));
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
  if (sig.metric(i) == sig.metric(j)) {
    g(i, i) = std::cos(angle);
    g(i, j) = -std::sin(angle);
    g(j, i) = std::sin(angle);
    g(j, j) = std::cos(angle);
  } else {
    g(i, i) = std::cosh(angle);
    g(i, j) = std::sinh(angle);
    g(j, i) = std::sinh(angle);
    g(j, j) = std::cosh(angle);
  }
  if (flip_axis) {
    if (*flip_axis < 0 || *flip_axis >= n) {
      throw std::invalid_argument("flip axis out of range");
    }
    g.col(*flip_axis) *= -1.0;
  }
  return GroupElement(sig, g);
}

bool is_signed_permutation(const Eigen::MatrixXd& g, double tol) {
  if (g.rows() != g.cols()) return false;
  for (int r = 0; r < g.rows(); ++r) {
    int nonzero = 0;
    for (int c = 0; c < g.cols(); ++c) {
      const double v = g(r, c);
      if (std::abs(v) <= tol) continue;
      if (std::abs(std::abs(v) - 1.0) > tol) return false;
      ++nonzero;
    }
    if (nonzero != 1) return false;
  }
  for (int c = 0; c < g.cols(); ++c) {
    int nonzero = 0;
    for (int r = 0; r < g.rows(); ++r) nonzero += std::abs(g(r, c)) > tol;
    if (nonzero != 1) return false;
  }
  return true;
}

std::vector<GroupElement> exact_grid_symmetries(const Signature& sig) {
  const int n = sig.dim();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<GroupElement> out;
  do {
    bool keeps_metric = true;
    for (int i = 0; i < n; ++i) keeps_metric &= sig.metric(perm[i]) == sig.metric(i);
    if (!keeps_metric) continue;
    for (int flips = 0; flips < (1 << n); ++flips) {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) g(perm[i], i) = (flips & (1 << i)) ? -1.0 : 1.0;
      out.emplace_back(sig, g);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

GroupSampler::GroupSampler(const Signature& sig, Kind kind, double max_rapidity)
    : sig_(sig), kind_(kind), max_rapidity_(max_rapidity) {}

GroupElement GroupSampler::random_rotation(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  GroupElement g = GroupElement::identity(sig_);
  // Two sweeps over the planes give a generic element of the rotation subgroup.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int i = 0; i < sig_.dim(); ++i) {
      for (int j = i + 1; j < sig_.dim(); ++j) {
        if (sig_.metric(i) != sig_.metric(j)) continue;
        g = g * orthogonal_from_generator(sig_, i, j, angle(rng));
      }
    }
  }
  return g;
}

GroupElement GroupSampler::sample(std::mt19937_64& rng) const {
  if (kind_ == Kind::IdentityOnly) return GroupElement::identity(sig_);
  GroupElement g = random_rotation(rng);
  if (kind_ == Kind::WithBoosts && !sig_.definite()) {
    std::vector<std::pair<int, int>> mixed;
    for (int i = 0; i < sig_.dim(); ++i) {
      for (int j = i + 1; j < sig_.dim(); ++j) {
        if (sig_.metric(i) != sig_.metric(j)) mixed.emplace_back(i, j);
      }
    }
    std::uniform_int_distribution<std::size_t> pick(0, mixed.size() - 1);
    std::uniform_real_distribution<double> rapidity(-max_rapidity_, max_rapidity_);
    const auto [i, j] = mixed[pick(rng)];
    g = g * orthogonal_from_generator(sig_, i, j, rapidity(rng)) * random_rotation(rng);
  }
  std::bernoulli_distribution reflect(0.5);
  if (reflect(rng)) {
    std::uniform_int_distribution<int> axis(0, sig_.dim() - 1);
    Eigen::MatrixXd flip = Eigen::MatrixXd::Identity(sig_.dim(), sig_.dim());
    const int a = axis(rng);
    flip(a, a) = -1.0;
    g = g * GroupElement(sig_, flip);
  }
  return g;
}

}  // namespace csteer
