#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csteer/group.hpp"
#include "csteer/multivector.hpp"

namespace csteer {

/// Regular grid centered on the origin. Cell i along an axis sits at
/// (i - (N-1)/2) * spacing; the last axis varies fastest in linear indices.
class GridSpec {
 public:
  explicit GridSpec(std::vector<int> extents, std::vector<double> spacing = {});

  static GridSpec cube(int dims, int extent, double spacing = 1.0) {
    return GridSpec(std::vector<int>(dims, extent), std::vector<double>(dims, spacing));
  }

  int dims() const { return static_cast<int>(extents_.size()); }
  int points() const { return points_; }
  int extent(int axis) const { return extents_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  const std::vector<int>& extents() const { return extents_; }
  const std::vector<double>& spacings() const { return spacing_; }
  int stride(int axis) const { return strides_[axis]; }

  double center(int axis) const { return 0.5 * (extents_[axis] - 1); }
  double coordinate(int axis, int i) const { return (i - center(axis)) * spacing_[axis]; }
  Eigen::VectorXd position(int index) const;

  void unravel(int index, int* multi) const;
  int ravel(const int* multi) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.extents_ == b.extents_ && a.spacing_ == b.spacing_;
  }

 private:
  std::vector<int> extents_;
  std::vector<double> spacing_;
  std::vector<int> strides_;
  int points_ = 0;
};

/// c-channel multivector field on a grid whose dimension equals n. Storage is
/// (channels * blades) x points, so every column is the full channel stack at
/// one grid point and block c of that column is channel c.
template <typename Scalar>
class MultivectorField {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  MultivectorField(GridSpec spec, Signature sig, int channels)
      : spec_(std::move(spec)), sig_(sig), channels_(channels) {
    if (spec_.dims() != sig_.dim()) {
      throw std::invalid_argument("field grid dimension " + std::to_string(spec_.dims()) +
                                  " does not match n = " + std::to_string(sig_.dim()));
    }
    if (channels < 1) throw std::invalid_argument("field needs at least one channel");
    data_ = Matrix::Zero(channels_ * sig_.blades(), spec_.points());
  }

  const GridSpec& spec() const { return spec_; }
  const Signature& signature() const { return sig_; }
  int channels() const { return channels_; }
  int blades() const { return sig_.blades(); }
  int points() const { return spec_.points(); }

  Matrix& data() { return data_; }
  const Matrix& data() const { return data_; }

  auto value(int point, int channel) { return data_.col(point).segment(channel * blades(), blades()); }
  auto value(int point, int channel) const {
    return data_.col(point).segment(channel * blades(), blades());
  }

  /// The channel stack at one point viewed as blades x channels.
  Eigen::Map<Matrix> stack(int point) {
    return Eigen::Map<Matrix>(data_.col(point).data(), blades(), channels_);
  }
  Eigen::Map<const Matrix> stack(int point) const {
    return Eigen::Map<const Matrix>(data_.col(point).data(), blades(), channels_);
  }

  template <typename Other>
  MultivectorField<Other> cast() const {
    MultivectorField<Other> out(spec_, sig_, channels_);
    out.data() = data_.template cast<Other>();
    return out;
  }

 private:
  GridSpec spec_;
  Signature sig_;
  int channels_;
  Matrix data_;
};

/// Indicator of the largest centered ball that fits inside the grid. A full
/// mask (every cell set) stands in for the plain square support.
struct CircularMask {
  GridSpec spec;
  double radius = 0.0;
  std::vector<std::uint8_t> indicator;

  int count() const;
};

CircularMask make_circular_mask(const GridSpec& spec);
CircularMask make_full_mask(const GridSpec& spec);

template <typename Scalar>
using ScalarGrid = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
/// n x points, one column per grid point.
template <typename Scalar>
using VectorGrid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
void embed_scalar_into(MultivectorField<Scalar>& field, const ScalarGrid<Scalar>& values,
                       int slot) {
  if (values.size() != field.points()) {
    throw std::invalid_argument("embed_scalar: grid has " + std::to_string(values.size()) +
                                " values, field has " + std::to_string(field.points()) +
                                " points");
  }
  if (slot < 0 || slot >= field.channels()) throw std::invalid_argument("embed_scalar: bad slot");
  for (int p = 0; p < field.points(); ++p) field.value(p, slot)(0) = values(p);
}

template <typename Scalar>
void embed_vector_into(MultivectorField<Scalar>& field, const VectorGrid<Scalar>& vectors,
                       int slot) {
  const int n = field.signature().dim();
  if (vectors.rows() != n) {
    throw std::invalid_argument("embed_vector: vector dimension " +
                                std::to_string(vectors.rows()) + " but n = " + std::to_string(n));
  }
  if (vectors.cols() != field.points()) {
    throw std::invalid_argument("embed_vector: grid shape mismatch");
  }
  if (slot < 0 || slot >= field.channels()) throw std::invalid_argument("embed_vector: bad slot");
  for (int p = 0; p < field.points(); ++p) {
    for (int i = 0; i < n; ++i) field.value(p, slot)(1 << i) = vectors(i, p);
  }
}

template <typename Scalar>
MultivectorField<Scalar> embed_scalar(const GridSpec& spec, const Signature& sig,
                                      const ScalarGrid<Scalar>& values, int channels = 1,
                                      int slot = 0) {
  MultivectorField<Scalar> field(spec, sig, channels);
  embed_scalar_into(field, values, slot);
  return field;
}

template <typename Scalar>
MultivectorField<Scalar> embed_vector(const GridSpec& spec, const Signature& sig,
                                      const VectorGrid<Scalar>& vectors, int channels = 1,
                                      int slot = 0) {
  MultivectorField<Scalar> field(spec, sig, channels);
  embed_vector_into(field, vectors, slot);
  return field;
}

template <typename Scalar>
ScalarGrid<Scalar> extract_scalar(const MultivectorField<Scalar>& field, int slot) {
  ScalarGrid<Scalar> out(field.points());
  for (int p = 0; p < field.points(); ++p) out(p) = field.value(p, slot)(0);
  return out;
}

template <typename Scalar>
VectorGrid<Scalar> extract_vector(const MultivectorField<Scalar>& field, int slot) {
  const int n = field.signature().dim();
  VectorGrid<Scalar> out(n, field.points());
  for (int p = 0; p < field.points(); ++p) {
    for (int i = 0; i < n; ++i) out(i, p) = field.value(p, slot)(1 << i);
  }
  return out;
}

enum class TransformMode {
  /// g must permute grid points; no interpolation.
  ExactGrid,
  /// Multilinear interpolation of f at g^{-1}x; zero outside the grid.
  Resample,
};

namespace detail {

// Source index of output point `index` under g^{-1} for signed permutations.
int exact_source_index(const GridSpec& spec, const Eigen::MatrixXd& g_inv, int index);

struct InterpolationStencil {
  std::vector<int> points;
  std::vector<double> weights;
};
InterpolationStencil resample_stencil(const GridSpec& spec, const Eigen::VectorXd& y);

}  // namespace detail

/// [g f](x) = rho_Cl(g) f(g^{-1} x), channel by channel.
template <typename Scalar>
MultivectorField<Scalar> transform_field(const MultivectorField<Scalar>& f, const GroupElement& g,
                                         TransformMode mode = TransformMode::ExactGrid) {
  if (!(g.signature() == f.signature())) {
    throw std::invalid_argument("transform_field: group element signature mismatch");
  }
  const GridSpec& spec = f.spec();
  const Eigen::MatrixXd g_inv = g.inverse().matrix();
  const BladeMatrix<Scalar> rho = g.rho().cast<Scalar>();
  MultivectorField<Scalar> out(spec, f.signature(), f.channels());
  if (mode == TransformMode::ExactGrid) {
    if (!is_signed_permutation(g.matrix())) {
      throw std::invalid_argument(
          "transform_field: exact-grid mode needs a signed axis permutation");
    }
    for (int p = 0; p < spec.points(); ++p) {
      const int src = detail::exact_source_index(spec, g_inv, p);
      out.stack(p).noalias() = rho * f.stack(src);
    }
    return out;
  }
  MultivectorStack<Scalar> sample(f.blades(), f.channels());
  for (int p = 0; p < spec.points(); ++p) {
    const auto stencil = detail::resample_stencil(spec, g_inv * spec.position(p));
    sample.setZero();
    for (std::size_t s = 0; s < stencil.points.size(); ++s) {
      sample += Scalar(stencil.weights[s]) * f.stack(stencil.points[s]);
    }
    out.stack(p).noalias() = rho * sample;
  }
  return out;
}

/// out(i + shift) = f(i) with periodic wrap.
template <typename Scalar>
MultivectorField<Scalar> circular_shift(const MultivectorField<Scalar>& f,
                                        const std::vector<int>& shift) {
  const GridSpec& spec = f.spec();
  if (static_cast<int>(shift.size()) != spec.dims()) {
    throw std::invalid_argument("circular_shift: shift dimension mismatch");
  }
  MultivectorField<Scalar> out(spec, f.signature(), f.channels());
  std::vector<int> multi(spec.dims());
  for (int p = 0; p < spec.points(); ++p) {
    spec.unravel(p, multi.data());
    for (int a = 0; a < spec.dims(); ++a) {
      const int n = spec.extent(a);
      multi[a] = ((multi[a] + shift[a]) % n + n) % n;
    }
    out.data().col(spec.ravel(multi.data())) = f.data().col(p);
  }
  return out;
}

/// T[f] = (1/|Omega|) sum_x chi(x) f(x), per channel and blade.
template <typename Scalar>
MultivectorStack<Scalar> masked_mean_pool(const MultivectorField<Scalar>& f,
                                          const CircularMask& mask) {
  if (!(mask.spec == f.spec())) {
    throw std::invalid_argument("masked_mean_pool: mask grid does not match field grid");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sum =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(f.data().rows());
  for (int p = 0; p < f.points(); ++p) {
    if (mask.indicator[p]) sum += f.data().col(p);
  }
  sum /= Scalar(f.points());
  return Eigen::Map<MultivectorStack<Scalar>>(sum.data(), f.blades(), f.channels());
}

inline constexpr double kNormalizeEpsilon = 1e-6;

/// Each grade-k block of each channel is divided by (eps + its coefficient
/// norm) and multiplied by scales(k).
template <typename Scalar>
MultivectorStack<Scalar> gradewise_normalize(const MultivectorStack<Scalar>& stack,
                                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& scales,
                                             const Signature& sig,
                                             double eps = kNormalizeEpsilon) {
  if (scales.size() != sig.grades()) {
    throw std::invalid_argument("gradewise_normalize: need one scale per grade");
  }
  for (int k = 0; k < scales.size(); ++k) {
    if (!(scales(k) > Scalar(0))) throw std::invalid_argument("gradewise_normalize: scales must be positive");
  }
  MultivectorStack<Scalar> out = stack;
  for (int c = 0; c < stack.cols(); ++c) {
    for (int k = 0; k < sig.grades(); ++k) {
      const Scalar factor = scales(k) / (Scalar(eps) + grade_norm(stack.col(c), k));
      for (int b = 0; b < sig.blades(); ++b) {
        if (blade_grade(b) == k) out(b, c) *= factor;
      }
    }
  }
  return out;
}

}  // namespace csteer
