#include "csteer/grid.hpp"

#include <algorithm>
#include <limits>

namespace csteer {

GridSpec::GridSpec(std::vector<int> extents, std::vector<double> spacing)
    : extents_(std::move(extents)), spacing_(std::move(spacing)) {
  if (extents_.empty()) throw std::invalid_argument("grid needs at least one axis");
  if (spacing_.empty()) spacing_.assign(extents_.size(), 1.0);
  if (spacing_.size() != extents_.size()) {
    throw std::invalid_argument("grid spacing must have one entry per axis");
  }
  strides_.assign(extents_.size(), 1);
  points_ = 1;
  for (int a = dims() - 1; a >= 0; --a) {
    if (extents_[a] < 1) throw std::invalid_argument("grid extents must be positive");
    if (!(spacing_[a] > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    strides_[a] = points_;
    points_ *= extents_[a];
  }
}

Eigen::VectorXd GridSpec::position(int index) const {
  Eigen::VectorXd x(dims());
  for (int a = 0; a < dims(); ++a) {
    x(a) = coordinate(a, (index / strides_[a]) % extents_[a]);
  }
  return x;
}

void GridSpec::unravel(int index, int* multi) const {
  for (int a = 0; a < dims(); ++a) multi[a] = (index / strides_[a]) % extents_[a];
}

int GridSpec::ravel(const int* multi) const {
  int index = 0;
  for (int a = 0; a < dims(); ++a) index += multi[a] * strides_[a];
  return index;
}

int CircularMask::count() const {
  return static_cast<int>(std::count(indicator.begin(), indicator.end(), std::uint8_t{1}));
}

CircularMask make_circular_mask(const GridSpec& spec) {
  CircularMask mask{spec, 0.0, {}};
  mask.radius = std::numeric_limits<double>::infinity();
  for (int a = 0; a < spec.dims(); ++a) {
    mask.radius = std::min(mask.radius, spec.center(a) * spec.spacing(a));
  }
  mask.indicator.resize(spec.points());
  const double limit = mask.radius * mask.radius * (1.0 + 1e-12);
  for (int p = 0; p < spec.points(); ++p) {
    mask.indicator[p] = spec.position(p).squaredNorm() <= limit ? 1 : 0;
  }
  return mask;
}

CircularMask make_full_mask(const GridSpec& spec) {
  CircularMask mask{spec, 0.0, {}};
  mask.radius = std::numeric_limits<double>::infinity();
  mask.indicator.assign(spec.points(), 1);
  return mask;
}

namespace detail {

int exact_source_index(const GridSpec& spec, const Eigen::MatrixXd& g_inv, int index) {
  const Eigen::VectorXd y = g_inv * spec.position(index);
  std::vector<int> multi(spec.dims());
  for (int a = 0; a < spec.dims(); ++a) {
    const double u = y(a) / spec.spacing(a) + spec.center(a);
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9 || r < 0 || r > spec.extent(a) - 1) {
      throw std::invalid_argument(
          "transform_field: group element does not map the grid onto itself");
    }
    multi[a] = static_cast<int>(r);
  }
  return spec.ravel(multi.data());
}

InterpolationStencil resample_stencil(const GridSpec& spec, const Eigen::VectorXd& y) {
  const int d = spec.dims();
  std::vector<int> lo(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    double u = y(a) / spec.spacing(a) + spec.center(a);
    const double top = spec.extent(a) - 1;
    // Points a rounding error outside the grid count as on its boundary.
    if (u < 0 && u > -1e-9) u = 0;
    if (u > top && u < top + 1e-9) u = top;
    double base = std::floor(u);
    if (base >= top && top >= 0) base = std::max(0.0, top - 1);
    lo[a] = static_cast<int>(base);
    frac[a] = u - base;
  }
  InterpolationStencil stencil;
  std::vector<int> multi(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    bool inside = true;
    for (int a = 0; a < d; ++a) {
      const bool upper = corner & (1 << a);
      multi[a] = lo[a] + (upper ? 1 : 0);
      w *= upper ? frac[a] : 1.0 - frac[a];
      inside &= multi[a] >= 0 && multi[a] < spec.extent(a);
    }
    if (!inside || w == 0.0) continue;
    stencil.points.push_back(spec.ravel(multi.data()));
    stencil.weights.push_back(w);
  }
  return stencil;
}

}  // namespace detail

}  // namespace csteer
