#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"

#include "csteer/field_io.hpp"
#include "csteer/grid.hpp"
#include "helpers.hpp"

using namespace csteer;

TEST_CASE("grid coordinates are centered") {
  const GridSpec odd = GridSpec::cube(2, 5, 0.5);
  CHECK(odd.coordinate(0, 2) == 0.0);
  CHECK(odd.coordinate(1, 0) == -1.0);
  const GridSpec even = GridSpec::cube(2, 4);
  CHECK(even.coordinate(0, 0) == -1.5);
  CHECK(even.coordinate(0, 3) == 1.5);
  int multi[2] = {1, 3};
  CHECK(even.ravel(multi) == 7);
  CHECK_THROWS_AS(GridSpec({3, 0}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({3, 3}, {1.0}), std::invalid_argument);
}

TEST_CASE("embeddings round trip") {
  const Signature sig(2, 0);
  const GridSpec spec = GridSpec::cube(2, 6);
  std::mt19937_64 rng(1);
  const Eigen::VectorXd u = testing::random_vector(rng, spec.points());
  const auto fs = embed_scalar<double>(spec, sig, u);
  CHECK(extract_scalar(fs, 0) == u);
  CHECK(fs.data().bottomRows(3).isZero());
  const Eigen::MatrixXd v = testing::random_matrix(rng, 2, spec.points());
  const auto fv = embed_vector<double>(spec, sig, v, 2, 1);
  CHECK(extract_vector(fv, 1) == v);
  CHECK(fv.data().topRows(4).isZero());
  CHECK(fv.value(0, 1)(0) == 0.0);
  CHECK(fv.value(0, 1)(3) == 0.0);

  const auto one = embed_scalar<double>(spec, sig, Eigen::VectorXd::Ones(spec.points()));
  CHECK(one.value(5, 0)(0) == 1.0);
  CHECK_THROWS_AS(embed_scalar<double>(spec, sig, Eigen::VectorXd::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(embed_vector<double>(spec, sig, Eigen::MatrixXd::Ones(3, spec.points())),
                  std::invalid_argument);
  CHECK_THROWS_AS(MultivectorField<double>(GridSpec::cube(3, 4), sig, 1), std::invalid_argument);
}

TEST_CASE("exact transforms") {
  const Signature sig(2, 0);
  const GridSpec spec = GridSpec::cube(2, 7);
  std::mt19937_64 rng(2);
  const auto f = testing::random_field(rng, spec, sig, 2);
  const GroupElement id = GroupElement::identity(sig);
  CHECK(transform_field(f, id).data() == f.data());

  const GroupElement r90 = orthogonal_from_generator(sig, 0, 1, std::numbers::pi / 2);
  const GroupElement r180 = orthogonal_from_generator(sig, 0, 1, std::numbers::pi);
  // 180 degrees has float entries like 1.2e-16; snap to the exact signed permutation.
  const GroupElement r180_exact(sig, r180.matrix().array().round().matrix());
  const auto twice = transform_field(transform_field(f, r90), r90);
  const auto once = transform_field(f, r180_exact);
  CHECK(testing::max_abs(twice.data() - once.data()) < 1e-15);

  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(2, spec.points());
  e1.row(0).setOnes();
  const auto rotated = transform_field(embed_vector<double>(spec, sig, e1), r90);
  const Eigen::MatrixXd v = extract_vector(rotated, 0);
  CHECK(testing::max_abs(v.row(0)) < 1e-15);
  CHECK(testing::max_abs(v.row(1) - Eigen::RowVectorXd::Ones(spec.points())) < 1e-15);

  const GroupElement small = orthogonal_from_generator(sig, 0, 1, 0.3);
  CHECK_THROWS_AS(transform_field(f, small, TransformMode::ExactGrid), std::invalid_argument);
  CHECK_NOTHROW(transform_field(f, small, TransformMode::Resample));
}

TEST_CASE("resampling reproduces affine fields inside the grid") {
  const Signature sig(2, 0);
  const GridSpec spec = GridSpec::cube(2, 9);
  Eigen::VectorXd u(spec.points());
  for (int p = 0; p < spec.points(); ++p) {
    const auto x = spec.position(p);
    u(p) = 0.5 + 0.3 * x(0) - 0.2 * x(1);
  }
  const auto f = embed_scalar<double>(spec, sig, u);
  const GroupElement g = orthogonal_from_generator(sig, 0, 1, std::numbers::pi / 4);
  const auto gf = transform_field(f, g, TransformMode::Resample);
  const GroupElement gi = g.inverse();
  for (int p = 0; p < spec.points(); ++p) {
    const Eigen::VectorXd y = gi.matrix() * spec.position(p);
    if (y.cwiseAbs().maxCoeff() > 4.0) continue;
    CHECK(gf.value(p, 0)(0) == doctest::Approx(0.5 + 0.3 * y(0) - 0.2 * y(1)).epsilon(1e-12));
  }
}

TEST_CASE("circular mask is symmetric and inscribed") {
  for (auto [p, q] : {std::pair{2, 0}, {3, 0}, {1, 2}}) {
    const Signature sig(p, q);
    for (int extent : {7, 8}) {
      const GridSpec spec = GridSpec::cube(sig.dim(), extent);
      const CircularMask mask = make_circular_mask(spec);
      CHECK(mask.radius == doctest::Approx(0.5 * (extent - 1)));
      MultivectorField<double> chi(spec, sig, 1);
      for (int i = 0; i < spec.points(); ++i) chi.value(i, 0)(0) = mask.indicator[i];
      for (const auto& g : exact_grid_symmetries(sig)) {
        CHECK(transform_field(chi, g).data() == chi.data());
      }
      CHECK(mask.count() < spec.points());
      const std::vector<int> mid(sig.dim(), extent / 2);
      CHECK(mask.indicator[spec.ravel(mid.data())] == 1);
    }
  }
  CHECK(make_full_mask(GridSpec::cube(2, 4)).count() == 16);
}

TEST_CASE("masked mean pooling") {
  const Signature sig(2, 0);
  const GridSpec spec = GridSpec::cube(2, 8);
  const CircularMask mask = make_circular_mask(spec);
  std::mt19937_64 rng(9);

  MultivectorField<double> c(spec, sig, 1);
  Eigen::Vector4d v(0.2, -1.0, 0.5, 3.0);
  for (int p = 0; p < spec.points(); ++p) c.value(p, 0) = v;
  const auto tc = masked_mean_pool(c, mask);
  CHECK((tc.col(0) - v * (double(mask.count()) / spec.points())).norm() < 1e-14);
  CHECK(masked_mean_pool(MultivectorField<double>(spec, sig, 2), mask).isZero());

  const auto f = testing::random_field(rng, spec, sig, 2);
  const auto h = testing::random_field(rng, spec, sig, 2);
  MultivectorField<double> mix(spec, sig, 2);
  mix.data() = 0.7 * f.data() - 1.3 * h.data();
  const auto lhs = masked_mean_pool(mix, mask);
  const auto rhs = (0.7 * masked_mean_pool(f, mask) - 1.3 * masked_mean_pool(h, mask)).eval();
  CHECK(testing::max_abs(lhs - rhs) < 1e-15);

  const CircularMask full = make_full_mask(spec);
  const auto shifted = circular_shift(f, {3, -2});
  CHECK(testing::max_abs(masked_mean_pool(shifted, full) - masked_mean_pool(f, full)) < 1e-15);

  for (const auto& g : exact_grid_symmetries(sig)) {
    const auto a = masked_mean_pool(transform_field(f, g), mask);
    MultivectorStack<double> b = g.rho() * masked_mean_pool(f, mask);
    CHECK(testing::max_abs(a - b) <= 1e-12);
  }
  const GridSpec other = GridSpec::cube(2, 6);
  CHECK_THROWS_AS(masked_mean_pool(MultivectorField<double>(other, sig, 1), mask),
                  std::invalid_argument);
}

TEST_CASE("grade-wise normalization") {
  const Signature sig(2, 0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK(gradewise_normalize<double>(MultivectorStack<double>::Zero(4, 2), ones, sig).isZero());
  MultivectorStack<double> unit(4, 1);
  unit << 1.0, 0.6, 0.8, -1.0;
  const auto same = gradewise_normalize<double>(unit, ones, sig);
  CHECK((same - unit).cwiseAbs().maxCoeff() < 2e-6);

  std::mt19937_64 rng(12);
  const MultivectorStack<double> x = testing::random_matrix(rng, 4, 3);
  Eigen::VectorXd scales(3);
  scales << 0.5, 2.0, 1.5;
  for (const auto& g : exact_grid_symmetries(sig)) {
    const auto lhs = gradewise_normalize<double>(g.rho() * x, scales, sig);
    const MultivectorStack<double> rhs = g.rho() * gradewise_normalize<double>(x, scales, sig);
    CHECK(testing::max_abs(lhs - rhs) < 1e-10);
  }
  Eigen::VectorXd bad = scales;
  bad(1) = 0.0;
  CHECK_THROWS_AS(gradewise_normalize<double>(x, bad, sig), std::invalid_argument);
  CHECK_THROWS_AS(gradewise_normalize<double>(x, Eigen::VectorXd::Ones(2), sig), std::invalid_argument);
}

TEST_CASE("field serialization round trips") {
  const Signature sig(1, 2);
  const GridSpec spec({3, 4, 5}, {1.0, 0.5, 2.0});
  std::mt19937_64 rng(6);
  const auto f = testing::random_field(rng, spec, sig, 2);

  std::stringstream csv;
  write_field_csv(csv, f);
  const auto g = read_field_csv(csv);
  CHECK(g.spec() == f.spec());
  CHECK(g.signature() == f.signature());
  CHECK(g.data() == f.data());

  std::stringstream bin;
  write_field_binary(bin, f);
  const auto h = read_field_binary(bin);
  CHECK(h.data() == f.data());
  CHECK(h.spec() == f.spec());

  std::stringstream junk("hello\n");
  CHECK_THROWS(read_field_csv(junk));
}
