#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"

#include "csteer/pde.hpp"

using namespace csteer;

namespace {

MultivectorField<double> mode_field(int n, int k0, int k1, double u0, double u1) {
  MultivectorField<double> f(GridSpec::cube(2, n), Signature(2, 0), 1);
  const double w = 2 * std::numbers::pi / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto v = f.value(i * n + j, 0);
      v(0) = std::cos(w * (k0 * i + k1 * j));
      v(1) = u0;
      v(2) = u1;
    }
  return f;
}

PdeConfig small_config() {
  PdeConfig c;
  c.extent = 12;
  c.train_trajectories = 2;
  c.test_trajectories = 1;
  c.pairs_per_trajectory = 2;
  c.support = 3;
  c.hidden = 4;
  c.depth = 1;
  c.iterations = 60;
  return c;
}

}  // namespace

TEST_CASE("pure diffusion damps a Fourier mode at the discrete rate") {
  const int n = 16;
  const double kappa = 0.1, t = 2.0;
  const MultivectorField<double> f = mode_field(n, 2, 1, 0.0, 0.0);
  const MultivectorField<double> g = advect_diffuse(f, t, 0.01, kappa);
  const double w = 2 * std::numbers::pi / n;
  const double lambda = kappa * (2 * std::cos(2 * w) - 2 + 2 * std::cos(w) - 2);
  CHECK((g.data().row(0) - std::exp(lambda * t) * f.data().row(0)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(g.data().bottomRows(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform drift moves a mode at the central-difference phase speed") {
  const int n = 16;
  const double u = 0.8, t = 1.5;
  const MultivectorField<double> f = mode_field(n, 0, 3, 0.0, u);
  const MultivectorField<double> g = advect_diffuse(f, t, 0.01, 0.0);
  const double w = 2 * std::numbers::pi / n;
  // Heun amplification of e^{3iwj} per step, dt = 0.01, 150 steps
  const std::complex<double> z(0.0, -u * std::sin(3 * w) * 0.01);
  const std::complex<double> amp = std::pow(1.0 + z + 0.5 * z * z, 150);
  double scheme = 0.0;
  double continuum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double got = g.value(i * n + j, 0)(0);
      scheme = std::max(scheme, std::abs(got - (amp * std::polar(1.0, 3 * w * j)).real()));
      continuum = std::max(continuum, std::abs(got - std::cos(3 * w * j - u * std::sin(3 * w) * t)));
    }
  CHECK(scheme < 1e-12);
  CHECK(continuum < 1e-4);
  CHECK(g.data().row(2).mean() == doctest::Approx(u).epsilon(1e-14));
}

TEST_CASE("advection-diffusion commutes with the grid symmetries") {
  PdeConfig c = small_config();
  c.extent = 10;
  const PdeDataset d = make_pde_dataset(c, 1, 3);
  const MultivectorField<double>& f = d.inputs.front();
  const MultivectorField<double> step = advect_diffuse(f, 0.5, 0.05, 0.05);
  for (const GroupElement& g : exact_grid_symmetries(Signature(2, 0))) {
    const MultivectorField<double> a = advect_diffuse(transform_field(f, g), 0.5, 0.05, 0.05);
    const MultivectorField<double> b = transform_field(step, g);
    CHECK(testing::max_abs(a.data() - b.data()) < 1e-12);
  }
}

TEST_CASE("advect_diffuse rejects bad input") {
  MultivectorField<double> f = mode_field(8, 1, 0, 0, 0);
  CHECK_THROWS_AS(advect_diffuse(f, 1.0, 0.0, 0.1), std::invalid_argument);
  MultivectorField<double> wrong(GridSpec::cube(3, 4), Signature(3, 0), 1);
  CHECK_THROWS_AS(advect_diffuse(wrong, 1.0, 0.1, 0.1), std::invalid_argument);
  CHECK(advect_diffuse(f, 0.0, 0.1, 0.1).data() == f.data());
}

TEST_CASE("dataset shape, drift and determinism") {
  const PdeConfig c = small_config();
  const PdeDataset a = make_pde_dataset(c, 3, 11);
  const PdeDataset b = make_pde_dataset(c, 3, 11);
  REQUIRE(a.inputs.size() == 6);
  REQUIRE(a.targets.size() == 6);
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    CHECK(a.inputs[i].data() == b.inputs[i].data());
    CHECK(a.targets[i].data() == b.targets[i].data());
    const Eigen::Vector2d ubar(a.inputs[i].data().row(1).mean(), a.inputs[i].data().row(2).mean());
    CHECK(ubar.norm() == doctest::Approx(c.drift).epsilon(1e-12));
    CHECK(a.inputs[i].data().row(3).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(a.targets[0].data() == a.inputs[1].data());
  CHECK(make_pde_dataset(c, 3, 12).inputs[0].data() != a.inputs[0].data());

  PdeConfig z = c;
  z.zero_dynamics = true;
  const PdeDataset zd = make_pde_dataset(z, 2, 5);
  for (std::size_t i = 0; i < zd.inputs.size(); ++i) CHECK(zd.inputs[i].data() == zd.targets[i].data());
}

TEST_CASE("residual model gradient matches finite differences") {
  PdeConfig c = small_config();
  c.extent = 8;
  const PdeDataset data = make_pde_dataset(c, 1, 2);
  for (bool conditional : {false, true}) {
    ConvLayerConfig lc;
    lc.support = 3;
    lc.hidden = 4;
    lc.depth = 1;
    lc.conditional = conditional;
    lc.padding = Padding::Periodic;
    ResidualModel model(ConvLayer(Signature(2, 0), lc, 5));
    Eigen::VectorXd grad;
    const double loss = model.loss_and_gradient(data, grad);
    CHECK(loss == doctest::Approx(model.mse(data)).epsilon(1e-12));
    const Eigen::VectorXd z = model.layer().flat_params();
    double worst = 0.0;
    for (int i = 0; i < z.size(); i += 3) {
      const double h = 1e-6;
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      model.layer().set_flat_params(zp);
      const double lp = model.mse(data);
      model.layer().set_flat_params(zm);
      const double lm = model.mse(data);
      worst = std::max(worst, std::abs((lp - lm) / (2 * h) - grad(i)) / (std::abs(grad(i)) + 1e-6));
    }
    model.layer().set_flat_params(z);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("training learns the identity from a random start") {
  PdeConfig c = small_config();
  c.zero_dynamics = true;
  c.iterations = 200;
  const PdeDataset data = make_pde_dataset(c, 2, 4);
  ConvLayerConfig lc;
  lc.support = 3;
  lc.hidden = 4;
  lc.depth = 1;
  lc.padding = Padding::Periodic;
  ResidualModel model(ConvLayer(Signature(2, 0), lc, 8));
  const double before = model.mse(data);
  const TrainOutcome out = train_model(model, data, c);
  CHECK_FALSE(out.diverged);
  CHECK(out.iterations == 200);
  for (std::size_t i = 1; i < out.trace.size(); ++i) CHECK(out.trace[i] <= out.trace[i - 1]);
  CHECK(model.mse(data) < 1e-3 * before);
}

TEST_CASE("a runaway step size is flagged as divergence") {
  PdeConfig c = small_config();
  c.step = 1e3;
  c.final_step_ratio = 1.0;
  c.iterations = 20;
  const PdeDataset data = make_pde_dataset(c, 1, 4);
  ConvLayerConfig lc;
  lc.support = 3;
  lc.hidden = 4;
  lc.depth = 1;
  lc.padding = Padding::Periodic;
  ResidualModel model(ConvLayer(Signature(2, 0), lc, 8));
  const double before = model.mse(data);
  const TrainOutcome out = train_model(model, data, c);
  CHECK(out.diverged);
  CHECK(out.iterations < 20);
  CHECK(model.mse(data) <= before);
  CHECK_THROWS_AS(train_model(model, data, PdeConfig{.step = 0.0}), std::invalid_argument);
}

TEST_CASE("demo on the identity task") {
  PdeConfig c = small_config();
  c.zero_dynamics = true;
  const DemoResult r = pde_demo(c, 1);
  for (const ModelReport* m : {&r.unconditional, &r.conditional}) {
    CHECK(m->test_mse < 1e-6);
    CHECK(m->train_mse < 1e-6);
    CHECK_FALSE(m->diverged);
  }
}

TEST_CASE("demo models are parameter matched, equivariant and conditioning helps") {
  const DemoResult r = pde_demo(PdeConfig{}, 3);
  CHECK(r.unconditional.name == "unconditional");
  CHECK(r.conditional.name == "conditional");
  const double ratio = static_cast<double>(r.conditional.params) / r.unconditional.params;
  CHECK(std::abs(ratio - 1.0) < 0.05);
  CHECK(r.unconditional.initial_mse == r.conditional.initial_mse);
  for (const ModelReport* m : {&r.unconditional, &r.conditional}) {
    CHECK_FALSE(m->diverged);
    CHECK(m->train_mse < m->initial_mse);
    CHECK(std::abs(m->rotated_test_mse - m->test_mse) <= 1e-5 * m->test_mse);
  }
  CHECK(r.conditional.test_mse <= r.unconditional.test_mse);
}
