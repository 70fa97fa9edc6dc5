// Acceptance checks, one line per criterion.
//   csteer_acceptance <id> [cli]     id in 1 2 3 4 5 6 7a 7b 7c 8 9, or "all"
// Criterion 9 needs the path of the csteer executable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csteer/audit.hpp"
#include "csteer/fit.hpp"
#include "csteer/format.hpp"
#include "csteer/multivector.hpp"
#include "csteer/pde.hpp"

using namespace csteer;
namespace fs = std::filesystem;

namespace {

constexpr double kAlgebraSeconds = 1.0;
constexpr double kDefiniteConstraint = 1e-8;
constexpr double kBoostConstraint = 1e-6;
constexpr double kConstraintSeconds = 60.0;
constexpr int kConstraintTrials = 256;
constexpr double kBoostRapidity = 1.0;
constexpr int kFieldExtent = 32;
constexpr int kFieldTrials = 4;
constexpr double kEquivariance = 1e-6;
constexpr double kEquivarianceSeconds = 60.0;
constexpr double kPooling = 1e-12;
constexpr double kSquareMaskControl = 1e-3;
constexpr int kPoolingTrials = 64;
constexpr int kSpectrumSeeds = 20;
constexpr double kSpectrumRadius = 0.7;
constexpr int kSpectrumSamples = 64;
constexpr int kSpectrumMaxFreq = 4;
constexpr double kIncomplete = 1e-10;
constexpr double kComplete = 1e-6;
constexpr int kFitIterations = 2000;
constexpr int kFitSeeds = 3;
constexpr double kConditionalFit = 0.10;
constexpr double kUnconditionalFit = 0.95;
constexpr double kReachableFit = 0.05;
constexpr double kFitSeconds = 600.0;
constexpr int kDemoSeeds = 5;
constexpr int kDemoWins = 4;
constexpr double kParamMatch = 0.05;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return format_real(v); }

// e_a e_b by concatenating generator symbols, bubble sorting with a sign flip
// per swap and contracting equal neighbours with their metric sign.
std::pair<int, unsigned> reorder_product(unsigned a, unsigned b, const Signature& sig) {
  std::vector<int> s;
  for (int i = 0; i < sig.dim(); ++i)
    if (a >> i & 1u) s.push_back(i);
  for (int i = 0; i < sig.dim(); ++i)
    if (b >> i & 1u) s.push_back(i);
  int sign = 1;
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (s[i] > s[i + 1]) {
        std::swap(s[i], s[i + 1]);
        sign = -sign;
        swapped = true;
      }
  }
  unsigned blade = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i] == s[i + 1]) {
      sign *= s[i] < sig.p() ? 1 : -1;
      ++i;
    } else {
      blade |= 1u << s[i];
    }
  }
  return {sign, blade};
}

Outcome algebra_oracle() {
  const auto t0 = Clock::now();
  int pairs = 0, mismatches = 0;
  for (auto [p, q] : {std::pair{2, 0}, {3, 0}, {1, 1}, {1, 2}}) {
    const Signature sig(p, q);
    const Algebra algebra(sig);
    for (int a = 0; a < sig.blades(); ++a)
      for (int b = 0; b < sig.blades(); ++b) {
        Multivector<double> ea = Multivector<double>::Zero(sig.blades());
        Multivector<double> eb = ea;
        ea(a) = 1.0;
        eb(b) = 1.0;
        const Multivector<double> got = geometric_product(ea, eb, algebra.table());
        const auto [sign, blade] = reorder_product(a, b, sig);
        Multivector<double> expect = Multivector<double>::Zero(sig.blades());
        expect(blade) = sign;
        ++pairs;
        if (got != expect) ++mismatches;
      }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < kAlgebraSeconds,
          std::to_string(pairs) + " blade pairs, " + std::to_string(mismatches) + " mismatches, " + num(t) +
              " s (limit " + num(kAlgebraSeconds) + " s)"};
}

Outcome lambda_witness() {
  const LambdaTensor l = build_lambda(Signature(2, 0));
  const int l01 = l.at(1, 0, 1), l21 = l.at(1, 2, 1), l11 = l.at(1, 1, 1);
  return {l01 == 1 && l21 == 1 && l11 == 0, "L^1_01=" + std::to_string(l01) + " L^1_21=" + std::to_string(l21) +
                                                " L^1_11=" + std::to_string(l11) + " (want 1 1 0)"};
}

Outcome kernel_constraint() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::ostringstream d;
  for (auto [p, q] : {std::pair{2, 0}, {3, 0}, {1, 2}}) {
    const Signature sig(p, q);
    const bool boosts = q > 0;
    const GroupSampler sampler(sig, boosts ? GroupSampler::Kind::WithBoosts : GroupSampler::Kind::Orthogonal,
                               kBoostRapidity);
    const double limit = boosts ? kBoostConstraint : kDefiniteConstraint;
    for (bool conditional : {false, true}) {
      ConvLayerConfig lc;
      lc.in_channels = 2;
      lc.out_channels = 2;
      lc.conditional = conditional;
      const ConvLayer layer(sig, lc, 101 + p * 10 + q);
      const double v = check_kernel_constraint(layer, kConstraintTrials, sampler, 17);
      pass = pass && v < limit;
      d << sig.to_string() << (conditional ? " cond " : " plain ") << num(v) << " < " << num(limit) << "; ";
    }
  }
  const double t = seconds_since(t0);
  d << kConstraintTrials << " trials, " << num(t) << " s";
  return {pass && t < kConstraintSeconds, d.str()};
}

MultivectorField<double> random_field(std::mt19937_64& rng, const GridSpec& spec, const Signature& sig,
                                      int channels) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MultivectorField<double> f(spec, sig, channels);
  for (Eigen::Index j = 0; j < f.data().cols(); ++j)
    for (Eigen::Index i = 0; i < f.data().rows(); ++i) f.data()(i, j) = u(rng);
  return f;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const Signature sig(2, 0);
  std::mt19937_64 rng(23);
  double worst[2] = {0.0, 0.0};
  int checks = 0;
  for (int trial = 0; trial < kFieldTrials; ++trial) {
    const MultivectorField<double> f = random_field(rng, GridSpec::cube(2, kFieldExtent), sig, 2);
    for (bool conditional : {false, true}) {
      ConvLayerConfig lc;
      lc.in_channels = 2;
      lc.out_channels = 2;
      lc.conditional = conditional;
      const ConvLayer layer(sig, lc, 200 + trial);
      for (const GroupElement& g : exact_grid_symmetries(sig)) {
        worst[conditional] = std::max(worst[conditional], relative_equivariance_error(layer, f, g));
        ++checks;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst[0] < kEquivariance && worst[1] < kEquivariance && t < kEquivarianceSeconds,
          "plain " + num(worst[0]) + ", cond " + num(worst[1]) + " < " + num(kEquivariance) + " over " +
              std::to_string(checks) + " field/symmetry pairs on 32x32, " + num(t) + " s"};
}

Outcome pooling() {
  bool pass = true;
  std::ostringstream d;
  for (auto [p, q] : {std::pair{2, 0}, {3, 0}, {1, 2}}) {
    const Signature sig(p, q);
    PoolingAuditOptions o;
    o.extent = sig.dim() == 2 ? 16 : 8;
    const double exact = check_pooling_equivariance(sig, kPoolingTrials, 31, o);
    o.mode = TransformMode::Resample;
    const double affine = check_pooling_equivariance(sig, kPoolingTrials, 32, o);
    o.full_mask = true;
    const double control = check_pooling_equivariance(sig, kPoolingTrials, 32, o);
    pass = pass && exact <= kPooling && affine <= kPooling && control > kSquareMaskControl;
    d << sig.to_string() << " grid " << num(exact) << " rotated " << num(affine) << " square " << num(control)
      << "; ";
  }
  d << "want disc <= " << num(kPooling) << ", square > " << num(kSquareMaskControl);
  return {pass, d.str()};
}

Outcome incompleteness() {
  int good = 0;
  double worst = 0.0;
  for (int seed = 1; seed <= kSpectrumSeeds; ++seed) {
    const ConvLayer layer(Signature(2, 0), ConvLayerConfig{}, seed);
    const FrequencySpectrum s = ring_spectrum(layer, 1, 1, kSpectrumRadius, kSpectrumSamples, kSpectrumMaxFreq);
    worst = std::max(worst, s.ratio(2));
    if (s.ratio(2) < kIncomplete) ++good;
  }
  return {good == kSpectrumSeeds, std::to_string(good) + "/" + std::to_string(kSpectrumSeeds) +
                                      " seeds, worst |c2|/|c0| " + num(worst) + " < " + num(kIncomplete)};
}

Outcome conditional_spectrum() {
  int good = 0, total = 0;
  double weakest = INFINITY;
  for (int depth : {2, 4}) {
    for (int seed = 1; seed <= kSpectrumSeeds; ++seed) {
      ConvLayerConfig lc;
      lc.conditional = true;
      lc.depth = depth;
      const ConvLayer layer(Signature(2, 0), lc, seed);
      std::mt19937_64 rng(1000 + seed);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      MultivectorStack<double> cond(4, 1);
      for (int i = 0; i < 4; ++i) cond(i, 0) = u(rng);
      const FrequencySpectrum s =
          ring_spectrum(layer, 1, 1, kSpectrumRadius, kSpectrumSamples, kSpectrumMaxFreq, &cond);
      weakest = std::min(weakest, s.amplitude(2));
      ++total;
      if (s.amplitude(2) > kComplete) ++good;
    }
  }
  return {good == total, std::to_string(good) + "/" + std::to_string(total) + " layers at depth 2 and 4, smallest |c2| " +
                             num(weakest) + " > " + num(kComplete)};
}

FitResult run_fit(TargetKind kind, bool conditional, std::uint64_t seed) {
  ConvLayerConfig lc;
  lc.conditional = conditional;
  ConvLayer layer(Signature(2, 0), lc, seed);
  const TargetKernel target = make_target(layer, kind);
  OptimizerSpec spec;
  spec.iterations = kFitIterations;
  spec.cond_seed = seed;
  return fit_to_target(layer, target, spec);
}

Outcome fit_unconditional() {
  const auto t0 = Clock::now();
  double least = INFINITY, worst0 = 0.0;
  for (int seed = 1; seed <= kFitSeeds; ++seed) {
    least = std::min(least, run_fit(TargetKind::Frequency2, false, seed).residual);
    worst0 = std::max(worst0, run_fit(TargetKind::Frequency0, false, seed).residual);
  }
  const double t = seconds_since(t0);
  return {least > kUnconditionalFit && worst0 < kReachableFit && t < kFitSeconds,
          "freq2 residual min " + num(least) + " > " + num(kUnconditionalFit) + ", freq0 control max " + num(worst0) +
              " < " + num(kReachableFit) + ", " + std::to_string(kFitSeeds) + " seeds x 2000 iterations, " + num(t) +
              " s"};
}

Outcome fit_conditional() {
  const auto t0 = Clock::now();
  double worst = 0.0, worst_iso = 0.0;
  for (int seed = 1; seed <= kFitSeeds; ++seed) {
    worst = std::max(worst, run_fit(TargetKind::Frequency2, true, seed).residual);
    worst_iso = std::max(worst_iso, run_fit(TargetKind::Frequency2Isotropic, true, seed).residual);
  }
  const double t = seconds_since(t0);
  return {worst < kConditionalFit && t < kFitSeconds,
          "freq2 residual max " + num(worst) + " < " + num(kConditionalFit) + " (freq2-iso reaches " + num(worst_iso) +
              "), " + std::to_string(kFitSeeds) + " seeds x 2000 iterations, " + num(t) + " s"};
}

Outcome demo_gap() {
  const auto t0 = Clock::now();
  int wins = 0;
  bool sane = true;
  std::ostringstream d;
  for (int seed = 1; seed <= kDemoSeeds; ++seed) {
    const DemoResult r = pde_demo(PdeConfig{}, seed);
    const double match = std::abs(static_cast<double>(r.conditional.params) / r.unconditional.params - 1.0);
    sane = sane && match <= kParamMatch && !r.conditional.diverged && !r.unconditional.diverged;
    if (r.conditional.test_mse <= r.unconditional.test_mse) ++wins;
    d << "seed " << seed << ": " << num(r.conditional.test_mse) << " vs " << num(r.unconditional.test_mse) << "; ";
  }
  d << wins << "/" << kDemoSeeds << " conditional wins (need " << kDemoWins << "), " << num(seconds_since(t0))
    << " s";
  return {sane && wins >= kDemoWins, d.str()};
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    std::ifstream is(entry.path(), std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    files[entry.path().filename().string()] = os.str();
  }
  return files;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no csteer executable given"};
  const std::vector<std::string> commands = {
      "audit --trials 32 --conv-trials 2 --extent 16",
      "audit --signature 1,2 --trials 16 --conv-trials 1",
      "spectrum --trials 3",
      "fit --target freq2 --conditional --iterations 100 --trials 2 --trace",
      "demo --trials 1 --iterations 20 --extent 16 --train-trajectories 2 --test-trajectories 1",
  };
  const fs::path root = fs::temp_directory_path() / "csteer_acceptance_determinism";
  fs::remove_all(root);
  int identical = 0;
  std::ostringstream d;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::map<std::string, std::string> runs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (std::to_string(c) + "_" + std::to_string(rep));
      fs::create_directories(dir);
      const std::string line = quoted(cli) + " " + commands[c] + " --seed 5 --out " + quoted(dir.string()) +
                               " > " + quoted((dir / "stdout.txt").string()) + " 2>&1";
      const int status = std::system(line.c_str());
      if (status == -1) return {false, "could not launch " + cli};
      runs[rep] = csv_files(dir);
    }
    if (!runs[0].empty() && runs[0] == runs[1]) {
      ++identical;
    } else {
      d << "differs: " << commands[c] << "; ";
    }
  }
  fs::remove_all(root);
  d << identical << "/" << commands.size() << " command lines byte-identical across two runs";
  return {identical == static_cast<int>(commands.size()), d.str()};
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome(const std::string&)> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"1", "geometric product matches symbol reordering", [](const std::string&) { return algebra_oracle(); }},
      {"2", "grade interaction witness in Cl(2,0)", [](const std::string&) { return lambda_witness(); }},
      {"3", "kernel steerability", [](const std::string&) { return kernel_constraint(); }},
      {"4", "end-to-end layer equivariance", [](const std::string&) { return end_to_end(); }},
      {"5", "pooling equivariance and square-mask control", [](const std::string&) { return pooling(); }},
      {"6", "unconditional vector block has no frequency 2", [](const std::string&) { return incompleteness(); }},
      {"7a", "conditional vector block carries frequency 2", [](const std::string&) { return conditional_spectrum(); }},
      {"7b", "unconditional fit misses frequency 2", [](const std::string&) { return fit_unconditional(); }},
      {"7c", "conditional fit reaches frequency 2", [](const std::string&) { return fit_conditional(); }},
      {"8", "advection-diffusion demo gap", [](const std::string&) { return demo_gap(); }},
      {"9", "CLI determinism", [](const std::string& cli) { return determinism(cli); }},
  };
  return list;
}

bool report(const Criterion& c, const std::string& cli) {
  Outcome o;
  try {
    o = c.check(cli);
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::cout << (o.pass ? "PASS " : "FAIL ") << "C" << c.id << " " << c.title << ": " << o.detail << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: csteer_acceptance <id|all> [path to csteer]\n";
    return 2;
  }
  const std::string id = argv[1];
  const std::string cli = argc > 2 ? argv[2] : "";
  bool all_pass = true, found = false;
  for (const Criterion& c : criteria()) {
    if (id != "all" && id != c.id) continue;
    found = true;
    all_pass = report(c, cli) && all_pass;
  }
  if (!found) {
    std::cerr << "unknown criterion " << id << "\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
