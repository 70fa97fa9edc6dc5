#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "csteer/audit.hpp"
#include "csteer/field_io.hpp"
#include "csteer/format.hpp"
#include "csteer/fit.hpp"
#include "csteer/pde.hpp"

#ifndef CSTEER_VERSION
#define CSTEER_VERSION "0.0.0"
#endif

namespace csteer::cli {

namespace {

struct Common {
  std::vector<int> signature{2, 0};
  std::uint64_t seed = 7;
  int trials = 1;
  std::string out = ".";
  std::string config;

  Signature sig() const { return Signature(signature.at(0), signature.at(1)); }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--signature", c.signature, "Metric signature P,Q")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  app->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  app->add_option("--trials", c.trials, "Trial count (audit, spectrum) or number of seeds (fit, demo)")
      ->check(CLI::Range(1, 1 << 30))
      ->capture_default_str();
  app->add_option("--out", c.out, "Output directory for CSV, manifest and plots")->capture_default_str();
  app->add_option("--config", c.config,
                  "key=value file; keys are long option names without dashes, optionally under a [command] "
                  "section. Command-line flags win.");
}

// Values from the config file fill options that were not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file " + path);
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_config(is)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub.get_name())) continue;
    if (item.name == "config") throw std::invalid_argument("config files cannot nest --config");
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw std::invalid_argument("unknown config key '" + item.name + "' for " + sub.get_name());
    if (opt->count() > 0) continue;
    for (const std::string& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

std::string num(double v) { return format_real(v); }

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

// Manifest: resolved configuration of the subcommand plus version and time.
void write_manifest(const std::filesystem::path& dir, const CLI::App& sub) {
  std::ostringstream os;
  os << "command=" << sub.get_name() << "\n"
     << "version=" << version() << "\n"
     << "timestamp=" << timestamp() << "\n"
;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const std::string& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
      if (value.empty() && opt->get_expected_min() == 0) value = "false";
      if (value.size() > 1 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    }
    os << name << '=' << value << '\n';
  }
  write_text(dir / (sub.get_name() + "_manifest.txt"), os.str());
}

void emit(const std::filesystem::path& dir, const std::string& name, const std::string& csv, std::ostream& out) {
  write_text(dir / (name + ".csv"), csv);
  out << csv;
}

// ---------------------------------------------------------------- audit

struct AuditOptions {
  Common common;
  AuditConfig config;
  std::string field;
  std::string save_field;
};

std::vector<AuditRow> field_audit_rows(const AuditConfig& config, const MultivectorField<double>& f) {
  std::vector<AuditRow> rows;
  if (!(f.signature() == config.sig)) {
    throw std::invalid_argument("--field signature " + f.signature().to_string() +
                                " does not match --signature " + config.sig.to_string());
  }
  for (bool conditional : {false, true}) {
    ConvLayerConfig lc;
    lc.in_channels = f.channels();
    lc.out_channels = f.channels();
    lc.support = config.support;
    lc.hidden = config.hidden;
    lc.depth = config.depth;
    lc.conditional = conditional;
    const ConvLayer layer(config.sig, lc, config.seed + (conditional ? 1 : 0));
    double worst = 0.0;
    int used = 0;
    for (const GroupElement& g : exact_grid_symmetries(config.sig)) {
      worst = std::max(worst, relative_equivariance_error(layer, f, g));
      ++used;
    }
    AuditRow r;
    r.name = conditional ? "equivariance_error_field_conditional" : "equivariance_error_field_unconditional";
    r.signature = config.sig.to_string();
    r.seed = config.seed;
    r.trials = used;
    r.statistic = worst;
    r.threshold = kEquivarianceThreshold;
    r.passed = worst <= r.threshold;
    rows.push_back(r);
  }
  return rows;
}

int run_audit(const AuditOptions& o, const CLI::App& sub, std::ostream& out) {
  AuditConfig config = o.config;
  config.sig = o.common.sig();
  config.seed = o.common.seed;
  config.trials = o.common.trials;
  const auto dir = prepare_out(o.common.out);
  std::vector<AuditRow> rows = run_audits(config);
  if (!o.save_field.empty()) {
    const int extent = config.extent > 0 ? config.extent : (config.sig.dim() <= 2 ? 32 : config.sig.dim() == 3 ? 12 : 6);
    MultivectorField<double> f(GridSpec::cube(config.sig.dim(), extent), config.sig, config.channels);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index j = 0; j < f.data().cols(); ++j)
      for (Eigen::Index i = 0; i < f.data().rows(); ++i) f.data()(i, j) = u(rng);
    save_field(o.save_field, f);
  }
  if (!o.field.empty()) {
    const std::vector<AuditRow> extra = field_audit_rows(config, load_field(o.field));
    rows.insert(rows.end(), extra.begin(), extra.end());
  }
  std::ostringstream csv;
  write_audit_csv(csv, rows);
  emit(dir, "audit", csv.str(), out);
  write_manifest(dir, sub);
  for (const AuditRow& r : rows)
    if (!r.passed) return kExitFailure;
  return kExitPass;
}

// ------------------------------------------------------------- spectrum

struct SpectrumOptions {
  Common common;
  int samples = 64;
  int max_freq = 4;
  double radius = 0.7;
  int hidden = 12;
  int depth = 4;
  int support = 7;
  std::string svg;
};

inline constexpr double kIncompletenessThreshold = 1e-10;
inline constexpr double kCompletenessThreshold = 1e-6;

MultivectorStack<double> generic_cond(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xC0FFEEull);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  MultivectorStack<double> c(4, 1);
  for (int i = 0; i < 4; ++i) c(i, 0) = u(rng);
  return c;
}

std::string polar_svg(const std::vector<double>& plain, const std::vector<double>& cond) {
  const double size = 400.0, c = size / 2, scale = 0.45 * size;
  double peak = 1e-300;
  for (double v : plain) peak = std::max(peak, v);
  for (double v : cond) peak = std::max(peak, v);
  auto path = [&](const std::vector<double>& r) {
    std::ostringstream os;
    for (std::size_t s = 0; s < r.size(); ++s) {
      const double phi = 2 * std::numbers::pi * s / r.size();
      const double rr = scale * r[s] / peak;
      os << (s == 0 ? "M" : " L") << std::fixed << std::setprecision(2) << c + rr * std::cos(phi) << ','
         << c - rr * std::sin(phi);
    }
    os << " Z";
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n"
     << "<rect width=\"400\" height=\"400\" fill=\"white\"/>\n"
     << "<circle cx=\"200\" cy=\"200\" r=\"180\" fill=\"none\" stroke=\"#ccc\"/>\n"
     << "<path d=\"" << path(plain) << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n"
     << "<path d=\"" << path(cond) << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n"
     << "<text x=\"10\" y=\"20\" font-size=\"12\" fill=\"#1f77b4\">unconditional |K11|</text>\n"
     << "<text x=\"10\" y=\"36\" font-size=\"12\" fill=\"#d62728\">conditional |K11|</text>\n"
     << "</svg>\n";
  return os.str();
}

int run_spectrum(const SpectrumOptions& o, const CLI::App& sub, std::ostream& out) {
  const Signature sig = o.common.sig();
  if (!(sig == Signature(2, 0))) {
    throw std::invalid_argument("spectrum is defined for --signature 2,0 only, got " + sig.to_string());
  }
  if (o.max_freq < 2) throw std::invalid_argument("--max-freq must be at least 2");
  if (o.samples < 4 * o.max_freq + 4) {
    throw std::invalid_argument("--samples " + std::to_string(o.samples) + " cannot resolve --max-freq " +
                                std::to_string(o.max_freq) + " (need at least " +
                                std::to_string(4 * o.max_freq + 4) + ")");
  }
  const auto dir = prepare_out(o.common.out);
  std::ostringstream csv;
  csv << "seed,model,radius,samples";
  for (int k = 0; k <= o.max_freq; ++k) csv << ",c" << k;
  csv << ",ratio2,parseval_defect,criterion,result\n";
  bool all_pass = true;
  std::vector<double> plot_plain, plot_cond;
  for (int t = 0; t < o.common.trials; ++t) {
    const std::uint64_t seed = o.common.seed + t;
    for (bool conditional : {false, true}) {
      ConvLayerConfig lc;
      lc.conditional = conditional;
      lc.hidden = o.hidden;
      lc.depth = o.depth;
      lc.support = o.support;
      const ConvLayer layer(sig, lc, seed);
      const MultivectorStack<double> cond = generic_cond(seed);
      const MultivectorStack<double>* cp = conditional ? &cond : nullptr;
      const FrequencySpectrum s = ring_spectrum(layer, 1, 1, o.radius, o.samples, o.max_freq, cp);
      const bool pass = conditional ? s.amplitude(2) > kCompletenessThreshold
                                    : s.ratio(2) < kIncompletenessThreshold;
      all_pass = all_pass && pass;
      csv << seed << ',' << (conditional ? "conditional" : "unconditional") << ',' << num(o.radius) << ','
          << o.samples;
      for (int k = 0; k <= o.max_freq; ++k) csv << ',' << num(s.amplitude(k));
      csv << ',' << num(s.ratio(2)) << ',' << num(s.parseval_defect) << ','
          << (conditional ? "c2>" + num(kCompletenessThreshold) : "ratio2<" + num(kIncompletenessThreshold))
          << ',' << (pass ? "pass" : "fail") << '\n';
      if (t == 0 && !o.svg.empty()) {
        std::vector<double>& dst = conditional ? plot_cond : plot_plain;
        for (int j = 0; j < o.samples; ++j) {
          const double phi = 2 * std::numbers::pi * j / o.samples;
          Eigen::VectorXd x(2);
          x << o.radius * std::cos(phi), o.radius * std::sin(phi);
          dst.push_back(kernel_block(kernel_at<double>(layer, x, cp), layer.algebra(), 1, 1).norm());
        }
      }
    }
  }
  emit(dir, "spectrum", csv.str(), out);
  if (!o.svg.empty()) write_text(dir / o.svg, polar_svg(plot_plain, plot_cond));
  write_manifest(dir, sub);
  return all_pass ? kExitPass : kExitFailure;
}

// ------------------------------------------------------------------ fit

struct FitOptions {
  Common common;
  std::string target = "freq2";
  bool conditional = false;
  int iterations = 2000;
  double step = 1e-2;
  double momentum = 0.9;
  std::string method = "adam";
  int hidden = 12;
  int depth = 4;
  int support = 7;
  double profile_center = 0.5;
  double profile_width = 0.25;
  std::string save_params;
  bool trace = false;
};

inline constexpr double kReachableThreshold = 0.05;
inline constexpr double kConditionalThreshold = 0.10;
inline constexpr double kUnreachableThreshold = 0.95;

// (expect the residual below the threshold, threshold)
std::pair<bool, double> fit_expectation(TargetKind kind, bool conditional) {
  if (kind == TargetKind::Frequency0) return {true, kReachableThreshold};
  if (conditional) return {true, kConditionalThreshold};
  return {false, kUnreachableThreshold};
}

int run_fit(const FitOptions& o, const CLI::App& sub, std::ostream& out) {
  const Signature sig = o.common.sig();
  if (!(sig == Signature(2, 0))) {
    throw std::invalid_argument("fit is defined for --signature 2,0 only, got " + sig.to_string());
  }
  if (!o.save_params.empty() && o.common.trials != 1) {
    throw std::invalid_argument("--save-params needs --trials 1");
  }
  const TargetKind kind = parse_target(o.target);
  OptimizerSpec spec;
  spec.iterations = o.iterations;
  spec.step = o.step;
  spec.momentum = o.momentum;
  if (o.method == "adam") {
    spec.method = OptimizerMethod::Adam;
  } else if (o.method == "momentum") {
    spec.method = OptimizerMethod::Momentum;
  } else {
    throw std::invalid_argument("--method must be adam or momentum");
  }
  const auto dir = prepare_out(o.common.out);
  const auto [below, threshold] = fit_expectation(kind, o.conditional);
  std::ostringstream csv;
  std::ostringstream trace;
  csv << "seed,target,conditional,iterations,accepted,budget_exhausted,residual,expected,threshold,result\n";
  trace << "seed,iteration,loss\n";
  bool all_pass = true;
  for (int t = 0; t < o.common.trials; ++t) {
    const std::uint64_t seed = o.common.seed + t;
    ConvLayerConfig lc;
    lc.conditional = o.conditional;
    lc.hidden = o.hidden;
    lc.depth = o.depth;
    lc.support = o.support;
    ConvLayer layer(sig, lc, seed);
    const TargetKernel target = make_target(layer, kind, RadialProfile{o.profile_center, o.profile_width});
    spec.cond_seed = seed;
    const FitResult r = fit_to_target(layer, target, spec);
    const bool pass = below ? r.residual < threshold : r.residual > threshold;
    all_pass = all_pass && pass;
    csv << seed << ',' << target_name(kind) << ',' << (o.conditional ? 1 : 0) << ',' << r.iterations << ','
        << r.accepted << ',' << (r.budget_exhausted ? 1 : 0) << ',' << num(r.residual) << ','
        << (below ? "below" : "above") << ',' << num(threshold) << ',' << (pass ? "pass" : "fail") << '\n';
    for (std::size_t i = 0; i < r.trace.size(); ++i) trace << seed << ',' << i + 1 << ',' << num(r.trace[i]) << '\n';
    if (!o.save_params.empty()) {
      std::ofstream os(dir / o.save_params);
      if (!os) throw std::runtime_error("cannot write " + (dir / o.save_params).string());
      save_params(os, layer.network(), layer.params(), seed);
    }
  }
  emit(dir, "fit", csv.str(), out);
  if (o.trace) write_text(dir / "fit_trace.csv", trace.str());
  write_manifest(dir, sub);
  return all_pass ? kExitPass : kExitFailure;
}

// ----------------------------------------------------------------- demo

struct DemoOptions {
  Common common;
  PdeConfig config;
};

int run_demo(const DemoOptions& o, const CLI::App& sub, std::ostream& out) {
  if (!(o.common.sig() == Signature(2, 0))) {
    throw std::invalid_argument("demo runs on --signature 2,0 only");
  }
  const auto dir = prepare_out(o.common.out);
  std::ostringstream csv;
  csv << "seed,model,params,initial_mse,train_mse,test_mse,rotated_test_mse,iterations,diverged\n";
  int wins = 0;
  bool diverged = false;
  for (int t = 0; t < o.common.trials; ++t) {
    const DemoResult r = pde_demo(o.config, o.common.seed + t);
    for (const ModelReport* m : {&r.unconditional, &r.conditional}) {
      csv << r.seed << ',' << m->name << ',' << m->params << ',' << num(m->initial_mse) << ',' << num(m->train_mse)
          << ',' << num(m->test_mse) << ',' << num(m->rotated_test_mse) << ',' << m->iterations << ','
          << (m->diverged ? 1 : 0) << '\n';
      diverged = diverged || m->diverged;
    }
    if (r.conditional.test_mse <= r.unconditional.test_mse) ++wins;
  }
  emit(dir, "demo", csv.str(), out);
  write_manifest(dir, sub);
  const int needed = (4 * o.common.trials + 4) / 5;
  return !diverged && wins >= needed ? kExitPass : kExitFailure;
}

}  // namespace

std::string version() { return CSTEER_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clifford-steerable convolution: equivariance audits, angular spectra, kernel fits and a PDE demo"};
  app.name("csteer");
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", version());
  app.footer("Exit status: 0 all checks pass, 1 a check failed, 2 usage error.");

  AuditOptions audit;
  audit.common.trials = 256;
  CLI::App* a = app.add_subcommand("audit", "Kernel constraint, pooling and end-to-end equivariance audits");
  add_common(a, audit.common);
  a->add_option("--extent", audit.config.extent, "Grid extent for pooling and end-to-end audits (0 = by dimension)")
      ->capture_default_str();
  a->add_option("--conv-trials", audit.config.conv_trials, "Cap on random fields for end-to-end audits")
      ->capture_default_str();
  a->add_option("--support", audit.config.support, "Kernel support per axis (odd)")->capture_default_str();
  a->add_option("--hidden", audit.config.hidden, "Kernel network width")->capture_default_str();
  a->add_option("--depth", audit.config.depth, "Kernel network depth")->capture_default_str();
  a->add_option("--channels", audit.config.channels, "Field channels")->capture_default_str();
  a->add_option("--max-rapidity", audit.config.max_rapidity, "Boost rapidity cap for indefinite signatures")
      ->capture_default_str();
  a->add_flag("--break-mask", audit.config.break_mask, "Negative control: square kernel and pooling masks");
  a->add_flag("--break-kernel", audit.config.break_kernel, "Negative control: grade-mixing linear map in the kernel network");
  a->add_flag("--transpose-hom", audit.config.transpose_hom, "Negative control: transposed Hom action in the constraint check");
  a->add_option("--field", audit.field, "Also audit this field file (.csv or binary)");
  a->add_option("--save-field", audit.save_field, "Write a random field drawn from --seed to this path");
  a->footer(
      "audit.csv columns: audit, signature (quoted \"P,Q\"), seed, trials, statistic (max violation or relative "
      "error), threshold, result (pass|fail).");

  SpectrumOptions spectrum;
  spectrum.common.trials = 20;
  CLI::App* s = app.add_subcommand("spectrum", "Angular spectra of the vector-to-vector kernel block, Cl(2,0)");
  add_common(s, spectrum.common);
  s->add_option("--samples", spectrum.samples, "Angles on the ring (>= 4 * max-freq + 4)")->capture_default_str();
  s->add_option("--max-freq", spectrum.max_freq, "Highest reported angular frequency (>= 2)")->capture_default_str();
  s->add_option("--radius", spectrum.radius, "Ring radius in normalized offset units")->capture_default_str();
  s->add_option("--hidden", spectrum.hidden, "Kernel network width")->capture_default_str();
  s->add_option("--depth", spectrum.depth, "Kernel network depth")->capture_default_str();
  s->add_option("--support", spectrum.support, "Kernel support per axis (odd)")->capture_default_str();
  s->add_option("--svg", spectrum.svg, "Polar plot of |K11| on the ring for the first seed (file name in --out)");
  s->footer(
      "spectrum.csv columns: seed, model (unconditional|conditional), radius, samples, c0..cF (amplitude per "
      "angular frequency, +-k combined), ratio2 (c2/c0), parseval_defect, criterion, result. --trials is the "
      "number of seeds.");

  FitOptions fit;
  CLI::App* f = app.add_subcommand("fit", "Fit the vector-to-vector kernel block to an analytic target, Cl(2,0)");
  add_common(f, fit.common);
  f->add_option("--target", fit.target, "freq0 | freq2 | freq2-iso")->capture_default_str();
  f->add_flag("--conditional", fit.conditional, "Conditional layer with a learnable conditioning stack");
  f->add_option("--iterations", fit.iterations, "Optimizer budget")->capture_default_str();
  f->add_option("--step", fit.step, "Step size")->capture_default_str();
  f->add_option("--momentum", fit.momentum, "Momentum (first-moment decay for adam)")->capture_default_str();
  f->add_option("--method", fit.method, "adam | momentum")->capture_default_str();
  f->add_option("--hidden", fit.hidden, "Kernel network width")->capture_default_str();
  f->add_option("--depth", fit.depth, "Kernel network depth")->capture_default_str();
  f->add_option("--support", fit.support, "Kernel support per axis (odd)")->capture_default_str();
  f->add_option("--profile-center", fit.profile_center, "Radial bump centre")->capture_default_str();
  f->add_option("--profile-width", fit.profile_width, "Radial bump width")->capture_default_str();
  f->add_option("--save-params", fit.save_params, "Write fitted parameters to this file in --out");
  f->add_flag("--trace", fit.trace, "Write fit_trace.csv (seed, iteration, best loss)");
  f->footer(
      "fit.csv columns: seed, target, conditional (0|1), iterations, accepted (improving steps), "
      "budget_exhausted (0|1), residual (|K11 - T| / |T|), expected (below|above), threshold, result. --trials is "
      "the number of seeds.");

  DemoOptions demo;
  CLI::App* d = app.add_subcommand("demo", "Advection-diffusion one-step forecasting, unconditional vs conditional");
  add_common(d, demo.common);
  d->add_option("--iterations", demo.config.iterations, "Training iterations per model")->capture_default_str();
  d->add_option("--step", demo.config.step, "Initial Adam step")->capture_default_str();
  d->add_option("--extent", demo.config.extent, "Grid extent")->capture_default_str();
  d->add_option("--train-trajectories", demo.config.train_trajectories, "Training trajectories")->capture_default_str();
  d->add_option("--test-trajectories", demo.config.test_trajectories, "Test trajectories")->capture_default_str();
  d->add_option("--pairs", demo.config.pairs_per_trajectory, "Input/target pairs per trajectory")->capture_default_str();
  d->add_option("--hidden", demo.config.hidden, "Kernel network width")->capture_default_str();
  d->add_option("--depth", demo.config.depth, "Kernel network depth")->capture_default_str();
  d->add_option("--support", demo.config.support, "Kernel support per axis (odd)")->capture_default_str();
  d->add_option("--drift", demo.config.drift, "Uniform drift speed")->capture_default_str();
  d->add_option("--diffusion", demo.config.diffusion, "Diffusion coefficient")->capture_default_str();
  d->add_flag("--zero-dynamics", demo.config.zero_dynamics, "Targets equal inputs");
  d->footer(
      "demo.csv columns: seed, model (unconditional|conditional), params, initial_mse, train_mse, test_mse, "
      "rotated_test_mse (worst exact grid symmetry), iterations, diverged (0|1). Fails when a model diverges or "
      "the conditional model is worse on more than a fifth of the seeds.");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    for (CLI::App* sub : {a, s, f, d}) {
      if (sub->parsed()) {
        try {
          apply_config(*sub, sub == a ? audit.common.config
                             : sub == s ? spectrum.common.config
                             : sub == f ? fit.common.config
                                        : demo.common.config);
        } catch (const CLI::Error& e) {
          throw std::invalid_argument(std::string("config file: ") + e.what());
        }
      }
    }
    if (a->parsed()) return run_audit(audit, *a, out);
    if (s->parsed()) return run_spectrum(spectrum, *s, out);
    if (f->parsed()) return run_fit(fit, *f, out);
    return run_demo(demo, *d, out);
  } catch (const std::invalid_argument& e) {
    err << "csteer: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "csteer: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace csteer::cli
