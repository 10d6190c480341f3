// Command-line front door: path generation, occupation measures, norms,
// increment diagnostics, nonlinear-Young solving, and experiment
// orchestration, with machine-readable JSON/CSV artifacts.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbe/dyadic.hpp"
#include "sbe/experiments.hpp"
#include "sbe/io.hpp"
#include "sbe/lnd.hpp"
#include "sbe/norms.hpp"
#include "sbe/occupation.hpp"
#include "sbe/path.hpp"
#include "sbe/random.hpp"
#include "sbe/young.hpp"

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kToolName = "sbe";
constexpr const char* kToolVersion = "0.1.0";
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTau = 6.283185307179586476925286766559;

// JSON cannot carry IEEE specials; they round-trip as strings.
ordered_json jd(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double from_json_double(const nlohmann::json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return kNaN;
    throw std::invalid_argument("config: bad numeric string '" + s + "'");
  }
  return v.get<double>();
}

ordered_json jv(const std::vector<double>& v) {
  ordered_json out = ordered_json::array();
  for (double x : v) out.push_back(jd(x));
  return out;
}

// Maps config keys onto the same variables the flags bind to, and records
// getters so the manifest can echo the fully resolved configuration.
struct Registry {
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters;
  std::vector<std::pair<std::string, std::function<ordered_json()>>> getters;
};

template <typename T>
CLI::Option* reg_option(CLI::App& cmd, Registry& reg, const std::string& name,
                        T& var, const std::string& desc) {
  auto* opt = cmd.add_option("--" + name, var, desc);
  reg.setters[name] = [&var](const nlohmann::json& v) { var = v.get<T>(); };
  reg.getters.push_back({name, [&var] { return ordered_json(var); }});
  return opt;
}

CLI::Option* reg_option(CLI::App& cmd, Registry& reg, const std::string& name,
                        double& var, const std::string& desc) {
  auto* opt = cmd.add_option("--" + name, var, desc);
  reg.setters[name] = [&var](const nlohmann::json& v) {
    var = from_json_double(v);
  };
  reg.getters.push_back({name, [&var] { return jd(var); }});
  return opt;
}

CLI::Option* reg_flag(CLI::App& cmd, Registry& reg, const std::string& name,
                      bool& var, const std::string& desc) {
  auto* opt = cmd.add_flag("--" + name + ",!--no-" + name, var, desc);
  reg.setters[name] = [&var](const nlohmann::json& v) { var = v.get<bool>(); };
  reg.getters.push_back({name, [&var] { return ordered_json(var); }});
  return opt;
}

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 2026;
  int threads = default_threads();
  std::string config_file;
};

void add_common(CLI::App& cmd, Registry& reg, Common& c) {
  reg_option(cmd, reg, "out-dir", c.out_dir, "Directory for artifacts");
  reg_option(cmd, reg, "seed", c.seed, "Base random seed")
      ->envname("SBE_SEED");
  reg_option(cmd, reg, "threads", c.threads, "Worker threads");
  cmd.add_option("--config", c.config_file,
                 "JSON file whose keys override the flags");
}

void apply_config(const std::string& file, Registry& reg) {
  if (file.empty()) return;
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("config: cannot open '" + file + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") +
                                e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) {
    doc = doc["config"];  // accept a previously written manifest
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config: top level must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    const auto it = reg.setters.find(key);
    if (it == reg.setters.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    try {
      it->second(value);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad value for key '" + key + "'");
    }
  }
}

// Accumulates inputs/outputs for a run and writes the manifest last, so
// re-running from the manifest reproduces the artifacts byte-identically
// (no timestamps, insertion-ordered keys).
struct Run {
  fs::path dir;
  ordered_json manifest;

  Run(const Common& c, const std::string& command, const Registry& reg)
      : dir(c.out_dir) {
    fs::create_directories(dir);
    manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    manifest["command"] = command;
    ordered_json cfg;
    for (const auto& [name, get] : reg.getters) cfg[name] = get();
    manifest["config"] = cfg;
    manifest["inputs"] = ordered_json::array();
    manifest["outputs"] = ordered_json::array();
  }

  fs::path out(const std::string& name) const { return dir / name; }

  void input(const fs::path& file) {
    manifest["inputs"].push_back(
        {{"file", file.string()},
         {"fnv1a64", sbe::hex64(sbe::fnv1a64_file(file))}});
  }
  void output(const std::string& name) { manifest["outputs"].push_back(name); }

  void write_json(const std::string& name, const ordered_json& doc) {
    std::ofstream f(out(name), std::ios::trunc);
    if (!f) {
      throw std::runtime_error("cannot write artifact '" + name + "'");
    }
    f << doc.dump(2) << '\n';
    output(name);
  }
  void finish() {
    std::ofstream f(out("manifest.json"), std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write manifest.json");
    f << manifest.dump(2) << '\n';
  }
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

sbe::GaussianSpec spec_from(const std::string& kind, double hurst, int dim) {
  if (kind == "bm") return sbe::GaussianSpec::brownian(dim);
  if (kind == "fbm") return sbe::GaussianSpec::fractional(hurst, dim);
  throw std::invalid_argument("gen: unknown process kind '" + kind + "'");
}

// Resolves an optional [s, t] window (NaN means the span endpoint).
std::pair<double, double> resolve_window(const sbe::SampledPath& p, double s,
                                         double t) {
  const double a = std::isnan(s) ? p.span_start() : s;
  const double b = std::isnan(t) ? p.span_end() : t;
  return {a, b};
}

sbe::UniformYGrid y_grid_for(const std::vector<double>& lo,
                             const std::vector<double>& hi,
                             const std::vector<int>& points, int dim) {
  sbe::UniformYGrid g;
  auto widen = [dim](auto& dst, const auto& src, const char* what) {
    if (src.size() == static_cast<std::size_t>(dim)) {
      dst.assign(src.begin(), src.end());
    } else if (src.size() == 1) {
      dst.assign(static_cast<std::size_t>(dim), src.front());
    } else {
      throw std::invalid_argument(std::string("norm: ") + what +
                                  " needs one value or one per dimension");
    }
  };
  widen(g.lo, lo, "--y-lo");
  widen(g.hi, hi, "--y-hi");
  widen(g.points, points, "--y-points");
  return g;
}

ordered_json sbe_params_json(const sbe::SbeParams& params, int dim) {
  const int k_eff = params.k >= 0
                        ? params.k
                        : sbe::derived_delta_order(params.alpha, dim);
  return {{"alpha", jd(params.alpha)},
          {"p", jd(params.p)},
          {"q", jd(params.q)},
          {"k", k_eff},
          {"r-grid",
           {{"r-min", jd(params.r_grid.r_min)},
            {"r-max", jd(params.r_grid.r_max)},
            {"points-per-octave", params.r_grid.points_per_octave}}},
          {"y-grid",
           {{"lo", jv(params.y_grid.lo)},
            {"hi", jv(params.y_grid.hi)},
            {"points", params.y_grid.points}}}};
}

ordered_json budget_json(const sbe::BudgetReport& b) {
  ordered_json violations = ordered_json::array();
  for (const auto& v : b.violations) violations.push_back(v);
  return {{"ok", b.ok},
          {"gamma0", jd(b.gamma0)},
          {"contraction-regime", b.contraction_regime},
          {"convolution-sum", jd(b.convolution_sum)},
          {"convolution-upper", jd(b.convolution_upper)},
          {"time-sum", jd(b.time_sum)},
          {"lower-slack", jd(b.lower_slack)},
          {"upper-slack", jd(b.upper_slack)},
          {"time-slack", jd(b.time_slack)},
          {"gamma-slack", jd(b.gamma_slack)},
          {"picard-slack", jd(b.picard_slack)},
          {"violations", violations}};
}

ordered_json extension_json(const sbe::ExtensionStats& e) {
  return {{"evaluations", e.evaluations},
          {"out-of-grid", e.out_of_grid},
          {"fraction", jd(e.fraction())}};
}

ordered_json moment_report_json(const sbe::MomentScalingReport& r) {
  ordered_json spans = ordered_json::array();
  for (const auto& s : r.spans) {
    spans.push_back({{"span", jd(s.span)},
                     {"mean", jd(s.mean)},
                     {"std-error", jd(s.std_error)},
                     {"windows", s.windows}});
  }
  ordered_json trunc = ordered_json::array();
  for (const auto& t : r.truncation) {
    trunc.push_back({{"level", jd(t.level)},
                     {"event-fraction", jd(t.event_fraction)},
                     {"truncated-moment", jd(t.truncated_moment)}});
  }
  return {{"process", r.process_label},
          {"dim", r.dim},
          {"hurst", jd(r.hurst)},
          {"alpha", jd(r.alpha)},
          {"p", jd(r.p)},
          {"q", jd(r.q)},
          {"moment-order", r.moment_order},
          {"beta", jd(r.beta)},
          {"delta0", jd(r.delta0)},
          {"target", jd(r.target)},
          {"mean-weight", jd(r.mean_weight)},
          {"fit",
           {{"slope", jd(r.fit.slope)},
            {"intercept", jd(r.fit.intercept)},
            {"r-squared", jd(r.fit.r_squared)}}},
          {"slope-ci",
           {{"slope", jd(r.slope.slope)},
            {"lo", jd(r.slope.lo)},
            {"hi", jd(r.slope.hi)},
            {"resamples", r.slope.resamples},
            {"confidence", jd(r.slope.confidence)}}},
          {"spans", spans},
          {"truncation", trunc}};
}

void write_spans_csv(Run& run, const std::string& name,
                     const sbe::MomentScalingReport& r) {
  std::ofstream f(run.out(name), std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write artifact '" + name + "'");
  f << "span,mean,std_error,windows\n";
  for (const auto& s : r.spans) {
    f << fmt17(s.span) << ',' << fmt17(s.mean) << ',' << fmt17(s.std_error)
      << ',' << s.windows << '\n';
  }
  run.output(name);
}

// ---------------------------------------------------------------- gen ----

struct GenSettings {
  Common c;
  std::string kind = "bm";
  double hurst = 0.5;
  int dim = 1;
  std::uint64_t n = 1024;
  double span_start = 0.0;
  double span_end = 1.0;
  std::string format = "csv";
  std::string out = "path";
};

void cmd_gen(const GenSettings& s, const Registry& reg) {
  const sbe::GaussianSpec spec = spec_from(s.kind, s.hurst, s.dim);
  const sbe::SampledPath path = sbe::gen_gaussian(
      spec, static_cast<std::size_t>(s.n), s.span_start, s.span_end, s.c.seed);
  Run run(s.c, "gen", reg);
  if (s.format == "csv" || s.format == "both") {
    sbe::write_path_csv(run.out(s.out + ".csv"), path);
    run.output(s.out + ".csv");
  }
  if (s.format == "bin" || s.format == "both") {
    sbe::write_path_binary(run.out(s.out + ".bin"), path);
    run.output(s.out + ".bin");
  }
  if (s.format != "csv" && s.format != "bin" && s.format != "both") {
    throw std::invalid_argument("gen: unknown format '" + s.format + "'");
  }
  run.finish();
}

// ---------------------------------------------------------------- occ ----

struct OccSettings {
  Common c;
  std::string path_file;
  double s = kNaN;
  double t = kNaN;
  std::string out = "measure";
};

void cmd_occ(const OccSettings& s, const Registry& reg) {
  Run run(s.c, "occ", reg);
  const sbe::SampledPath path = sbe::read_path_any(s.path_file);
  run.input(s.path_file);
  const auto [a, b] = resolve_window(path, s.s, s.t);
  const sbe::OccupationMeasure mu = sbe::occupation(path, a, b);
  sbe::write_measure_csv(run.out(s.out + ".csv"), mu);
  run.output(s.out + ".csv");
  run.write_json("report.json",
                 {{"atoms", mu.size()},
                  {"dim", mu.dim},
                  {"total-mass", jd(mu.total_mass())},
                  {"window", {jd(a), jd(b)}},
                  {"path-span", {jd(path.span_start()), jd(path.span_end())}}});
  run.finish();
}

// --------------------------------------------------------------- norm ----

struct NormSbeSettings {
  Common c;
  std::string path_file;
  double s = kNaN, t = kNaN;
  double alpha = 0.5, p = 2.0, q = 2.0;
  int k = -1;
  bool automatic = true;
  double r_min = 0.0078125, r_max = 2.0;
  int per_octave = 4;
  std::vector<double> y_lo{-8.0}, y_hi{8.0};
  std::vector<int> y_points{161};
};

sbe::SbeParams resolve_sbe_params(const NormSbeSettings& s,
                                  const sbe::OccupationMeasure& mu) {
  sbe::SbeParams params;
  if (s.automatic) {
    params = sbe::auto_sbe_params(mu, s.alpha, s.p, s.q);
    if (s.k >= 0) params.k = s.k;
    return params;
  }
  params.alpha = s.alpha;
  params.p = s.p;
  params.q = s.q;
  params.k = s.k;
  params.r_grid = {s.r_min, s.r_max, s.per_octave};
  params.y_grid = y_grid_for(s.y_lo, s.y_hi, s.y_points, mu.dim);
  return params;
}

void cmd_norm_sbe(const NormSbeSettings& s, const Registry& reg) {
  Run run(s.c, "norm sbe", reg);
  const sbe::SampledPath path = sbe::read_path_any(s.path_file);
  run.input(s.path_file);
  const auto [a, b] = resolve_window(path, s.s, s.t);
  const sbe::OccupationMeasure mu = sbe::occupation(path, a, b);
  const sbe::SbeParams params = resolve_sbe_params(s, mu);
  const double value = sbe::sbe_norm(mu, params);
  run.write_json("report.json", {{"norm", "sbe"},
                                 {"value", jd(value)},
                                 {"window", {jd(a), jd(b)}},
                                 {"atoms", mu.size()},
                                 {"total-mass", jd(mu.total_mass())},
                                 {"params", sbe_params_json(params, mu.dim)}});
  run.finish();
}

struct NormBesovSettings {
  Common c;
  std::string path_file;
  double s = kNaN, t = kNaN;
  double alpha = 0.5, p = 2.0, sharpness = 1.0;
  int blocks = 5;
  std::string summability = "sum";
  std::vector<double> box_lo{-8.0}, box_hi{8.0};
  std::vector<int> cells{256};
};

void cmd_norm_besov(const NormBesovSettings& s, const Registry& reg) {
  Run run(s.c, "norm besov", reg);
  const sbe::SampledPath path = sbe::read_path_any(s.path_file);
  run.input(s.path_file);
  const auto [a, b] = resolve_window(path, s.s, s.t);
  const sbe::OccupationMeasure mu = sbe::occupation(path, a, b);
  sbe::BoxGridSpec box;
  const auto grid = y_grid_for(s.box_lo, s.box_hi, s.cells, mu.dim);
  box.lo = grid.lo;
  box.hi = grid.hi;
  box.cells = grid.points;
  const sbe::GridDensity rho = sbe::deposit_grid(mu, box);
  if (s.summability != "sum" && s.summability != "sup") {
    throw std::invalid_argument("norm: summability must be 'sum' or 'sup'");
  }
  const sbe::BesovParams bp{s.alpha, s.p, s.blocks, s.sharpness};
  const double value =
      sbe::besov_norm(rho, bp,
                      s.summability == "sup" ? sbe::BlockSummability::Sup
                                             : sbe::BlockSummability::Sum);
  run.write_json("report.json",
                 {{"norm", "besov"},
                  {"value", jd(value)},
                  {"window", {jd(a), jd(b)}},
                  {"alpha", jd(s.alpha)},
                  {"spatial-p", jd(s.p)},
                  {"blocks", s.blocks},
                  {"summability", s.summability},
                  {"box",
                   {{"lo", jv(box.lo)},
                    {"hi", jv(box.hi)},
                    {"cells", box.cells}}}});
  run.finish();
}

struct NormPvarSettings {
  Common c;
  std::string path_file;
  double r = 2.0;
  int points = 17;
  double alpha = 0.5, p = 2.0, q = 2.0;
  bool automatic = true;
  double r_min = 0.0078125, r_max = 2.0;
  int per_octave = 4;
  std::vector<double> y_lo{-8.0}, y_hi{8.0};
  std::vector<int> y_points{161};
};

void cmd_norm_pvar(const NormPvarSettings& s, const Registry& reg) {
  Run run(s.c, "norm pvar", reg);
  const sbe::SampledPath path = sbe::read_path_any(s.path_file);
  run.input(s.path_file);
  if (s.points < 3) {
    throw std::invalid_argument("norm: need at least 3 partition points");
  }
  const double a = path.span_start();
  const double b = path.span_end();
  // one fixed parameter set for every increment, derived from the whole
  // window when automatic
  sbe::SbeParams params;
  if (s.automatic) {
    params = sbe::auto_sbe_params(sbe::occupation(path, a, b), s.alpha, s.p,
                                  s.q);
  } else {
    params.alpha = s.alpha;
    params.p = s.p;
    params.q = s.q;
    params.r_grid = {s.r_min, s.r_max, s.per_octave};
    params.y_grid = y_grid_for(s.y_lo, s.y_hi, s.y_points, path.dim);
  }
  std::vector<double> partition;
  for (int i = 0; i < s.points; ++i) {
    partition.push_back(
        i == 0 ? a
               : (i == s.points - 1
                      ? b
                      : a + (b - a) * (static_cast<double>(i) /
                                       static_cast<double>(s.points - 1))));
  }
  const double value =
      sbe::variation_of_occupation(path, a, partition, s.r, params);
  run.write_json("report.json",
                 {{"norm", "pvar"},
                  {"value", jd(value)},
                  {"r", jd(s.r)},
                  {"partition-points", s.points},
                  {"params", sbe_params_json(params, path.dim)}});
  run.finish();
}

// ---------------------------------------------------------------- lnd ----

struct LndCertifySettings {
  Common c;
  std::string model = "fbm";
  double hurst = 0.5;
  int dim = 1;
  int n = 3;
  double t_lo = 0.0, t_hi = 1.0;
  std::uint64_t trials = 10000;
};

sbe::GaussianIncrementModel increment_model(const std::string& model,
                                            double hurst, int dim) {
  if (model == "bm") return sbe::GaussianIncrementModel::brownian(dim);
  if (model == "fbm") {
    return sbe::GaussianIncrementModel::fractional(hurst, dim);
  }
  throw std::invalid_argument("lnd: unknown model '" + model + "'");
}

void cmd_lnd_certify(const LndCertifySettings& s, const Registry& reg) {
  Run run(s.c, "lnd certify", reg);
  const auto model = increment_model(s.model, s.hurst, s.dim);
  const sbe::LndEstimate est = sbe::lnd_certify(
      model, s.n, s.t_lo, s.t_hi, static_cast<std::size_t>(s.trials),
      s.c.seed);
  run.write_json("report.json", {{"model", s.model},
                                 {"hurst", jd(model.hurst)},
                                 {"dim", model.dim},
                                 {"n", s.n},
                                 {"min-ratio", jd(est.min_ratio)},
                                 {"certified-c", jd(est.certified_c)},
                                 {"trials", est.trials},
                                 {"argmin-times", jv(est.argmin_times)}});
  run.finish();
}

struct LndCnuSettings {
  Common c;
  std::string model = "fbm";
  double hurst = 0.25;
  int dim = 1;
  double beta = 1.0;
  double j_lo = 0.01, j_hi = 0.1;
  int refinements = 4;
};

void cmd_lnd_cnu(const LndCnuSettings& s, const Registry& reg) {
  Run run(s.c, "lnd cnu", reg);
  const auto model = increment_model(s.model, s.hurst, s.dim);
  const sbe::CnuReport rep =
      sbe::cnu_linearity(model, s.beta, s.j_lo, s.j_hi, s.refinements);
  ordered_json windows = ordered_json::array();
  for (const auto& [len, integral] : rep.windows) {
    windows.push_back({{"length", jd(len)}, {"integral", jd(integral)}});
  }
  run.write_json("report.json",
                 {{"model", s.model},
                  {"beta", jd(s.beta)},
                  {"singular-exponent", jd(rep.singular_exponent)},
                  {"divergent", rep.divergent},
                  {"quadrature-converged", rep.quadrature_converged},
                  {"raw-exponent", jd(rep.raw_exponent)},
                  {"compensated-exponent", jd(rep.compensated_exponent)},
                  {"c-nu", jd(rep.c_nu)},
                  {"windows", windows}});
  run.finish();
}

struct LndRegionSettings {
  Common c;
  double hurst = 0.5;
  int dim = 1;
  double alpha = 0.5, p = 2.0, q = 2.0;
};

void cmd_lnd_region(const LndRegionSettings& s, const Registry& reg) {
  Run run(s.c, "lnd region", reg);
  const sbe::LndRegionReport rep =
      sbe::lnd_param_region(s.hurst, s.dim, s.alpha, s.p, s.q);
  run.write_json("report.json", {{"hurst", jd(s.hurst)},
                                 {"dim", s.dim},
                                 {"alpha", jd(s.alpha)},
                                 {"p", jd(s.p)},
                                 {"q", jd(s.q)},
                                 {"hurst-ok", rep.hurst_ok},
                                 {"holder-ok", rep.holder_ok},
                                 {"alpha-ok", rep.alpha_ok},
                                 {"admissible", rep.admissible},
                                 {"holder-slack", jd(rep.holder_slack)},
                                 {"alpha-slack", jd(rep.alpha_slack)}});
  run.finish();
}

// -------------------------------------------------------------- young ----

struct YoungCommonParams {
  double alpha1 = 0.45, p1 = 2.0, q1 = 2.0;
  double r1 = 1.0, r2 = 1.0, r3 = 1.0, gamma = 0.5;
  int level = 10, max_iterations = 50;
  double tolerance = 1e-8;
};

void add_young_params(CLI::App& cmd, Registry& reg, YoungCommonParams& y) {
  reg_option(cmd, reg, "alpha1", y.alpha1, "Declared driver SBE exponent");
  reg_option(cmd, reg, "p1", y.p1, "Driver inner exponent");
  reg_option(cmd, reg, "q1", y.q1, "Driver outer exponent");
  reg_option(cmd, reg, "r1", y.r1, "Occupation variation exponent");
  reg_option(cmd, reg, "r2", y.r2, "Drift time-variation exponent");
  reg_option(cmd, reg, "r3", y.r3, "Composed-path variation exponent");
  reg_option(cmd, reg, "gamma", y.gamma, "Usable smoothness fraction");
  reg_option(cmd, reg, "level", y.level, "Finest dyadic refinement level");
  reg_option(cmd, reg, "tol", y.tolerance, "Picard stopping tolerance");
  reg_option(cmd, reg, "max-iters", y.max_iterations,
             "Picard iteration budget");
}

sbe::YoungParams to_young_params(const YoungCommonParams& y) {
  sbe::YoungParams p;
  p.alpha1 = y.alpha1;
  p.p1 = y.p1;
  p.q1 = y.q1;
  p.r1 = y.r1;
  p.r2 = y.r2;
  p.r3 = y.r3;
  p.gamma = y.gamma;
  p.max_level = y.level;
  p.tolerance = y.tolerance;
  p.max_iterations = y.max_iterations;
  return p;
}

struct YoungSolveSettings {
  Common c;
  std::string drift_file, path_file;
  std::vector<double> x0;
  YoungCommonParams y;
};

ordered_json picard_json(const sbe::PicardReport& rep) {
  return {{"converged", rep.converged},
          {"iterations", rep.iterations},
          {"message", rep.message},
          {"sup-changes", jv(rep.sup_changes)},
          {"contraction-ratios", jv(rep.contraction_ratios)},
          {"contraction-expected", rep.contraction_expected},
          {"budget", budget_json(rep.budget)},
          {"extension", extension_json(rep.extension)},
          {"drift",
           {{"declared",
             {{"alpha", jd(rep.drift_declared.alpha)},
              {"p", jd(rep.drift_declared.p)},
              {"q", jd(rep.drift_declared.q)},
              {"r-var", jd(rep.drift_declared.r_var)}}},
            {"measured-besov-max", jd(rep.drift_measured_besov_max)}}}};
}

void cmd_young_solve(const YoungSolveSettings& s, const Registry& reg) {
  Run run(s.c, "young solve", reg);
  const sbe::DriftFieldData data = sbe::read_drift_binary(s.drift_file);
  run.input(s.drift_file);
  const sbe::DriftField field = data.to_field();
  const sbe::SampledPath omega = sbe::read_path_any(s.path_file);
  run.input(s.path_file);
  const sbe::OdeSolution sol =
      sbe::solve_ode_report(field, omega, s.x0, to_young_params(s.y));
  sbe::write_path_csv(run.out("solution.csv"), sol.x);
  run.output("solution.csv");
  run.write_json("report.json", picard_json(sol.report));
  run.finish();
}

struct YoungIntegrateSettings {
  Common c;
  std::string drift_file, theta_file, omega_file;
  YoungCommonParams y;
};

void cmd_young_integrate(const YoungIntegrateSettings& s,
                         const Registry& reg) {
  Run run(s.c, "young integrate", reg);
  const sbe::DriftFieldData data = sbe::read_drift_binary(s.drift_file);
  run.input(s.drift_file);
  const sbe::DriftField field = data.to_field();
  const sbe::SampledPath theta = sbe::read_path_any(s.theta_file);
  run.input(s.theta_file);
  const sbe::SampledPath omega = sbe::read_path_any(s.omega_file);
  run.input(s.omega_file);
  const sbe::YoungIntegralReport rep =
      sbe::young_integral_report(field, theta, omega, to_young_params(s.y));
  sbe::write_path_csv(run.out("integral.csv"), rep.integral);
  run.output("integral.csv");
  ordered_json levels = ordered_json::array();
  for (const auto& lvl : rep.sewing.levels) {
    levels.push_back(
        {{"level", lvl.level}, {"diff-from-prev", jd(lvl.diff_from_prev)}});
  }
  run.write_json(
      "report.json",
      {{"budget", budget_json(rep.budget)},
       {"sewing",
        {{"decay-ok", rep.sewing.decay_ok},
         {"fitted-rate", jd(rep.sewing.fitted_rate)},
         {"theoretical-rate", jd(rep.sewing.theoretical_rate)},
         {"tail-estimate", jd(rep.sewing.tail_estimate)},
         {"diagnostic", rep.sewing.diagnostic},
         {"levels", levels}}},
       {"extension", extension_json(rep.extension)},
       {"drift-measured-besov-max", jd(rep.drift_measured_besov_max)}});
  run.finish();
}

struct SampleDriftSettings {
  Common c;
  std::string kind = "linear";
  double scale = 1.0;
  double freq = 1.0;
  std::vector<double> lo{-6.0}, hi{6.0};
  std::vector<int> cells{1024};
  int slices = 1;
  double t_lo = 0.0, t_hi = 1.0;
  double alpha2 = 1.0, p2 = 2.0, q2 = kInf, r_var = 1.0;
  std::string out = "drift";
};

void cmd_young_sample_drift(const SampleDriftSettings& s,
                            const Registry& reg) {
  Run run(s.c, "young sample-drift", reg);
  const int dim = static_cast<int>(s.lo.size());
  if (s.hi.size() != s.lo.size() || s.cells.size() != s.lo.size()) {
    throw std::invalid_argument(
        "young: --lo, --hi and --cells need one value per dimension");
  }
  if (s.slices < 1) {
    throw std::invalid_argument("young: need at least one time slice");
  }
  std::function<std::vector<double>(double, std::span<const double>)> fn;
  const double scale = s.scale;
  const double freq = s.freq;
  if (s.kind == "zero") {
    fn = [dim](double, std::span<const double>) {
      return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
    };
  } else if (s.kind == "linear") {
    fn = [dim, scale](double, std::span<const double> x) {
      std::vector<double> out(static_cast<std::size_t>(dim));
      for (int c = 0; c < dim; ++c) {
        out[static_cast<std::size_t>(c)] = -scale * x[static_cast<std::size_t>(c)];
      }
      return out;
    };
  } else if (s.kind == "cosine") {
    fn = [dim, scale, freq](double, std::span<const double> x) {
      std::vector<double> out(static_cast<std::size_t>(dim));
      for (int c = 0; c < dim; ++c) {
        out[static_cast<std::size_t>(c)] =
            scale * std::cos(freq * x[static_cast<std::size_t>(c)]);
      }
      return out;
    };
  } else {
    throw std::invalid_argument("young: unknown drift kind '" + s.kind + "'");
  }
  std::vector<double> times;
  if (s.slices == 1) {
    times.push_back(s.t_lo);
  } else {
    for (int i = 0; i < s.slices; ++i) {
      times.push_back(s.t_lo + (s.t_hi - s.t_lo) *
                                   (static_cast<double>(i) /
                                    static_cast<double>(s.slices - 1)));
    }
  }
  sbe::BoxGridSpec box;
  box.lo = s.lo;
  box.hi = s.hi;
  box.cells = s.cells;
  const sbe::DriftRegularity decl{s.alpha2, s.p2, s.q2, s.r_var};
  const sbe::DriftFieldData data =
      sbe::DriftFieldData::sample(fn, times, box, dim, decl, true);
  const sbe::DriftField field = data.to_field();  // validates + measures
  sbe::write_drift_binary(run.out(s.out + ".bin"), data);
  run.output(s.out + ".bin");
  run.write_json("report.json",
                 {{"kind", s.kind},
                  {"dim", dim},
                  {"slices", s.slices},
                  {"cells", s.cells},
                  {"declared",
                   {{"alpha", jd(s.alpha2)},
                    {"p", jd(s.p2)},
                    {"q", jd(s.q2)},
                    {"r-var", jd(s.r_var)}}},
                  {"measured-besov-max", jd(field.measured_besov_max())}});
  run.finish();
}

// -------------------------------------------------------- experiments ----

struct ExpMomentSettings {
  Common c;
  std::string process = "bm";
  double hurst = 0.5;
  int dim = 1;
  double alpha = 0.4;
  std::vector<double> spans{0.0078125, 0.015625, 0.03125, 0.0625, 0.125, 0.25};
  int paths = 200;
  int steps = 16384;
  int windows = 4;
  int resamples = 1000;
  double confidence = 0.95;
  std::vector<double> truncation{1.0, 2.0, 4.0};
};

sbe::McOptions to_mc_options(int windows, int resamples, double confidence,
                             const std::vector<double>& truncation,
                             int threads) {
  sbe::McOptions o;
  o.windows_per_span = windows;
  o.bootstrap_resamples = resamples;
  o.confidence = confidence;
  o.truncation_levels = truncation;
  o.threads = threads;
  return o;
}

void cmd_exp_moment(const ExpMomentSettings& s, const Registry& reg) {
  Run run(s.c, "experiment moment-scaling", reg);
  const sbe::GaussianSpec spec = spec_from(s.process, s.hurst, s.dim);
  const sbe::MomentScalingReport rep = sbe::mc_moment_scaling(
      spec, s.alpha, s.spans, s.paths, s.steps, s.c.seed,
      to_mc_options(s.windows, s.resamples, s.confidence, s.truncation,
                    s.c.threads));
  run.write_json("report.json", moment_report_json(rep));
  write_spans_csv(run, "spans.csv", rep);
  run.finish();
}

struct ExpSdeSettings {
  Common c;
  std::string drift = "tanh";
  double drift_scale = 0.5;
  double alpha = 0.4;
  std::vector<double> spans{0.03125, 0.0625, 0.125};
  int paths = 64;
  int steps = 4096;
  int windows = 4;
  int resamples = 500;
  double confidence = 0.95;
};

void cmd_exp_sde(const ExpSdeSettings& s, const Registry& reg) {
  Run run(s.c, "experiment sde", reg);
  std::function<double(double, double)> b;
  const double scale = s.drift_scale;
  if (s.drift == "zero") {
    b = [](double, double) { return 0.0; };
  } else if (s.drift == "tanh") {
    b = [scale](double, double x) { return scale * std::tanh(2.0 * x); };
  } else if (s.drift == "sign") {
    b = [scale](double, double x) {
      return x > 0.0 ? scale : (x < 0.0 ? -scale : 0.0);
    };
  } else {
    throw std::invalid_argument("sde: unknown drift kind '" + s.drift + "'");
  }
  const sbe::SdeReport rep = sbe::sde_occupation_experiment(
      b, s.paths, s.spans, s.alpha, s.steps, s.c.seed,
      to_mc_options(s.windows, s.resamples, s.confidence, {1.0, 2.0, 4.0},
                    s.c.threads));
  run.write_json("report.json",
                 {{"drift", s.drift},
                  {"drift-scale", jd(s.drift_scale)},
                  {"equation", moment_report_json(rep.equation)},
                  {"baseline", moment_report_json(rep.baseline)},
                  {"slope-ci-overlap", rep.slope_ci_overlap},
                  {"dilation-ratio", jd(rep.dilation_ratio)},
                  {"dilation-expected", jd(rep.dilation_expected)}});
  write_spans_csv(run, "equation_spans.csv", rep.equation);
  write_spans_csv(run, "baseline_spans.csv", rep.baseline);
  run.finish();
}

struct ExpReparamSettings {
  Common c;
  std::uint64_t n = 1025;
  std::uint64_t phi_n = 513;
  std::string warp = "quadratic";
  double strength = 0.5;
  double r = 2.5;
  double alpha = 0.4;
  int points = 9;
};

void cmd_exp_reparam(const ExpReparamSettings& s, const Registry& reg) {
  Run run(s.c, "experiment reparam", reg);
  const sbe::SampledPath path =
      sbe::gen_gaussian(sbe::GaussianSpec::brownian(1),
                        static_cast<std::size_t>(s.n), 0.0, 1.0,
                        sbe::derive_seed(s.c.seed, 1));
  sbe::SampledPath phi;
  phi.dim = 1;
  if (s.warp == "identity") {
    phi.times = path.times;
    phi.values = path.times;
  } else {
    if (!(s.strength >= 0.0) || !(s.strength < 1.0)) {
      throw std::invalid_argument(
          "reparam: warp strength must lie in [0, 1)");
    }
    for (std::uint64_t i = 0; i < s.phi_n; ++i) {
      const double u = static_cast<double>(i) /
                       static_cast<double>(s.phi_n - 1);
      phi.times.push_back(u);
      if (s.warp == "quadratic") {
        phi.values.push_back((1.0 - s.strength) * u + s.strength * u * u);
      } else if (s.warp == "sine") {
        phi.values.push_back(u + s.strength * std::sin(kTau * u) / kTau);
      } else {
        throw std::invalid_argument("reparam: unknown warp '" + s.warp + "'");
      }
    }
    phi.times.back() = 1.0;
    phi.values.back() = 1.0;
  }
  sbe::SbeParams sp;
  sp.alpha = s.alpha;
  sp.r_grid = {0.0078125, 2.0, 4};
  sp.y_grid = {{-8.0}, {8.0}, {161}};
  const sbe::ReparamReport rep =
      sbe::reparam_experiment(path, phi, s.r, sp, s.points);
  run.write_json("report.json",
                 {{"warp", s.warp},
                  {"strength", jd(s.strength)},
                  {"r", jd(s.r)},
                  {"original", jd(rep.original)},
                  {"transformed", jd(rep.transformed)},
                  {"ratio", jd(rep.ratio)},
                  {"phi-lip-lower", jd(rep.phi_lip_lower)},
                  {"phi-lip-upper", jd(rep.phi_lip_upper)}});
  run.finish();
}

struct ExpShiftSettings {
  Common c;
  std::uint64_t n = 1025;
  int pairs = 6;
  int points = 9;
  double r = 2.0;
  double gamma = 0.5;
  int cells = 256;
  double box_half = 6.0;
  double amp_lo = 0.05, amp_hi = 0.3;
};

void cmd_exp_shift(const ExpShiftSettings& s, const Registry& reg) {
  Run run(s.c, "experiment shift", reg);
  if (s.pairs < 1) throw std::invalid_argument("shift: need pairs >= 1");
  const sbe::SampledPath path =
      sbe::gen_gaussian(sbe::GaussianSpec::brownian(1),
                        static_cast<std::size_t>(s.n), 0.0, 1.0,
                        sbe::derive_seed(s.c.seed, 2));
  sbe::BoxGridSpec box;
  box.lo = {-s.box_half};
  box.hi = {s.box_half};
  box.cells = {s.cells};
  sbe::BesovParams bp;

  auto sample_fn = [&](const std::function<double(double)>& f) {
    sbe::SampledPath p;
    p.dim = 1;
    for (int i = 0; i < 257; ++i) {
      const double t = static_cast<double>(i) / 256.0;
      p.times.push_back(t);
      p.values.push_back(f(t));
    }
    return p;
  };

  ordered_json rows = ordered_json::array();
  std::vector<double> ratios;
  std::ofstream csv(run.out("ratios.csv"), std::ios::trunc);
  csv << "pair,difference_variation,bound,ratio\n";
  for (int k = 0; k < s.pairs; ++k) {
    sbe::Rng rng(sbe::derive_seed(s.c.seed,
                                  0x5481F7ULL + static_cast<std::uint64_t>(k)));
    const double a1 = rng.uniform(s.amp_lo, s.amp_hi);
    const double b1 = rng.uniform(-0.2, 0.2);
    const double a2 = rng.uniform(s.amp_lo, s.amp_hi);
    const double b2 = rng.uniform(-0.2, 0.2);
    const sbe::SampledPath f = sample_fn(
        [&](double t) { return a1 * std::sin(kTau * t) + b1 * t; });
    const sbe::SampledPath g = sample_fn([&](double t) {
      return a2 * (std::cos(kTau * t) - 1.0) + b2 * t * t;
    });
    const sbe::ShiftReport rep =
        sbe::shift_experiment(path, f, g, s.r, s.gamma, bp, box, s.points);
    ratios.push_back(rep.ratio);
    rows.push_back({{"pair", k},
                    {"difference-variation", jd(rep.difference_variation)},
                    {"reference-variation", jd(rep.reference_variation)},
                    {"perturbation-variation", jd(rep.perturbation_variation)},
                    {"perturbation-sup", jd(rep.perturbation_sup)},
                    {"g-variation", jd(rep.g_variation)},
                    {"bound", jd(rep.bound)},
                    {"ratio", jd(rep.ratio)}});
    csv << k << ',' << fmt17(rep.difference_variation) << ','
        << fmt17(rep.bound) << ',' << fmt17(rep.ratio) << '\n';
  }
  csv.close();
  run.output("ratios.csv");
  const auto [lo_it, hi_it] =
      std::minmax_element(ratios.begin(), ratios.end());
  run.write_json("report.json",
                 {{"pairs", s.pairs},
                  {"r", jd(s.r)},
                  {"gamma", jd(s.gamma)},
                  {"ratio-min", jd(*lo_it)},
                  {"ratio-max", jd(*hi_it)},
                  {"ratio-spread", jd(*lo_it > 0.0 ? *hi_it / *lo_it : kInf)},
                  {"results", rows}});
  run.finish();
}

struct ExpRegSettings {
  Common c;
  double hurst = 0.5;
  int dim = 1;
  double alpha2 = 1.0;
  double roughness = 1.5;
  int n_grid = 2048;
  sbe::RegularizationOptions o;
};

void cmd_exp_regularization(const ExpRegSettings& s, const Registry& reg) {
  Run run(s.c, "experiment regularization", reg);
  const sbe::RegularizationReport rep = sbe::regularization_demo(
      s.hurst, s.dim, s.alpha2, s.roughness, s.n_grid, s.c.seed, s.o);
  ordered_json levels = ordered_json::array();
  std::ofstream csv(run.out("levels.csv"), std::ios::trunc);
  csv << "level,diff_from_prev";
  for (int c = 0; c < rep.dim; ++c) csv << ",end" << (c + 1);
  csv << '\n';
  for (const auto& lvl : rep.levels) {
    levels.push_back({{"level", lvl.level},
                      {"end", jv(lvl.end)},
                      {"diff-from-prev", jd(lvl.diff_from_prev)}});
    csv << lvl.level << ',' << fmt17(lvl.diff_from_prev);
    for (double e : lvl.end) csv << ',' << fmt17(e);
    csv << '\n';
  }
  csv.close();
  run.output("levels.csv");
  run.write_json("report.json",
                 {{"hurst", jd(rep.hurst)},
                  {"dim", rep.dim},
                  {"alpha1", jd(rep.alpha1)},
                  {"alpha2", jd(rep.alpha2)},
                  {"refused", rep.refused},
                  {"refusal", rep.refusal},
                  {"budget", budget_json(rep.budget)},
                  {"levels", levels},
                  {"self-rate", jd(rep.self_rate)},
                  {"contraction", jv(rep.contraction)},
                  {"converged", rep.converged},
                  {"drift-measured-besov", jd(rep.drift_measured_besov)},
                  {"extension-fraction", jd(rep.extension_fraction)}});
  run.finish();
  if (rep.refused) {
    std::cout << "refused (reported): " << rep.refusal << '\n';
  }
}

struct ExpVariationSettings {
  Common c;
  std::string path_file;
  std::uint64_t n = 1025;
  int levels = 5;
  double q = 2.5;
  double eps = 0.5;
  double alpha = 0.4;
};

void cmd_exp_variation(const ExpVariationSettings& s, const Registry& reg) {
  Run run(s.c, "experiment variation", reg);
  sbe::SampledPath path;
  if (!s.path_file.empty()) {
    path = sbe::read_path_any(s.path_file);
    run.input(s.path_file);
  } else {
    path = sbe::gen_gaussian(sbe::GaussianSpec::brownian(1),
                             static_cast<std::size_t>(s.n), 0.0, 1.0,
                             sbe::derive_seed(s.c.seed, 3));
  }
  sbe::SbeParams sp;
  sp.alpha = s.alpha;
  sp.r_grid = {0.0078125, 2.0, 4};
  sp.y_grid = {{-8.0}, {8.0}, {161}};
  const sbe::VariationCrossCheck check =
      sbe::variation_cross_check(path, s.levels, s.q, s.eps, sp);
  run.write_json("report.json", {{"levels", s.levels},
                                 {"q", jd(s.q)},
                                 {"eps", jd(s.eps)},
                                 {"direct", jd(check.direct)},
                                 {"dyadic-bound", jd(check.dyadic_bound)},
                                 {"constant", jd(check.constant)},
                                 {"slack-factor", jd(check.slack_factor)},
                                 {"consistent", check.consistent}});
  run.finish();
}

// ----------------------------------------------------------- selftest ----

void selftest_fail(const std::string& which, const std::string& detail) {
  throw std::runtime_error("selftest: " + which + " failed: " + detail);
}

void cmd_selftest(const Common& c, const Registry& reg) {
  Run run(c, "selftest", reg);

  // 1. polynomial annihilation through order six
  for (int k = 0; k <= 6; ++k) {
    auto poly = [k](long double r) {
      long double acc = 0.0L, pw = 1.0L;
      for (int j = 0; j <= k; ++j) {
        acc += pw / static_cast<long double>(j + 1);
        pw *= r;
      }
      return acc;
    };
    for (double r : {0.7, 1.3, 2.9}) {
      const double v = sbe::apply_delta_k_ext(poly, k, r);
      double scale = 0.0;
      for (const auto& term : sbe::delta_k_coeffs(k).terms) {
        scale += std::abs(term.coeff) *
                 std::abs(static_cast<double>(poly(r * term.scale)));
      }
      if (!(std::abs(v) <= 1e-10 * scale)) {
        selftest_fail("annihilation",
                      "k=" + std::to_string(k) + " r=" + std::to_string(r));
      }
    }
  }
  std::cout << "ok: dyadic difference annihilates polynomials (k <= 6)\n";

  // 2. adjoint-indicator identity, bitwise on random probes
  {
    sbe::Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
      const int k = static_cast<int>(rng.next_u64() % 7);
      const double x = std::exp(rng.uniform(-6.0, 6.0));
      const double y = std::exp(rng.uniform(-6.0, 6.0));
      const double lhs = sbe::apply_delta_k(
          [&](double r) { return r >= y ? 1.0 : 0.0; }, k, x);
      const double rhs = sbe::apply_delta_k_star(
          [&](double r) { return r <= x ? 1.0 : 0.0; }, k, y);
      if (lhs != rhs) selftest_fail("adjoint-indicator", "probe mismatch");
    }
  }
  std::cout << "ok: adjoint-indicator identity exact on 1000 probes\n";

  // 3. reconstruction coefficients against the composition enumeration
  for (int k = 0; k <= 5; ++k) {
    std::vector<sbe::BigInt> conv{1};  // product of geometric series
    for (int j = 0; j <= k; ++j) {
      std::vector<sbe::BigInt> next(21, 0);
      sbe::BigInt base = sbe::BigInt(1) << j;  // 2^j
      for (int h = 0; h <= 20; ++h) {
        sbe::BigInt pw = 1;
        for (int g = 0; g + h <= 20; ++g) {
          if (h < static_cast<int>(conv.size())) {
            next[static_cast<std::size_t>(g + h)] +=
                conv[static_cast<std::size_t>(h)] * pw;
          }
          pw *= base;
        }
      }
      conv = std::move(next);
    }
    for (int h = 0; h <= 20; ++h) {
      if (sbe::chk_coeff(h, k) != conv[static_cast<std::size_t>(h)]) {
        selftest_fail("reconstruction coefficients",
                      "h=" + std::to_string(h) + " k=" + std::to_string(k));
      }
    }
  }
  std::cout << "ok: reconstruction coefficients exact (k <= 5, h <= 20)\n";

  // 4. Gaussian reconstruction residual at k = 0, 40 levels
  for (double r : {0.5, 1.0, 2.0}) {
    const double res = sbe::reconstruction_residual(
        [](double x) { return std::exp(-x * x); }, 0, r, 40);
    if (!(res < 1e-12)) {
      selftest_fail("gaussian reconstruction", "r=" + std::to_string(r));
    }
  }
  std::cout << "ok: gaussian reconstruction residual < 1e-12 (40 levels)\n";

  run.write_json("report.json", {{"status", "pass"}, {"checks", 4}});
  run.finish();
}

std::string one_line(std::string text) {
  for (char& ch : text) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-ball path irregularity toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // gen
  GenSettings gen_s;
  Registry gen_r;
  auto* gen = app.add_subcommand("gen", "Generate a sampled Gaussian path");
  add_common(*gen, gen_r, gen_s.c);
  reg_option(*gen, gen_r, "kind", gen_s.kind, "Process kind: bm or fbm");
  reg_option(*gen, gen_r, "H", gen_s.hurst, "Hurst exponent for fbm");
  reg_option(*gen, gen_r, "dim", gen_s.dim, "Spatial dimension");
  reg_option(*gen, gen_r, "n", gen_s.n, "Number of samples");
  reg_option(*gen, gen_r, "span-start", gen_s.span_start, "First time");
  reg_option(*gen, gen_r, "span-end", gen_s.span_end, "Last time");
  reg_option(*gen, gen_r, "format", gen_s.format, "csv, bin, or both");
  reg_option(*gen, gen_r, "out", gen_s.out, "Output file stem");
  gen->callback([&] {
    apply_config(gen_s.c.config_file, gen_r);
    cmd_gen(gen_s, gen_r);
  });

  // occ
  OccSettings occ_s;
  Registry occ_r;
  auto* occ =
      app.add_subcommand("occ", "Occupation measure of a path window");
  add_common(*occ, occ_r, occ_s.c);
  reg_option(*occ, occ_r, "path", occ_s.path_file, "Path file (csv or bin)")
      ->required();
  reg_option(*occ, occ_r, "s", occ_s.s, "Window start (default: span start)");
  reg_option(*occ, occ_r, "t", occ_s.t, "Window end (default: span end)");
  reg_option(*occ, occ_r, "out", occ_s.out, "Output file stem");
  occ->callback([&] {
    apply_config(occ_s.c.config_file, occ_r);
    cmd_occ(occ_s, occ_r);
  });

  // norm
  auto* norm = app.add_subcommand("norm", "Norms of occupation measures");
  norm->require_subcommand(1);

  NormSbeSettings nsbe_s;
  Registry nsbe_r;
  auto* nsbe = norm->add_subcommand("sbe", "Small-ball norm");
  add_common(*nsbe, nsbe_r, nsbe_s.c);
  reg_option(*nsbe, nsbe_r, "path", nsbe_s.path_file, "Path file")->required();
  reg_option(*nsbe, nsbe_r, "s", nsbe_s.s, "Window start");
  reg_option(*nsbe, nsbe_r, "t", nsbe_s.t, "Window end");
  reg_option(*nsbe, nsbe_r, "alpha", nsbe_s.alpha, "Irregularity exponent");
  reg_option(*nsbe, nsbe_r, "p", nsbe_s.p, "Inner exponent (inf allowed)");
  reg_option(*nsbe, nsbe_r, "q", nsbe_s.q, "Outer exponent (inf allowed)");
  reg_option(*nsbe, nsbe_r, "k", nsbe_s.k, "Difference order (-1: derived)");
  reg_flag(*nsbe, nsbe_r, "auto", nsbe_s.automatic,
           "Derive grids from the measure");
  reg_option(*nsbe, nsbe_r, "r-min", nsbe_s.r_min, "Smallest radius");
  reg_option(*nsbe, nsbe_r, "r-max", nsbe_s.r_max, "Largest radius");
  reg_option(*nsbe, nsbe_r, "per-octave", nsbe_s.per_octave,
             "Radius nodes per octave");
  reg_option(*nsbe, nsbe_r, "y-lo", nsbe_s.y_lo, "Grid lower corner");
  reg_option(*nsbe, nsbe_r, "y-hi", nsbe_s.y_hi, "Grid upper corner");
  reg_option(*nsbe, nsbe_r, "y-points", nsbe_s.y_points, "Grid nodes per axis");
  nsbe->callback([&] {
    apply_config(nsbe_s.c.config_file, nsbe_r);
    cmd_norm_sbe(nsbe_s, nsbe_r);
  });

  NormBesovSettings nbes_s;
  Registry nbes_r;
  auto* nbes = norm->add_subcommand("besov", "Besov norm of the deposited "
                                             "density");
  add_common(*nbes, nbes_r, nbes_s.c);
  reg_option(*nbes, nbes_r, "path", nbes_s.path_file, "Path file")->required();
  reg_option(*nbes, nbes_r, "s", nbes_s.s, "Window start");
  reg_option(*nbes, nbes_r, "t", nbes_s.t, "Window end");
  reg_option(*nbes, nbes_r, "alpha", nbes_s.alpha, "Besov smoothness");
  reg_option(*nbes, nbes_r, "p", nbes_s.p, "Spatial exponent");
  reg_option(*nbes, nbes_r, "blocks", nbes_s.blocks, "Dyadic blocks");
  reg_option(*nbes, nbes_r, "sharpness", nbes_s.sharpness,
             "Annulus profile sharpness");
  reg_option(*nbes, nbes_r, "summability", nbes_s.summability,
             "Block combination: sum or sup");
  reg_option(*nbes, nbes_r, "box-lo", nbes_s.box_lo, "Deposit box lower");
  reg_option(*nbes, nbes_r, "box-hi", nbes_s.box_hi, "Deposit box upper");
  reg_option(*nbes, nbes_r, "cells", nbes_s.cells, "Deposit cells per axis");
  nbes->callback([&] {
    apply_config(nbes_s.c.config_file, nbes_r);
    cmd_norm_besov(nbes_s, nbes_r);
  });

  NormPvarSettings npv_s;
  Registry npv_r;
  auto* npv = norm->add_subcommand("pvar", "p-variation of the occupation "
                                           "path in the small-ball norm");
  add_common(*npv, npv_r, npv_s.c);
  reg_option(*npv, npv_r, "path", npv_s.path_file, "Path file")->required();
  reg_option(*npv, npv_r, "r", npv_s.r, "Variation exponent");
  reg_option(*npv, npv_r, "points", npv_s.points, "Partition points");
  reg_option(*npv, npv_r, "alpha", npv_s.alpha, "Irregularity exponent");
  reg_option(*npv, npv_r, "p", npv_s.p, "Inner exponent");
  reg_option(*npv, npv_r, "q", npv_s.q, "Outer exponent");
  reg_flag(*npv, npv_r, "auto", npv_s.automatic,
           "Derive grids from the whole-span measure");
  reg_option(*npv, npv_r, "r-min", npv_s.r_min, "Smallest radius");
  reg_option(*npv, npv_r, "r-max", npv_s.r_max, "Largest radius");
  reg_option(*npv, npv_r, "per-octave", npv_s.per_octave,
             "Radius nodes per octave");
  reg_option(*npv, npv_r, "y-lo", npv_s.y_lo, "Grid lower corner");
  reg_option(*npv, npv_r, "y-hi", npv_s.y_hi, "Grid upper corner");
  reg_option(*npv, npv_r, "y-points", npv_s.y_points, "Grid nodes per axis");
  npv->callback([&] {
    apply_config(npv_s.c.config_file, npv_r);
    cmd_norm_pvar(npv_s, npv_r);
  });

  // lnd
  auto* lnd = app.add_subcommand("lnd", "Local non-determinism diagnostics");
  lnd->require_subcommand(1);

  LndCertifySettings lcert_s;
  Registry lcert_r;
  auto* lcert = lnd->add_subcommand("certify", "Monte Carlo ratio "
                                               "minimization");
  add_common(*lcert, lcert_r, lcert_s.c);
  reg_option(*lcert, lcert_r, "model", lcert_s.model, "bm or fbm");
  reg_option(*lcert, lcert_r, "H", lcert_s.hurst, "Hurst exponent");
  reg_option(*lcert, lcert_r, "dim", lcert_s.dim, "Dimension");
  reg_option(*lcert, lcert_r, "n", lcert_s.n, "Configuration size");
  reg_option(*lcert, lcert_r, "t-lo", lcert_s.t_lo, "Window start");
  reg_option(*lcert, lcert_r, "t-hi", lcert_s.t_hi, "Window end");
  reg_option(*lcert, lcert_r, "trials", lcert_s.trials, "Random trials");
  lcert->callback([&] {
    apply_config(lcert_s.c.config_file, lcert_r);
    cmd_lnd_certify(lcert_s, lcert_r);
  });

  LndCnuSettings lcnu_s;
  Registry lcnu_r;
  auto* lcnu = lnd->add_subcommand("cnu", "Increment-density growth study");
  add_common(*lcnu, lcnu_r, lcnu_s.c);
  reg_option(*lcnu, lcnu_r, "model", lcnu_s.model, "bm or fbm");
  reg_option(*lcnu, lcnu_r, "H", lcnu_s.hurst, "Hurst exponent");
  reg_option(*lcnu, lcnu_r, "dim", lcnu_s.dim, "Dimension");
  reg_option(*lcnu, lcnu_r, "beta", lcnu_s.beta, "Density exponent");
  reg_option(*lcnu, lcnu_r, "j-lo", lcnu_s.j_lo, "Smallest window");
  reg_option(*lcnu, lcnu_r, "j-hi", lcnu_s.j_hi, "Largest window");
  reg_option(*lcnu, lcnu_r, "refinements", lcnu_s.refinements,
             "Window refinements");
  lcnu->callback([&] {
    apply_config(lcnu_s.c.config_file, lcnu_r);
    cmd_lnd_cnu(lcnu_s, lcnu_r);
  });

  LndRegionSettings lreg_s;
  Registry lreg_r;
  auto* lreg = lnd->add_subcommand("region", "Admissible-parameter check");
  add_common(*lreg, lreg_r, lreg_s.c);
  reg_option(*lreg, lreg_r, "H", lreg_s.hurst, "Hurst exponent");
  reg_option(*lreg, lreg_r, "dim", lreg_s.dim, "Dimension");
  reg_option(*lreg, lreg_r, "alpha", lreg_s.alpha, "Drift Besov smoothness");
  reg_option(*lreg, lreg_r, "p", lreg_s.p, "Drift integrability");
  reg_option(*lreg, lreg_r, "q", lreg_s.q, "Drift block exponent");
  lreg->callback([&] {
    apply_config(lreg_s.c.config_file, lreg_r);
    cmd_lnd_region(lreg_s, lreg_r);
  });

  // young
  auto* young = app.add_subcommand("young", "Nonlinear Young integration");
  young->require_subcommand(1);

  YoungSolveSettings ys_s;
  Registry ys_r;
  auto* ysolve = young->add_subcommand("solve", "Picard solve of the "
                                                "perturbed equation");
  add_common(*ysolve, ys_r, ys_s.c);
  reg_option(*ysolve, ys_r, "drift", ys_s.drift_file, "Drift container (bin)")
      ->required();
  reg_option(*ysolve, ys_r, "path", ys_s.path_file, "Driver path file")
      ->required();
  reg_option(*ysolve, ys_r, "x0", ys_s.x0, "Starting point (one per dim)")
      ->required();
  add_young_params(*ysolve, ys_r, ys_s.y);
  ysolve->callback([&] {
    apply_config(ys_s.c.config_file, ys_r);
    cmd_young_solve(ys_s, ys_r);
  });

  YoungIntegrateSettings yi_s;
  Registry yi_r;
  auto* yint = young->add_subcommand("integrate", "Nonlinear Young integral "
                                                  "along a fixed path");
  add_common(*yint, yi_r, yi_s.c);
  reg_option(*yint, yi_r, "drift", yi_s.drift_file, "Drift container (bin)")
      ->required();
  reg_option(*yint, yi_r, "theta", yi_s.theta_file, "Integrand path file")
      ->required();
  reg_option(*yint, yi_r, "omega", yi_s.omega_file, "Driver path file")
      ->required();
  add_young_params(*yint, yi_r, yi_s.y);
  yint->callback([&] {
    apply_config(yi_s.c.config_file, yi_r);
    cmd_young_integrate(yi_s, yi_r);
  });

  SampleDriftSettings sd_s;
  Registry sd_r;
  auto* sdrift = young->add_subcommand("sample-drift", "Sample a built-in "
                                                       "drift into a "
                                                       "container");
  add_common(*sdrift, sd_r, sd_s.c);
  reg_option(*sdrift, sd_r, "kind", sd_s.kind, "zero, linear, or cosine");
  reg_option(*sdrift, sd_r, "scale", sd_s.scale, "Amplitude");
  reg_option(*sdrift, sd_r, "freq", sd_s.freq, "Cosine frequency");
  reg_option(*sdrift, sd_r, "lo", sd_s.lo, "Box lower corner");
  reg_option(*sdrift, sd_r, "hi", sd_s.hi, "Box upper corner");
  reg_option(*sdrift, sd_r, "cells", sd_s.cells, "Cells per axis");
  reg_option(*sdrift, sd_r, "slices", sd_s.slices, "Time slices");
  reg_option(*sdrift, sd_r, "t-lo", sd_s.t_lo, "First slice time");
  reg_option(*sdrift, sd_r, "t-hi", sd_s.t_hi, "Last slice time");
  reg_option(*sdrift, sd_r, "alpha2", sd_s.alpha2, "Declared Besov "
                                                   "smoothness");
  reg_option(*sdrift, sd_r, "p2", sd_s.p2, "Declared integrability");
  reg_option(*sdrift, sd_r, "q2", sd_s.q2, "Declared block exponent");
  reg_option(*sdrift, sd_r, "r-var", sd_s.r_var, "Declared time variation");
  reg_option(*sdrift, sd_r, "out", sd_s.out, "Output file stem");
  sdrift->callback([&] {
    apply_config(sd_s.c.config_file, sd_r);
    cmd_young_sample_drift(sd_s, sd_r);
  });

  // experiment
  auto* exp = app.add_subcommand("experiment", "Statistical studies");
  exp->require_subcommand(1);

  ExpMomentSettings em_s;
  Registry em_r;
  auto* emom = exp->add_subcommand("moment-scaling", "Occupation-moment "
                                                     "scaling in the span");
  add_common(*emom, em_r, em_s.c);
  reg_option(*emom, em_r, "process", em_s.process, "bm or fbm");
  reg_option(*emom, em_r, "H", em_s.hurst, "Hurst exponent");
  reg_option(*emom, em_r, "dim", em_s.dim, "Dimension");
  reg_option(*emom, em_r, "alpha", em_s.alpha, "Irregularity exponent");
  reg_option(*emom, em_r, "spans", em_s.spans, "Dyadic spans");
  reg_option(*emom, em_r, "paths", em_s.paths, "Monte Carlo paths");
  reg_option(*emom, em_r, "steps", em_s.steps, "Steps per path");
  reg_option(*emom, em_r, "windows", em_s.windows, "Windows per span");
  reg_option(*emom, em_r, "resamples", em_s.resamples, "Bootstrap resamples");
  reg_option(*emom, em_r, "confidence", em_s.confidence, "CI level");
  reg_option(*emom, em_r, "truncation", em_s.truncation,
             "Truncation levels M");
  emom->callback([&] {
    apply_config(em_s.c.config_file, em_r);
    cmd_exp_moment(em_s, em_r);
  });

  ExpSdeSettings esde_s;
  Registry esde_r;
  auto* esde = exp->add_subcommand("sde", "Euler-Maruyama occupation "
                                          "scaling against the Brownian "
                                          "baseline");
  add_common(*esde, esde_r, esde_s.c);
  reg_option(*esde, esde_r, "drift", esde_s.drift, "zero, tanh, or sign");
  reg_option(*esde, esde_r, "drift-scale", esde_s.drift_scale,
             "Drift amplitude");
  reg_option(*esde, esde_r, "alpha", esde_s.alpha, "Irregularity exponent");
  reg_option(*esde, esde_r, "spans", esde_s.spans, "Dyadic spans");
  reg_option(*esde, esde_r, "paths", esde_s.paths, "Monte Carlo paths");
  reg_option(*esde, esde_r, "steps", esde_s.steps, "Steps per path");
  reg_option(*esde, esde_r, "windows", esde_s.windows, "Windows per span");
  reg_option(*esde, esde_r, "resamples", esde_s.resamples,
             "Bootstrap resamples");
  reg_option(*esde, esde_r, "confidence", esde_s.confidence, "CI level");
  esde->callback([&] {
    apply_config(esde_s.c.config_file, esde_r);
    cmd_exp_sde(esde_s, esde_r);
  });

  ExpReparamSettings erp_s;
  Registry erp_r;
  auto* erp = exp->add_subcommand("reparam", "Variation under time changes");
  add_common(*erp, erp_r, erp_s.c);
  reg_option(*erp, erp_r, "n", erp_s.n, "Path samples");
  reg_option(*erp, erp_r, "phi-n", erp_s.phi_n, "Time-change samples");
  reg_option(*erp, erp_r, "warp", erp_s.warp,
             "identity, quadratic, or sine");
  reg_option(*erp, erp_r, "strength", erp_s.strength, "Warp strength");
  reg_option(*erp, erp_r, "r", erp_s.r, "Variation exponent");
  reg_option(*erp, erp_r, "alpha", erp_s.alpha, "Irregularity exponent");
  reg_option(*erp, erp_r, "points", erp_s.points, "Partition points");
  erp->callback([&] {
    apply_config(erp_s.c.config_file, erp_r);
    cmd_exp_reparam(erp_s, erp_r);
  });

  ExpShiftSettings esh_s;
  Registry esh_r;
  auto* esh = exp->add_subcommand("shift", "Occupation stability under "
                                           "finite-variation shifts");
  add_common(*esh, esh_r, esh_s.c);
  reg_option(*esh, esh_r, "n", esh_s.n, "Path samples");
  reg_option(*esh, esh_r, "pairs", esh_s.pairs, "Perturbation pairs");
  reg_option(*esh, esh_r, "points", esh_s.points, "Partition points");
  reg_option(*esh, esh_r, "r", esh_s.r, "Variation exponent");
  reg_option(*esh, esh_r, "gamma", esh_s.gamma, "Negative Besov order");
  reg_option(*esh, esh_r, "cells", esh_s.cells, "Deposit cells");
  reg_option(*esh, esh_r, "box-half", esh_s.box_half, "Deposit half-width");
  reg_option(*esh, esh_r, "amp-lo", esh_s.amp_lo, "Smallest amplitude");
  reg_option(*esh, esh_r, "amp-hi", esh_s.amp_hi, "Largest amplitude");
  esh->callback([&] {
    apply_config(esh_s.c.config_file, esh_r);
    cmd_exp_shift(esh_s, esh_r);
  });

  ExpRegSettings erg_s;
  Registry erg_r;
  auto* erg = exp->add_subcommand("regularization", "Regularization-by-noise "
                                                    "level study");
  add_common(*erg, erg_r, erg_s.c);
  reg_option(*erg, erg_r, "H", erg_s.hurst, "Driver Hurst exponent");
  reg_option(*erg, erg_r, "dim", erg_s.dim, "Dimension (1 or 2)");
  reg_option(*erg, erg_r, "alpha2", erg_s.alpha2, "Declared drift "
                                                  "smoothness");
  reg_option(*erg, erg_r, "roughness", erg_s.roughness,
             "Drift spectral decay");
  reg_option(*erg, erg_r, "n-grid", erg_s.n_grid, "Driver grid cells");
  reg_option(*erg, erg_r, "alpha1", erg_s.o.alpha1,
             "Driver exponent (nan: auto)");
  reg_option(*erg, erg_r, "q1", erg_s.o.q1, "Driver outer exponent");
  reg_option(*erg, erg_r, "p2", erg_s.o.p2, "Drift integrability");
  reg_option(*erg, erg_r, "q2", erg_s.o.q2, "Drift block exponent");
  reg_option(*erg, erg_r, "gamma", erg_s.o.gamma, "Usable smoothness");
  reg_option(*erg, erg_r, "r1", erg_s.o.r1, "Occupation variation");
  reg_option(*erg, erg_r, "r2", erg_s.o.r2, "Drift time variation");
  reg_option(*erg, erg_r, "r3", erg_s.o.r3, "Composed variation");
  reg_option(*erg, erg_r, "level-lo", erg_s.o.level_lo, "Coarsest level");
  reg_option(*erg, erg_r, "level-hi", erg_s.o.level_hi, "Finest level");
  reg_option(*erg, erg_r, "cells", erg_s.o.cells, "Drift cells per axis");
  reg_option(*erg, erg_r, "box-half", erg_s.o.box_half, "Drift half-width");
  reg_option(*erg, erg_r, "band-limit", erg_s.o.band_limit,
             "Highest wave number");
  reg_option(*erg, erg_r, "amplitude", erg_s.o.amplitude, "Drift amplitude");
  reg_option(*erg, erg_r, "x0", erg_s.o.x0, "Starting point");
  reg_option(*erg, erg_r, "tol", erg_s.o.tolerance, "Picard tolerance");
  reg_option(*erg, erg_r, "max-iters", erg_s.o.max_iterations,
             "Picard budget");
  erg->callback([&] {
    apply_config(erg_s.c.config_file, erg_r);
    cmd_exp_regularization(erg_s, erg_r);
  });

  ExpVariationSettings ev_s;
  Registry ev_r;
  auto* evar = exp->add_subcommand("variation", "Direct vs dyadic variation "
                                                "estimators");
  add_common(*evar, ev_r, ev_s.c);
  reg_option(*evar, ev_r, "path", ev_s.path_file,
             "Path file (default: generated)");
  reg_option(*evar, ev_r, "n", ev_s.n, "Generated path samples");
  reg_option(*evar, ev_r, "levels", ev_s.levels, "Dyadic levels");
  reg_option(*evar, ev_r, "q", ev_s.q, "Variation exponent");
  reg_option(*evar, ev_r, "eps", ev_s.eps, "Estimator slack exponent");
  reg_option(*evar, ev_r, "alpha", ev_s.alpha, "Irregularity exponent");
  evar->callback([&] {
    apply_config(ev_s.c.config_file, ev_r);
    cmd_exp_variation(ev_s, ev_r);
  });

  // selftest
  Common st_c;
  Registry st_r;
  auto* st = app.add_subcommand("selftest", "Dyadic-difference identity "
                                            "suite");
  add_common(*st, st_r, st_c);
  st->callback([&] {
    apply_config(st_c.config_file, st_r);
    cmd_selftest(st_c, st_r);
  });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "refused: cli: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "refused: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "refused: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
}
