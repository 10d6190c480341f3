#include "sbe/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "sbe/occupation.hpp"
#include "sbe/random.hpp"

namespace sbe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double grid_node(double lo, double hi, std::size_t i, std::size_t n) {
  if (i == 0) return lo;
  if (i == n) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n));
}

// Order-independent deterministic reduction: recursive pairwise summation.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

double euclid_gap(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool is_dyadic_span(double h) {
  if (!(h > 0.0) || !(h <= 0.5)) return false;
  int e = 0;
  return std::frexp(h, &e) == 0.5 && e <= 0 && e >= -20;
}

UniformYGrid replicate_axes(const UniformYGrid& grid, int dim) {
  if (grid.lo.empty() || grid.lo.size() != grid.hi.size() ||
      grid.lo.size() != grid.points.size()) {
    throw std::invalid_argument("mc: malformed y grid in the options");
  }
  if (grid.lo.size() == static_cast<std::size_t>(dim)) return grid;
  if (grid.lo.size() != 1) {
    throw std::invalid_argument(
        "mc: y grid must carry one axis or one per dimension");
  }
  UniformYGrid out;
  out.lo.assign(static_cast<std::size_t>(dim), grid.lo.front());
  out.hi.assign(static_cast<std::size_t>(dim), grid.hi.front());
  out.points.assign(static_cast<std::size_t>(dim), grid.points.front());
  return out;
}

std::string join_strings(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

struct PipelineResult {
  std::vector<SpanMoment> spans;
  PowerFit fit;
  BootstrapSlope slope;
  std::vector<TruncationDiagnostic> truncation;
  double mean_weight = 0.0;
};

// Shared Monte Carlo core: weighted squared small-ball norms of occupation
// windows, per-span means with standard errors, bootstrap slope, and
// truncation diagnostics. Per-path work depends only on the path index and
// its derived seed, so the result is independent of the thread count.
PipelineResult weighted_moment_pipeline(
    const std::function<SampledPath(int, std::uint64_t)>& make_path, int dim,
    std::vector<double> spans, int n_paths, double alpha,
    std::uint64_t seed, const McOptions& opts) {
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  if (spans.size() < 3) {
    throw std::invalid_argument(
        "mc: need at least three distinct spans to fit a slope");
  }
  for (double h : spans) {
    if (!is_dyadic_span(h)) {
      throw std::invalid_argument(
          "mc: spans must be dyadic fractions 2^-j of the unit interval");
    }
  }
  if (n_paths < 16) {
    throw std::invalid_argument(
        "mc: need at least 16 paths for a bootstrap confidence interval");
  }
  if (opts.windows_per_span < 1 || opts.bootstrap_resamples < 100 ||
      !(opts.confidence > 0.5 && opts.confidence < 1.0)) {
    throw std::invalid_argument("mc: malformed sampling options");
  }
  const int threads = std::clamp(opts.threads, 1, 64);

  SbeParams sp;
  sp.alpha = alpha;
  sp.p = 2.0;
  sp.q = 2.0;
  sp.k = -1;  // derived from alpha and the dimension
  sp.r_grid = opts.r_grid;
  sp.y_grid = replicate_axes(opts.y_grid, dim);

  const std::size_t P = static_cast<std::size_t>(n_paths);
  const std::size_t S = spans.size();
  std::vector<double> weighted(P * S, 0.0);
  std::vector<double> unweighted(P * S, 0.0);
  std::vector<double> sups(P, 0.0);

  std::atomic<int> cursor{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      for (;;) {
        const int i = cursor.fetch_add(1);
        if (i >= n_paths || failed.load()) break;
        const std::uint64_t path_seed =
            derive_seed(seed, static_cast<std::uint64_t>(i));
        const SampledPath omega = make_path(i, path_seed);
        const double sup = omega.sup_norm();
        sups[static_cast<std::size_t>(i)] = sup;
        const double weight = std::pow(1.0 + sup, -static_cast<double>(dim));
        for (std::size_t a = 0; a < S; ++a) {
          const double h = spans[a];
          const int count = std::min(
              opts.windows_per_span,
              static_cast<int>(std::floor(1.0 / h + 1e-9)));
          double acc = 0.0;
          for (int j = 0; j < count; ++j) {
            const OccupationMeasure mu =
                occupation(omega, j * h, (j + 1) * h);
            const double v = sbe_norm(mu, sp);
            acc += v * v;
          }
          acc /= count;
          unweighted[static_cast<std::size_t>(i) * S + a] = acc;
          weighted[static_cast<std::size_t>(i) * S + a] = weight * acc;
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failed.store(true);
      if (failure.empty()) failure = e.what();
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) {
    throw std::runtime_error("mc: path worker failed: " + failure);
  }

  PipelineResult res;
  std::vector<double> col(P);
  std::vector<double> means(S);
  for (std::size_t a = 0; a < S; ++a) {
    for (std::size_t i = 0; i < P; ++i) col[i] = weighted[i * S + a];
    const double mean = pairwise_sum(col) / static_cast<double>(P);
    double var = 0.0;
    for (double x : col) var += (x - mean) * (x - mean);
    var /= static_cast<double>(P - 1);
    means[a] = mean;
    res.spans.push_back(
        {spans[a], mean, std::sqrt(var / static_cast<double>(P)),
         std::min(opts.windows_per_span,
                  static_cast<int>(std::floor(1.0 / spans[a] + 1e-9)))});
  }
  res.fit = holder_exponent(spans, means);

  // bootstrap over paths
  Rng boot(derive_seed(seed, 0x626F6F74ULL));
  const int B = opts.bootstrap_resamples;
  std::vector<double> slopes(static_cast<std::size_t>(B));
  std::vector<double> bmeans(S);
  for (int b = 0; b < B; ++b) {
    std::fill(bmeans.begin(), bmeans.end(), 0.0);
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t pick = std::min(
          P - 1, static_cast<std::size_t>(boot.next_unit() *
                                          static_cast<double>(P)));
      for (std::size_t a = 0; a < S; ++a) {
        bmeans[a] += weighted[pick * S + a];
      }
    }
    for (double& m : bmeans) m /= static_cast<double>(P);
    slopes[static_cast<std::size_t>(b)] = holder_exponent(spans, bmeans).slope;
  }
  std::sort(slopes.begin(), slopes.end());
  const double tail = 0.5 * (1.0 - opts.confidence);
  const auto pick_at = [&](double prob) {
    const double pos = prob * static_cast<double>(B - 1);
    return slopes[static_cast<std::size_t>(std::llround(pos))];
  };
  res.slope = {res.fit.slope, pick_at(tail), pick_at(1.0 - tail), B,
               opts.confidence};

  std::vector<double> weights(P);
  for (std::size_t i = 0; i < P; ++i) {
    weights[i] = std::pow(1.0 + sups[i], -static_cast<double>(dim));
  }
  res.mean_weight = pairwise_sum(weights) / static_cast<double>(P);

  // truncation diagnostics on the largest span: E(M) = {sup <= M}
  const std::size_t widest = S - 1;
  for (double level : opts.truncation_levels) {
    TruncationDiagnostic diag;
    diag.level = level;
    std::vector<double> kept(P, 0.0);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < P; ++i) {
      if (sups[i] <= level) {
        kept[i] = unweighted[i * S + widest];
        ++inside;
      }
    }
    diag.event_fraction =
        static_cast<double>(inside) / static_cast<double>(P);
    diag.truncated_moment = pairwise_sum(kept) / static_cast<double>(P);
    res.truncation.push_back(diag);
  }
  return res;
}

void check_alpha_admissible(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("mc: alpha must be positive and finite");
  }
  const double doubled = 2.0 * alpha;
  if (std::abs(doubled - std::round(doubled)) < 1e-9) {
    throw std::invalid_argument(
        "mc: alpha with 2*alpha an integer is outside the admissible set");
  }
  if (!(alpha < 0.5 * beta)) {
    throw std::invalid_argument(
        "mc: alpha must stay below beta/2 for this process");
  }
}

}  // namespace

double delta_zero(double beta, double alpha, int dim) {
  if (dim < 1) throw std::invalid_argument("delta0: dimension must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta) || !std::isfinite(alpha)) {
    throw std::invalid_argument("delta0: need finite beta > 0");
  }
  const double d = static_cast<double>(dim);
  const double value = (beta - 2.0 * alpha) / (beta + 2.0 * d);
  // defining identity, re-checked on every evaluation
  const double lhs = (beta + 2.0 * d) * (1.0 - value);
  const double rhs = 2.0 * (alpha + d);
  if (std::abs(lhs - rhs) > 1e-12 * (1.0 + std::abs(rhs))) {
    throw std::logic_error("delta0: defining identity violated");
  }
  return value;
}

double admissible_beta(const GaussianSpec& spec) {
  if (spec.kind == GaussianSpec::Kind::CustomCovariance) {
    throw std::invalid_argument(
        "mc: no admissible density exponent is known for custom covariances");
  }
  const double hurst =
      spec.kind == GaussianSpec::Kind::BrownianMotion ? 0.5 : spec.hurst;
  const double beta = 1.0 / hurst - static_cast<double>(spec.dim) - 0.05;
  if (!(beta > 0.0)) {
    throw std::invalid_argument(
        "mc: the process has no positive density exponent in this dimension");
  }
  return beta;
}

MomentScalingReport mc_moment_scaling(const GaussianSpec& spec, double alpha,
                                      const std::vector<double>& spans,
                                      int n_paths, int n_steps,
                                      std::uint64_t seed,
                                      const McOptions& opts) {
  if (n_steps < 256) {
    throw std::invalid_argument("mc: need at least 256 steps per path");
  }
  MomentScalingReport rep;
  rep.beta = admissible_beta(spec);
  check_alpha_admissible(alpha, rep.beta);
  rep.process_label =
      spec.kind == GaussianSpec::Kind::BrownianMotion ? "bm" : "fbm";
  rep.dim = spec.dim;
  rep.hurst = spec.kind == GaussianSpec::Kind::BrownianMotion ? 0.5
                                                              : spec.hurst;
  rep.alpha = alpha;
  rep.delta0 = delta_zero(rep.beta, alpha, spec.dim);
  rep.target = 1.0 + rep.delta0;

  auto factory = [&](int, std::uint64_t path_seed) {
    return gen_gaussian(spec, static_cast<std::size_t>(n_steps) + 1, 0.0, 1.0,
                        path_seed);
  };
  PipelineResult pipe = weighted_moment_pipeline(factory, spec.dim, spans,
                                                 n_paths, alpha, seed, opts);
  rep.spans = std::move(pipe.spans);
  rep.fit = pipe.fit;
  rep.slope = pipe.slope;
  rep.truncation = std::move(pipe.truncation);
  rep.mean_weight = pipe.mean_weight;
  return rep;
}

SdeReport sde_occupation_experiment(
    const std::function<double(double, double)>& b, int n_paths,
    const std::vector<double>& spans, double alpha, int n_steps,
    std::uint64_t seed, const McOptions& opts) {
  if (!b) throw std::invalid_argument("sde: drift function is empty");
  if (n_steps < 256) {
    throw std::invalid_argument("sde: need at least 256 steps per path");
  }
  const GaussianSpec bm = GaussianSpec::brownian(1);

  SdeReport rep;
  rep.baseline = mc_moment_scaling(bm, alpha, spans, n_paths, n_steps, seed,
                                   opts);

  rep.equation.process_label = "sde";
  rep.equation.dim = 1;
  rep.equation.hurst = 0.5;
  rep.equation.alpha = alpha;
  rep.equation.beta = rep.baseline.beta;  // same heat-kernel class
  rep.equation.delta0 = rep.baseline.delta0;
  rep.equation.target = rep.baseline.target;
  auto sigma_one = [](double, double) { return 1.0; };
  auto factory = [&](int, std::uint64_t path_seed) {
    return euler_maruyama_1d(b, sigma_one, 0.0,
                             static_cast<std::size_t>(n_steps) + 1, 0.0, 1.0,
                             path_seed);
  };
  PipelineResult pipe = weighted_moment_pipeline(factory, 1, spans, n_paths,
                                                 alpha, seed, opts);
  rep.equation.spans = std::move(pipe.spans);
  rep.equation.fit = pipe.fit;
  rep.equation.slope = pipe.slope;
  rep.equation.truncation = std::move(pipe.truncation);
  rep.equation.mean_weight = pipe.mean_weight;

  rep.slope_ci_overlap = !(rep.equation.slope.hi < rep.baseline.slope.lo ||
                           rep.baseline.slope.hi < rep.equation.slope.lo);

  // coupled dilation check on the widest span: the same Brownian path
  // scaled by 2 in space, each occupation measured with its own
  // automatically derived (dilation-covariant) parameters at q = 1, the
  // convention under which the dilation law is exact
  const double h = *std::max_element(spans.begin(), spans.end());
  const int coupled = std::min(n_paths, 32);
  std::vector<double> ratios(static_cast<std::size_t>(coupled));
  for (int i = 0; i < coupled; ++i) {
    const std::uint64_t path_seed =
        derive_seed(seed, 0xD11A7E00ULL + static_cast<std::uint64_t>(i));
    SampledPath w = gen_gaussian(bm, static_cast<std::size_t>(n_steps) + 1,
                                 0.0, 1.0, path_seed);
    const OccupationMeasure mu = occupation(w, 0.0, h);
    const double base = sbe_norm(mu, auto_sbe_params(mu, alpha, 2.0, 1.0));
    for (double& v : w.values) v *= 2.0;
    const OccupationMeasure mu2 = occupation(w, 0.0, h);
    const double doubled =
        sbe_norm(mu2, auto_sbe_params(mu2, alpha, 2.0, 1.0));
    ratios[static_cast<std::size_t>(i)] = doubled / base;
  }
  rep.dilation_ratio =
      pairwise_sum(ratios) / static_cast<double>(coupled);
  rep.dilation_expected = std::pow(2.0, -alpha);
  return rep;
}

ReparamReport reparam_experiment(const SampledPath& path,
                                 const SampledPath& phi, double r,
                                 const SbeParams& sbe, int partition_points) {
  path.validate();
  phi.validate();
  if (phi.dim != 1) {
    throw std::invalid_argument("reparam: phi must be one-dimensional");
  }
  if (partition_points < 3) {
    throw std::invalid_argument("reparam: need at least 3 partition points");
  }
  if (!(r >= 1.0)) {
    throw std::invalid_argument("reparam: variation exponent must be >= 1");
  }

  const SampledPath warped = reparametrize(path, phi);

  // partition at exact phi samples so the identity map is reproduced
  // without interpolation error
  const std::size_t m = phi.size();
  if (m < static_cast<std::size_t>(partition_points)) {
    throw std::invalid_argument(
        "reparam: phi must carry at least partition_points samples");
  }
  std::vector<double> part_w, part_o;
  for (int i = 0; i < partition_points; ++i) {
    const std::size_t idx =
        (static_cast<std::size_t>(i) * (m - 1)) /
        static_cast<std::size_t>(partition_points - 1);
    part_w.push_back(phi.times[idx]);
    part_o.push_back(phi.values[idx]);
  }

  ReparamReport rep;
  rep.original = variation_of_occupation(path, part_o.front(), part_o, r, sbe);
  rep.transformed =
      variation_of_occupation(warped, part_w.front(), part_w, r, sbe);
  rep.ratio = rep.original > 0.0 ? rep.transformed / rep.original
                                 : (rep.transformed > 0.0 ? kInf : 1.0);

  double lo_slope = kInf, hi_slope = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double slope = (phi.values[i + 1] - phi.values[i]) /
                         (phi.times[i + 1] - phi.times[i]);
    lo_slope = std::min(lo_slope, slope);
    hi_slope = std::max(hi_slope, slope);
  }
  rep.phi_lip_lower = lo_slope;
  rep.phi_lip_upper = hi_slope;
  return rep;
}

ShiftReport shift_experiment(const SampledPath& path, const SampledPath& f,
                             const SampledPath& g, double r, double gamma,
                             const BesovParams& besov, const BoxGridSpec& box,
                             int partition_points) {
  path.validate();
  f.validate();
  g.validate();
  if (f.dim != path.dim || g.dim != path.dim) {
    throw std::invalid_argument("shift: path and perturbations must share a "
                                "dimension");
  }
  if (partition_points < 3) {
    throw std::invalid_argument("shift: need at least 3 partition points");
  }
  if (!(r >= 1.0) || !(gamma > 0.0)) {
    throw std::invalid_argument(
        "shift: need r >= 1 and a positive gamma");
  }

  const SampledPath pf = perturb(path, f);
  const SampledPath pg = perturb(path, g);

  const double a = path.span_start();
  const double b = path.span_end();
  const std::size_t n = static_cast<std::size_t>(partition_points);
  std::vector<double> part(n);
  for (std::size_t i = 0; i < n; ++i) part[i] = grid_node(a, b, i, n - 1);

  BesovParams bp = besov;
  bp.alpha = -gamma;

  auto signed_density = [&](const SampledPath& p, double s,
                            double t) {
    return deposit_grid(occupation(p, s, t), box);
  };
  auto diff_norm = [&](std::size_t i, std::size_t j) {
    GridDensity df = signed_density(pf, part[i], part[j]);
    const GridDensity dg = signed_density(pg, part[i], part[j]);
    for (std::size_t k = 0; k < df.values.size(); ++k) {
      df.values[k] -= dg.values[k];
    }
    return besov_norm(df, bp, BlockSummability::Sum);
  };
  auto ref_norm = [&](std::size_t i, std::size_t j) {
    return besov_norm(signed_density(pg, part[i], part[j]), bp,
                      BlockSummability::Sum);
  };

  ShiftReport rep;
  rep.difference_variation = p_variation(n, diff_norm, r);
  rep.reference_variation = p_variation(n, ref_norm, r);

  // scalar-side controls of the perturbation pair on the same partition
  const std::size_t d = static_cast<std::size_t>(path.dim);
  std::vector<std::vector<double>> u(n), gv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> fi = interpolate(f, part[i]);
    const std::vector<double> gi = interpolate(g, part[i]);
    gv[i] = gi;
    u[i].resize(d);
    for (std::size_t c = 0; c < d; ++c) u[i][c] = fi[c] - gi[c];
  }
  auto u_inc = [&](std::size_t i, std::size_t j) {
    return euclid_gap(u[j], u[i]);
  };
  auto g_inc = [&](std::size_t i, std::size_t j) {
    return euclid_gap(gv[j], gv[i]);
  };
  rep.perturbation_variation = p_variation(n, u_inc, r);
  rep.g_variation = p_variation(n, g_inc, r);

  double sup = 0.0;
  auto scan_sup = [&](const SampledPath& probe) {
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const double t = probe.times[i];
      const std::vector<double> fi = interpolate(f, t);
      const std::vector<double> gi = interpolate(g, t);
      sup = std::max(sup, euclid_gap(fi, gi));
    }
  };
  scan_sup(f);
  scan_sup(g);
  rep.perturbation_sup = sup;

  rep.bound = rep.reference_variation *
              (rep.perturbation_variation +
               (1.0 + rep.g_variation) * rep.perturbation_sup);
  rep.ratio = rep.bound > 0.0
                  ? rep.difference_variation / rep.bound
                  : (rep.difference_variation > 0.0 ? kInf : 0.0);
  return rep;
}

RegularizationReport regularization_demo(double hurst, int dim, double alpha2,
                                         double drift_roughness, int n_grid,
                                         std::uint64_t seed,
                                         const RegularizationOptions& opts) {
  if (dim < 1 || dim > 2) {
    throw std::invalid_argument(
        "regularization: the demo supports dimensions 1 and 2");
  }
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("regularization: hurst must lie in (0, 1)");
  }
  const double cap = 1.0 / (2.0 * hurst) - 0.5 * static_cast<double>(dim);
  if (!(cap > 0.0)) {
    throw std::invalid_argument(
        "regularization: need H < 1/d for an admissible driver exponent");
  }
  const double alpha1 =
      std::isnan(opts.alpha1) ? 0.9 * cap : opts.alpha1;
  if (!(alpha1 > 0.0) || !(alpha1 < cap)) {
    throw std::invalid_argument(
        "regularization: alpha1 must lie in (0, 1/(2H) - d/2)");
  }
  if (opts.level_lo < 1 || opts.level_lo > opts.level_hi ||
      opts.level_hi > 20) {
    throw std::invalid_argument("regularization: malformed level range");
  }
  if (n_grid < (1 << opts.level_hi) ||
      (n_grid & (n_grid - 1)) != 0) {
    throw std::invalid_argument(
        "regularization: n_grid must be a power of two resolving the finest "
        "level");
  }
  if (!(drift_roughness > 0.0) || opts.band_limit < 1) {
    throw std::invalid_argument(
        "regularization: malformed drift spectrum parameters");
  }

  YoungParams yp;
  yp.alpha1 = alpha1;
  yp.p1 = 2.0;
  yp.q1 = opts.q1;
  yp.r1 = opts.r1;
  yp.r2 = opts.r2;
  yp.r3 = opts.r3;
  yp.gamma = opts.gamma;
  yp.max_level = opts.level_hi;
  yp.tolerance = opts.tolerance;
  yp.max_iterations = opts.max_iterations;
  const DriftRegularity decl{alpha2, opts.p2, opts.q2, 1.0};

  RegularizationReport rep;
  rep.hurst = hurst;
  rep.dim = dim;
  rep.alpha1 = alpha1;
  rep.alpha2 = alpha2;
  rep.budget = young_budget(yp, decl, dim);
  if (!rep.budget.ok) {
    rep.refused = true;
    rep.refusal = join_strings(rep.budget.violations);
    return rep;
  }

  const GaussianSpec spec = hurst == 0.5
                                ? GaussianSpec::brownian(dim)
                                : GaussianSpec::fractional(hurst, dim);
  const SampledPath omega = gen_gaussian(
      spec, static_cast<std::size_t>(n_grid) + 1, 0.0, 1.0, seed);

  // band-limited random drift: per component a sum of plane waves with
  // spectral envelope |k|^{-drift_roughness}
  struct Wave {
    std::array<double, 2> k{0.0, 0.0};
    double amp = 0.0;
    double phase = 0.0;
  };
  Rng rng(derive_seed(seed, 0xD21F7ULL));
  std::vector<std::vector<Wave>> waves(static_cast<std::size_t>(dim));
  for (auto& component : waves) {
    for (int j = 1; j <= opts.band_limit; ++j) {
      Wave w;
      const double wavenumber = static_cast<double>(j);
      if (dim == 1) {
        w.k = {wavenumber, 0.0};
      } else {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.k = {wavenumber * std::cos(angle), wavenumber * std::sin(angle)};
      }
      w.amp = opts.amplitude * std::pow(wavenumber, -drift_roughness) *
              rng.next_normal();
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      component.push_back(w);
    }
  }
  auto drift_fn = [&](double, std::span<const double> x) {
    std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t c = 0; c < waves.size(); ++c) {
      double acc = 0.0;
      for (const Wave& w : waves[c]) {
        double dot = w.k[0] * x[0];
        if (x.size() > 1) dot += w.k[1] * x[1];
        acc += w.amp * std::cos(dot + w.phase);
      }
      out[c] = acc;
    }
    return out;
  };
  BoxGridSpec box;
  box.lo.assign(static_cast<std::size_t>(dim), -opts.box_half);
  box.hi.assign(static_cast<std::size_t>(dim), opts.box_half);
  box.cells.assign(static_cast<std::size_t>(dim), opts.cells);
  const DriftField field =
      DriftField::sample(drift_fn, {0.0}, box, dim, decl, true);
  rep.drift_measured_besov = field.measured_besov_max();

  const std::vector<double> x0(static_cast<std::size_t>(dim), opts.x0);
  std::vector<double> prev;
  for (int lev = opts.level_lo; lev <= opts.level_hi; ++lev) {
    yp.max_level = lev;
    const OdeSolution sol = solve_ode_report(field, omega, x0, yp);
    const std::size_t last = sol.x.size() - 1;
    RegularizationLevelResult entry;
    entry.level = lev;
    for (int c = 0; c < dim; ++c) {
      entry.end.push_back(sol.x.value(last, c));
    }
    if (!prev.empty()) entry.diff_from_prev = euclid_gap(entry.end, prev);
    prev = entry.end;
    rep.levels.push_back(std::move(entry));
    if (lev == opts.level_hi) {
      rep.contraction = sol.report.contraction_ratios;
      rep.converged = sol.report.converged;
      rep.extension_fraction = sol.report.extension.fraction();
    }
  }

  // fitted self-convergence order from the significant level gaps
  double scale = 0.0;
  for (double v : prev) scale = std::max(scale, std::abs(v));
  const double floor_eps = 1e-13 * (1.0 + scale);
  std::vector<double> rates;
  for (std::size_t i = 2; i < rep.levels.size(); ++i) {
    const double d0 = rep.levels[i - 1].diff_from_prev;
    const double d1 = rep.levels[i].diff_from_prev;
    if (d0 > floor_eps && d1 > floor_eps) {
      rates.push_back(std::log2(d0 / d1));
    }
  }
  if (!rates.empty()) {
    rep.self_rate = pairwise_sum(rates) / static_cast<double>(rates.size());
  }
  return rep;
}

VariationCrossCheck variation_cross_check(const SampledPath& path, int levels,
                                          double q, double eps,
                                          const SbeParams& sbe) {
  path.validate();
  if (levels < 1 || levels > 10) {
    throw std::invalid_argument("variation: levels must lie in 1..10");
  }
  if (!(q >= 1.0) || !std::isfinite(q)) {
    throw std::invalid_argument("variation: need a finite q >= 1");
  }
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::invalid_argument("variation: eps must lie in (0, 1)");
  }
  const double a = path.span_start();
  const double b = path.span_end();

  std::vector<std::vector<double>> level_norms;
  for (int lev = 0; lev <= levels; ++lev) {
    const std::size_t n = std::size_t{1} << lev;
    std::vector<double> incs(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = grid_node(a, b, k, n);
      const double t = grid_node(a, b, k + 1, n);
      incs[k] = sbe_norm(occupation(path, s, t), sbe);
    }
    level_norms.push_back(std::move(incs));
  }
  const DyadicVariationBound bound =
      dyadic_variation_bound(level_norms, q, eps);

  const std::size_t n = std::size_t{1} << levels;
  std::vector<double> partition(n + 1);
  for (std::size_t i = 0; i <= n; ++i) partition[i] = grid_node(a, b, i, n);
  const double direct = variation_of_occupation(path, a, partition, q, sbe);

  VariationCrossCheck check;
  check.direct = direct;
  check.dyadic_bound = bound.bound;
  check.constant = bound.constant;
  double geom = 0.0;
  for (int lev = 0; lev <= levels; ++lev) {
    geom += std::pow(2.0, static_cast<double>(lev) * eps);
  }
  check.slack_factor = std::pow(bound.constant * geom, 1.0 / q);
  const double tol = 1e-9 * (1.0 + direct);
  check.consistent = direct <= bound.bound + tol &&
                     bound.bound <= check.slack_factor * direct + tol;
  return check;
}

}  // namespace sbe
