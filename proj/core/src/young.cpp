#include "sbe/young.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "sbe/random.hpp"

namespace sbe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_norm_exponent(double p) { return p >= 1.0; }

double inv_exponent(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

double euclid(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// Node i of the n-interval uniform grid over [lo, hi]; the endpoints are
// returned exactly so window queries never leave the driver's span. For
// nested refinements (n, b*n) the shared nodes agree bitwise because
// (b*i)/(b*n) rounds to the same double as i/n.
double grid_node(double lo, double hi, std::size_t i, std::size_t n) {
  if (i == 0) return lo;
  if (i == n) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n));
}

std::string format_triple(double s, double u, double t) {
  std::ostringstream os;
  os.precision(12);
  os << "(s, u, t) = (" << s << ", " << u << ", " << t << ")";
  return os.str();
}

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

// The averaging operator against the occupation atoms of `path` restricted
// to the window [s, t): identical cells, weights and accumulation order as
// averaged_field over occupation(path, s, t), without materializing the
// measure.
void averaged_window(const DriftField& field, const SampledPath& path,
                     double s, double t, std::span<const double> x,
                     std::span<double> out, std::vector<double>& diff,
                     ExtensionStats* stats) {
  const auto& tau = path.times;
  const int d = path.dim;
  auto it = std::upper_bound(tau.begin(), tau.end(), s);
  std::size_t i = it == tau.begin()
                      ? 0
                      : static_cast<std::size_t>(it - tau.begin()) - 1;
  for (; i + 1 < tau.size() && tau[i] < t; ++i) {
    const double w = std::min(tau[i + 1], t) - std::max(tau[i], s);
    if (w > 0.0) {
      for (int c = 0; c < d; ++c) {
        diff[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] -
                                            path.value(i, c);
      }
      field.accumulate(s, diff, w, out, stats);
    }
  }
}

// Driver values resampled onto an explicit grid by linear interpolation.
std::vector<double> resample(const SampledPath& path,
                             const std::vector<double>& grid) {
  const std::size_t d = static_cast<std::size_t>(path.dim);
  std::vector<double> out(grid.size() * d);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::vector<double> v = interpolate(path, grid[i]);
    std::copy(v.begin(), v.end(), out.begin() + i * d);
  }
  return out;
}

// The path restricted to [s, t]: interpolated endpoints plus every interior
// sample (samples within a relative hair of the ends are dropped so the
// grid stays strictly increasing).
SampledPath subpath(const SampledPath& path, double s, double t) {
  const double eps = 1e-12 * (path.span_end() - path.span_start());
  SampledPath out;
  out.dim = path.dim;
  auto push = [&](double time, const std::vector<double>& v) {
    out.times.push_back(time);
    out.values.insert(out.values.end(), v.begin(), v.end());
  };
  push(s, interpolate(path, s));
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double tau = path.times[i];
    if (tau > s + eps && tau < t - eps) {
      const auto p = path.point(i);
      out.times.push_back(tau);
      out.values.insert(out.values.end(), p.begin(), p.end());
    }
  }
  push(t, interpolate(path, t));
  return out;
}

void throw_budget(const BudgetReport& budget) {
  throw std::invalid_argument("young: regularity budget violated: " +
                              join_violations(budget.violations));
}

}  // namespace

// ---------------------------------------------------------------------------
// DriftField

DriftField::DriftField(std::vector<double> times,
                       std::vector<GridDensity> slices, int components,
                       DriftRegularity declared, bool zero_extension)
    : times_(std::move(times)),
      slices_(std::move(slices)),
      components_(components),
      declared_(declared),
      zero_extension_(zero_extension) {
  if (times_.empty()) {
    throw std::invalid_argument("drift: the time grid is empty");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) ||
        (i > 0 && !(times_[i] > times_[i - 1]))) {
      throw std::invalid_argument(
          "drift: the time grid must be finite and strictly increasing");
    }
  }
  if (components_ < 1) {
    throw std::invalid_argument("drift: need at least one component");
  }
  if (slices_.size() != times_.size() * static_cast<std::size_t>(components_)) {
    throw std::invalid_argument(
        "drift: slice count must equal time count times components");
  }
  const GridDensity& first = slices_.front();
  dim_ = first.dim;
  if (dim_ < 1 || dim_ > 4) {
    throw std::invalid_argument("drift: spatial dimension must lie in 1..4");
  }
  lo_ = first.lo;
  hi_ = first.hi;
  cells_ = first.cells;
  h_.resize(static_cast<std::size_t>(dim_));
  int min_cells = cells_.front();
  for (std::size_t c = 0; c < static_cast<std::size_t>(dim_); ++c) {
    h_[c] = (hi_[c] - lo_[c]) / static_cast<double>(cells_[c]);
    min_cells = std::min(min_cells, cells_[c]);
  }
  if (min_cells < 64) {
    throw std::invalid_argument(
        "drift: the spatial grid needs at least 64 cells per axis to "
        "measure the declared regularity");
  }
  for (const GridDensity& g : slices_) {
    g.validate();
    if (g.dim != dim_ || g.lo != lo_ || g.hi != hi_ || g.cells != cells_) {
      throw std::invalid_argument(
          "drift: all time slices must share one spatial grid");
    }
  }
  if (!std::isfinite(declared_.alpha)) {
    throw std::invalid_argument("drift: declared smoothness must be finite");
  }
  if (!is_norm_exponent(declared_.p) || !is_norm_exponent(declared_.q)) {
    throw std::invalid_argument(
        "drift: declared integrability indices must lie in [1, infinity]");
  }
  if (!(declared_.r_var >= 1.0) || !(declared_.r_var < kInf)) {
    throw std::invalid_argument(
        "drift: the time-variation exponent must be finite and >= 1");
  }

  blocks_ = 3;
  while (blocks_ < 5 &&
         std::ldexp(1.0, blocks_ + 2) <= static_cast<double>(min_cells) / 4.0) {
    ++blocks_;
  }
  const BesovParams bp{declared_.alpha, declared_.p, blocks_, 1.0};
  const BlockSummability summability =
      std::isinf(declared_.q) ? BlockSummability::Sup : BlockSummability::Sum;
  measured_.reserve(slices_.size());
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    const double norm = besov_norm(slices_[i], bp, summability);
    if (!std::isfinite(norm)) {
      std::ostringstream msg;
      msg << "drift: slice " << i
          << " has a non-finite Besov norm at the declared indices";
      throw std::invalid_argument(msg.str());
    }
    measured_.push_back(norm);
  }
}

DriftField DriftField::sample(
    const std::function<std::vector<double>(double, std::span<const double>)>&
        f,
    const std::vector<double>& times, const BoxGridSpec& box, int components,
    DriftRegularity declared, bool zero_extension) {
  if (!f) throw std::invalid_argument("drift: sampling function is empty");
  const std::size_t d = box.lo.size();
  if (d == 0 || box.hi.size() != d || box.cells.size() != d) {
    throw std::invalid_argument("drift: malformed sampling box");
  }
  std::size_t total = 1;
  std::vector<double> h(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (!(box.lo[c] < box.hi[c]) || box.cells[c] < 1) {
      throw std::invalid_argument("drift: malformed sampling box");
    }
    h[c] = (box.hi[c] - box.lo[c]) / static_cast<double>(box.cells[c]);
    total *= static_cast<std::size_t>(box.cells[c]);
  }
  if (components < 1) {
    throw std::invalid_argument("drift: need at least one component");
  }

  std::vector<GridDensity> slices;
  slices.reserve(times.size() * static_cast<std::size_t>(components));
  std::vector<double> center(d);
  for (double t : times) {
    std::vector<std::vector<double>> vals(
        static_cast<std::size_t>(components), std::vector<double>(total));
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      for (std::size_t c = d; c-- > 0;) {
        const std::size_t ic = rem % static_cast<std::size_t>(box.cells[c]);
        rem /= static_cast<std::size_t>(box.cells[c]);
        center[c] = box.lo[c] + (static_cast<double>(ic) + 0.5) * h[c];
      }
      const std::vector<double> fv = f(t, center);
      if (fv.size() != static_cast<std::size_t>(components)) {
        throw std::invalid_argument(
            "drift: sampling function returned the wrong component count");
      }
      for (std::size_t k = 0; k < fv.size(); ++k) vals[k][flat] = fv[k];
    }
    for (int k = 0; k < components; ++k) {
      GridDensity g;
      g.dim = static_cast<int>(d);
      g.lo = box.lo;
      g.hi = box.hi;
      g.cells = box.cells;
      g.values = std::move(vals[static_cast<std::size_t>(k)]);
      slices.push_back(std::move(g));
    }
  }
  return DriftField(times, std::move(slices), components, declared,
                    zero_extension);
}

DriftField DriftField::sample_1d(const std::function<double(double, double)>& f,
                                 const std::vector<double>& times, double lo,
                                 double hi, int cells, DriftRegularity declared,
                                 bool zero_extension) {
  if (!f) throw std::invalid_argument("drift: sampling function is empty");
  BoxGridSpec box{{lo}, {hi}, {cells}};
  auto wrap = [&f](double t, std::span<const double> x) {
    return std::vector<double>{f(t, x[0])};
  };
  return sample(wrap, times, box, 1, declared, zero_extension);
}

const GridDensity& DriftField::slice(std::size_t time_index,
                                     int component) const {
  if (time_index >= times_.size() || component < 0 ||
      component >= components_) {
    throw std::out_of_range("drift: slice index out of range");
  }
  return slices_[time_index * static_cast<std::size_t>(components_) +
                 static_cast<std::size_t>(component)];
}

double DriftField::measured_besov_max() const {
  double m = 0.0;
  for (double v : measured_) m = std::max(m, v);
  return m;
}

void DriftField::accumulate(double time, std::span<const double> x,
                            double scale, std::span<double> out,
                            ExtensionStats* stats) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  if (x.size() != d || out.size() != static_cast<std::size_t>(components_)) {
    throw std::invalid_argument("drift: evaluation dimension mismatch");
  }
  if (stats) stats->evaluations += 1;

  for (std::size_t c = 0; c < d; ++c) {
    if (!(x[c] >= lo_[c] && x[c] <= hi_[c])) {
      if (stats) stats->out_of_grid += 1;
      if (!zero_extension_) {
        throw std::domain_error(
            "drift: evaluation outside the spatial grid with the zero "
            "extension disabled");
      }
      return;
    }
  }

  // time bracket (constant beyond the first and last slice)
  std::size_t i0 = 0, i1 = 0;
  double tw = 0.0;
  if (time >= times_.back()) {
    i0 = i1 = times_.size() - 1;
  } else if (time > times_.front()) {
    const auto it = std::upper_bound(times_.begin(), times_.end(), time);
    i1 = static_cast<std::size_t>(it - times_.begin());
    i0 = i1 - 1;
    tw = (time - times_[i0]) / (times_[i1] - times_[i0]);
  }

  // multilinear corner weights between cell centers; corners past the edge
  // collapse onto the edge cell, which makes the field constant in the
  // half-cell margin next to the box boundary
  std::array<int, 4> base;
  std::array<double, 4> frac;
  for (std::size_t c = 0; c < d; ++c) {
    const double u = (x[c] - lo_[c]) / h_[c] - 0.5;
    const double fl = std::floor(u);
    base[c] = static_cast<int>(fl);
    frac[c] = u - fl;
  }
  const std::size_t corners = std::size_t{1} << d;
  std::array<std::size_t, 16> ids;
  std::array<double, 16> ws;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t id = 0;
    for (std::size_t c = 0; c < d; ++c) {
      const bool upper = (mask >> c) & 1u;
      w *= upper ? frac[c] : 1.0 - frac[c];
      const int cc = std::clamp(base[c] + (upper ? 1 : 0), 0, cells_[c] - 1);
      id = id * static_cast<std::size_t>(cells_[c]) +
           static_cast<std::size_t>(cc);
    }
    ids[mask] = id;
    ws[mask] = w;
  }

  const std::size_t comps = static_cast<std::size_t>(components_);
  for (std::size_t k = 0; k < comps; ++k) {
    const auto& v0 = slices_[i0 * comps + k].values;
    const auto& v1 = slices_[i1 * comps + k].values;
    double a0 = 0.0, a1 = 0.0;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      a0 += ws[mask] * v0[ids[mask]];
      a1 += ws[mask] * v1[ids[mask]];
    }
    out[k] += scale * ((1.0 - tw) * a0 + tw * a1);
  }
}

double DriftField::value(double time, std::span<const double> x, int component,
                         ExtensionStats* stats) const {
  if (component < 0 || component >= components_) {
    throw std::out_of_range("drift: component index out of range");
  }
  std::vector<double> out(static_cast<std::size_t>(components_), 0.0);
  accumulate(time, x, 1.0, out, stats);
  return out[static_cast<std::size_t>(component)];
}

std::vector<double> DriftField::value(double time, std::span<const double> x,
                                      ExtensionStats* stats) const {
  std::vector<double> out(static_cast<std::size_t>(components_), 0.0);
  accumulate(time, x, 1.0, out, stats);
  return out;
}

std::vector<double> averaged_field(const DriftField& field,
                                   const OccupationMeasure& mu,
                                   std::span<const double> x, double s,
                                   ExtensionStats* stats) {
  mu.validate();
  if (mu.dim != field.dim()) {
    throw std::invalid_argument(
        "averaging: measure and field dimension mismatch");
  }
  if (x.size() != static_cast<std::size_t>(mu.dim)) {
    throw std::invalid_argument("averaging: point dimension mismatch");
  }
  const std::size_t d = static_cast<std::size_t>(mu.dim);
  std::vector<double> out(static_cast<std::size_t>(field.components()), 0.0);
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      diff[c] = x[c] - mu.coord(i, static_cast<int>(c));
    }
    field.accumulate(s, diff, mu.weights[i], out, stats);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sewing

GermCheckReport check_germ(const SewingGerm& germ, double lo, double hi,
                           int trials, std::uint64_t seed) {
  if (!germ.chi) {
    throw std::invalid_argument("sewing: germ evaluator is empty");
  }
  if (!(germ.a > 0.0) || !(germ.b > 0.0) || !(germ.a + germ.b > 1.0)) {
    throw std::invalid_argument(
        "sewing: control exponents must satisfy a > 0, b > 0, a + b > 1");
  }
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("sewing: need a finite span with lo < hi");
  }
  if (trials < 1) {
    throw std::invalid_argument("sewing: need at least one check triple");
  }
  auto rho = germ.rho ? germ.rho : [](double s, double u) { return u - s; };
  auto sigma = germ.sigma ? germ.sigma : [](double u, double t) { return t - u; };

  Rng rng(seed);
  GermCheckReport report;
  const double span_eps = 1e-9 * (hi - lo);
  int attempts = 0;
  while (report.trials < trials && attempts < 20 * trials + 100) {
    ++attempts;
    std::array<double, 3> p{rng.uniform(lo, hi), rng.uniform(lo, hi),
                            rng.uniform(lo, hi)};
    std::sort(p.begin(), p.end());
    const double s = p[0], u = p[1], t = p[2];
    if (u - s < span_eps || t - u < span_eps) continue;
    ++report.trials;

    const std::vector<double> c_st = germ.chi(s, t);
    const std::vector<double> c_su = germ.chi(s, u);
    const std::vector<double> c_ut = germ.chi(u, t);
    if (c_su.size() != c_st.size() || c_ut.size() != c_st.size()) {
      throw std::invalid_argument("sewing: germ value dimension changed");
    }
    double delta2 = 0.0;
    for (std::size_t i = 0; i < c_st.size(); ++i) {
      const double e = c_st[i] - c_su[i] - c_ut[i];
      delta2 += e * e;
    }
    const double delta_norm = std::sqrt(delta2);
    const double bound =
        std::pow(rho(s, u), germ.a) * std::pow(sigma(u, t), germ.b);
    if (!(bound >= 0.0) || !std::isfinite(bound)) {
      throw std::invalid_argument(
          "sewing: control evaluator produced an invalid value");
    }
    const double allow = bound * (1.0 + 1e-9) + 1e-12 * (1.0 + euclid(c_st));
    const double ratio = bound > 0.0 ? delta_norm / bound
                                     : (delta_norm > 0.0 ? kInf : 0.0);
    if (ratio > report.worst_ratio) {
      report.worst_ratio = ratio;
      report.worst_triple = {s, u, t};
    }
    if (delta_norm > allow) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "sewing: germ coherence bound failed at " << format_triple(s, u, t)
          << ": ||delta chi|| = " << delta_norm
          << " exceeds rho^a sigma^b = " << bound;
      throw std::invalid_argument(msg.str());
    }
  }
  if (report.trials < trials) {
    throw std::invalid_argument(
        "sewing: could not draw enough non-degenerate triples");
  }
  return report;
}

SewingResult sewing_integrate(const SewingGerm& germ, double lo, double hi,
                              int max_level, int branching) {
  if (!germ.chi) {
    throw std::invalid_argument("sewing: germ evaluator is empty");
  }
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("sewing: need a finite span with lo < hi");
  }
  if (max_level < 0) {
    throw std::invalid_argument("sewing: max_level must be >= 0");
  }
  if (branching < 2 || branching > 4) {
    throw std::invalid_argument("sewing: branching must be 2, 3, or 4");
  }
  {
    double top = 1.0;
    for (int l = 0; l < max_level; ++l) top *= branching;
    if (top > static_cast<double>(std::size_t{1} << 24)) {
      throw std::invalid_argument("sewing: refinement too deep");
    }
  }

  SewingResult res;
  res.theoretical_rate =
      std::pow(static_cast<double>(branching), -(germ.a + germ.b - 1.0));

  std::vector<double> prev, cur;
  std::size_t n_prev = 0;
  std::size_t m = 0;
  std::size_t n = 1;
  for (int lev = 0; lev <= max_level;
       ++lev, n *= static_cast<std::size_t>(branching)) {
    cur.assign(m * (n + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t0 = grid_node(lo, hi, i, n);
      const double t1 = grid_node(lo, hi, i + 1, n);
      const std::vector<double> v = germ.chi(t0, t1);
      if (lev == 0 && i == 0) {
        m = v.size();
        if (m == 0) {
          throw std::invalid_argument("sewing: germ produced an empty value");
        }
        cur.assign(m * (n + 1), 0.0);
      }
      if (v.size() != m) {
        throw std::invalid_argument("sewing: germ value dimension changed");
      }
      for (std::size_t c = 0; c < m; ++c) {
        const double x = v[c];
        if (!std::isfinite(x)) {
          std::ostringstream msg;
          msg.precision(12);
          msg << "sewing: germ value not finite on [" << t0 << ", " << t1
              << "]";
          throw std::runtime_error(msg.str());
        }
        cur[(i + 1) * m + c] = cur[i * m + c] + x;
      }
    }

    SewingLevel entry;
    entry.level = lev;
    entry.endpoint.assign(cur.end() - static_cast<std::ptrdiff_t>(m),
                          cur.end());
    if (lev > 0) {
      double gap = 0.0;
      for (std::size_t i = 0; i <= n_prev; ++i) {
        const std::size_t fi = i * static_cast<std::size_t>(branching);
        for (std::size_t c = 0; c < m; ++c) {
          gap = std::max(gap, std::abs(cur[fi * m + c] - prev[i * m + c]));
        }
      }
      entry.diff_from_prev = gap;
    }
    res.levels.push_back(std::move(entry));
    prev.swap(cur);
    n_prev = n;
  }

  res.path.dim = static_cast<int>(m);
  res.path.times.resize(n_prev + 1);
  for (std::size_t i = 0; i <= n_prev; ++i) {
    res.path.times[i] = grid_node(lo, hi, i, n_prev);
  }
  res.path.values = std::move(prev);

  // decay analysis on the level gaps, ignoring gaps at rounding scale
  double sup_abs = 0.0;
  for (double v : res.path.values) sup_abs = std::max(sup_abs, std::abs(v));
  const double floor_eps = 1e-12 * (1.0 + sup_abs);
  struct Gap {
    int level;
    double value;
  };
  std::vector<Gap> gaps;
  for (const auto& entry : res.levels) {
    if (entry.level > 0 && entry.diff_from_prev > floor_eps) {
      gaps.push_back({entry.level, entry.diff_from_prev});
    }
  }
  if (gaps.size() >= 2) {
    const std::size_t window = std::min<std::size_t>(5, gaps.size());
    const Gap& first = gaps[gaps.size() - window];
    const Gap& last = gaps.back();
    res.fitted_rate = std::pow(last.value / first.value,
                               1.0 / static_cast<double>(last.level -
                                                         first.level));
    res.decay_ok = res.fitted_rate < 0.98;
    res.tail_estimate =
        res.decay_ok
            ? last.value * res.fitted_rate / (1.0 - res.fitted_rate)
            : kInf;
  } else if (gaps.size() == 1) {
    res.fitted_rate = 0.0;
    res.decay_ok = true;
    res.tail_estimate = gaps.front().value;
  } else {
    res.fitted_rate = 0.0;
    res.decay_ok = true;
    res.tail_estimate = floor_eps;
  }

  if (!res.decay_ok) {
    // locate the worst coherence defect across the parents of the largest
    // level transition
    int bad_level = gaps.back().level;
    double bad_value = gaps.back().value;
    for (const Gap& g : gaps) {
      if (g.value > bad_value) {
        bad_value = g.value;
        bad_level = g.level;
      }
    }
    std::size_t parents = 1;
    for (int l = 0; l < bad_level - 1; ++l) {
      parents *= static_cast<std::size_t>(branching);
    }
    for (std::size_t i = 0; i < parents; ++i) {
      const double s = grid_node(lo, hi, i, parents);
      const double t = grid_node(lo, hi, i + 1, parents);
      std::vector<double> defect = germ.chi(s, t);
      const std::size_t nb = static_cast<std::size_t>(branching);
      for (std::size_t j = 0; j < nb; ++j) {
        const double c0 = grid_node(lo, hi, i * nb + j, parents * nb);
        const double c1 = grid_node(lo, hi, i * nb + j + 1, parents * nb);
        const std::vector<double> v = germ.chi(c0, c1);
        for (std::size_t c = 0; c < m; ++c) defect[c] -= v[c];
      }
      const double norm = euclid(defect);
      if (norm > res.worst_delta_norm) {
        res.worst_delta_norm = norm;
        res.worst_triple = {s, grid_node(lo, hi, i * nb + 1, parents * nb), t};
      }
    }
    std::ostringstream msg;
    msg.precision(12);
    msg << "sewing: level gaps do not decay (fitted rate " << res.fitted_rate
        << "); worst coherence defect ||delta chi|| = " << res.worst_delta_norm
        << " at "
        << format_triple(res.worst_triple[0], res.worst_triple[1],
                         res.worst_triple[2]);
    res.diagnostic = msg.str();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Budget

void YoungParams::validate() const {
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) {
    throw std::invalid_argument("young: alpha1 must be positive and finite");
  }
  if (!is_norm_exponent(p1) || !is_norm_exponent(q1)) {
    throw std::invalid_argument(
        "young: p1 and q1 must lie in [1, infinity]");
  }
  for (double r : {r1, r2, r3}) {
    if (!(r >= 1.0) || !(r < kInf)) {
      throw std::invalid_argument(
          "young: variation exponents must be finite and >= 1");
    }
  }
  if (!(gamma > 0.0) || !(gamma < 1.0)) {
    throw std::invalid_argument("young: gamma must lie in (0, 1)");
  }
  if (max_level < 0 || max_level > 24) {
    throw std::invalid_argument("young: max_level must lie in [0, 24]");
  }
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw std::invalid_argument("young: tolerance must be positive");
  }
  if (max_iterations < 1) {
    throw std::invalid_argument("young: max_iterations must be >= 1");
  }
}

BudgetReport young_budget(const YoungParams& params,
                          const DriftRegularity& drift, int dim) {
  params.validate();
  if (dim < 1) {
    throw std::invalid_argument("young: dimension must be positive");
  }
  if (!is_norm_exponent(drift.p) || !is_norm_exponent(drift.q)) {
    throw std::invalid_argument(
        "young: drift integrability indices must lie in [1, infinity]");
  }
  if (!std::isfinite(drift.alpha)) {
    throw std::invalid_argument("young: drift smoothness must be finite");
  }

  BudgetReport rep;
  const double sum = inv_exponent(params.q1) + inv_exponent(drift.p);
  // the drift may declare a rougher time behaviour than the parameters
  // assume; the check uses the worse of the two declarations
  const double r2_eff = std::max(params.r2, drift.r_var);
  rep.convolution_sum = sum;
  rep.convolution_upper = 1.0 + (params.alpha1 + drift.alpha) /
                                    static_cast<double>(dim);
  rep.gamma0 = params.alpha1 + drift.alpha -
               static_cast<double>(dim) * (sum - 1.0);
  rep.time_sum = 1.0 / params.r1 + 1.0 / r2_eff;
  rep.lower_slack = sum - 1.0;
  rep.upper_slack = rep.convolution_upper - sum;
  rep.time_slack = rep.time_sum - 1.0;
  rep.gamma_slack = 1.0 + params.gamma - params.r1;
  rep.picard_slack = 1.0 / params.r1 + params.gamma / params.r3 - 1.0;
  rep.contraction_regime = rep.gamma0 > 1.0;
  if (!(rep.lower_slack > 0.0)) {
    rep.violations.push_back("1 < 1/q1 + 1/p2");
  }
  if (!(rep.upper_slack > 0.0)) {
    rep.violations.push_back("1/q1 + 1/p2 < 1 + (alpha1 + alpha2)/d");
  }
  if (!(rep.time_slack > 0.0)) {
    rep.violations.push_back("1/r1 + 1/r2 > 1");
  }
  if (!(rep.gamma_slack > 0.0)) {
    rep.violations.push_back("r1 < 1 + gamma");
  }
  rep.ok = rep.violations.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Young integral

YoungIntegralReport young_integral_report(const DriftField& f,
                                          const SampledPath& theta,
                                          const SampledPath& omega,
                                          const YoungParams& params) {
  omega.validate();
  theta.validate();
  params.validate();
  if (omega.dim != f.dim()) {
    throw std::invalid_argument(
        "young: driver dimension must match the drift's spatial dimension");
  }
  if (theta.dim != f.dim()) {
    throw std::invalid_argument(
        "young: theta dimension must match the drift's spatial dimension");
  }
  const double a = omega.span_start();
  const double b = omega.span_end();
  const double span_eps = 1e-9 * (1.0 + std::abs(a) + std::abs(b));
  if (std::abs(theta.span_start() - a) > span_eps ||
      std::abs(theta.span_end() - b) > span_eps) {
    throw std::invalid_argument(
        "young: theta and omega must share the time span");
  }

  YoungIntegralReport rep;
  rep.budget = young_budget(params, f.declared(), f.dim());
  if (!rep.budget.ok) throw_budget(rep.budget);
  rep.drift_declared = f.declared();
  rep.drift_measured_besov_max = f.measured_besov_max();

  ExtensionStats stats;
  std::vector<double> diff(static_cast<std::size_t>(f.dim()));
  auto chi = [&](double s, double t) {
    std::vector<double> out(static_cast<std::size_t>(f.components()), 0.0);
    const std::vector<double> th = interpolate(theta, s);
    averaged_window(f, omega, s, t, th, out, diff, &stats);
    return out;
  };
  SewingGerm germ;
  germ.chi = chi;
  germ.a = 1.0 / params.r1;
  germ.b = params.gamma / params.r3;
  rep.sewing = sewing_integrate(germ, a, b, params.max_level, 2);
  rep.integral = rep.sewing.path;
  rep.extension = stats;
  return rep;
}

SampledPath young_integral(const DriftField& f, const SampledPath& theta,
                           const SampledPath& omega,
                           const YoungParams& params) {
  return young_integral_report(f, theta, omega, params).integral;
}

// ---------------------------------------------------------------------------
// ODE solver

OdeSolution solve_ode_report(const DriftField& f, const SampledPath& omega,
                             std::span<const double> x0,
                             const YoungParams& params,
                             const SampledPath* initial_theta) {
  omega.validate();
  params.validate();
  const int dim = omega.dim;
  const std::size_t d = static_cast<std::size_t>(dim);
  if (f.dim() != dim) {
    throw std::invalid_argument(
        "young: driver dimension must match the drift's spatial dimension");
  }
  if (f.components() != dim) {
    throw std::invalid_argument(
        "young: the ODE needs one drift component per state coordinate");
  }
  if (x0.size() != d) {
    throw std::invalid_argument("young: initial point dimension mismatch");
  }

  OdeSolution sol;
  PicardReport& rep = sol.report;
  rep.budget = young_budget(params, f.declared(), dim);
  if (!rep.budget.ok) throw_budget(rep.budget);
  rep.contraction_expected = rep.budget.contraction_regime;
  rep.drift_declared = f.declared();
  rep.drift_measured_besov_max = f.measured_besov_max();

  const double a = omega.span_start();
  const double b = omega.span_end();
  const std::size_t n = std::size_t{1} << params.max_level;
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = grid_node(a, b, i, n);
  const std::vector<double> w_nodes = resample(omega, grid);

  // theta_start = x0 + omega_start, so x = theta - omega starts at x0
  std::vector<double> base(d);
  for (std::size_t c = 0; c < d; ++c) base[c] = x0[c] + w_nodes[c];

  std::vector<double> theta((n + 1) * d);
  if (initial_theta) {
    initial_theta->validate();
    if (initial_theta->dim != dim) {
      throw std::invalid_argument(
          "young: initial guess dimension mismatch");
    }
    theta = resample(*initial_theta, grid);
  } else {
    for (std::size_t i = 0; i <= n; ++i) {
      std::copy(base.begin(), base.end(), theta.begin() + i * d);
    }
  }

  ExtensionStats stats;
  std::vector<double> diff(d), acc(d), next((n + 1) * d);
  double prev_change = -1.0;
  const auto& tau = omega.times;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::copy(base.begin(), base.end(), next.begin());
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t hint = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = grid[j];
      const double t = grid[j + 1];
      while (hint + 1 < tau.size() && tau[hint + 1] <= s) ++hint;
      const std::span<const double> th{theta.data() + j * d, d};
      for (std::size_t i = hint; i + 1 < tau.size() && tau[i] < t; ++i) {
        const double w = std::min(tau[i + 1], t) - std::max(tau[i], s);
        if (w > 0.0) {
          for (std::size_t c = 0; c < d; ++c) {
            diff[c] = th[c] - omega.value(i, static_cast<int>(c));
          }
          f.accumulate(s, diff, w, acc, &stats);
        }
      }
      for (std::size_t c = 0; c < d; ++c) {
        next[(j + 1) * d + c] = base[c] + acc[c];
      }
    }

    double change = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      change = std::max(
          change, sup_distance({next.data() + i * d, d},
                               {theta.data() + i * d, d}));
    }
    rep.sup_changes.push_back(change);
    if (prev_change > 0.0) {
      rep.contraction_ratios.push_back(change / prev_change);
    }
    prev_change = change;
    theta.swap(next);
    rep.iterations = iter + 1;
    if (change < params.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) {
    std::ostringstream msg;
    msg << "picard: no convergence after " << rep.iterations
        << " iterations; last sup-change " << rep.sup_changes.back()
        << " (tolerance " << params.tolerance << ")";
    rep.message = msg.str();
  }
  rep.extension = stats;

  sol.theta.dim = dim;
  sol.theta.times = grid;
  sol.theta.values = theta;
  sol.x.dim = dim;
  sol.x.times = grid;
  sol.x.values.resize((n + 1) * d);
  for (std::size_t i = 0; i < sol.x.values.size(); ++i) {
    sol.x.values[i] = theta[i] - w_nodes[i];
  }
  return sol;
}

SampledPath solve_ode(const DriftField& f, const SampledPath& omega,
                      std::span<const double> x0, const YoungParams& params) {
  return solve_ode_report(f, omega, x0, params).x;
}

// ---------------------------------------------------------------------------
// Flow

const FlowSolution& FlowTable::at(std::size_t time_index,
                                  std::size_t start_index) const {
  if (time_index >= start_times.size() || start_index >= starts.size()) {
    throw std::out_of_range("flow: cell index out of range");
  }
  return cells[time_index * starts.size() + start_index];
}

FlowTable flow(const DriftField& f, const SampledPath& omega,
               const std::vector<double>& start_times,
               const std::vector<std::vector<double>>& starts,
               const YoungParams& params, double composition_tolerance) {
  omega.validate();
  params.validate();
  if (start_times.empty() || starts.empty()) {
    throw std::invalid_argument(
        "flow: need at least one start time and one start point");
  }
  const double a = omega.span_start();
  const double b = omega.span_end();
  const double span = b - a;
  const std::size_t d = static_cast<std::size_t>(omega.dim);
  for (std::size_t i = 0; i < start_times.size(); ++i) {
    const double s = start_times[i];
    if (!(s >= a - 1e-12 * span) || !(b - s > 1e-9 * span) ||
        (i > 0 && !(s > start_times[i - 1]))) {
      throw std::invalid_argument(
          "flow: start times must increase strictly inside the span");
    }
  }
  for (const auto& x0 : starts) {
    if (x0.size() != d) {
      throw std::invalid_argument("flow: start point dimension mismatch");
    }
  }

  FlowTable table;
  table.start_times = start_times;
  table.starts = starts;
  table.composition_tolerance = composition_tolerance > 0.0
                                    ? composition_tolerance
                                    : 2.0 * params.tolerance;

  // keep the leaf width close to the global one so segments started on the
  // global dyadic grid share leaf boundaries exactly
  auto segment_params = [&](double s) {
    YoungParams p = params;
    const int drop = static_cast<int>(
        std::floor(std::log2(span / (b - s)) + 1e-9));
    p.max_level = std::clamp(params.max_level - drop, 1, params.max_level);
    return p;
  };
  auto segment_driver = [&](double s) {
    return s <= a + 1e-12 * span ? omega : subpath(omega, s, b);
  };

  for (double s : start_times) {
    const SampledPath om = segment_driver(s);
    const YoungParams p = segment_params(s);
    for (const auto& x0 : starts) {
      OdeSolution sol = solve_ode_report(f, om, x0, p);
      FlowSolution cell;
      cell.start_time = s;
      cell.start = x0;
      cell.x = std::move(sol.x);
      cell.report = std::move(sol.report);
      table.cells.push_back(std::move(cell));
    }
  }

  // composition law against restarts from every later start time
  for (std::size_t i = 0; i < start_times.size(); ++i) {
    for (std::size_t i2 = i + 1; i2 < start_times.size(); ++i2) {
      const double u = start_times[i2];
      const SampledPath om2 = segment_driver(u);
      const YoungParams p2 = segment_params(u);
      for (std::size_t j = 0; j < starts.size(); ++j) {
        const FlowSolution& base_cell = table.at(i, j);
        const std::vector<double> mid = interpolate(base_cell.x, u);
        const OdeSolution re = solve_ode_report(f, om2, mid, p2);
        const std::size_t last = re.x.size() - 1;
        const std::size_t base_last = base_cell.x.size() - 1;
        double err = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          err = std::max(err,
                         std::abs(re.x.value(last, static_cast<int>(c)) -
                                  base_cell.x.value(base_last,
                                                    static_cast<int>(c))));
        }
        table.max_composition_error = std::max(table.max_composition_error,
                                               err);
        if (err > table.composition_tolerance) {
          std::ostringstream msg;
          msg.precision(12);
          msg << "flow: composition violated from (s = " << start_times[i]
              << ", start #" << j << ") recomposed at u = " << u
              << ": end error " << err << " exceeds "
              << table.composition_tolerance;
          table.flagged.push_back(msg.str());
        }
      }
    }
  }
  table.composition_ok = table.flagged.empty();
  return table;
}

std::vector<double> flow_value(const FlowTable& table, std::size_t time_index,
                               std::size_t start_index, double t) {
  return interpolate(table.at(time_index, start_index).x, t);
}

std::vector<double> flow_inverse(const DriftField& f, const SampledPath& omega,
                                 double s, double t, std::span<const double> z,
                                 const YoungParams& params) {
  omega.validate();
  params.validate();
  const double a = omega.span_start();
  const double b = omega.span_end();
  const double span_eps = 1e-9 * (1.0 + std::abs(a) + std::abs(b));
  if (!(s >= a - span_eps) || !(t <= b + span_eps) || !(s < t)) {
    throw std::invalid_argument(
        "flow: inverse window must satisfy span_start <= s < t <= span_end");
  }
  const std::size_t d = static_cast<std::size_t>(omega.dim);
  if (z.size() != d) {
    throw std::invalid_argument("flow: inverse point dimension mismatch");
  }

  const SampledPath fwd =
      subpath(omega, std::max(s, a), std::min(t, b));
  SampledPath rev;
  rev.dim = omega.dim;
  const std::size_t m = fwd.size();
  rev.times.resize(m);
  rev.values.resize(m * d);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t idx = m - 1 - k;
    rev.times[k] = (t + s) - fwd.times[idx];
    for (std::size_t c = 0; c < d; ++c) {
      rev.values[k * d + c] = fwd.values[idx * d + c];
    }
  }
  rev.times.front() = s;
  rev.times.back() = t;

  // reversed drift: times reflected about (s + t)/2, values negated
  const auto& ft = f.time_grid();
  const std::size_t mt = ft.size();
  std::vector<double> rtimes(mt);
  for (std::size_t l = 0; l < mt; ++l) rtimes[l] = (t + s) - ft[mt - 1 - l];
  std::vector<GridDensity> rslices;
  rslices.reserve(mt * static_cast<std::size_t>(f.components()));
  for (std::size_t l = 0; l < mt; ++l) {
    for (int c = 0; c < f.components(); ++c) {
      GridDensity g = f.slice(mt - 1 - l, c);
      for (double& v : g.values) v = -v;
      rslices.push_back(std::move(g));
    }
  }
  const DriftField reversed(rtimes, std::move(rslices), f.components(),
                            f.declared(), f.zero_extension());

  const OdeSolution sol = solve_ode_report(reversed, rev, z, params);
  const std::size_t last = sol.x.size() - 1;
  std::vector<double> out(d);
  for (std::size_t c = 0; c < d; ++c) {
    out[c] = sol.x.value(last, static_cast<int>(c));
  }
  return out;
}

}  // namespace sbe
