#include "sbe/norms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fftw_lock.hpp"
#include "sbe/dyadic.hpp"

namespace sbe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_norm_exponent(double e) { return e >= 1.0 && (std::isfinite(e) || e == kInf); }

int floor_div(int a, int b) {
  const int q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Radius bookkeeping for the geometric grid r_i = r_min 2^{i/ppo}. Negative
// indices extend below r_min for the dyadic difference arguments; by
// construction radius(i - m*ppo) == radius(i) / 2^m exactly.
struct RadiusLadder {
  double r_min = 0.0;
  int ppo = 8;
  int nodes = 0;  // indices 0 .. nodes-1 cover [r_min, r_max]
  int ext = 0;    // extra nodes below zero: indices -ext .. -1
  std::vector<double> frac;

  RadiusLadder(const GeometricRGrid& g, int order) : r_min(g.r_min), ppo(g.points_per_octave) {
    const double octaves = std::log2(g.r_max / g.r_min);
    nodes = static_cast<int>(std::floor(octaves * ppo + 1e-9)) + 1;
    ext = (order + 1) * ppo;
    frac.resize(static_cast<std::size_t>(ppo));
    for (int j = 0; j < ppo; ++j) {
      frac[static_cast<std::size_t>(j)] =
          std::pow(2.0, static_cast<double>(j) / static_cast<double>(ppo));
    }
  }

  double radius(int i) const {
    const int o = floor_div(i, ppo);
    const int j = i - o * ppo;
    return std::ldexp(r_min * frac[static_cast<std::size_t>(j)], o);
  }
};

void validate_sbe_params(const SbeParams& p, int dim) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
    throw std::invalid_argument("sbe: alpha must be positive and finite");
  }
  if (!is_norm_exponent(p.p) || !is_norm_exponent(p.q)) {
    throw std::invalid_argument("sbe: p and q must lie in [1, infinity]");
  }
  if (!(p.r_grid.r_min > 0.0) || !(p.r_grid.r_min < p.r_grid.r_max) ||
      !std::isfinite(p.r_grid.r_max)) {
    throw std::invalid_argument("sbe: need 0 < r_min < r_max < infinity");
  }
  if (p.r_grid.points_per_octave < 4) {
    throw std::invalid_argument("sbe: need at least 4 radius points per octave");
  }
  const std::size_t d = static_cast<std::size_t>(dim);
  if (p.y_grid.lo.size() != d || p.y_grid.hi.size() != d ||
      p.y_grid.points.size() != d) {
    throw std::invalid_argument("sbe: y grid dimension mismatch");
  }
  for (std::size_t c = 0; c < d; ++c) {
    if (!(p.y_grid.lo[c] <= p.y_grid.hi[c]) || p.y_grid.points[c] < 1) {
      throw std::invalid_argument("sbe: malformed y grid");
    }
  }
}

void check_coverage(const SbeParams& p, std::span<const double> support_lo,
                    std::span<const double> support_hi) {
  for (std::size_t c = 0; c < support_lo.size(); ++c) {
    const double need_lo = support_lo[c] - p.r_grid.r_max;
    const double need_hi = support_hi[c] + p.r_grid.r_max;
    const double slack =
        1e-9 * (std::abs(need_lo) + std::abs(need_hi) + p.r_grid.r_max);
    if (p.y_grid.lo[c] > need_lo + slack || p.y_grid.hi[c] < need_hi - slack) {
      std::ostringstream msg;
      msg << "sbe: y grid axis " << c << " [" << p.y_grid.lo[c] << ","
          << p.y_grid.hi[c] << "] does not cover the support inflated by r_max ["
          << need_lo << "," << need_hi << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

// Shared quadrature over (r, y). BallMass: (r, y span) -> mass.
template <class BallMass>
double sbe_quadrature(BallMass&& mass, const SbeParams& params, int dim,
                      int order) {
  const RadiusLadder ladder(params.r_grid, order);
  if (ladder.nodes < 2) {
    throw std::invalid_argument(
        "sbe: radius grid needs at least two nodes between r_min and r_max");
  }
  const auto coeffs = delta_k_coeffs(order);
  const double power = -params.alpha - static_cast<double>(dim);
  const double du = std::log(2.0) / static_cast<double>(ladder.ppo);
  const bool p_inf = params.p == kInf;
  const bool q_inf = params.q == kInf;

  std::vector<double> rpow(static_cast<std::size_t>(ladder.nodes));
  for (int i = 0; i < ladder.nodes; ++i) {
    rpow[static_cast<std::size_t>(i)] = std::pow(ladder.radius(i), power);
  }

  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<double> step(d, 0.0), vol_axis(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    const int n = params.y_grid.points[c];
    step[c] = n > 1 ? (params.y_grid.hi[c] - params.y_grid.lo[c]) /
                          static_cast<double>(n - 1)
                    : 0.0;
    vol_axis[c] = n > 1 ? step[c]
                        : (params.y_grid.hi[c] > params.y_grid.lo[c]
                               ? params.y_grid.hi[c] - params.y_grid.lo[c]
                               : 1.0);
  }
  double cell_vol = 1.0;
  for (const double v : vol_axis) cell_vol *= v;

  std::vector<double> fvals(static_cast<std::size_t>(ladder.nodes + ladder.ext));
  std::vector<double> y(d, 0.0);
  std::vector<int> iy(d, 0);

  double outer = 0.0;
  while (true) {
    for (std::size_t c = 0; c < d; ++c) {
      y[c] = params.y_grid.lo[c] + static_cast<double>(iy[c]) * step[c];
    }

    for (int i = -ladder.ext; i < ladder.nodes; ++i) {
      fvals[static_cast<std::size_t>(i + ladder.ext)] = mass(ladder.radius(i), y);
    }

    double inner = 0.0;
    double prev_g = 0.0;
    for (int i = 0; i < ladder.nodes; ++i) {
      double delta = 0.0;
      for (std::size_t j = 0; j < coeffs.terms.size(); ++j) {
        delta += coeffs.terms[j].coeff *
                 fvals[static_cast<std::size_t>(
                     i - static_cast<int>(j) * ladder.ppo + ladder.ext)];
      }
      if (!std::isfinite(delta)) {
        throw std::runtime_error("sbe: non-finite dyadic difference value");
      }
      const double g = std::abs(delta) * rpow[static_cast<std::size_t>(i)];
      if (p_inf) {
        inner = std::max(inner, g);
      } else {
        const double gp = params.p == 2.0 ? g * g
                          : params.p == 1.0 ? g
                                            : std::pow(g, params.p);
        // log-trapezoid: interior nodes weight 1, boundary nodes 1/2
        const double w = (i == 0 || i == ladder.nodes - 1) ? 0.5 : 1.0;
        inner += w * gp * du;
        prev_g = gp;
      }
    }
    (void)prev_g;

    double contribution;
    if (q_inf) {
      contribution = p_inf ? inner : std::pow(inner, 1.0 / params.p);
      outer = std::max(outer, contribution);
    } else {
      const double e = p_inf ? params.q : params.q / params.p;
      contribution = e == 1.0 ? inner : std::pow(inner, e);
      outer += contribution * cell_vol;
    }

    // advance the y odometer
    std::size_t c = d;
    bool done = true;
    while (c > 0) {
      --c;
      if (iy[c] + 1 < params.y_grid.points[c]) {
        ++iy[c];
        for (std::size_t c2 = c + 1; c2 < d; ++c2) iy[c2] = 0;
        done = false;
        break;
      }
      iy[c] = 0;
    }
    if (done) break;
  }

  if (q_inf) return outer;
  return params.q == 1.0 ? outer : std::pow(outer, 1.0 / params.q);
}

SbeParams resolved(const SbeParams& params, int dim) {
  SbeParams p = params;
  if (p.k < 0) p.k = derived_delta_order(p.alpha, dim);
  return p;
}

}  // namespace

int derived_delta_order(double alpha, int dim) {
  if (!(alpha > 0.0) || dim < 1) {
    throw std::invalid_argument("delta order needs alpha > 0 and dim >= 1");
  }
  return static_cast<int>(std::ceil(alpha + static_cast<double>(dim) - 1.0));
}

SbeParams auto_sbe_params(const OccupationMeasure& mu, double alpha, double p,
                          double q) {
  mu.validate();
  if (mu.size() == 0) {
    throw std::invalid_argument("cannot derive norm parameters from an empty measure");
  }
  const int dim = mu.dim;
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t m = mu.size();

  std::vector<double> lo(d, kInf), hi(d, -kInf);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], mu.coord(i, static_cast<int>(c)));
      hi[c] = std::max(hi[c], mu.coord(i, static_cast<int>(c)));
    }
  }
  double diameter;
  if (dim == 1) {
    diameter = hi[0] - lo[0];
  } else {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double e = hi[c] - lo[c];
      s += e * e;
    }
    diameter = std::sqrt(s);
  }

  // Median nearest-neighbour spacing.
  std::vector<double> nn;
  if (dim == 1) {
    std::vector<double> coords(mu.atoms);
    std::sort(coords.begin(), coords.end());
    nn.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      double best = kInf;
      if (i > 0) best = std::min(best, coords[i] - coords[i - 1]);
      if (i + 1 < m) best = std::min(best, coords[i + 1] - coords[i]);
      nn[i] = best;
    }
  } else {
    const std::size_t stride = m <= 2048 ? 1 : (m + 1023) / 1024;
    for (std::size_t i = 0; i < m; i += stride) {
      double best = kInf;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double e = mu.coord(i, static_cast<int>(c)) -
                           mu.coord(j, static_cast<int>(c));
          s += e * e;
        }
        best = std::min(best, s);
      }
      nn.push_back(std::sqrt(best));
    }
  }
  double median = 0.0;
  if (!nn.empty() && m > 1) {
    const std::size_t mid = nn.size() / 2;
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(mid),
                     nn.end());
    median = nn[mid];
  }

  SbeParams out;
  out.alpha = alpha;
  out.p = p;
  out.q = q;
  out.k = -1;
  out.r_grid.r_max = diameter > 0.0 ? diameter : 1.0;
  double r_min = 2.0 * median;
  if (!(r_min > 0.0)) r_min = std::ldexp(out.r_grid.r_max, -12);
  if (r_min > std::ldexp(out.r_grid.r_max, -4)) {
    r_min = std::ldexp(out.r_grid.r_max, -4);
  }
  out.r_grid.r_min = r_min;
  out.r_grid.points_per_octave = 8;

  out.y_grid.lo.resize(d);
  out.y_grid.hi.resize(d);
  const int pts = dim == 1 ? 257 : dim == 2 ? 65 : 17;
  out.y_grid.points.assign(d, pts);
  for (std::size_t c = 0; c < d; ++c) {
    out.y_grid.lo[c] = lo[c] - out.r_grid.r_max;
    out.y_grid.hi[c] = hi[c] + out.r_grid.r_max;
  }
  return out;
}

double GridDensity::cell_volume() const {
  double v = 1.0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(dim); ++c) {
    v *= (hi[c] - lo[c]) / static_cast<double>(cells[c]);
  }
  return v;
}

double GridDensity::total_mass() const {
  double sum = 0.0, comp = 0.0;
  for (const double x : values) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + comp) * cell_volume();
}

void GridDensity::validate() const {
  if (dim < 1) throw std::invalid_argument("density dimension must be >= 1");
  const std::size_t d = static_cast<std::size_t>(dim);
  if (lo.size() != d || hi.size() != d || cells.size() != d) {
    throw std::invalid_argument("density grid dimension mismatch");
  }
  std::size_t total = 1;
  for (std::size_t c = 0; c < d; ++c) {
    if (!(lo[c] < hi[c]) || cells[c] < 1) {
      throw std::invalid_argument("density grid axis malformed");
    }
    total *= static_cast<std::size_t>(cells[c]);
  }
  if (values.size() != total) {
    throw std::invalid_argument("density value count does not match the grid");
  }
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("density contains a non-finite value");
    }
  }
}

GridDensity deposit_grid(const OccupationMeasure& mu, const BoxGridSpec& spec) {
  mu.validate();
  const std::size_t d = static_cast<std::size_t>(mu.dim);
  if (spec.lo.size() != d || spec.hi.size() != d || spec.cells.size() != d) {
    throw std::invalid_argument("deposit grid dimension mismatch");
  }
  GridDensity rho;
  rho.dim = mu.dim;
  rho.lo = spec.lo;
  rho.hi = spec.hi;
  rho.cells = spec.cells;
  std::size_t total = 1;
  std::vector<double> h(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (!(spec.lo[c] < spec.hi[c]) || spec.cells[c] < 1) {
      throw std::invalid_argument("deposit grid axis malformed");
    }
    h[c] = (spec.hi[c] - spec.lo[c]) / static_cast<double>(spec.cells[c]);
    total *= static_cast<std::size_t>(spec.cells[c]);
  }
  rho.values.assign(total, 0.0);
  const double inv_vol = 1.0 / rho.cell_volume();

  std::vector<int> base(d);
  std::vector<double> fhi(d);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    for (std::size_t c = 0; c < d; ++c) {
      const double x = mu.coord(a, static_cast<int>(c));
      if (x < spec.lo[c] || x > spec.hi[c]) {
        std::ostringstream msg;
        msg << "atom " << a << " lies outside the deposit grid on axis " << c;
        throw std::invalid_argument(msg.str());
      }
      // position in units of cell centers
      const double u = (x - spec.lo[c]) / h[c] - 0.5;
      const double fl = std::floor(u);
      base[c] = static_cast<int>(fl);
      fhi[c] = u - fl;
    }
    // multilinear split over the 2^d neighbouring cells, folding
    // out-of-range fractions back into the edge cell
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      double w = mu.weights[a] * inv_vol;
      std::size_t id = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const bool upper = (mask >> c) & 1u;
        w *= upper ? fhi[c] : 1.0 - fhi[c];
        int cc = base[c] + (upper ? 1 : 0);
        cc = std::clamp(cc, 0, rho.cells[c] - 1);
        id = id * static_cast<std::size_t>(rho.cells[c]) +
             static_cast<std::size_t>(cc);
      }
      rho.values[id] += w;
    }
  }
  return rho;
}

double sbe_norm(const OccupationMeasure& mu, const SbeParams& params) {
  mu.validate();
  const SbeParams p = resolved(params, mu.dim);
  validate_sbe_params(p, mu.dim);
  if (mu.size() == 0) return 0.0;

  const std::size_t d = static_cast<std::size_t>(mu.dim);
  std::vector<double> lo(d, kInf), hi(d, -kInf);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], mu.coord(i, static_cast<int>(c)));
      hi[c] = std::max(hi[c], mu.coord(i, static_cast<int>(c)));
    }
  }
  check_coverage(p, lo, hi);

  const SmallBallIndex idx(mu);
  return sbe_quadrature(
      [&](double r, const std::vector<double>& y) { return idx.query(r, y); },
      p, mu.dim, p.k);
}

double sbe_norm(const GridDensity& rho, const SbeParams& params) {
  rho.validate();
  const SbeParams p = resolved(params, rho.dim);
  validate_sbe_params(p, rho.dim);
  check_coverage(p, rho.lo, rho.hi);

  const std::size_t d = static_cast<std::size_t>(rho.dim);
  if (rho.dim == 1) {
    // Exact ball masses of the piecewise-constant density via its
    // piecewise-linear primitive.
    const int n = rho.cells[0];
    const double h = (rho.hi[0] - rho.lo[0]) / static_cast<double>(n);
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (int c = 0; c < n; ++c) {
      prefix[static_cast<std::size_t>(c) + 1] =
          prefix[static_cast<std::size_t>(c)] +
          rho.values[static_cast<std::size_t>(c)] * h;
    }
    auto primitive = [&](double x) {
      if (x <= rho.lo[0]) return 0.0;
      if (x >= rho.hi[0]) return prefix.back();
      const double u = (x - rho.lo[0]) / h;
      int c = std::clamp(static_cast<int>(u), 0, n - 1);
      const double fr = u - static_cast<double>(c);
      return prefix[static_cast<std::size_t>(c)] +
             rho.values[static_cast<std::size_t>(c)] * h * fr;
    };
    return sbe_quadrature(
        [&](double r, const std::vector<double>& y) {
          return primitive(y[0] + r) - primitive(y[0] - r);
        },
        p, 1, p.k);
  }

  // Higher dimensions: Riemann approximation counting cells by centers.
  std::vector<double> h(d);
  for (std::size_t c = 0; c < d; ++c) {
    h[c] = (rho.hi[c] - rho.lo[c]) / static_cast<double>(rho.cells[c]);
  }
  const double vol = rho.cell_volume();
  return sbe_quadrature(
      [&](double r, const std::vector<double>& y) {
        double sum = 0.0;
        std::vector<int> ic(d, 0);
        std::size_t flat = 0;
        const std::size_t total = rho.values.size();
        for (flat = 0; flat < total; ++flat) {
          std::size_t rem = flat;
          double dist2 = 0.0;
          for (std::size_t c = d; c-- > 0;) {
            const int cc = static_cast<int>(rem % static_cast<std::size_t>(rho.cells[c]));
            rem /= static_cast<std::size_t>(rho.cells[c]);
            const double center =
                rho.lo[c] + (static_cast<double>(cc) + 0.5) * h[c];
            const double e = center - y[c];
            dist2 += e * e;
          }
          if (dist2 <= r * r) sum += rho.values[flat] * vol;
        }
        (void)ic;
        return sum;
      },
      p, rho.dim, p.k);
}

SbeReport sbe_norm_report(const OccupationMeasure& mu, const SbeParams& params) {
  SbeReport report;
  report.params = resolved(params, mu.dim);
  report.value = sbe_norm(mu, report.params);

  for (const int t : {-2, -1, 0, 1, 2}) {
    SbeParams q = report.params;
    q.r_grid.r_min = std::ldexp(q.r_grid.r_min, t);
    if (q.r_grid.r_max >= 2.0 * q.r_grid.r_min) {
      report.r_min_sensitivity.emplace_back(q.r_grid.r_min, sbe_norm(mu, q));
    }
  }
  {
    SbeParams q = report.params;
    q.r_grid.points_per_octave *= 2;
    report.grid_refinement.emplace_back("r points per octave x2", sbe_norm(mu, q));
  }
  {
    SbeParams q = report.params;
    for (auto& n : q.y_grid.points) n = 2 * n - 1;
    report.grid_refinement.emplace_back("y points x2", sbe_norm(mu, q));
  }
  return report;
}

namespace {

// Smooth cutoff: 1 on [0,1], 0 on [2,inf), strictly between in (1,2).
double smooth_cutoff(double t, double sharpness) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double u = t - 1.0;
  const double a = std::exp(-sharpness / u);
  const double b = std::exp(-sharpness / (1.0 - u));
  return b / (a + b);
}

}  // namespace

std::vector<std::pair<double, double>> besov_blocks(const GridDensity& rho,
                                                    const BesovParams& params) {
  rho.validate();
  if (params.blocks < 3) {
    throw std::invalid_argument("besov: need at least 3 dyadic blocks");
  }
  if (!is_norm_exponent(params.spatial_p)) {
    throw std::invalid_argument("besov: spatial exponent must lie in [1, infinity]");
  }
  const std::size_t d = static_cast<std::size_t>(rho.dim);
  const double top_edge = std::ldexp(1.0, params.blocks + 1);
  for (std::size_t c = 0; c < d; ++c) {
    if (top_edge > static_cast<double>(rho.cells[c]) / 4.0) {
      std::ostringstream msg;
      msg << "besov: grid axis " << c << " with " << rho.cells[c]
          << " cells cannot resolve the top block (needs >= "
          << 4.0 * top_edge << " cells)";
      throw std::invalid_argument(msg.str());
    }
  }

  const std::size_t total = rho.values.size();
  std::vector<std::complex<double>> spatial(total), freq(total), block(total),
      field(total);
  for (std::size_t i = 0; i < total; ++i) spatial[i] = rho.values[i];

  std::vector<int> dims(d);
  for (std::size_t c = 0; c < d; ++c) dims[c] = rho.cells[c];

  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd = fftw_plan_dft(static_cast<int>(d), dims.data(),
                        reinterpret_cast<fftw_complex*>(spatial.data()),
                        reinterpret_cast<fftw_complex*>(freq.data()),
                        FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft(static_cast<int>(d), dims.data(),
                        reinterpret_cast<fftw_complex*>(block.data()),
                        reinterpret_cast<fftw_complex*>(field.data()),
                        FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);

  // integer frequency magnitude per flattened index
  std::vector<double> freq_mag(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double s = 0.0;
    for (std::size_t c = d; c-- > 0;) {
      const int n = rho.cells[c];
      const int idx = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
      const int m = idx <= n / 2 ? idx : idx - n;
      s += static_cast<double>(m) * static_cast<double>(m);
    }
    freq_mag[flat] = std::sqrt(s);
  }

  const double vol = rho.cell_volume();
  const double scale = 1.0 / static_cast<double>(total);
  const bool p_inf = params.spatial_p == kInf;

  auto block_norm = [&](auto&& multiplier) {
    for (std::size_t i = 0; i < total; ++i) {
      block[i] = freq[i] * multiplier(freq_mag[i]);
    }
    fftw_execute(bwd);
    if (p_inf) {
      double m = 0.0;
      for (std::size_t i = 0; i < total; ++i) {
        m = std::max(m, std::abs(field[i].real()) * scale);
      }
      return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      const double v = std::abs(field[i].real()) * scale;
      acc += params.spatial_p == 2.0 ? v * v
             : params.spatial_p == 1.0 ? v
                                       : std::pow(v, params.spatial_p);
    }
    return std::pow(acc * vol, 1.0 / params.spatial_p);
  };

  std::vector<std::pair<double, double>> out;
  out.emplace_back(1.0, block_norm([&](double rho_f) {
    return smooth_cutoff(rho_f, params.profile_sharpness);
  }));
  for (int j = 0; j < params.blocks; ++j) {
    const double n_block = std::ldexp(1.0, j + 1);
    out.emplace_back(n_block, block_norm([&](double rho_f) {
      return smooth_cutoff(rho_f / n_block, params.profile_sharpness) -
             smooth_cutoff(rho_f / (n_block / 2.0), params.profile_sharpness);
    }));
  }

  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

double besov_norm(const GridDensity& rho, const BesovParams& params,
                  BlockSummability summability) {
  if (!std::isfinite(params.alpha)) {
    throw std::invalid_argument("besov: alpha must be finite");
  }
  const auto blocks = besov_blocks(rho, params);
  double value = 0.0;
  for (const auto& [n_block, norm] : blocks) {
    const double weighted = std::pow(n_block, params.alpha) * norm;
    if (summability == BlockSummability::Sup) {
      value = std::max(value, weighted);
    } else {
      value += weighted;
    }
  }
  return value;
}

double p_variation(
    std::size_t n,
    const std::function<double(std::size_t, std::size_t)>& increment_norm,
    double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("p-variation needs finite p >= 1");
  }
  if (n < 2) return 0.0;
  std::vector<double> dp(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double inc = increment_norm(i, j);
      const double cand = dp[i] + (p == 1.0 ? inc : p == 2.0 ? inc * inc
                                                             : std::pow(inc, p));
      best = std::max(best, cand);
    }
    dp[j] = best;
  }
  return std::pow(dp[n - 1], 1.0 / p);
}

void VariationParams::validate() const {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("variation exponent must be finite and >= 1");
  }
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw std::invalid_argument("dyadic-bound slack must lie in (0,1)");
  }
}

DyadicVariationBound dyadic_variation_bound(
    const std::vector<std::vector<double>>& level_increment_norms, double q,
    double epsilon) {
  if (!(q >= 1.0) || !std::isfinite(q)) {
    throw std::invalid_argument("dyadic variation bound needs finite q >= 1");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("dyadic variation bound needs epsilon > 0");
  }
  DyadicVariationBound out;
  out.constant =
      q == 1.0 ? 1.0
               : std::pow(2.0, q - 1.0) *
                     std::pow(1.0 - std::pow(2.0, -epsilon / (q - 1.0)),
                              -(q - 1.0));
  double total = 0.0;
  for (std::size_t level = 0; level < level_increment_norms.size(); ++level) {
    const auto& norms = level_increment_norms[level];
    if (norms.size() != (std::size_t{1} << level)) {
      std::ostringstream msg;
      msg << "dyadic level " << level << " must carry " << (1u << level)
          << " increments, got " << norms.size();
      throw std::invalid_argument(msg.str());
    }
    double s = 0.0;
    for (const double x : norms) {
      if (!(x >= 0.0)) {
        throw std::invalid_argument("increment norms must be nonnegative");
      }
      s += q == 1.0 ? x : q == 2.0 ? x * x : std::pow(x, q);
    }
    out.level_sums.push_back(s);
    total += std::pow(std::ldexp(1.0, static_cast<int>(level)), epsilon) * s;
  }
  out.bound = std::pow(out.constant * total, 1.0 / q);
  return out;
}

double variation_of_occupation(const SampledPath& path, double a,
                               const std::vector<double>& partition, double r,
                               const SbeParams& sbe) {
  path.validate();
  if (!(r >= 1.0) || !std::isfinite(r)) {
    throw std::invalid_argument("variation exponent must be finite and >= 1");
  }
  if (partition.size() < 2) {
    throw std::invalid_argument("partition needs at least two times");
  }
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    if (!(partition[i] < partition[i + 1])) {
      throw std::invalid_argument("partition times must strictly increase");
    }
  }
  if (partition.front() < path.span_start() - 1e-12 ||
      partition.back() > path.span_end() + 1e-12 ||
      a < path.span_start() - 1e-12 || a > partition.front()) {
    throw std::invalid_argument("partition leaves the path span");
  }
  return p_variation(
      partition.size(),
      [&](std::size_t i, std::size_t j) {
        return sbe_norm(occupation(path, partition[i], partition[j]), sbe);
      },
      r);
}

PowerFit holder_exponent(const std::vector<double>& spans,
                         const std::vector<double>& norms) {
  if (spans.size() != norms.size() || spans.size() < 3) {
    throw std::invalid_argument("power-law fit needs >= 3 matching points");
  }
  const std::size_t n = spans.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(spans[i] > 0.0) || !(norms[i] > 0.0) || !std::isfinite(spans[i]) ||
        !std::isfinite(norms[i])) {
      throw std::invalid_argument("power-law fit needs positive finite entries");
    }
    x[i] = std::log(spans[i]);
    y[i] = std::log(norms[i]);
  }
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
    syy += (y[i] - ybar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("power-law fit needs distinct spans");
  }
  PowerFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace sbe
