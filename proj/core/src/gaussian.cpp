#include "sbe/lnd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sbe/norms.hpp"
#include "sbe/random.hpp"

namespace sbe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Covariance of the increments over [a1,b1] and [a2,b2], associated as a
// difference of differences so that disjoint-increment models telescope to
// an exact zero and the diagonal to an exact single difference.
double increment_covariance(const GaussianIncrementModel& m, double a1,
                            double b1, double a2, double b2) {
  return (m.covariance(b1, b2) - m.covariance(b1, a2)) -
         (m.covariance(a1, b2) - m.covariance(a1, a2));
}

double lag_power(double lag, double two_h) {
  return two_h == 1.0 ? lag : std::pow(lag, two_h);
}

void check_model(const GaussianIncrementModel& m) {
  if (!m.covariance) {
    throw std::invalid_argument("model carries no covariance function");
  }
  if (!(m.hurst > 0.0) || !(m.hurst < 1.0)) {
    throw std::invalid_argument("nominal regularity exponent must lie in (0,1)");
  }
  if (m.dim < 1) {
    throw std::invalid_argument("model dimension must be >= 1");
  }
}

// sup_z |He_j(z)| e^{-z^2/2} for the probabilists' Hermite polynomials,
// i.e. the sup norm of the j-th derivative of e^{-z^2/2}. Evaluated by a
// dense scan plus golden-section refinement; filled once per process.
double hermite_envelope(double z, int order) {
  double prev = 1.0, cur = z;
  if (order == 0) return std::exp(-0.5 * z * z);
  for (int j = 1; j < order; ++j) {
    const double next = z * cur - static_cast<double>(j) * prev;
    prev = cur;
    cur = next;
  }
  return std::abs(cur) * std::exp(-0.5 * z * z);
}

double hermite_envelope_max(int order) {
  if (order == 0) return 1.0;
  const double z_hi = std::sqrt(4.0 * order + 8.0) + 4.0;
  const int scan = 40000;
  double best_z = 0.0, best = 0.0;
  for (int i = 0; i <= scan; ++i) {
    const double z = z_hi * static_cast<double>(i) / scan;
    const double v = hermite_envelope(z, order);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  // golden-section polish inside the bracketing scan cells
  double lo = std::max(0.0, best_z - z_hi / scan);
  double hi = std::min(z_hi, best_z + z_hi / scan);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = hermite_envelope(x1, order), f2 = hermite_envelope(x2, order);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = hermite_envelope(x2, order);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = hermite_envelope(x1, order);
    }
  }
  return std::max(best, std::max(f1, f2));
}

const std::vector<double>& hermite_envelope_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t;
    for (int j = 0; j <= 16; ++j) t.push_back(hermite_envelope_max(j));
    return t;
  }();
  return table;
}

double interpolated_envelope(double beta) {
  const auto& table = hermite_envelope_table();
  const int m = static_cast<int>(std::floor(beta));
  if (m + 1 >= static_cast<int>(table.size())) {
    throw std::invalid_argument("Hölder order too large (supported beta < 16)");
  }
  const double theta = beta - static_cast<double>(m);
  const double lo = table[static_cast<std::size_t>(m)];
  if (theta == 0.0) return lo;
  const double hi = table[static_cast<std::size_t>(m) + 1];
  return std::pow(lo, 1.0 - theta) * std::pow(hi, theta);
}

}  // namespace

GaussianIncrementModel GaussianIncrementModel::brownian(int dim) {
  GaussianIncrementModel m;
  m.covariance = [](double s, double t) { return std::min(s, t); };
  m.hurst = 0.5;
  m.dim = dim;
  check_model(m);
  return m;
}

GaussianIncrementModel GaussianIncrementModel::fractional(double hurst,
                                                          int dim) {
  GaussianIncrementModel m;
  const double two_h = 2.0 * hurst;
  m.covariance = [two_h](double s, double t) {
    return 0.5 * (std::pow(std::abs(s), two_h) + std::pow(std::abs(t), two_h) -
                  std::pow(std::abs(t - s), two_h));
  };
  m.hurst = hurst;
  m.dim = dim;
  check_model(m);
  return m;
}

GaussianIncrementModel GaussianIncrementModel::custom(
    std::function<double(double, double)> covariance, double hurst, int dim) {
  GaussianIncrementModel m;
  m.covariance = std::move(covariance);
  m.hurst = hurst;
  m.dim = dim;
  check_model(m);
  for (int i = 1; i <= 9; ++i) {
    for (int j = i; j <= 9; ++j) {
      const double s = 0.1 * i, t = 0.1 * j;
      const double forward = m.covariance(s, t);
      const double backward = m.covariance(t, s);
      const double scale = std::abs(forward) + std::abs(backward) + 1e-12;
      if (std::abs(forward - backward) > 1e-10 * scale) {
        std::ostringstream msg;
        msg << "covariance is asymmetric at probe (" << s << "," << t << ")";
        throw std::invalid_argument(msg.str());
      }
      m.increment_variance(s, t);  // throws when negative
    }
  }
  return m;
}

double GaussianIncrementModel::increment_variance(double s, double t) const {
  const double v = increment_covariance(*this, s, t, s, t);
  const double scale =
      std::abs(covariance(s, s)) + std::abs(covariance(t, t)) + 1e-12;
  if (v < -1e-9 * scale) {
    std::ostringstream msg;
    msg << "covariance produces negative increment variance " << v << " at ("
        << s << "," << t << ")";
    throw std::invalid_argument(msg.str());
  }
  return std::max(v, 0.0);
}

double increment_lower_bound(const GaussianIncrementModel& model,
                             std::span<const double> probe_times) {
  check_model(model);
  if (probe_times.size() < 2) {
    throw std::invalid_argument("need at least two probe times");
  }
  std::vector<double> times(probe_times.begin(), probe_times.end());
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] < times[i + 1])) {
      throw std::invalid_argument("probe times must be distinct");
    }
  }
  const double two_h = 2.0 * model.hurst;
  double best = kInf;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      const double v = model.increment_variance(times[i], times[j]);
      best = std::min(best, v / lag_power(times[j] - times[i], two_h));
    }
  }
  return best;
}

double lnd_ratio(const GaussianIncrementModel& model,
                 std::span<const double> times,
                 const std::vector<std::vector<double>>& x) {
  check_model(model);
  const std::size_t n = times.size();
  if (n < 2) throw std::invalid_argument("need at least two times");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(times[i] < times[i + 1])) {
      throw std::invalid_argument("times must strictly increase");
    }
  }
  if (x.size() != n - 1) {
    throw std::invalid_argument("need one coefficient vector per increment");
  }
  const std::size_t d = static_cast<std::size_t>(model.dim);
  bool any_nonzero = false;
  for (const auto& xk : x) {
    if (xk.size() != d) {
      throw std::invalid_argument("coefficient vector dimension mismatch");
    }
    for (const double c : xk) {
      if (c != 0.0) any_nonzero = true;
    }
  }
  if (!any_nonzero) {
    throw std::invalid_argument(
        "degenerate input: all coefficient vectors are zero");
  }

  auto dot = [&](std::size_t k, std::size_t l) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += x[k][c] * x[l][c];
    return acc;
  };

  const double two_h = 2.0 * model.hurst;
  double numerator = 0.0;
  double denominator = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t l = 0; l + 1 < n; ++l) {
      const double cov = increment_covariance(model, times[k], times[k + 1],
                                              times[l], times[l + 1]);
      numerator += dot(k, l) * cov;
      scale += std::abs(dot(k, l) * cov);
    }
    denominator += dot(k, k) * lag_power(times[k + 1] - times[k], two_h);
  }
  if (numerator < -1e-9 * (scale + 1e-12)) {
    throw std::invalid_argument(
        "covariance bilinear form is materially negative; invalid model");
  }
  numerator = std::max(numerator, 0.0);
  return numerator / denominator;
}

LndEstimate lnd_certify(const GaussianIncrementModel& model, int n,
                        double t_lo, double t_hi, std::size_t trials,
                        std::uint64_t seed) {
  check_model(model);
  if (n < 2) throw std::invalid_argument("need at least two times");
  if (!(t_lo < t_hi)) throw std::invalid_argument("empty time interval");
  if (trials == 0) throw std::invalid_argument("need at least one trial");

  Rng rng(seed);
  LndEstimate out;
  out.trials = trials;
  out.min_ratio = kInf;
  const std::size_t d = static_cast<std::size_t>(model.dim);
  std::vector<double> times(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> x(static_cast<std::size_t>(n) - 1,
                                     std::vector<double>(d, 0.0));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    do {
      for (auto& t : times) t = rng.uniform(t_lo, t_hi);
      std::sort(times.begin(), times.end());
    } while (std::adjacent_find(times.begin(), times.end()) != times.end());
    for (auto& xk : x) {
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (auto& c : xk) {
          c = rng.next_normal();
          norm2 += c * c;
        }
      } while (norm2 == 0.0);
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& c : xk) c *= inv;
    }
    const double ratio = lnd_ratio(model, times, x);
    if (ratio < out.min_ratio) {
      out.min_ratio = ratio;
      out.argmin_times = times;
    }
  }
  out.certified_c = out.min_ratio / 2.0;
  return out;
}

double gaussian_increment_cbeta(const GaussianIncrementModel& model, double s,
                                double t, double beta) {
  check_model(model);
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("Hölder order must be finite and >= 0");
  }
  const double variance = model.increment_variance(s, t);
  if (!(variance > 0.0)) {
    throw std::invalid_argument("zero increment variance; density undefined");
  }
  const double sigma = std::sqrt(variance);
  const double d = static_cast<double>(model.dim);
  return std::pow(2.0 * M_PI, -0.5 * d) * std::pow(sigma, -(d + beta)) *
         interpolated_envelope(beta);
}

CnuReport cnu_linearity(const GaussianIncrementModel& model, double beta,
                        double j_lo, double j_hi, int refinements) {
  check_model(model);
  if (!(beta >= 0.0)) throw std::invalid_argument("Hölder order must be >= 0");
  if (!(j_lo < j_hi)) throw std::invalid_argument("empty base window");
  if (refinements < 3) {
    throw std::invalid_argument("need at least three nested windows to fit");
  }

  CnuReport report;
  const double d = static_cast<double>(model.dim);
  report.singular_exponent = model.hurst * (beta + d);
  report.divergent = report.singular_exponent >= 1.0 - 1e-12;

  // Dyadic shells in the lag tau = |t-s| relative to the window length.
  // Convergent integrands either meet the relative tolerance or stop at the
  // floating-point resolution wall of the covariance, after which the tail
  // is completed geometrically from the last two shell ratios (exact for a
  // power-law tail). Divergent integrands never admit a completion and are
  // reported from the capped shell sum.
  const int max_shells = 40;
  const int lag_nodes = 4;    // log-midpoint nodes per shell
  const int time_probes = 8;  // averaging positions for the left endpoint
  bool all_converged = true;

  for (int level = 0; level < refinements; ++level) {
    const double length = (j_hi - j_lo) * std::ldexp(1.0, -level);
    double acc = 0.0;
    double prev_shell = -1.0, last_shell = -1.0;
    bool converged = false;
    for (int shell = 0; shell < max_shells; ++shell) {
      const double tau_hi = length * std::ldexp(1.0, -shell);
      double shell_acc = 0.0;
      bool resolvable = true;
      for (int node = 0; node < lag_nodes && resolvable; ++node) {
        const double tau =
            tau_hi *
            std::pow(2.0, -(static_cast<double>(node) + 0.5) / lag_nodes);
        double mean_norm = 0.0;
        for (int probe = 0; probe < time_probes; ++probe) {
          const double s = j_lo + (static_cast<double>(probe) + 0.5) *
                                      (length - tau) / time_probes;
          const double variance = model.increment_variance(s, s + tau);
          const double cov_scale = std::abs(model.covariance(s, s)) +
                                   std::abs(model.covariance(s + tau, s + tau)) +
                                   1e-300;
          if (variance <= 1e-13 * cov_scale) {
            // below the cancellation noise of the covariance evaluation
            resolvable = false;
            break;
          }
          mean_norm += gaussian_increment_cbeta(model, s, s + tau, beta);
        }
        mean_norm /= time_probes;
        // d tau = tau * d(log tau); the log-midpoint rule carries tau
        shell_acc += mean_norm * (length - tau) * tau *
                     (std::log(2.0) / lag_nodes);
      }
      if (!resolvable) break;
      acc += 2.0 * shell_acc;
      prev_shell = last_shell;
      last_shell = 2.0 * shell_acc;
      if (shell > 4 && last_shell < 1e-10 * acc) {
        converged = true;
        break;
      }
    }
    if (!converged && last_shell > 0.0 && prev_shell > 0.0) {
      const double rho = last_shell / prev_shell;
      if (rho < 0.995) {
        acc += last_shell * rho / (1.0 - rho);
        converged = true;
      }
    }
    all_converged = all_converged && converged;
    report.windows.emplace_back(length, acc);
  }
  report.quadrature_converged = all_converged;

  std::vector<double> lengths, integrals, compensated;
  for (const auto& [length, integral] : report.windows) {
    if (integral > 0.0) {
      lengths.push_back(length);
      integrals.push_back(integral);
      compensated.push_back(
          std::pow(length, report.singular_exponent - 1.0) * integral);
    }
  }
  if (lengths.size() >= 3) {
    const auto raw = holder_exponent(lengths, integrals);
    report.raw_exponent = raw.slope;
    const auto comp = holder_exponent(lengths, compensated);
    report.compensated_exponent = comp.slope;
    report.c_nu = std::exp(comp.intercept);
  }
  return report;
}

LndRegionReport lnd_param_region(double hurst, int dim, double alpha, double p,
                                 double q) {
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("regularity exponent must lie in (0,1)");
  }
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  const bool p_ok = p >= 1.0 && (std::isfinite(p) || p == kInf);
  const bool q_ok = q >= 1.0 && (std::isfinite(q) || q == kInf);
  if (!p_ok || !q_ok) {
    throw std::invalid_argument("integrability indices must lie in [1, infinity]");
  }

  LndRegionReport report;
  const double d = static_cast<double>(dim);
  report.hurst_ok = hurst < 1.0 / d;

  const double lhs = 1.0 / p + (alpha - d / q) * hurst;
  const double rhs = 1.0 - d * hurst;
  report.holder_slack = rhs - lhs;
  report.holder_ok = lhs < rhs;

  // Hölder conjugate: 1/q' = 1 - 1/q
  const double inv_q_conj = 1.0 - 1.0 / q;
  const double alpha_bound =
      (1.0 / hurst - d) * std::min(0.5, inv_q_conj);
  report.alpha_slack = alpha_bound - alpha;
  report.alpha_ok = alpha < alpha_bound;

  report.admissible = report.hurst_ok && report.holder_ok && report.alpha_ok;
  return report;
}

}  // namespace sbe
