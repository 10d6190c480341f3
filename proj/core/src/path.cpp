#include "sbe/path.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fftw_lock.hpp"
#include "sbe/random.hpp"

namespace sbe {

namespace {

using detail::fftw_plan_mutex;

void check_span(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("span must satisfy start < end and be finite");
  }
}

std::vector<double> uniform_times(std::size_t n, double a, double b) {
  std::vector<double> t(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) t[i] = a + h * static_cast<double>(i);
  t.back() = b;
  return t;
}

// Stationary autocovariance of fractional Gaussian noise at step dt.
double fgn_autocov(double hurst, double dt, std::size_t lag) {
  const double k = static_cast<double>(lag);
  const double two_h = 2.0 * hurst;
  return 0.5 * std::pow(dt, two_h) *
         (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) +
          std::pow(std::abs(k - 1.0), two_h));
}

// Circulant-embedding sampler for n_inc stationary increments. Returns false
// when the embedding has eigenvalues below -tol * max, in which case the
// caller falls back to dense factorization.
bool sample_fgn_circulant(double hurst, double dt, std::size_t n_inc,
                          Rng& rng, std::vector<double>& out) {
  const std::size_t m = 2 * n_inc;
  std::vector<std::complex<double>> row(m), freq(m);
  for (std::size_t j = 0; j <= n_inc; ++j) {
    row[j] = fgn_autocov(hurst, dt, j);
  }
  for (std::size_t j = 1; j < n_inc; ++j) row[m - j] = row[j];

  fftw_plan fwd;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fwd = fftw_plan_dft_1d(static_cast<int>(m),
                           reinterpret_cast<fftw_complex*>(row.data()),
                           reinterpret_cast<fftw_complex*>(freq.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd);
  }

  double max_eig = 0.0, min_eig = 0.0;
  for (const auto& z : freq) {
    max_eig = std::max(max_eig, z.real());
    min_eig = std::min(min_eig, z.real());
  }
  if (min_eig < -1e-9 * std::max(max_eig, 1e-300)) return false;

  // Hermitian-symmetric spectral noise; forward transform returns a real
  // stationary sequence with the requested autocovariance.
  std::vector<std::complex<double>> noise(m);
  const double md = static_cast<double>(m);
  noise[0] = std::sqrt(std::max(0.0, freq[0].real()) / md) * rng.next_normal();
  noise[n_inc] =
      std::sqrt(std::max(0.0, freq[n_inc].real()) / md) * rng.next_normal();
  for (std::size_t j = 1; j < n_inc; ++j) {
    const double s = std::sqrt(std::max(0.0, freq[j].real()) / (2.0 * md));
    const double re = rng.next_normal();
    const double im = rng.next_normal();
    noise[j] = std::complex<double>(s * re, s * im);
    noise[m - j] = std::conj(noise[j]);
  }

  std::vector<std::complex<double>> path_freq(m);
  fftw_plan inv;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    inv = fftw_plan_dft_1d(static_cast<int>(m),
                           reinterpret_cast<fftw_complex*>(noise.data()),
                           reinterpret_cast<fftw_complex*>(path_freq.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(inv);
  }

  out.resize(n_inc);
  for (std::size_t j = 0; j < n_inc; ++j) out[j] = path_freq[j].real();
  return true;
}

// Exact-covariance fallback: factorize the pinned covariance of the value
// grid and push standard normals through it.
std::vector<double> sample_pinned_dense(
    const std::function<double(double, double)>& cov,
    const std::vector<double>& times, Rng& rng) {
  const std::size_t n = times.size();
  const double a = times.front();
  Eigen::MatrixXd k(n - 1, n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < n; ++j) {
      k(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) =
          cov(times[i], times[j]) - cov(times[i], a) - cov(a, times[j]) +
          cov(a, a);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(max_eig, 1e-300)) {
    std::ostringstream msg;
    msg << "covariance not positive semidefinite on the sample grid: "
        << "min eigenvalue " << es.eigenvalues().minCoeff() << " at times ["
        << times.front() << "," << times.back() << "]";
    throw std::invalid_argument(msg.str());
  }
  Eigen::VectorXd z(n - 1);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.next_normal();
  Eigen::VectorXd vals =
      es.eigenvectors() *
      (es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    out[i] = vals(static_cast<Eigen::Index>(i - 1));
  }
  return out;
}

}  // namespace

void SampledPath::validate() const {
  if (times.size() < 2) {
    throw std::invalid_argument("path needs at least two samples");
  }
  if (dim < 1) throw std::invalid_argument("path dimension must be >= 1");
  if (values.size() != times.size() * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("value array size does not match grid * dim");
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] < times[i + 1])) {
      std::ostringstream msg;
      msg << "time grid not strictly increasing at index " << i;
      throw std::invalid_argument(msg.str());
    }
  }
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("path contains a non-finite value");
    }
  }
  if (!std::isfinite(times.front()) || !std::isfinite(times.back())) {
    throw std::invalid_argument("path contains a non-finite time");
  }
}

double SampledPath::sup_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += value(i, c) * value(i, c);
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

std::vector<double> interpolate(const SampledPath& path, double t) {
  std::vector<double> out(static_cast<std::size_t>(path.dim));
  if (t <= path.times.front()) {
    for (int c = 0; c < path.dim; ++c) out[static_cast<std::size_t>(c)] = path.value(0, c);
    return out;
  }
  if (t >= path.times.back()) {
    for (int c = 0; c < path.dim; ++c) {
      out[static_cast<std::size_t>(c)] = path.value(path.size() - 1, c);
    }
    return out;
  }
  const auto it =
      std::upper_bound(path.times.begin(), path.times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - path.times.begin());
  const std::size_t lo = hi - 1;
  const double w =
      (t - path.times[lo]) / (path.times[hi] - path.times[lo]);
  for (int c = 0; c < path.dim; ++c) {
    out[static_cast<std::size_t>(c)] =
        (1.0 - w) * path.value(lo, c) + w * path.value(hi, c);
  }
  return out;
}

double interpolate_1d(const SampledPath& path, double t) {
  if (path.dim != 1) {
    throw std::invalid_argument("interpolate_1d needs a one-dimensional path");
  }
  return interpolate(path, t)[0];
}

GaussianSpec GaussianSpec::brownian(int dim) {
  GaussianSpec s;
  s.kind = Kind::BrownianMotion;
  s.hurst = 0.5;
  s.dim = dim;
  s.covariance = [](double a, double b) { return std::min(a, b); };
  return s;
}

GaussianSpec GaussianSpec::fractional(double hurst, int dim) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw std::invalid_argument("Hurst exponent must lie in (0,1)");
  }
  GaussianSpec s;
  s.kind = Kind::FractionalBrownian;
  s.hurst = hurst;
  s.dim = dim;
  s.covariance = [hurst](double a, double b) {
    const double two_h = 2.0 * hurst;
    return 0.5 * (std::pow(std::abs(a), two_h) + std::pow(std::abs(b), two_h) -
                  std::pow(std::abs(a - b), two_h));
  };
  return s;
}

GaussianSpec GaussianSpec::custom(
    std::function<double(double, double)> covariance, int dim) {
  if (!covariance) throw std::invalid_argument("covariance must be callable");
  GaussianSpec s;
  s.kind = Kind::CustomCovariance;
  s.hurst = 0.5;
  s.dim = dim;
  s.covariance = std::move(covariance);

  // PSD probe at construction; generation re-checks on the actual grid.
  const int np = 9;
  std::vector<double> probe(np);
  for (int i = 0; i < np; ++i) probe[static_cast<std::size_t>(i)] = 0.1 + 0.1 * i;
  Eigen::MatrixXd k(np, np);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < np; ++j) {
      const double vij = s.covariance(probe[static_cast<std::size_t>(i)],
                                      probe[static_cast<std::size_t>(j)]);
      const double vji = s.covariance(probe[static_cast<std::size_t>(j)],
                                      probe[static_cast<std::size_t>(i)]);
      if (std::abs(vij - vji) > 1e-10 * std::max(1.0, std::abs(vij))) {
        std::ostringstream msg;
        msg << "covariance not symmetric at probe times ("
            << probe[static_cast<std::size_t>(i)] << ","
            << probe[static_cast<std::size_t>(j)] << ")";
        throw std::invalid_argument(msg.str());
      }
      k(i, j) = vij;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(max_eig, 1e-300)) {
    std::ostringstream msg;
    msg << "covariance not positive semidefinite: min eigenvalue "
        << es.eigenvalues().minCoeff() << " on probe times 0.1..0.9";
    throw std::invalid_argument(msg.str());
  }
  return s;
}

SampledPath gen_gaussian(const GaussianSpec& spec, std::size_t n,
                         double span_start, double span_end,
                         std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  check_span(span_start, span_end);

  SampledPath path;
  path.dim = spec.dim;
  path.times = uniform_times(n, span_start, span_end);
  path.values.assign(n * static_cast<std::size_t>(spec.dim), 0.0);
  const double dt = (span_end - span_start) / static_cast<double>(n - 1);

  for (int c = 0; c < spec.dim; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::vector<double> increments;
    switch (spec.kind) {
      case GaussianSpec::Kind::BrownianMotion: {
        increments.resize(n - 1);
        const double s = std::sqrt(dt);
        for (auto& dv : increments) dv = s * rng.next_normal();
        break;
      }
      case GaussianSpec::Kind::FractionalBrownian: {
        if (!sample_fgn_circulant(spec.hurst, dt, n - 1, rng, increments)) {
          Rng fresh(derive_seed(seed, static_cast<std::uint64_t>(c)));
          const auto vals =
              sample_pinned_dense(spec.covariance, path.times, fresh);
          for (std::size_t i = 0; i < n; ++i) path.value(i, c) = vals[i];
          continue;
        }
        break;
      }
      case GaussianSpec::Kind::CustomCovariance: {
        const auto vals = sample_pinned_dense(spec.covariance, path.times, rng);
        for (std::size_t i = 0; i < n; ++i) path.value(i, c) = vals[i];
        continue;
      }
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      acc += increments[i - 1];
      path.value(i, c) = acc;
    }
  }
  path.validate();
  return path;
}

SampledPath euler_maruyama_1d(const std::function<double(double, double)>& b,
                              const std::function<double(double, double)>& sigma,
                              double x0, std::size_t n, double span_start,
                              double span_end, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  check_span(span_start, span_end);
  SampledPath path;
  path.dim = 1;
  path.times = uniform_times(n, span_start, span_end);
  path.values.resize(n);
  const double dt = (span_end - span_start) / static_cast<double>(n - 1);
  const double sq = std::sqrt(dt);
  Rng rng(derive_seed(seed, 0));
  double x = x0;
  path.values[0] = x;
  for (std::size_t i = 1; i < n; ++i) {
    const double t = path.times[i - 1];
    x += b(t, x) * dt + sigma(t, x) * sq * rng.next_normal();
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "iterate became non-finite at step " << i << " (t=" << path.times[i]
          << ")";
      throw std::runtime_error(msg.str());
    }
    path.values[i] = x;
  }
  return path;
}

SampledPath reparametrize(const SampledPath& path, const SampledPath& phi) {
  path.validate();
  phi.validate();
  if (phi.dim != 1) {
    throw std::invalid_argument("time change must be one-dimensional");
  }
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
    if (!(phi.values[i] < phi.values[i + 1])) {
      std::ostringstream msg;
      msg << "time change not strictly increasing at index " << i;
      throw std::invalid_argument(msg.str());
    }
  }
  const double lo = path.span_start();
  const double hi = path.span_end();
  const double slack = 1e-9 * (hi - lo);
  if (phi.values.front() < lo - slack || phi.values.back() > hi + slack) {
    throw std::invalid_argument("time change leaves the path span");
  }

  SampledPath out;
  out.dim = path.dim;
  out.times = phi.times;
  out.values.resize(phi.size() * static_cast<std::size_t>(path.dim));
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double t = std::clamp(phi.values[i], lo, hi);
    const auto v = interpolate(path, t);
    for (int c = 0; c < path.dim; ++c) {
      out.value(i, c) = v[static_cast<std::size_t>(c)];
    }
  }
  out.validate();
  return out;
}

SampledPath perturb(const SampledPath& path, const SampledPath& f) {
  path.validate();
  f.validate();
  if (f.dim != path.dim) {
    throw std::invalid_argument("perturbation dimension mismatch");
  }
  const double slack = 1e-9 * (path.span_end() - path.span_start());
  if (f.span_start() > path.span_start() + slack ||
      f.span_end() < path.span_end() - slack) {
    throw std::invalid_argument("perturbation does not cover the path span");
  }
  SampledPath out = path;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto fv = interpolate(f, path.times[i]);
    for (int c = 0; c < path.dim; ++c) {
      out.value(i, c) += fv[static_cast<std::size_t>(c)];
    }
  }
  out.validate();
  return out;
}

}  // namespace sbe
