#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sbe {

// A path sampled on a strictly increasing (not necessarily uniform) time
// grid, with d-dimensional values stored row-major (sample index fastest in
// time, coordinates contiguous per sample).
struct SampledPath {
  std::vector<double> times;
  std::vector<double> values;  // size() == times.size() * dim
  int dim = 1;

  std::size_t size() const { return times.size(); }
  double value(std::size_t i, int coord) const {
    return values[i * static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(coord)];
  }
  double& value(std::size_t i, int coord) {
    return values[i * static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(coord)];
  }
  std::span<const double> point(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  double span_start() const { return times.front(); }
  double span_end() const { return times.back(); }

  // sup over samples of the Euclidean norm of the value
  double sup_norm() const;

  // Throws std::invalid_argument when the grid is not strictly increasing,
  // a value is non-finite, n < 2, or sizes disagree.
  void validate() const;
};

// Linear interpolation at time t (clamped to the span endpoints).
std::vector<double> interpolate(const SampledPath& path, double t);
double interpolate_1d(const SampledPath& path, double t);

struct GaussianSpec {
  enum class Kind { BrownianMotion, FractionalBrownian, CustomCovariance };

  Kind kind = Kind::BrownianMotion;
  double hurst = 0.5;
  int dim = 1;
  // Per-coordinate covariance R(s,t) of the unpinned process; coordinates
  // are independent and identically distributed.
  std::function<double(double, double)> covariance;

  static GaussianSpec brownian(int dim = 1);
  static GaussianSpec fractional(double hurst, int dim = 1);
  // Checked for symmetry and positive semidefiniteness on a probe grid at
  // construction; throws std::invalid_argument naming the offending probe
  // times otherwise.
  static GaussianSpec custom(std::function<double(double, double)> covariance,
                             int dim = 1);
};

// Samples the process pinned to start at 0 on a uniform n-point grid over
// [span_start, span_end]. Fractional Brownian increments are generated by
// circulant embedding of the stationary increment covariance, with a dense
// exact-covariance factorization fallback when the embedding has negative
// eigenvalues beyond tolerance. Identical arguments give identical output.
SampledPath gen_gaussian(const GaussianSpec& spec, std::size_t n,
                         double span_start, double span_end,
                         std::uint64_t seed);

// Explicit Euler-Maruyama on the uniform n-point grid; throws
// std::runtime_error naming the first step at which an iterate turns
// non-finite.
SampledPath euler_maruyama_1d(const std::function<double(double, double)>& b,
                              const std::function<double(double, double)>& sigma,
                              double x0, std::size_t n, double span_start,
                              double span_end, std::uint64_t seed);

// Time change: phi is a one-dimensional sampled map whose values form a
// strictly increasing sub-grid of the path's span; the output lives on
// phi's domain grid and carries the path linearly interpolated at phi's
// values. Throws std::invalid_argument for non-monotone phi or when phi's
// range leaves the path span.
SampledPath reparametrize(const SampledPath& path, const SampledPath& phi);

// Pointwise sum; f is resampled onto the path's grid by linear
// interpolation. f must cover the path's span; dimension mismatch throws.
SampledPath perturb(const SampledPath& path, const SampledPath& f);

}  // namespace sbe
