#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbe/occupation.hpp"
#include "sbe/path.hpp"

namespace sbe {

// Geometric radius grid r_i = r_min * 2^{i/points_per_octave}, i >= 0,
// truncated at r_max. The small-radius truncation is the most consequential
// numerical choice for atomic measures and is always reported alongside
// values derived from it.
struct GeometricRGrid {
  double r_min = 0.0;
  double r_max = 0.0;
  int points_per_octave = 8;
};

// Uniform node grid per axis (nodes, not cells): points[c] nodes spanning
// [lo[c], hi[c]].
struct UniformYGrid {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> points;
};

// Parameters of the small-ball norm ||r^{-alpha-d} D_k F(r,y)|| in
// L^q_y L^p_r(dy x dr/r). Infinite p or q are realized as grid maxima.
struct SbeParams {
  double alpha = 0.5;
  double p = 2.0;  // inner exponent in r; may be INFINITY
  double q = 2.0;  // outer exponent in y; may be INFINITY
  int k = -1;      // difference order; negative means derive from alpha, d
  GeometricRGrid r_grid;
  UniformYGrid y_grid;
};

// Difference order used when SbeParams::k is negative: ceil(alpha + d - 1).
int derived_delta_order(double alpha, int dim);

// Defaults from the measure: r_min = 2x median nearest-neighbour spacing,
// r_max = support diameter, y grid = support inflated by r_max. Every
// ingredient commutes with exact power-of-two dilation of the atoms, so
// automatically parametrized norms scale exactly under dyadic dilation.
SbeParams auto_sbe_params(const OccupationMeasure& mu, double alpha, double p,
                          double q);

// Density sampled on a uniform cell grid: values are densities (mass per
// unit volume) on cells [lo + i*h, lo + (i+1)*h).
struct GridDensity {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> cells;      // per axis
  std::vector<double> values;  // row-major, prod(cells) entries
  int dim = 1;

  double cell_volume() const;
  double total_mass() const;
  void validate() const;
};

struct BoxGridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> cells;
};

// Mass-conserving cloud-in-cell deposit: each atom's weight is split
// multilinearly over the neighbouring cells (fractions that would fall
// outside the box are folded back into the edge cell). Throws when an atom
// lies outside the box.
GridDensity deposit_grid(const OccupationMeasure& mu, const BoxGridSpec& spec);

// The small-ball norm of an atomic measure. Inner integral: log-trapezoid
// over the geometric r grid of |r^{-alpha-d} D_k F(r,y)|^p against dr/r;
// outer: Riemann sum over the y grid of inner^{q/p} times cell volume, then
// the 1/q power. Throws when the y grid fails to cover the support
// inflated by r_max.
double sbe_norm(const OccupationMeasure& mu, const SbeParams& params);

// Same norm for a gridded density. In one dimension ball masses are exact
// integrals of the piecewise-constant density; in higher dimensions cells
// are counted by their centers.
double sbe_norm(const GridDensity& rho, const SbeParams& params);

// Truncation and resolution sensitivity attached to a single norm value.
struct SbeReport {
  double value = 0.0;
  SbeParams params;
  // (r_min, value) pairs for increasing truncation radius
  std::vector<std::pair<double, double>> r_min_sensitivity;
  // (label, value) pairs for refined quadrature grids
  std::vector<std::pair<std::string, double>> grid_refinement;
};
SbeReport sbe_norm_report(const OccupationMeasure& mu, const SbeParams& params);

// Littlewood-Paley Besov norm on a periodic grid. Frequencies are measured
// in integer cycles per domain; dyadic blocks N = 2, 4, ... are cut by a
// smooth radial annulus profile supported in N*[1/2, 2], together with a
// low-pass block N = 1. Block norms are spatial L^p on the grid; they are
// combined as sup_N N^alpha (block) or sum_N N^alpha (block).
struct BesovParams {
  double alpha = 0.5;
  double spatial_p = 2.0;  // may be INFINITY
  int blocks = 5;          // number of annular blocks (>= 3)
  double profile_sharpness = 1.0;
};

enum class BlockSummability { Sup, Sum };

double besov_norm(const GridDensity& rho, const BesovParams& params,
                  BlockSummability summability);

// Per-block diagnostics (N, block norm) for tests and reports.
std::vector<std::pair<double, double>> besov_blocks(const GridDensity& rho,
                                                    const BesovParams& params);

// Exact p-variation of a sequence under a caller-supplied increment norm:
// the supremum over sub-partitions of sum ||f(t_{i+1}) - f(t_i)||^p, via
// O(n^2) dynamic programming; returns the (1/p)-th power.
double p_variation(
    std::size_t n,
    const std::function<double(std::size_t, std::size_t)>& increment_norm,
    double p);

struct VariationParams {
  enum class Mode { ExactDp, DyadicBound };
  double p = 2.0;
  Mode mode = Mode::ExactDp;
  double epsilon = 0.5;  // dyadic-bound slack, in (0,1)
  void validate() const;
};

// Upper estimator of the q-variation from increment norms on nested dyadic
// partitions: bound^q = C(q, eps) * sum_levels N^eps * sum_k ||inc||^q with
// C = 2^{q-1} (1 - 2^{-eps/(q-1)})^{-(q-1)} for q > 1 and C = 1 at q = 1.
struct DyadicVariationBound {
  double bound = 0.0;
  double constant = 1.0;
  std::vector<double> level_sums;  // sum_k ||inc||^q per level
};
DyadicVariationBound dyadic_variation_bound(
    const std::vector<std::vector<double>>& level_increment_norms, double q,
    double epsilon);

// p-variation of t -> occupation measure of path over [a, t] along the
// given partition, with increments measured in the small-ball norm;
// exponent r >= 1.
double variation_of_occupation(const SampledPath& path, double a,
                               const std::vector<double>& partition, double r,
                               const SbeParams& sbe);

// Least-squares fit of log(norm) against log(span).
struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
PowerFit holder_exponent(const std::vector<double>& spans,
                         const std::vector<double>& norms);

}  // namespace sbe
