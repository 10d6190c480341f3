#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "sbe/exact_sum.hpp"
#include "sbe/path.hpp"

namespace sbe {

// Weighted atomic measure on R^d: the time spent by a path near each of its
// samples. Weights are strictly positive time units; for measures produced
// by occupation() they sum to the window length up to a rounding unit.
struct OccupationMeasure {
  std::vector<double> atoms;    // m x dim, row-major
  std::vector<double> weights;  // m, strictly positive
  int dim = 1;
  double span_start = 0.0;
  double span_end = 0.0;

  std::size_t size() const { return weights.size(); }
  std::span<const double> atom(std::size_t i) const {
    return {atoms.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  double coord(std::size_t i, int c) const {
    return atoms[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
  }

  // Compensated sum of the weights.
  double total_mass() const;

  // Structural checks: positive finite weights, finite atoms, consistent
  // sizes. Throws std::invalid_argument.
  void validate() const;
};

// Left-endpoint Riemann discretization of the occupation measure of `path`
// over the window [s, t]: each sample cell [t_i, t_{i+1}) contributes an
// atom at the left sample value with weight (t_{i+1} wedge t) - (t_i vee s)
// when positive. Splitting the window at a grid point partitions the atoms
// exactly. Throws std::invalid_argument unless span_start <= s < t <= span_end.
OccupationMeasure occupation(const SampledPath& path, double s, double t);

// Atoms shifted by +shift, so a ball query of the result at center z sees
// what the original sees at z - shift. Throws on dimension mismatch.
OccupationMeasure translate(const OccupationMeasure& mu,
                            std::span<const double> shift);

// Sum of w_i * exp(i xi . atom_i). Throws on dimension mismatch.
std::complex<double> fourier_occupation(const OccupationMeasure& mu,
                                        std::span<const double> xi);

// Canonical closed-ball membership used by every query route: in one
// dimension the rounded difference x - y is compared against [-r, r]; in
// higher dimensions the left-to-right sum of squared coordinate differences
// is compared against r*r. Tests and the index share this definition so
// that mass comparisons are about selection and summation, not about two
// subtly different metrics.
bool ball_contains(std::span<const double> atom, std::span<const double> center,
                   double r);

// Immutable spatial index over the atoms of a measure. Queries are const,
// allocation-free in one dimension, and safe from any number of threads.
// All routes accumulate the selected weights exactly and round once, so a
// query returns bit-identical mass to brute-force exact summation.
class SmallBallIndex {
 public:
  explicit SmallBallIndex(const OccupationMeasure& mu);

  int dim() const { return dim_; }
  std::size_t size() const { return count_; }

  // Mass of the closed ball |x - y| <= r. Negative r returns 0 (flagged by
  // assert in debug builds).
  double query(double r, std::span<const double> y) const;

 private:
  int dim_ = 1;
  std::size_t count_ = 0;
  int base_exp_ = 0;  // global exponent floor for exact accumulation

  // d == 1: coordinate-sorted order with exact prefix sums.
  std::vector<double> sorted_coord_;
  std::vector<double> sorted_weight_;
  ExactPrefixSums prefix_;

  // d >= 2: uniform bucket grid in CSR layout.
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> box_min_;
  std::vector<double> cell_width_;
  std::vector<int> cells_per_axis_;
  std::vector<std::size_t> cell_offset_;
  std::vector<std::size_t> cell_atoms_;

  double query_1d(double r, double y) const;
  double query_nd(double r, std::span<const double> y) const;
};

double small_ball(const SmallBallIndex& idx, double r,
                  std::span<const double> y);
double small_ball(const SmallBallIndex& idx, double r, double y);

}  // namespace sbe
