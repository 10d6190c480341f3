#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sbe/norms.hpp"
#include "sbe/occupation.hpp"
#include "sbe/path.hpp"

namespace sbe {

// Declared regularity of a drift field: Besov indices of its time slices
// and the exponent of its variation in time. The declaration is an input
// (gridded samples cannot certify membership); construction measures each
// slice with the declared indices and keeps the values for reports.
struct DriftRegularity {
  double alpha = 0.5;  // spatial Besov smoothness of each time slice
  double p = 2.0;      // spatial integrability; may be INFINITY
  double q = 2.0;      // Besov block summability; may be INFINITY
  double r_var = 1.0;  // exponent of the drift's variation in time, >= 1
};

// Counts point evaluations of a field that fell outside its sampled box and
// were answered by the zero extension.
struct ExtensionStats {
  std::size_t evaluations = 0;
  std::size_t out_of_grid = 0;

  double fraction() const {
    return evaluations == 0
               ? 0.0
               : static_cast<double>(out_of_grid) /
                     static_cast<double>(evaluations);
  }
  void merge(const ExtensionStats& other) {
    evaluations += other.evaluations;
    out_of_grid += other.out_of_grid;
  }
};

// Time-dependent vector field sampled on a common uniform spatial grid:
// component c at time index t lives in slice t*components + c, whose values
// are point samples at the cell centers of the shared box. Evaluation is
// multilinear between cell centers (constant in the half-cell margin next
// to the box edge) and linear between time slices (constant beyond the
// first and last time). Points outside the box use the zero extension when
// enabled, and throw otherwise; either way the event is counted.
//
// Construction validates the shared grid, requires at least 64 cells per
// axis, and measures the Besov norm of every slice at the declared indices;
// a non-finite measurement rejects the field.
class DriftField {
 public:
  DriftField(std::vector<double> times, std::vector<GridDensity> slices,
             int components, DriftRegularity declared,
             bool zero_extension = true);

  // Samples f (returning `components` values per call) at the cell centers
  // of the box for every requested time.
  static DriftField sample(
      const std::function<std::vector<double>(double, std::span<const double>)>&
          f,
      const std::vector<double>& times, const BoxGridSpec& box, int components,
      DriftRegularity declared, bool zero_extension = true);

  // One-dimensional scalar convenience wrapper.
  static DriftField sample_1d(const std::function<double(double, double)>& f,
                              const std::vector<double>& times, double lo,
                              double hi, int cells, DriftRegularity declared,
                              bool zero_extension = true);

  int dim() const { return dim_; }
  int components() const { return components_; }
  std::size_t time_count() const { return times_.size(); }
  const std::vector<double>& time_grid() const { return times_; }
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }
  const GridDensity& slice(std::size_t time_index, int component) const;
  const DriftRegularity& declared() const { return declared_; }
  bool zero_extension() const { return zero_extension_; }

  // Measured Besov norms, one per slice in slice order, and the number of
  // Littlewood-Paley blocks the shared grid could resolve.
  const std::vector<double>& measured_besov() const { return measured_; }
  double measured_besov_max() const;
  int besov_blocks_used() const { return blocks_; }

  // Point evaluation; the vector overload returns all components.
  double value(double time, std::span<const double> x, int component,
               ExtensionStats* stats = nullptr) const;
  std::vector<double> value(double time, std::span<const double> x,
                            ExtensionStats* stats = nullptr) const;

  // out[c] += scale * f_c(time, x) for every component; counts a single
  // evaluation. The hot path of the averaging operator.
  void accumulate(double time, std::span<const double> x, double scale,
                  std::span<double> out, ExtensionStats* stats = nullptr) const;

 private:
  std::vector<double> times_;
  std::vector<GridDensity> slices_;
  int components_ = 1;
  int dim_ = 1;
  DriftRegularity declared_;
  bool zero_extension_ = true;
  std::vector<double> measured_;
  int blocks_ = 3;
  std::vector<double> lo_, hi_, h_;
  std::vector<int> cells_;
};

// The averaging operator: sum_i w_i f(s, x - atom_i) with multilinear
// interpolation of the slice at time s, i.e. the convolution of the time-s
// slice with the occupation measure, evaluated at x.
std::vector<double> averaged_field(const DriftField& field,
                                   const OccupationMeasure& mu,
                                   std::span<const double> x, double s,
                                   ExtensionStats* stats = nullptr);

// A two-parameter germ chi(s,t) with the coherence controls of the sewing
// construction: ||delta chi_{sut}|| <= rho(s,u)^a sigma(u,t)^b is the
// declared bound, with delta chi_{sut} = chi(s,t) - chi(s,u) - chi(u,t).
// Missing controls default to the interval length.
struct SewingGerm {
  std::function<std::vector<double>(double, double)> chi;
  double a = 1.0;
  double b = 1.0;
  std::function<double(double, double)> rho;
  std::function<double(double, double)> sigma;
};

struct GermCheckReport {
  int trials = 0;
  double worst_ratio = 0.0;  // max ||delta chi|| / rho^a sigma^b observed
  std::array<double, 3> worst_triple{0.0, 0.0, 0.0};
};

// Spot-checks the declared coherence bound on random triples s <= u <= t
// inside [lo, hi]. Throws std::invalid_argument when the exponents are
// inadmissible (need a, b > 0, a + b > 1) or the bound fails beyond
// rounding slack, naming the worst triple.
GermCheckReport check_germ(const SewingGerm& germ, double lo, double hi,
                           int trials, std::uint64_t seed);

struct SewingLevel {
  int level = 0;
  std::vector<double> endpoint;  // I(hi) at this refinement level
  // sup-norm gap to the previous level on the shared nodes; NaN at level 0
  double diff_from_prev = std::numeric_limits<double>::quiet_NaN();
};

struct SewingResult {
  std::vector<SewingLevel> levels;  // levels 0..max_level
  SampledPath path;                 // finest-level compensated Riemann sums
  bool decay_ok = true;
  double fitted_rate = 0.0;       // geometric ratio of successive level gaps
  double theoretical_rate = 0.0;  // branching^{-(a+b-1)}
  double tail_estimate = 0.0;     // extrapolated remaining refinement error
  std::string diagnostic;         // empty, or names the worst triple
  std::array<double, 3> worst_triple{0.0, 0.0, 0.0};
  double worst_delta_norm = 0.0;
};

// Integral of a germ by refinement: the level-L value at a node t is the
// sum of chi over the level-L uniform subintervals of [lo, t]. All levels
// up to max_level are reported so convergence can be monitored; the level
// gaps of a coherent germ decay geometrically at rate branching^{-(a+b-1)}.
// Non-decaying gaps set decay_ok = false and fill the divergence
// diagnostic with the worst-offending triple. branching = 2 is the dyadic
// scheme; branching = 3 gives the uniform-triadic cross-check.
SewingResult sewing_integrate(const SewingGerm& germ, double lo, double hi,
                              int max_level, int branching = 2);

// Exponent bookkeeping for the nonlinear Young integral: the declared SBE
// regularity (alpha1, p1, q1) of the driver's occupation measure, the
// variation exponents r1 (occupation path), r2 (drift in time), r3
// (composed path), the usable smoothness fraction gamma in (0,1), and the
// numerical controls.
struct YoungParams {
  double alpha1 = 0.5;
  double p1 = 2.0;  // recorded; not part of the budget inequalities
  double q1 = 2.0;
  double r1 = 1.0;
  double r2 = 1.0;
  double r3 = 1.0;
  double gamma = 0.5;
  int max_level = 10;        // finest refinement level of the germ sums
  double tolerance = 1e-8;   // Picard sup-norm stopping tolerance
  int max_iterations = 50;

  void validate() const;  // throws std::invalid_argument
};

// The compatibility inequalities linking the driver's declared SBE indices
// with the drift's Besov indices, evaluated with named verdicts and slack
// values (positive slack = satisfied strictly).
struct BudgetReport {
  double gamma0 = 0.0;            // alpha1 + alpha2 - d(1/q1 + 1/p2 - 1)
  double convolution_sum = 0.0;   // 1/q1 + 1/p2
  double convolution_upper = 0.0; // 1 + (alpha1 + alpha2)/d
  double time_sum = 0.0;          // 1/r1 + 1/r2
  double lower_slack = 0.0;       // convolution_sum - 1
  double upper_slack = 0.0;       // convolution_upper - convolution_sum
  double time_slack = 0.0;        // time_sum - 1
  double gamma_slack = 0.0;       // 1 + gamma - r1
  double picard_slack = 0.0;      // 1/r1 + gamma/r3 - 1 (informational)
  bool contraction_regime = false;  // gamma0 > 1
  bool ok = false;
  std::vector<std::string> violations;  // named failing inequalities
};

BudgetReport young_budget(const YoungParams& params,
                          const DriftRegularity& drift, int dim);

struct YoungIntegralReport {
  SampledPath integral;  // on the dyadic grid at params.max_level
  SewingResult sewing;
  BudgetReport budget;
  ExtensionStats extension;
  DriftRegularity drift_declared;
  double drift_measured_besov_max = 0.0;
};

// The nonlinear Young integral t -> int_0^t f(s, theta_s - omega_s) ds,
// constructed by sewing the germ chi(s,t) = averaged_field(f,
// occupation(omega, s, t), theta_s, s). The budget inequalities are checked
// before any germ work; violations throw with the named inequality.
YoungIntegralReport young_integral_report(const DriftField& f,
                                          const SampledPath& theta,
                                          const SampledPath& omega,
                                          const YoungParams& params);
SampledPath young_integral(const DriftField& f, const SampledPath& theta,
                           const SampledPath& omega,
                           const YoungParams& params);

struct PicardReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> sup_changes;        // sup |theta_{k+1} - theta_k|
  std::vector<double> contraction_ratios; // successive change ratios
  bool contraction_expected = false;      // gamma0 > 1
  BudgetReport budget;
  ExtensionStats extension;
  DriftRegularity drift_declared;
  double drift_measured_besov_max = 0.0;
  std::string message;  // empty, or the non-convergence note
};

struct OdeSolution {
  SampledPath x;      // the solution x = theta - omega on the dyadic grid
  SampledPath theta;  // the Picard fixed point
  PicardReport report;
};

// Solves x_t = x_0 - (omega_t - omega_start) + int f(s, x_s) ds by Picard
// iteration on theta = x + omega: theta^{k+1} = x_0 + omega_start +
// integral of the averaged-field germ along theta^k. Stops when the
// sup-norm change drops below params.tolerance; exhausting max_iterations
// returns converged = false together with the contraction history. The
// optional initial guess is a theta-space path resampled onto the grid
// (default: the constant theta = x_0 + omega_start).
OdeSolution solve_ode_report(const DriftField& f, const SampledPath& omega,
                             std::span<const double> x0,
                             const YoungParams& params,
                             const SampledPath* initial_theta = nullptr);
SampledPath solve_ode(const DriftField& f, const SampledPath& omega,
                      std::span<const double> x0, const YoungParams& params);

struct FlowSolution {
  double start_time = 0.0;
  std::vector<double> start;
  SampledPath x;  // solution on [start_time, span end]
  PicardReport report;
};

struct FlowTable {
  std::vector<double> start_times;
  std::vector<std::vector<double>> starts;
  std::vector<FlowSolution> cells;  // start_times-major layout
  double composition_tolerance = 0.0;
  double max_composition_error = 0.0;
  std::vector<std::string> flagged;  // cells violating the composition law
  bool composition_ok = true;

  const FlowSolution& at(std::size_t time_index, std::size_t start_index) const;
};

// Solves from every (start time, start point) pair to the end of the span
// and verifies the flow composition law phi(u, t, phi(s, u, x0)) =
// phi(s, t, x0) against end values, within composition_tolerance (default
// 2x the Picard tolerance). Segment grids reuse the global step so flows
// started on the global dyadic grid share leaf boundaries exactly.
FlowTable flow(const DriftField& f, const SampledPath& omega,
               const std::vector<double>& start_times,
               const std::vector<std::vector<double>>& starts,
               const YoungParams& params, double composition_tolerance = 0.0);

// phi(start_times[time_index], t, starts[start_index]) by interpolation.
std::vector<double> flow_value(const FlowTable& table, std::size_t time_index,
                               std::size_t start_index, double t);

// The inverse map psi(s, t, .) of phi(s, t, .), computed as the flow of the
// time-reversed equation: driver r -> omega_{t+s-r} and drift
// (u, x) -> -f(t+s-u, x).
std::vector<double> flow_inverse(const DriftField& f, const SampledPath& omega,
                                 double s, double t, std::span<const double> z,
                                 const YoungParams& params);

}  // namespace sbe
