#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sbe/norms.hpp"
#include "sbe/path.hpp"
#include "sbe/young.hpp"

namespace sbe {

// delta0 = (beta - 2 alpha) / (beta + 2 d), the cap on the extra span
// exponent of the weighted second moment. The rearranged defining identity
// (beta + 2d)(1 - delta0) = 2(alpha + d) is re-checked on every call;
// a mismatch throws std::logic_error.
double delta_zero(double beta, double alpha, int dim);

// Supremum-side regularity exponent of the occupation density for the
// sampled process, minus a 0.05 safety margin: (1/H - d) - 0.05. Throws for
// custom-covariance processes (no admissible exponent is known) and when
// the margin exhausts the admissible range.
double admissible_beta(const GaussianSpec& spec);

struct SpanMoment {
  double span = 0.0;
  double mean = 0.0;       // E[ ||mu_{s,t}||^2_{SBE} (1 + sup|omega|)^{-d} ]
  double std_error = 0.0;  // sample standard error across paths
  int windows = 0;         // disjoint windows of this span per path
};

struct BootstrapSlope {
  double slope = 0.0;
  double lo = 0.0;  // lower confidence bound
  double hi = 0.0;  // upper confidence bound
  int resamples = 0;
  double confidence = 0.95;
};

// Truncation diagnostics: the event E(M) = {sup|omega| <= M}, its
// empirical probability, and the unweighted moment restricted to it
// (monotone increasing in M by construction).
struct TruncationDiagnostic {
  double level = 0.0;
  double event_fraction = 0.0;
  double truncated_moment = 0.0;
};

struct MomentScalingReport {
  std::string process_label;
  int dim = 1;
  double hurst = 0.5;
  double alpha = 0.0;
  double p = 2.0;
  double q = 2.0;
  int moment_order = 2;
  double beta = 0.0;        // density regularity used for the targets
  double delta0 = 0.0;      // (beta - 2 alpha)/(beta + 2 dim)
  double target = 0.0;      // 1 + delta0: cap on the expected slope
  double mean_weight = 0.0; // average of (1 + sup|omega|)^{-d}
  std::vector<SpanMoment> spans;
  PowerFit fit;             // log mean against log span
  BootstrapSlope slope;
  std::vector<TruncationDiagnostic> truncation;
};

struct McOptions {
  int windows_per_span = 4;
  int bootstrap_resamples = 1000;
  double confidence = 0.95;
  // fixed quadrature grids, shared across spans so the fitted slope
  // compares like with like
  GeometricRGrid r_grid{0.0078125, 2.0, 4};
  // one axis given here is replicated across the process dimension
  UniformYGrid y_grid{{-8.0}, {8.0}, {161}};
  std::vector<double> truncation_levels{1.0, 2.0, 4.0};
  int threads = 1;
};

// Monte Carlo moment-scaling study: per-path weighted squared small-ball
// norms of occupation windows, per-span means, and a log-log slope with a
// bootstrap confidence interval. Spans must be dyadic fractions of the unit
// interval; alpha must avoid half-integers and stay below beta/2.
// Reproducible bit-for-bit from (arguments, seed), independent of the
// thread count.
MomentScalingReport mc_moment_scaling(const GaussianSpec& spec, double alpha,
                                      const std::vector<double>& spans,
                                      int n_paths, int n_steps,
                                      std::uint64_t seed,
                                      const McOptions& opts = {});

struct SdeReport {
  MomentScalingReport equation;  // Euler-Maruyama paths of dX = b dt + sigma dW
  MomentScalingReport baseline;  // Brownian paths, same configuration
  bool slope_ci_overlap = false;
  // coupled dilation check: doubling sigma multiplies the same path's
  // small-ball norm by 2^{-alpha}, measured with automatically derived
  // dilation-covariant parameters (q = 1, where the law is exact)
  double dilation_ratio = 0.0;
  double dilation_expected = 0.0;
};

// Runs the moment-scaling pipeline on Euler-Maruyama solutions of
// dX = b(t, X) dt + dW next to a Brownian baseline with the same seeds.
SdeReport sde_occupation_experiment(
    const std::function<double(double, double)>& b, int n_paths,
    const std::vector<double>& spans, double alpha, int n_steps,
    std::uint64_t seed, const McOptions& opts = {});

struct ReparamReport {
  double original = 0.0;     // V^r of t -> mu_{a,t} in the small-ball norm
  double transformed = 0.0;  // same for the time-changed path
  double ratio = 0.0;        // transformed / original
  double phi_lip_lower = 0.0;
  double phi_lip_upper = 0.0;
};

// Compares the r-variation of the occupation small-ball norms before and
// after the time change phi (a sampled increasing map). The partition of
// the transformed path is the phi-image of the original one, so the
// identity map reproduces the original value exactly.
ReparamReport reparam_experiment(const SampledPath& path,
                                 const SampledPath& phi, double r,
                                 const SbeParams& sbe,
                                 int partition_points = 17);

struct ShiftReport {
  // V^r of t -> (mu^{omega+f} - mu^{omega+g})_{a,t} in the negative Besov
  // norm of order -gamma
  double difference_variation = 0.0;
  double reference_variation = 0.0;    // same norm for mu^{omega+g} alone
  double perturbation_variation = 0.0; // V^r of f - g
  double perturbation_sup = 0.0;       // sup |f - g|
  double g_variation = 0.0;            // V^r of g
  // reference * (perturbation_variation +
  //              (1 + g_variation) * perturbation_sup)
  double bound = 0.0;
  double ratio = 0.0;  // difference_variation / bound; 0 when both vanish
};

// Stability of the occupation measure under finite-variation shifts of the
// path, measured against the product-form bound; the ratio should be of
// one order of magnitude across families of smooth (f, g).
ShiftReport shift_experiment(const SampledPath& path, const SampledPath& f,
                             const SampledPath& g, double r, double gamma,
                             const BesovParams& besov, const BoxGridSpec& box,
                             int partition_points = 17);

struct RegularizationOptions {
  // driver-side indices; alpha1 defaults to 90% of the admissible cap
  // 1/(2H) - d/2
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  double q1 = 2.0;
  // drift declaration
  double p2 = 1.5;
  double q2 = std::numeric_limits<double>::infinity();
  double gamma = 0.5;
  double r1 = 1.0;
  double r2 = 1.0;
  double r3 = 1.0;
  int level_lo = 6;
  int level_hi = 11;
  int cells = 1024;       // drift grid cells per axis
  double box_half = 4.0;  // drift box is [-box_half, box_half]^d
  int band_limit = 24;    // highest wave number of the random drift
  double amplitude = 0.5; // overall drift amplitude; 0 gives the zero drift
  double x0 = 0.3;        // starting point, replicated per coordinate
  double tolerance = 1e-8;
  int max_iterations = 60;
};

struct RegularizationLevelResult {
  int level = 0;
  std::vector<double> end;      // solution at the end of the span
  double diff_from_prev =
      std::numeric_limits<double>::quiet_NaN();  // euclidean gap
};

struct RegularizationReport {
  double hurst = 0.5;
  int dim = 1;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  bool refused = false;
  std::string refusal;  // named budget inequalities when refused
  BudgetReport budget;
  std::vector<RegularizationLevelResult> levels;
  // fitted self-convergence order: mean log2 ratio of successive gaps
  double self_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> contraction;  // contraction ratios at the finest level
  bool converged = false;
  double drift_measured_besov = 0.0;
  double extension_fraction = 0.0;  // out-of-box evaluations at finest level
};

// Desk-scale regularization-by-noise demonstration: a fractional Brownian
// driver, a band-limited random drift with spectral envelope
// |k|^{-drift_roughness} declared at Besov smoothness alpha2, and Picard
// solves at increasing dyadic levels. An incompatible budget refuses up
// front with the named inequalities instead of solving.
RegularizationReport regularization_demo(double hurst, int dim, double alpha2,
                                         double drift_roughness, int n_grid,
                                         std::uint64_t seed,
                                         const RegularizationOptions& opts = {});

struct VariationCrossCheck {
  double direct = 0.0;        // DP q-variation over the finest partition
  double dyadic_bound = 0.0;  // nested-dyadic upper estimator
  double constant = 0.0;      // C(q, eps) inside the estimator
  double slack_factor = 0.0;  // proven cap on dyadic_bound / direct
  bool consistent = false;    // direct <= bound <= slack * direct
};

// Cross-module consistency of the two variation routes applied to
// t -> mu_{a,t}: the direct dynamic program on the 2^levels-interval
// partition against the dyadic-level estimator built from the same
// increment norms.
VariationCrossCheck variation_cross_check(const SampledPath& path, int levels,
                                          double q, double eps,
                                          const SbeParams& sbe);

}  // namespace sbe
