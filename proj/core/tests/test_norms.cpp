#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sbe/norms.hpp"
#include "sbe/occupation.hpp"
#include "sbe/path.hpp"
#include "sbe/random.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

sbe::OccupationMeasure uniform_law_atoms(std::size_t n) {
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu.atoms.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    mu.weights.push_back(1.0 / static_cast<double>(n));
  }
  return mu;
}

// Independent quadrature of the 1-d norm for a caller-supplied ball-mass
// function: plain pow-based radius grid, Riemann y sum, no shared code with
// the library's ladder.
template <class Mass>
double reference_norm_1d(Mass&& mass, double alpha, double p, double q, int k,
                         double r_min, double r_max, int ppo, double y_lo,
                         double y_hi, int y_pts) {
  REQUIRE(k == 1);  // reference hard-codes the order-1 difference
  const int nodes =
      static_cast<int>(std::floor(ppo * std::log2(r_max / r_min) + 1e-9)) + 1;
  const double du = std::log(2.0) / ppo;
  const double step = (y_hi - y_lo) / (y_pts - 1);
  double outer = 0.0;
  for (int iy = 0; iy < y_pts; ++iy) {
    const double y = y_lo + iy * step;
    double inner = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double r = r_min * std::pow(2.0, static_cast<double>(i) / ppo);
      const double diff =
          mass(r, y) - 3.0 * mass(r / 2.0, y) + 2.0 * mass(r / 4.0, y);
      const double g = std::abs(diff) * std::pow(r, -alpha - 1.0);
      const double w = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
      inner += w * std::pow(g, p) * du;
    }
    outer += std::pow(inner, q / p) * step;
  }
  return std::pow(outer, 1.0 / q);
}

double uniform_interval_ball_mass(double r, double y) {
  return std::max(0.0, std::min(y + r, 1.0) - std::max(y - r, 0.0));
}

std::vector<std::complex<double>> naive_dft_1d(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * static_cast<double>(m) *
                         static_cast<double>(j) / static_cast<double>(n);
      acc += v[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[m] = acc;
  }
  return out;
}

// Same profile definition as the library's Littlewood-Paley cutoff; the
// oracle checks the transform pipeline, not the profile choice.
double reference_cutoff(double t, double sharpness) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double u = t - 1.0;
  const double a = std::exp(-sharpness / u);
  const double b = std::exp(-sharpness / (1.0 - u));
  return b / (a + b);
}

// L^1 block norm of a 1-d density via the naive DFT, no FFT involved.
double naive_block_norm_l1(const sbe::GridDensity& rho, double n_block,
                           bool low_pass, double sharpness) {
  const std::size_t n = static_cast<std::size_t>(rho.cells[0]);
  const auto hat = naive_dft_1d(rho.values);
  const double h = (rho.hi[0] - rho.lo[0]) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> field = 0.0;
    for (std::size_t idx = 0; idx < n; ++idx) {
      const int m = idx <= n / 2 ? static_cast<int>(idx)
                                 : static_cast<int>(idx) - static_cast<int>(n);
      const double f = std::abs(static_cast<double>(m));
      const double mult =
          low_pass ? reference_cutoff(f, sharpness)
                   : reference_cutoff(f / n_block, sharpness) -
                         reference_cutoff(f / (n_block / 2.0), sharpness);
      const double ang = 2.0 * M_PI * static_cast<double>(idx) *
                         static_cast<double>(j) / static_cast<double>(n);
      field += hat[idx] * mult *
               std::complex<double>(std::cos(ang), std::sin(ang));
    }
    acc += std::abs(field.real() / static_cast<double>(n));
  }
  return acc * h;
}

double exhaustive_p_variation(const std::vector<double>& v, double p) {
  const std::size_t n = v.size();
  const std::size_t interior = n - 2;
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << interior); ++mask) {
    double acc = 0.0;
    std::size_t prev = 0;
    for (std::size_t pos = 1; pos + 1 < n; ++pos) {
      if ((mask >> (pos - 1)) & 1u) {
        const double inc = std::abs(v[pos] - v[prev]);
        acc += p == 2.0 ? inc * inc : std::pow(inc, p);
        prev = pos;
      }
    }
    const double inc = std::abs(v[n - 1] - v[prev]);
    acc += p == 2.0 ? inc * inc : std::pow(inc, p);
    best = std::max(best, acc);
  }
  return std::pow(best, 1.0 / p);
}

sbe::GridDensity gaussian_density_1d(double center, double sigma, double lo,
                                     double hi, int cells) {
  sbe::GridDensity rho;
  rho.dim = 1;
  rho.lo = {lo};
  rho.hi = {hi};
  rho.cells = {cells};
  const double h = (hi - lo) / cells;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  for (int c = 0; c < cells; ++c) {
    const double x = lo + (c + 0.5) * h;
    const double z = (x - center) / sigma;
    rho.values.push_back(norm * std::exp(-0.5 * z * z));
  }
  return rho;
}

}  // namespace

TEST_CASE("difference order derivation") {
  CHECK(sbe::derived_delta_order(0.4, 1) == 1);
  CHECK(sbe::derived_delta_order(1.0, 1) == 1);
  CHECK(sbe::derived_delta_order(1.2, 1) == 2);
  CHECK(sbe::derived_delta_order(0.5, 2) == 2);
  CHECK(sbe::derived_delta_order(2.0, 3) == 4);
  CHECK_THROWS_AS(sbe::derived_delta_order(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sbe::derived_delta_order(0.5, 0), std::invalid_argument);
}

TEST_CASE("empty measure has zero norm") {
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {0.01, 1.0, 8};
  params.y_grid = {{-2.0}, {3.0}, {33}};
  CHECK(sbe::sbe_norm(mu, params) == 0.0);
}

TEST_CASE("parameter validation") {
  const auto mu = uniform_law_atoms(16);
  sbe::SbeParams good;
  good.alpha = 0.4;
  good.r_grid = {0.05, 1.0, 8};
  good.y_grid = {{-1.5}, {2.5}, {65}};
  CHECK(sbe::sbe_norm(mu, good) > 0.0);

  auto expect_throw = [&](auto&& tweak) {
    sbe::SbeParams bad = good;
    tweak(bad);
    CHECK_THROWS_AS(sbe::sbe_norm(mu, bad), std::invalid_argument);
  };
  expect_throw([](sbe::SbeParams& p) { p.alpha = 0.0; });
  expect_throw([](sbe::SbeParams& p) { p.alpha = -0.3; });
  expect_throw([](sbe::SbeParams& p) { p.p = 0.5; });
  expect_throw([](sbe::SbeParams& p) { p.q = 0.0; });
  expect_throw([](sbe::SbeParams& p) { p.r_grid.r_min = 0.0; });
  expect_throw([](sbe::SbeParams& p) { p.r_grid.r_min = 2.0; });
  expect_throw([](sbe::SbeParams& p) { p.r_grid.points_per_octave = 3; });
  expect_throw([](sbe::SbeParams& p) { p.y_grid.points = {65, 65}; });
  // y grid that misses the r_max-inflated support
  expect_throw([](sbe::SbeParams& p) { p.y_grid = {{0.0}, {1.0}, {33}}; });
  expect_throw([](sbe::SbeParams& p) { p.y_grid = {{-1.5}, {1.2}, {33}}; });
}

TEST_CASE("uniform law matches an independent dense-grid quadrature") {
  // The uniform measure on [0,1] represented exactly as a gridded density;
  // ball masses on both routes are exact interval lengths, so the comparison
  // isolates quadrature resolution (the reference runs a 10x finer grid).
  sbe::GridDensity rho;
  rho.dim = 1;
  rho.lo = {0.0};
  rho.hi = {1.0};
  rho.cells = {64};
  rho.values.assign(64, 1.0);

  sbe::SbeParams params;
  params.alpha = 0.4;
  params.p = 2.0;
  params.q = 2.0;
  params.r_grid = {1.0 / 64.0, 1.0, 8};
  params.y_grid = {{-1.5}, {2.5}, {401}};

  const double value = sbe::sbe_norm(rho, params);
  const double reference =
      reference_norm_1d(uniform_interval_ball_mass, 0.4, 2.0, 2.0, 1,
                        1.0 / 64.0, 1.0, 80, -1.5, 2.5, 4001);
  CHECK(value == doctest::Approx(reference).epsilon(0.01));
}

TEST_CASE("atomic and density routes agree on a smooth law") {
  const auto mu = uniform_law_atoms(1024);
  sbe::BoxGridSpec spec;
  spec.lo = {-0.2};
  spec.hi = {1.2};
  spec.cells = {1024};
  const auto rho = sbe::deposit_grid(mu, spec);

  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {1.0 / 16.0, 1.0, 8};
  params.y_grid = {{-1.5}, {2.5}, {201}};

  const double atomic = sbe::sbe_norm(mu, params);
  const double gridded = sbe::sbe_norm(rho, params);
  CHECK(atomic == doctest::Approx(gridded).epsilon(0.03));
}

TEST_CASE("exact dyadic dilation covariance of automatic parameters") {
  // Halving every atom is exact in floating point; every automatically
  // derived parameter follows the dilation exactly, so the norm ratio equals
  // the theoretical factor far below the quadrature error scale.
  sbe::Rng rng(2024);
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  for (int i = 0; i < 500; ++i) {
    mu.atoms.push_back(0.1 * rng.next_normal());
    mu.weights.push_back(rng.uniform(0.5, 1.5));
  }
  sbe::OccupationMeasure half = mu;
  for (auto& x : half.atoms) x /= 2.0;

  const double alpha = 0.3;
  const auto params = sbe::auto_sbe_params(mu, alpha, 2.0, 1.0);
  const auto params_half = sbe::auto_sbe_params(half, alpha, 2.0, 1.0);
  CHECK(params_half.r_grid.r_min == params.r_grid.r_min / 2.0);
  CHECK(params_half.r_grid.r_max == params.r_grid.r_max / 2.0);

  const double v = sbe::sbe_norm(mu, params);
  const double v_half = sbe::sbe_norm(half, params_half);
  CHECK(v > 0.0);
  CHECK(v_half / v == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-9));
}

TEST_CASE("density dilation scales by the regularity exponent") {
  // phi_N = N phi(N x) on deliberately non-matching grids; with the outer
  // index q = 1 the norm scales exactly by N^alpha in the continuum.
  const double sigma = 0.1;
  const auto phi = gaussian_density_1d(0.0, sigma, -0.8, 0.8, 1024);
  const auto phi2 = gaussian_density_1d(0.0, sigma / 2.0, -0.4, 0.4, 1024);
  // phi2 really is 2 phi(2x): rebuild values to avoid normalization drift
  // (gaussian_density_1d already gives exactly that since the 1/sigma
  // prefactor doubles).

  sbe::SbeParams params;
  params.alpha = 0.3;
  params.p = 2.0;
  params.q = 1.0;
  params.r_grid = {0.01, 1.6, 8};
  params.y_grid = {{-2.4}, {2.4}, {241}};

  sbe::SbeParams params2;
  params2.alpha = 0.3;
  params2.p = 2.0;
  params2.q = 1.0;
  params2.r_grid = {0.006, 0.8, 8};
  params2.y_grid = {{-1.2}, {1.2}, {257}};

  const double v = sbe::sbe_norm(phi, params);
  const double v2 = sbe::sbe_norm(phi2, params2);
  CHECK(v2 / v == doctest::Approx(std::pow(2.0, 0.3)).epsilon(0.02));
}

TEST_CASE("translation invariance when the window moves with the measure") {
  sbe::Rng rng(77);
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  for (int i = 0; i < 300; ++i) {
    mu.atoms.push_back(rng.uniform(0.0, 1.0));
    mu.weights.push_back(rng.uniform(0.5, 1.5));
  }
  const double shift = 0.7319;
  const auto shifted = sbe::translate(mu, std::vector<double>{shift});

  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {0.05, 2.0, 8};
  params.y_grid = {{-2.2}, {3.2}, {129}};
  sbe::SbeParams params_shifted = params;
  params_shifted.y_grid.lo = {-2.2 + shift};
  params_shifted.y_grid.hi = {3.2 + shift};

  const double v = sbe::sbe_norm(mu, params);
  const double vs = sbe::sbe_norm(shifted, params_shifted);
  CHECK(vs == doctest::Approx(v).epsilon(1e-10));
}

TEST_CASE("norm report exposes the small-radius divergence") {
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  mu.atoms = {0.2, 0.55, 0.9};
  mu.weights = {0.5, 1.0, 0.25};

  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {0.05, 2.0, 8};
  params.y_grid = {{-2.5}, {3.5}, {161}};

  const auto report = sbe::sbe_norm_report(mu, params);
  CHECK(report.value > 0.0);
  REQUIRE(report.r_min_sensitivity.size() == 5);
  // pairs are ordered by increasing r_min; the middle one is the nominal value
  CHECK(report.r_min_sensitivity[2].first == params.r_grid.r_min);
  CHECK(report.r_min_sensitivity[2].second == report.value);
  for (std::size_t i = 0; i + 1 < report.r_min_sensitivity.size(); ++i) {
    CHECK(report.r_min_sensitivity[i].first <
          report.r_min_sensitivity[i + 1].first);
    // atomic measures diverge as the truncation radius shrinks
    CHECK(report.r_min_sensitivity[i].second >=
          report.r_min_sensitivity[i + 1].second * (1.0 - 1e-12));
  }
  CHECK(report.r_min_sensitivity.front().second >
        2.0 * report.r_min_sensitivity.back().second);
  REQUIRE(report.grid_refinement.size() == 2);
  for (const auto& [label, value] : report.grid_refinement) {
    CHECK(!label.empty());
    CHECK(value > 0.0);
    CHECK(std::isfinite(value));
  }
}

TEST_CASE("infinite indices as grid maxima") {
  const auto mu = uniform_law_atoms(128);
  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {0.05, 1.0, 8};
  params.y_grid = {{-1.5}, {2.5}, {101}};

  params.p = kInf;
  params.q = 2.0;
  const double vp = sbe::sbe_norm(mu, params);
  CHECK(vp > 0.0);
  CHECK(std::isfinite(vp));

  params.p = 2.0;
  params.q = kInf;
  const double vq = sbe::sbe_norm(mu, params);
  CHECK(vq > 0.0);

  params.p = kInf;
  const double vboth = sbe::sbe_norm(mu, params);
  CHECK(vboth > 0.0);
  // sup over y of the r-sup is reached at some grid node; it lower-bounds
  // nothing in general, just check finiteness and determinism
  CHECK(vboth == sbe::sbe_norm(mu, params));
}

TEST_CASE("automatic parameters require a nonempty measure") {
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  CHECK_THROWS_AS(sbe::auto_sbe_params(mu, 0.4, 2.0, 2.0),
                  std::invalid_argument);
}

TEST_CASE("cloud-in-cell deposit") {
  sbe::BoxGridSpec spec;
  spec.lo = {0.0};
  spec.hi = {1.0};
  spec.cells = {4};

  SUBCASE("atom at a cell center lands in that cell") {
    sbe::OccupationMeasure mu;
    mu.dim = 1;
    mu.span_start = 0.0;
    mu.span_end = 1.0;
    mu.atoms = {0.375};  // center of cell 1
    mu.weights = {1.0};
    const auto rho = sbe::deposit_grid(mu, spec);
    CHECK(rho.values[0] == 0.0);
    CHECK(rho.values[1] == doctest::Approx(4.0));  // mass 1 / volume 0.25
    CHECK(rho.values[2] == 0.0);
    CHECK(rho.values[3] == 0.0);
  }

  SUBCASE("atom at a cell corner splits in half") {
    sbe::OccupationMeasure mu;
    mu.dim = 1;
    mu.span_start = 0.0;
    mu.span_end = 1.0;
    mu.atoms = {0.25};
    mu.weights = {1.0};
    const auto rho = sbe::deposit_grid(mu, spec);
    CHECK(rho.values[0] == doctest::Approx(2.0));
    CHECK(rho.values[1] == doctest::Approx(2.0));
    CHECK(rho.values[2] == 0.0);
  }

  SUBCASE("mass conservation on random measures") {
    sbe::Rng rng(5150);
    for (int trial = 0; trial < 10; ++trial) {
      sbe::OccupationMeasure mu;
      mu.dim = 2;
      mu.span_start = 0.0;
      mu.span_end = 1.0;
      double total = 0.0;
      for (int i = 0; i < 200; ++i) {
        mu.atoms.push_back(rng.uniform(-1.0, 1.0));
        mu.atoms.push_back(rng.uniform(0.0, 3.0));
        const double w = rng.uniform(0.1, 2.0);
        mu.weights.push_back(w);
        total += w;
      }
      sbe::BoxGridSpec box;
      box.lo = {-1.0, 0.0};
      box.hi = {1.0, 3.0};
      box.cells = {17, 23};
      const auto rho = sbe::deposit_grid(mu, box);
      CHECK(rho.total_mass() == doctest::Approx(total).epsilon(1e-12));
    }
  }

  SUBCASE("atom outside the box is rejected") {
    sbe::OccupationMeasure mu;
    mu.dim = 1;
    mu.span_start = 0.0;
    mu.span_end = 1.0;
    mu.atoms = {1.25};
    mu.weights = {1.0};
    CHECK_THROWS_AS(sbe::deposit_grid(mu, spec), std::invalid_argument);
  }
}

TEST_CASE("Littlewood-Paley blocks against a naive transform") {
  sbe::OccupationMeasure mu;
  mu.dim = 1;
  mu.span_start = 0.0;
  mu.span_end = 1.0;
  mu.atoms = {0.3137};
  mu.weights = {1.0};
  sbe::BoxGridSpec spec;
  spec.lo = {0.0};
  spec.hi = {1.0};
  spec.cells = {512};
  const auto rho = sbe::deposit_grid(mu, spec);

  sbe::BesovParams params;
  params.alpha = 0.4;
  params.spatial_p = 1.0;
  params.blocks = 5;

  const auto blocks = sbe::besov_blocks(rho, params);
  REQUIRE(blocks.size() == 6);
  CHECK(blocks[0].first == 1.0);
  CHECK(blocks[5].first == 32.0);

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double oracle =
        naive_block_norm_l1(rho, blocks[b].first, b == 0,
                            params.profile_sharpness);
    CHECK(blocks[b].second == doctest::Approx(oracle).epsilon(1e-8));
  }

  // a point mass has near-flat block norms across frequencies
  double lo_block = kInf, hi_block = 0.0;
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    lo_block = std::min(lo_block, blocks[b].second);
    hi_block = std::max(hi_block, blocks[b].second);
  }
  CHECK(hi_block / lo_block < 3.0);

  // so the weighted sup grows like the top frequency to the alpha
  const double b0 = sbe::besov_norm(rho, params, sbe::BlockSummability::Sup);
  CHECK(b0 > std::pow(32.0, 0.4) * lo_block * 0.99);
}

TEST_CASE("Besov norm of the zero density vanishes") {
  sbe::GridDensity rho;
  rho.dim = 1;
  rho.lo = {0.0};
  rho.hi = {1.0};
  rho.cells = {256};
  rho.values.assign(256, 0.0);
  sbe::BesovParams params;
  params.blocks = 5;
  CHECK(sbe::besov_norm(rho, params, sbe::BlockSummability::Sup) == 0.0);
  CHECK(sbe::besov_norm(rho, params, sbe::BlockSummability::Sum) == 0.0);
}

TEST_CASE("Besov norm is stable under grid refinement") {
  const auto coarse = gaussian_density_1d(0.5, 0.05, 0.0, 1.0, 512);
  const auto fine = gaussian_density_1d(0.5, 0.05, 0.0, 1.0, 1024);
  sbe::BesovParams params;
  params.alpha = 0.4;
  params.spatial_p = 2.0;
  params.blocks = 5;
  const double vc = sbe::besov_norm(coarse, params, sbe::BlockSummability::Sup);
  const double vf = sbe::besov_norm(fine, params, sbe::BlockSummability::Sup);
  CHECK(vc > 0.0);
  CHECK(vf == doctest::Approx(vc).epsilon(0.05));
}

TEST_CASE("Besov grid resolution guard") {
  sbe::GridDensity rho;
  rho.dim = 1;
  rho.lo = {0.0};
  rho.hi = {1.0};
  rho.cells = {255};
  rho.values.assign(255, 1.0);
  sbe::BesovParams params;
  params.blocks = 5;  // top frequency 64 needs at least 256 cells
  CHECK_THROWS_AS(sbe::besov_blocks(rho, params), std::invalid_argument);
  params.blocks = 2;
  CHECK_THROWS_AS(sbe::besov_blocks(rho, params), std::invalid_argument);
}

TEST_CASE("Besov norm in two dimensions") {
  sbe::GridDensity rho;
  rho.dim = 2;
  rho.lo = {0.0, 0.0};
  rho.hi = {1.0, 1.0};
  rho.cells = {64, 64};
  const double sigma = 0.08;
  for (int a = 0; a < 64; ++a) {
    for (int b = 0; b < 64; ++b) {
      const double x = (a + 0.5) / 64.0 - 0.5;
      const double y = (b + 0.5) / 64.0 - 0.5;
      rho.values.push_back(std::exp(-(x * x + y * y) / (2.0 * sigma * sigma)));
    }
  }
  sbe::BesovParams params;
  params.alpha = 0.3;
  params.blocks = 3;  // top frequency 16 <= 64/4
  const double v = sbe::besov_norm(rho, params, sbe::BlockSummability::Sup);
  CHECK(v > 0.0);
  CHECK(std::isfinite(v));
}

TEST_CASE("p-variation closed forms") {
  const std::vector<double> mono = {0.0, 0.3, 0.9, 1.7, 2.0};
  auto norm_of = [](const std::vector<double>& v) {
    return [&v](std::size_t i, std::size_t j) { return std::abs(v[j] - v[i]); };
  };
  CHECK(sbe::p_variation(mono.size(), norm_of(mono), 1.7) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sbe::p_variation(mono.size(), norm_of(mono), 1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<double> vee = {0.0, 1.0, 0.0};
  CHECK(sbe::p_variation(vee.size(), norm_of(vee), 2.0) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  CHECK(sbe::p_variation(1, norm_of(mono), 2.0) == 0.0);
  CHECK_THROWS_AS(sbe::p_variation(3, norm_of(vee), 0.8),
                  std::invalid_argument);
  CHECK_THROWS_AS(sbe::p_variation(3, norm_of(vee), kInf),
                  std::invalid_argument);
}

TEST_CASE("dynamic program equals exhaustive enumeration") {
  sbe::Rng rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(12);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double p = trial % 2 == 0 ? 2.0 : 3.0;
    const double dp = sbe::p_variation(
        v.size(), [&](std::size_t i, std::size_t j) { return std::abs(v[j] - v[i]); },
        p);
    const double brute = exhaustive_p_variation(v, p);
    CHECK(dp == brute);  // same arithmetic on the same partitions, bitwise
  }
}

TEST_CASE("p-variation is superadditive over concatenation") {
  sbe::Rng rng(90210);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double p = 2.5;
    auto norm_full = [&](std::size_t i, std::size_t j) {
      return std::abs(v[j] - v[i]);
    };
    const std::size_t cut = 17;
    auto norm_right = [&](std::size_t i, std::size_t j) {
      return std::abs(v[cut + j] - v[cut + i]);
    };
    const double full = sbe::p_variation(v.size(), norm_full, p);
    const double left = sbe::p_variation(cut + 1, norm_full, p);
    const double right = sbe::p_variation(v.size() - cut, norm_right, p);
    CHECK(std::pow(full, p) >=
          std::pow(left, p) + std::pow(right, p) - 1e-10);
  }
}

TEST_CASE("dyadic variation bound") {
  SUBCASE("constant function gives zero") {
    const std::vector<std::vector<double>> levels = {
        {0.0}, {0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
    const auto out = sbe::dyadic_variation_bound(levels, 2.0, 0.5);
    CHECK(out.bound == 0.0);
    CHECK(out.level_sums == std::vector<double>{0.0, 0.0, 0.0});
  }

  SUBCASE("linear function level sums follow the closed form") {
    std::vector<std::vector<double>> levels;
    for (int l = 0; l < 5; ++l) {
      levels.emplace_back(std::size_t{1} << l,
                          1.0 / static_cast<double>(std::size_t{1} << l));
    }
    const auto out = sbe::dyadic_variation_bound(levels, 2.0, 0.5);
    REQUIRE(out.level_sums.size() == 5);
    for (int l = 0; l < 5; ++l) {
      // 2^l increments of size 2^-l, squared: sum = 2^-l
      CHECK(out.level_sums[static_cast<std::size_t>(l)] ==
            doctest::Approx(std::ldexp(1.0, -l)).epsilon(1e-14));
    }
    // constant at q=2, eps=1/2: 2 (1 - 2^{-1/2})^{-1} = 4 + 2 sqrt(2)
    CHECK(out.constant ==
          doctest::Approx(4.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  }

  SUBCASE("bound dominates the exact variation") {
    sbe::Rng rng(8086);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(65, 0.0);
      for (std::size_t i = 1; i < v.size(); ++i) {
        v[i] = v[i - 1] + 0.125 * rng.next_normal();
      }
      std::vector<std::vector<double>> levels;
      for (int l = 0; l <= 6; ++l) {
        const std::size_t count = std::size_t{1} << l;
        const std::size_t stride = 64 >> l;
        std::vector<double> norms;
        for (std::size_t k = 0; k < count; ++k) {
          norms.push_back(std::abs(v[(k + 1) * stride] - v[k * stride]));
        }
        levels.push_back(std::move(norms));
      }
      const auto out = sbe::dyadic_variation_bound(levels, 2.0, 0.5);
      const double exact = sbe::p_variation(
          v.size(),
          [&](std::size_t i, std::size_t j) { return std::abs(v[j] - v[i]); },
          2.0);
      CHECK(out.bound >= exact);
    }
  }

  SUBCASE("rejects malformed level structure") {
    CHECK_THROWS_AS(
        sbe::dyadic_variation_bound({{0.1}, {0.1, 0.2, 0.3}}, 2.0, 0.5),
        std::invalid_argument);
    CHECK_THROWS_AS(sbe::dyadic_variation_bound({{0.1}}, 0.7, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(sbe::dyadic_variation_bound({{0.1}}, 2.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(sbe::dyadic_variation_bound({{-0.1}}, 2.0, 0.5),
                    std::invalid_argument);
  }

  SUBCASE("variation parameter validation") {
    sbe::VariationParams params;
    params.p = 2.0;
    params.epsilon = 0.5;
    CHECK_NOTHROW(params.validate());
    params.p = 0.9;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params.p = kInf;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params.p = 2.0;
    params.epsilon = 1.0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  }
}

TEST_CASE("variation of the occupation measure flow") {
  const auto path =
      sbe::gen_gaussian(sbe::GaussianSpec::brownian(1), 129, 0.0, 1.0, 424242);
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < path.size(); ++i) {
    lo = std::min(lo, path.value(i, 0));
    hi = std::max(hi, path.value(i, 0));
  }

  sbe::SbeParams params;
  params.alpha = 0.4;
  params.r_grid = {0.05, 1.0, 6};
  params.y_grid = {{lo - 1.1}, {hi + 1.1}, {49}};

  SUBCASE("single interval reduces to the norm over the whole span") {
    const double direct = sbe::sbe_norm(sbe::occupation(path, 0.0, 1.0), params);
    const double via_variation =
        sbe::variation_of_occupation(path, 0.0, {0.0, 1.0}, 2.0, params);
    CHECK(via_variation == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("refining the partition can only increase the value") {
    const double v1 =
        sbe::variation_of_occupation(path, 0.0, {0.0, 1.0}, 2.0, params);
    const double v2 =
        sbe::variation_of_occupation(path, 0.0, {0.0, 0.5, 1.0}, 2.0, params);
    const double v3 = sbe::variation_of_occupation(
        path, 0.0, {0.0, 0.25, 0.5, 0.75, 1.0}, 2.0, params);
    CHECK(v2 + 1e-12 >= v1);
    CHECK(v3 + 1e-12 >= v2);
  }

  SUBCASE("rejects bad arguments") {
    CHECK_THROWS_AS(
        sbe::variation_of_occupation(path, 0.0, {0.0, 1.0}, 0.9, params),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sbe::variation_of_occupation(path, 0.0, {0.5, 0.25}, 2.0, params),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sbe::variation_of_occupation(path, 0.0, {-0.1, 1.0}, 2.0, params),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sbe::variation_of_occupation(path, 0.5, {0.0, 1.0}, 2.0, params),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sbe::variation_of_occupation(path, 0.0, {0.25}, 2.0, params),
        std::invalid_argument);
  }
}

TEST_CASE("constant path still yields a finite variation") {
  sbe::SampledPath path;
  path.dim = 1;
  for (int i = 0; i < 9; ++i) {
    path.times.push_back(static_cast<double>(i) / 8.0);
    path.values.push_back(0.37);
  }
  const auto occ = sbe::occupation(path, 0.0, 1.0);
  const auto params = sbe::auto_sbe_params(occ, 0.4, 2.0, 2.0);
  const double whole = sbe::sbe_norm(occ, params);
  CHECK(whole > 0.0);
  CHECK(std::isfinite(whole));
  const double v =
      sbe::variation_of_occupation(path, 0.0, {0.0, 0.5, 1.0}, 2.0, params);
  CHECK(v > 0.0);
  CHECK(std::isfinite(v));
}

TEST_CASE("power-law regression") {
  std::vector<double> spans, norms;
  for (int i = 0; i < 8; ++i) {
    spans.push_back(std::pow(10.0, -3.0 + i * 0.4));
  }

  SUBCASE("slope one") {
    norms = spans;
    const auto fit = sbe::holder_exponent(spans, norms);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("slope one half") {
    for (const double s : spans) norms.push_back(std::sqrt(s));
    const auto fit = sbe::holder_exponent(spans, norms);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("noisy synthetic power law") {
    sbe::Rng rng(1999);
    spans.clear();
    norms.clear();
    const double truth = 0.7;
    for (int i = 0; i < 20; ++i) {
      const double s = std::pow(10.0, -2.0 + i * 0.1);
      spans.push_back(s);
      norms.push_back(2.3 * std::pow(s, truth) * rng.uniform(0.9, 1.1));
    }
    const auto fit = sbe::holder_exponent(spans, norms);
    CHECK(fit.slope == doctest::Approx(truth).epsilon(0.08));
    CHECK(std::abs(fit.slope - truth) < 0.05);
    CHECK(fit.r_squared > 0.99);
  }

  SUBCASE("rejects degenerate inputs") {
    CHECK_THROWS_AS(sbe::holder_exponent({1.0, 2.0}, {1.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sbe::holder_exponent({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sbe::holder_exponent({1.0, 2.0, 3.0}, {1.0, 0.0, 3.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sbe::holder_exponent({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}),
                    std::invalid_argument);
  }
}
