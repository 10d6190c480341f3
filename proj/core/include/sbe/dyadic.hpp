#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <vector>

namespace sbe {

using BigInt = boost::multiprecision::cpp_int;

// One term of an expanded difference operator: coeff * F(scale * r).
struct DyadicTerm {
  double scale;
  double coeff;
};

// Expanded form of the k-th dyadic difference:
//   D_k F(r) = sum_{j=0}^{k+1} a_j F(r / 2^j),
// defined by D_0 F(r) = F(r) - F(r/2) and
// D_{k+1} F(r) = D_k F(r) - 2^{k+1} D_k F(r/2).
// The a_j are exact integers: signed elementary symmetric polynomials of
// {1, 2, 4, ..., 2^k}. D_k annihilates polynomials of degree <= k.
struct DeltaKCoeffs {
  int order = 0;
  std::vector<BigInt> exact;      // a_j, j = 0..order+1
  std::vector<DyadicTerm> terms;  // (2^{-j}, double(a_j))
  bool exact_in_double = true;    // every |a_j| < 2^53
};

// Valid for 0 <= k <= 32; coefficients stay exact at any supported order.
DeltaKCoeffs delta_k_coeffs(int k);

// D_k F at radius r; evaluates F at the k+2 points r/2^j.
// Throws std::domain_error naming the probe point if F returns a non-finite
// value there.
double apply_delta_k(const std::function<double(double)>& f, int k, double r);

// Adjoint on L^2(dr/r): same integer coefficients, scales 2^{+j}.
double apply_delta_k_star(const std::function<double(double)>& f, int k,
                          double r);

// Extended-precision witness route for the identity tests. With a
// double-valued F the unavoidable 0.5-ulp rounding of each probe value is
// amplified by coefficients up to 2^{k(k+1)/2}, which at k = 6 puts the
// cancellation floor at ~1.2e-10 relative; evaluating the probes in long
// double moves the floor three orders of magnitude down.
double apply_delta_k_ext(const std::function<long double(long double)>& f,
                         int k, double r);
double apply_delta_k_star_ext(const std::function<long double(long double)>& f,
                              int k, double r);

// Reconstruction coefficients c_{h,k} = sum over h_0+...+h_k = h of
// prod_j 2^{j h_j}; they satisfy phi(r) = sum_h c_{h,k} D_k* phi(2^h r)
// for Schwartz-class phi. Exact integers via the one-step recursion
// c_{h,k} = 2^k c_{h-1,k} + c_{h,k-1}.
BigInt chk_coeff(int h, int k);
// Rounded view; +inf when the exact value exceeds double range.
double chk_coeff_double(int h, int k);

// |phi(r) - sum_{h<=truncation} c_{h,k} D_k* phi(2^h r)|.
// For phi decaying faster than r^{-(k+2)} the residual decreases
// monotonically in the truncation level beyond a burn-in.
double reconstruction_residual(const std::function<double(double)>& phi, int k,
                               double r, int truncation);

// Coefficients c_h in the commutation identity
//   D_k(r^d F(r)) = sum_{h=0}^{d} c_h r^d D_{k-d} F(r / 2^h),  k >= d,
// namely c_h = a_h^{(d-1)} 2^{-h d} with a^{(d-1)} the order-(d-1)
// difference coefficients. Exact dyadic rationals (exactly representable
// as doubles for d <= 9). Distinct from the reconstruction c_{h,k}.
std::vector<double> monomial_commute_coeffs(int d);

}  // namespace sbe
