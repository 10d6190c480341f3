#include "sbe/dyadic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sbe {

namespace {

constexpr int kMaxOrder = 32;

void check_order(int k) {
  if (k < 0 || k > kMaxOrder) {
    std::ostringstream msg;
    msg << "difference order must be in [0," << kMaxOrder << "], got " << k;
    throw std::invalid_argument(msg.str());
  }
}

template <typename Fn, typename Real>
Real probe(const Fn& f, Real x) {
  const Real v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite function value at probe point " << static_cast<double>(x);
    throw std::domain_error(msg.str());
  }
  return v;
}

// Shared core for D_k and its adjoint; sign of the dyadic exponent selects
// the direction. Accumulation in long double: the integer coefficients reach
// 2^{k(k+1)/2}, so plain double products alone cost ~2^{k(k+1)/2} ulp and
// would swamp the cancellation the annihilation identities depend on.
template <typename Fn, typename Real>
double apply_expanded(const Fn& f, int k, double r, int direction) {
  const DeltaKCoeffs c = delta_k_coeffs(k);
  long double sum = 0.0L;
  for (int j = 0; j < static_cast<int>(c.terms.size()); ++j) {
    const Real x = static_cast<Real>(
        std::ldexp(1.0, direction * j)) * static_cast<Real>(r);
    sum += static_cast<long double>(c.terms[static_cast<size_t>(j)].coeff) *
           static_cast<long double>(probe<Fn, Real>(f, x));
  }
  return static_cast<double>(sum);
}

}  // namespace

DeltaKCoeffs delta_k_coeffs(int k) {
  check_order(k);
  std::vector<BigInt> a = {1, -1};
  for (int m = 0; m < k; ++m) {
    // a^{(m+1)}_j = a^{(m)}_j - 2^{m+1} a^{(m)}_{j-1}
    const BigInt p = BigInt(1) << (m + 1);
    std::vector<BigInt> b(a.size() + 1);
    for (size_t j = 0; j < b.size(); ++j) {
      if (j < a.size()) b[j] += a[j];
      if (j >= 1) b[j] -= p * a[j - 1];
    }
    a = std::move(b);
  }

  DeltaKCoeffs out;
  out.order = k;
  out.exact = std::move(a);
  out.terms.reserve(out.exact.size());
  const BigInt limit = BigInt(1) << 53;
  for (size_t j = 0; j < out.exact.size(); ++j) {
    if (abs(out.exact[j]) >= limit) out.exact_in_double = false;
    out.terms.push_back({std::ldexp(1.0, -static_cast<int>(j)),
                         out.exact[j].convert_to<double>()});
  }
  return out;
}

double apply_delta_k(const std::function<double(double)>& f, int k, double r) {
  return apply_expanded<std::function<double(double)>, double>(f, k, r, -1);
}

double apply_delta_k_star(const std::function<double(double)>& f, int k,
                          double r) {
  return apply_expanded<std::function<double(double)>, double>(f, k, r, +1);
}

double apply_delta_k_ext(const std::function<long double(long double)>& f,
                         int k, double r) {
  return apply_expanded<std::function<long double(long double)>, long double>(
      f, k, r, -1);
}

double apply_delta_k_star_ext(const std::function<long double(long double)>& f,
                              int k, double r) {
  return apply_expanded<std::function<long double(long double)>, long double>(
      f, k, r, +1);
}

BigInt chk_coeff(int h, int k) {
  if (h < 0 || k < 0) throw std::invalid_argument("chk_coeff: negative index");
  check_order(k);
  if (h > 4096) throw std::invalid_argument("chk_coeff: level too large");
  // Rolling rows of c_{.,k'}: start from c_{h,0} = 1, then
  // c_{h,k'} = 2^{k'} c_{h-1,k'} + c_{h,k'-1}.
  std::vector<BigInt> row(static_cast<size_t>(h) + 1, 1);
  for (int kk = 1; kk <= k; ++kk) {
    const BigInt p = BigInt(1) << kk;
    std::vector<BigInt> next(row.size());
    next[0] = 1;
    for (size_t hh = 1; hh < row.size(); ++hh) {
      next[hh] = p * next[hh - 1] + row[hh];
    }
    row = std::move(next);
  }
  return row[static_cast<size_t>(h)];
}

double chk_coeff_double(int h, int k) {
  return chk_coeff(h, k).convert_to<double>();
}

double reconstruction_residual(const std::function<double(double)>& phi, int k,
                               double r, int truncation) {
  if (truncation < 0) {
    throw std::invalid_argument("reconstruction_residual: negative truncation");
  }
  // The partial sums cancel terms far larger than the reconstructed value
  // when r is small; accumulate in long double to keep the floor low.
  long double sum = 0.0L;
  for (int h = 0; h <= truncation; ++h) {
    sum += static_cast<long double>(chk_coeff_double(h, k)) *
           static_cast<long double>(
               apply_delta_k_star(phi, k, std::ldexp(r, h)));
  }
  return std::abs(probe(phi, r) - static_cast<double>(sum));
}

std::vector<double> monomial_commute_coeffs(int d) {
  if (d < 0) throw std::invalid_argument("monomial_commute_coeffs: d < 0");
  if (d == 0) return {1.0};
  const DeltaKCoeffs base = delta_k_coeffs(d - 1);
  std::vector<double> out(base.terms.size());
  for (size_t h = 0; h < out.size(); ++h) {
    out[h] = std::ldexp(base.terms[h].coeff, -static_cast<int>(h) * d);
  }
  return out;
}

}  // namespace sbe
