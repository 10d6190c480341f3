#include "sbe/exact_sum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace sbe {
namespace exact {

Term decompose(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw std::domain_error("exact accumulation needs positive finite weights");
  }
  int e2 = 0;
  const double f = std::frexp(w, &e2);
  // f in [0.5, 1); f * 2^53 is an integer for every double.
  return Term{static_cast<std::uint64_t>(std::ldexp(f, 53)), e2 - 53};
}

void accumulate(std::span<std::uint64_t> limbs, int base_exp, Term t) {
  const int pos = t.lsb_exp - base_exp;
  if (pos < 0 || static_cast<std::size_t>(pos / 64 + 2) > limbs.size() + 1) {
    throw std::logic_error("exact accumulator capacity exceeded");
  }
  const std::size_t word = static_cast<std::size_t>(pos) / 64;
  const int off = pos % 64;
  const std::uint64_t lo = t.mantissa << off;
  const std::uint64_t hi = off == 0 ? 0 : (t.mantissa >> (64 - off));
  auto add_at = [&](std::size_t k, std::uint64_t v) {
    while (v != 0) {
      if (k >= limbs.size()) {
        throw std::logic_error("exact accumulator carry overflow");
      }
      const std::uint64_t old = limbs[k];
      limbs[k] = old + v;
      v = limbs[k] < old ? 1 : 0;
      ++k;
    }
  };
  add_at(word, lo);
  if (hi != 0) add_at(word + 1, hi);
}

void subtract(std::span<std::uint64_t> out, std::span<const std::uint64_t> a,
              std::span<const std::uint64_t> b) {
  std::uint64_t borrow = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::uint64_t bv = b[k] + borrow;
    const std::uint64_t carry_in = bv < borrow ? 1u : 0u;
    out[k] = a[k] - bv;
    borrow = carry_in | (a[k] < bv ? 1u : 0u);
  }
}

double round_to_double(std::span<const std::uint64_t> limbs, int base_exp) {
  int top = -1;
  for (int k = static_cast<int>(limbs.size()) - 1; k >= 0; --k) {
    if (limbs[static_cast<std::size_t>(k)] != 0) {
      top = k;
      break;
    }
  }
  if (top < 0) return 0.0;
  const int h =
      64 * top + (63 - std::countl_zero(limbs[static_cast<std::size_t>(top)]));
  const int bits = h + 1;
  if (bits <= 53) {
    return std::ldexp(static_cast<double>(limbs[0]), base_exp);
  }
  const int shift = bits - 54;
  const std::size_t word = static_cast<std::size_t>(shift) / 64;
  const int off = shift % 64;
  std::uint64_t t54 = limbs[word] >> off;
  if (off != 0 && word + 1 < limbs.size()) {
    t54 |= limbs[word + 1] << (64 - off);
  }
  t54 &= (std::uint64_t{1} << 54) - 1;
  bool sticky = false;
  for (std::size_t k = 0; k < word && !sticky; ++k) sticky = limbs[k] != 0;
  if (!sticky && off != 0) {
    sticky = (limbs[word] & ((std::uint64_t{1} << off) - 1)) != 0;
  }
  std::uint64_t mant = t54 >> 1;
  const bool guard = (t54 & 1) != 0;
  if (guard && (sticky || (mant & 1))) ++mant;
  return std::ldexp(static_cast<double>(mant), base_exp + shift + 1);
}

}  // namespace exact

ExactPrefixSums::ExactPrefixSums(const std::vector<double>& weights)
    : count_(weights.size()) {
  int lo_exp = std::numeric_limits<int>::max();
  int hi_exp = std::numeric_limits<int>::min();
  std::vector<exact::Term> terms;
  terms.reserve(count_);
  for (const double w : weights) {
    const auto t = exact::decompose(w);
    terms.push_back(t);
    lo_exp = std::min(lo_exp, t.lsb_exp);
    hi_exp = std::max(hi_exp, t.lsb_exp);
  }
  if (count_ == 0) {
    limbs_ = 1;
    base_exp_ = 0;
    data_.assign(1, 0);
    return;
  }
  base_exp_ = lo_exp;
  // 53 significand bits above the highest lsb, plus 64 bits of carry room.
  const int span_bits = (hi_exp - lo_exp) + 53 + 64;
  limbs_ = std::min(exact::kMaxLimbs, span_bits / 64 + 1);
  data_.assign((count_ + 1) * static_cast<std::size_t>(limbs_), 0);
  std::vector<std::uint64_t> acc(static_cast<std::size_t>(limbs_), 0);
  for (std::size_t i = 0; i < count_; ++i) {
    exact::accumulate(acc, base_exp_, terms[i]);
    std::memcpy(data_.data() + (i + 1) * static_cast<std::size_t>(limbs_),
                acc.data(), sizeof(std::uint64_t) * acc.size());
  }
}

double ExactPrefixSums::range_sum(std::size_t i, std::size_t j) const {
  if (i > j || j > count_) {
    throw std::out_of_range("prefix range out of bounds");
  }
  const std::size_t nl = static_cast<std::size_t>(limbs_);
  std::uint64_t buf[exact::kMaxLimbs];
  std::span<std::uint64_t> out(buf, nl);
  exact::subtract(out, {data_.data() + j * nl, nl}, {data_.data() + i * nl, nl});
  return exact::round_to_double(out, base_exp_);
}

}  // namespace sbe
