#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sbe {

// Exact fixed-point accumulation of positive doubles.
//
// Sums of weights are represented as multi-limb integers scaled by a fixed
// power of two, so the accumulated value is exact and the final conversion
// to double is correctly rounded. Two different query structures built on
// these primitives therefore return bit-identical masses for the same set
// of weights, independent of summation order.
namespace exact {

// 36 x 64 bits covers the full exponent range of positive doubles plus
// carry headroom for 2^40 summands.
inline constexpr int kMaxLimbs = 36;

struct Term {
  std::uint64_t mantissa;  // 53-bit integer significand
  int lsb_exp;             // value = mantissa * 2^lsb_exp
};

// Exact decomposition of a positive finite double.
Term decompose(double w);

// limbs += t, little-endian limb order; t.lsb_exp must be >= base_exp and
// fit within the limb span.
void accumulate(std::span<std::uint64_t> limbs, int base_exp, Term t);

// out = a - b (a >= b as integers), elementwise limb subtraction with borrow.
void subtract(std::span<std::uint64_t> out, std::span<const std::uint64_t> a,
              std::span<const std::uint64_t> b);

// Correctly rounded double value of limbs * 2^base_exp (round half to even).
double round_to_double(std::span<const std::uint64_t> limbs, int base_exp);

}  // namespace exact

// Prefix sums of a positive weight sequence with exact range queries:
// range_sum(i, j) is the correctly rounded value of weights[i] + ... +
// weights[j-1]. Build is O(m), queries are O(limb count).
class ExactPrefixSums {
 public:
  ExactPrefixSums() = default;
  explicit ExactPrefixSums(const std::vector<double>& weights);

  std::size_t size() const { return count_; }
  double range_sum(std::size_t i, std::size_t j) const;

 private:
  std::vector<std::uint64_t> data_;  // (count_+1) blocks of limbs_ words
  int limbs_ = 1;
  int base_exp_ = 0;
  std::size_t count_ = 0;
};

}  // namespace sbe
