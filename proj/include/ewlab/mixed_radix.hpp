#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ewlab {

using BigInt = boost::multiprecision::cpp_int;

/// a_j = q for every j.
struct ConstantRule {
  std::uint64_t q = 2;
  bool operator==(const ConstantRule&) const = default;
};

/// a_j = pattern[j mod p].
struct PeriodicRule {
  std::vector<std::uint64_t> pattern;
  bool operator==(const PeriodicRule&) const = default;
};

/// a_j = c * j + d.
struct AffineRule {
  std::int64_t c = 1;
  std::int64_t d = 2;
  bool operator==(const AffineRule&) const = default;
};

using ContinuationRule = std::variant<ConstantRule, PeriodicRule, AffineRule>;

/// a_j = table[j] for j < table.size(), then the continuation evaluated at
/// the absolute level j.
struct TableRule {
  std::vector<std::uint64_t> table;
  ContinuationRule then = ConstantRule{2};
  bool operator==(const TableRule&) const = default;
};

using BaseRule = std::variant<ConstantRule, PeriodicRule, AffineRule, TableRule>;

/// A Cantor (mixed-radix) base: digit alphabets a_j >= 2 and radix weights
/// q_0 = 1, q_{j+1} = a_j q_j.
///
/// Copies share one append-only weight cache, guarded for concurrent readers.
/// Alphabets and 64-bit weights for the first kEagerLevels levels are computed
/// up front, which covers every expansion of a 64-bit integer.
class CantorBase {
 public:
  static constexpr std::size_t kEagerLevels = 128;

  explicit CantorBase(BaseRule rule);

  const BaseRule& rule() const { return rule_; }

  /// a_j.
  std::uint64_t radix(std::size_t j) const;

  /// q_j, exact.
  BigInt weight(std::size_t j) const;

  /// q_j when it fits in 64 bits.
  std::optional<std::uint64_t> weight_u64(std::size_t j) const;

  /// q_j as a double (may be +inf for astronomically large weights).
  double weight_double(std::size_t j) const;

  /// L(N) = max{j : q_j <= N < q_{j+1}}; 0 for N = 0.
  std::size_t length(std::uint64_t n) const;

  /// The common alphabet size when the base is constant (a_j == q).
  std::optional<std::uint64_t> constant_radix() const;

  /// The repeating pattern when the base is periodic or constant.
  std::optional<std::vector<std::uint64_t>> period() const;

  bool operator==(const CantorBase& other) const { return rule_ == other.rule_; }

 private:
  struct WeightCache;

  BaseRule rule_;
  std::array<std::uint64_t, kEagerLevels> radices_{};
  std::array<std::uint64_t, kEagerLevels + 1> weights_u64_{};
  std::size_t u64_levels_ = 0;  // weights_u64_[j] valid for j < u64_levels_
  std::shared_ptr<WeightCache> cache_;
};

/// Digits (delta_0, ..., delta_L) of N, lowest level first.
struct Expansion {
  std::vector<std::uint64_t> digits;
  std::size_t length = 0;  // L; 0 for N = 0 (digits empty)
};

CantorBase build_base(BaseRule rule);

BigInt radix_weight(const CantorBase& base, std::size_t j);

Expansion expand(const CantorBase& base, std::uint64_t n);

/// Sum of delta_j q_j. Throws DigitOutOfRange if some delta_j >= a_j.
BigInt compress(const CantorBase& base, std::span<const std::uint64_t> digits);

/// Calls visit(j, delta_j) for every digit of n, lowest level first,
/// without allocating.
template <class Visitor>
void for_each_digit(const CantorBase& base, std::uint64_t n, Visitor&& visit) {
  std::size_t j = 0;
  while (n != 0) {
    const std::uint64_t a = base.radix(j);
    visit(j, n % a);
    n /= a;
    ++j;
  }
}

}  // namespace ewlab
