#include "ewlab/mixed_radix.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

struct RadixAt {
  std::size_t j;

  std::uint64_t operator()(const ConstantRule& r) const { return r.q; }

  std::uint64_t operator()(const PeriodicRule& r) const {
    return r.pattern[j % r.pattern.size()];
  }

  std::uint64_t operator()(const AffineRule& r) const {
    // c, d validated nonnegative; guard the product against wraparound.
    const auto c = static_cast<std::uint64_t>(r.c);
    const auto d = static_cast<std::uint64_t>(r.d);
    if (c != 0 && j > (std::numeric_limits<std::uint64_t>::max() - d) / c) {
      throw InvalidBase("affine base overflows 64-bit alphabet at level " +
                        std::to_string(j));
    }
    return c * j + d;
  }

  std::uint64_t operator()(const TableRule& r) const {
    if (j < r.table.size()) return r.table[j];
    return std::visit(*this, r.then);
  }
};

void validate(const ContinuationRule& rule);

void validate_rule(const BaseRule& rule) {
  std::visit(
      [](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRule>) {
          if (r.q < 2) throw InvalidBase("constant base needs q >= 2");
        } else if constexpr (std::is_same_v<R, PeriodicRule>) {
          if (r.pattern.empty()) throw InvalidBase("periodic base needs a nonempty pattern");
          for (auto a : r.pattern) {
            if (a < 2) throw InvalidBase("periodic base has an entry < 2");
          }
        } else if constexpr (std::is_same_v<R, AffineRule>) {
          if (r.c < 0) throw InvalidBase("affine base needs slope c >= 0");
          if (r.d < 2) throw InvalidBase("affine base needs intercept d >= 2");
        } else {
          for (auto a : r.table) {
            if (a < 2) throw InvalidBase("table base has an entry < 2");
          }
          validate(r.then);
        }
      },
      rule);
}

void validate(const ContinuationRule& rule) {
  std::visit([](const auto& r) { validate_rule(BaseRule{r}); }, rule);
}

}  // namespace

struct CantorBase::WeightCache {
  mutable std::shared_mutex mutex;
  std::vector<BigInt> weights{BigInt(1)};
};

CantorBase::CantorBase(BaseRule rule)
    : rule_(std::move(rule)), cache_(std::make_shared<WeightCache>()) {
  validate_rule(rule_);
  for (std::size_t j = 0; j < kEagerLevels; ++j) {
    radices_[j] = std::visit(RadixAt{j}, rule_);
  }
  weights_u64_[0] = 1;
  u64_levels_ = 1;
  for (std::size_t j = 0; j < kEagerLevels; ++j) {
    const std::uint64_t q = weights_u64_[j];
    if (q > std::numeric_limits<std::uint64_t>::max() / radices_[j]) break;
    weights_u64_[j + 1] = q * radices_[j];
    u64_levels_ = j + 2;
  }
}

std::uint64_t CantorBase::radix(std::size_t j) const {
  if (j < kEagerLevels) return radices_[j];
  return std::visit(RadixAt{j}, rule_);
}

BigInt CantorBase::weight(std::size_t j) const {
  {
    std::shared_lock lock(cache_->mutex);
    if (j < cache_->weights.size()) return cache_->weights[j];
  }
  std::unique_lock lock(cache_->mutex);
  auto& w = cache_->weights;
  while (w.size() <= j) {
    const std::size_t level = w.size() - 1;
    w.push_back(w.back() * radix(level));
  }
  return w[j];
}

std::optional<std::uint64_t> CantorBase::weight_u64(std::size_t j) const {
  if (j < u64_levels_) return weights_u64_[j];
  return std::nullopt;
}

double CantorBase::weight_double(std::size_t j) const {
  if (j < u64_levels_) return static_cast<double>(weights_u64_[j]);
  return weight(j).convert_to<double>();
}

std::size_t CantorBase::length(std::uint64_t n) const {
  if (n == 0) return 0;
  std::size_t l = 0;
  // q_{l+1} <= n; a weight that no longer fits in 64 bits exceeds n.
  while (l + 1 < u64_levels_ && weights_u64_[l + 1] <= n) ++l;
  return l;
}

std::optional<std::uint64_t> CantorBase::constant_radix() const {
  if (const auto* c = std::get_if<ConstantRule>(&rule_)) return c->q;
  if (const auto* p = std::get_if<PeriodicRule>(&rule_)) {
    for (auto a : p->pattern) {
      if (a != p->pattern.front()) return std::nullopt;
    }
    return p->pattern.front();
  }
  if (const auto* a = std::get_if<AffineRule>(&rule_); a && a->c == 0) {
    return static_cast<std::uint64_t>(a->d);
  }
  return std::nullopt;
}

std::optional<std::vector<std::uint64_t>> CantorBase::period() const {
  if (auto q = constant_radix()) return std::vector<std::uint64_t>{*q};
  if (const auto* p = std::get_if<PeriodicRule>(&rule_)) return p->pattern;
  return std::nullopt;
}

CantorBase build_base(BaseRule rule) { return CantorBase(std::move(rule)); }

BigInt radix_weight(const CantorBase& base, std::size_t j) { return base.weight(j); }

Expansion expand(const CantorBase& base, std::uint64_t n) {
  Expansion e;
  for_each_digit(base, n, [&](std::size_t, std::uint64_t d) { e.digits.push_back(d); });
  e.length = e.digits.empty() ? 0 : e.digits.size() - 1;
  return e;
}

BigInt compress(const CantorBase& base, std::span<const std::uint64_t> digits) {
  BigInt n = 0;
  for (std::size_t j = digits.size(); j-- > 0;) {
    const std::uint64_t a = base.radix(j);
    if (digits[j] >= a) {
      throw DigitOutOfRange("digit " + std::to_string(digits[j]) + " at level " +
                            std::to_string(j) + " exceeds a_j - 1 = " +
                            std::to_string(a - 1));
    }
    n = n * a + digits[j];
  }
  return n;
}

}  // namespace ewlab
