#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ewlab/mixed_radix.hpp"

namespace ewlab {

/// Level weight c_j in f(d q_j) = c_j g(d).
enum class WeightKind {
  polynomial,       // c_j = j^-alpha, c_0 = 1
  geometric,        // c_j = beta^j
  radical_inverse,  // c_j = 1 / q_{j+1}
};

/// f(d q_j) = c_j g(d). An empty g means the identity g(d) = d.
struct LinearWeightMap {
  WeightKind weight = WeightKind::radical_inverse;
  double alpha = 2.0;
  double beta = 0.5;
  std::vector<double> g;
  bool operator==(const LinearWeightMap&) const = default;
};

/// f(d 3^j) = 3^-j sigma(d), sigma = (-1, 0, +1). Needs a_j = 3.
struct SymmetricTernaryMap {
  bool operator==(const SymmetricTernaryMap&) const = default;
};

/// f(0) = 0, f(q_j) = j^-2, f(d q_j) = 2 j^-2 for d >= 2 (level 0 weight 1).
struct SkewedPolyweightMap {
  bool operator==(const SkewedPolyweightMap&) const = default;
};

/// Certified bounds on the tails beyond a custom table (levels >= J_table).
struct TailBounds {
  double mean = 0.0;         // >= |sum_{j >= J_table} m_j|
  double variance = 0.0;     // >= sum_{j >= J_table} s_j^2
  double oscillation = 0.0;  // >= sum_{j >= J_table} Omega_j
  bool operator==(const TailBounds&) const = default;
};

/// Explicit f(d q_j) = levels[j][d] for j < levels.size(); zero beyond.
struct CustomTableMap {
  std::vector<std::vector<double>> levels;
  std::optional<TailBounds> tails;
  bool operator==(const CustomTableMap&) const = default;
};

/// f == 0.
struct ZeroMap {
  bool operator==(const ZeroMap&) const = default;
};

using DigitMap = std::variant<ZeroMap, LinearWeightMap, SymmetricTernaryMap,
                              SkewedPolyweightMap, CustomTableMap>;

/// f(d q_j). Throws DigitOutOfRange unless 0 <= d < a_j (and d is covered
/// by the digit table).
double digit_value(const DigitMap& map, const CantorBase& base, std::uint64_t d,
                   std::size_t j);

/// f(N) = sum_j f(delta_j(N) q_j); f(0) = 0.
double eval(const DigitMap& map, const CantorBase& base, std::uint64_t n);

/// Precomputed per-level value tables for evaluating f over many N.
class Evaluator {
 public:
  Evaluator(DigitMap map, CantorBase base);

  double operator()(std::uint64_t n) const;

  const DigitMap& map() const { return map_; }
  const CantorBase& base() const { return base_; }

 private:
  DigitMap map_;
  CantorBase base_;
  std::vector<std::vector<double>> tables_;  // levels covering every 64-bit N
};

struct DigitStats {
  std::size_t level = 0;
  double mean = 0.0;          // m_j
  double variance = 0.0;      // s_j^2
  double oscillation = 0.0;   // Omega_j = max_d |f(d q_j) - m_j|
  double third_moment = 0.0;  // third central moment
};

/// Exact enumeration over d in {0..a_j - 1}.
DigitStats digit_stats(const DigitMap& map, const CantorBase& base, std::size_t j);

/// Certified tail bounds beyond level L.
struct TailSums {
  double mean = 0.0;         // >= |sum_{j>L} m_j|
  double variance = 0.0;     // >= sum_{j>L} s_j^2
  double oscillation = 0.0;  // >= sum_{j>L} Omega_j
  bool exact = false;        // the mean and variance values are exact
};

/// Throws NoTailMeta for custom tables without user-supplied bounds.
TailSums tail_sums(const DigitMap& map, const CantorBase& base, std::size_t level);

bool has_tail_meta(const DigitMap& map);

enum class EwVerdict { converges, diverges, inconclusive };

std::string to_string(EwVerdict v);

struct EwTracePoint {
  std::size_t level = 0;
  double mean_sum = 0.0;      // sum_{i<=j} m_i
  double variance_sum = 0.0;  // sum_{i<=j} s_i^2
};

struct EwDiagnosis {
  EwVerdict verdict = EwVerdict::inconclusive;
  bool analytic = false;  // decided from tail metadata rather than heuristics
  std::vector<EwTracePoint> trace;
};

struct EwOptions {
  double tol = 1e-6;
  double divergence_threshold = 1e6;
  double stall_ratio = 0.95;
};

/// Erdos-Wintner criterion: sum m_j converges and sum s_j^2 < inf.
EwDiagnosis ew_diagnose(const DigitMap& map, const CantorBase& base, std::size_t j_max,
                        const EwOptions& options = {});

}  // namespace ewlab
