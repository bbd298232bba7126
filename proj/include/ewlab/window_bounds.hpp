#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ewlab/empirical.hpp"
#include "ewlab/mixed_radix.hpp"
#include "ewlab/qadditive.hpp"

namespace ewlab {

/// A(L, h) = prod_{j=L-h}^{L-1} a_j. Requires 1 <= h <= L.
BigInt window_size(const CantorBase& base, std::size_t l, std::size_t h);

/// tau2(h) = sum_{j=L-h}^{L-1} s_j^2.
double tau2(const DigitMap& map, const CantorBase& base, std::size_t l, std::size_t h);

/// |sum_{j>L} m_j| + sum_{j>L} s_j^2 (certified upper bound); empty without tail data.
std::optional<double> tau1(const DigitMap& map, const CantorBase& base, std::size_t l);

enum class Regime { A, B, C };

std::string to_string(Regime r);
/// "A", "B" or "C" (case-insensitive). Throws ConfigError.
Regime parse_regime(std::string_view s);

/// A: T sqrt(tau2); B: rho sqrt(tau2); C: T^2 tau2^(2/3).
double regime_term(Regime regime, double t, double tau2_h, std::optional<double> rho_inf);

struct BridgeBound {
  double uniform = 0.0;  // q_{L-h} / q_L = 1 / A(L, h)
  double sharp = 0.0;    // r / N with r = N mod q_{L-h}
  std::uint64_t remainder = 0;
};

BridgeBound bridge_bound(const CantorBase& base, std::uint64_t n, std::size_t h);

struct WindowBoundReport {
  std::uint64_t n = 0;
  std::size_t l = 0;
  std::size_t h = 0;
  BigInt a_lh;
  double bridge = 0.0;
  std::optional<double> tau1;  // empty: the report is conditional
  double tau2_h = 0.0;
  double t = 1.0;
  double qf_term = 0.0;  // Q_F(1/T), upper envelope; 0 in regime B
  double g_term = 0.0;
  double total = 0.0;
  Regime regime = Regime::A;
  bool conditional = false;
};

/// Every term with unit implied constants. Regime B drops Q_F(1/T) + 1/T.
WindowBoundReport total_bound(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                              std::size_t h, double t, Regime regime,
                              std::optional<double> rho_inf, const ReferenceCdf& ref);

/// True when the third central moment vanishes exactly on every level j <= L.
bool third_moments_vanish(const DigitMap& map, const CantorBase& base, std::size_t l);

enum class TGrid {
  unit,    // T = 2^-k, k = 0..k_max
  esseen,  // T = 2^k, k = 0..k_max
};

struct OptimizeOptions {
  TGrid grid = TGrid::unit;
  int k_max = 40;
};

struct OptimizedWindow {
  std::size_t h = 0;
  double t = 1.0;
  WindowBoundReport report;
};

/// Exhaustive search over h in 1..L and the T grid; ties go to the smaller
/// h, then the larger T. Regime C requires third_moments_vanish.
OptimizedWindow optimize_window(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                                Regime regime, std::optional<double> rho_inf,
                                const ReferenceCdf& ref, const OptimizeOptions& options = {});

/// L^{-alpha/2} (log L)^{1/4}, L = floor(log_q N).
double predicted_rate_example_i(double alpha, std::uint64_t q, std::uint64_t n);
/// log(1/beta) / (log(1/beta) + 2 log q).
double gamma_example_ii(double beta, std::uint64_t q);
/// N^{-gamma}.
double predicted_rate_example_ii(double beta, std::uint64_t q, std::uint64_t n);

}  // namespace ewlab
