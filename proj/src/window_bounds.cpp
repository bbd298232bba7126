#include "ewlab/window_bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

void check_window(std::size_t l, std::size_t h) {
  if (h < 1 || h > l) throw ConfigError(fmt::format("window h = {} outside 1..L = {}", h, l));
}

std::size_t floor_log(std::uint64_t q, std::uint64_t n) {
  std::size_t l = 0;
  for (std::uint64_t p = 1; p <= n / q; p *= q) ++l;
  return l;
}

}  // namespace

BigInt window_size(const CantorBase& base, std::size_t l, std::size_t h) {
  check_window(l, h);
  BigInt a = 1;
  for (std::size_t j = l - h; j < l; ++j) a *= base.radix(j);
  return a;
}

double tau2(const DigitMap& map, const CantorBase& base, std::size_t l, std::size_t h) {
  check_window(l, h);
  double s = 0.0;
  for (std::size_t j = l - h; j < l; ++j) s += digit_stats(map, base, j).variance;
  return s;
}

std::optional<double> tau1(const DigitMap& map, const CantorBase& base, std::size_t l) {
  if (!has_tail_meta(map)) return std::nullopt;
  const auto t = tail_sums(map, base, l);
  return t.mean + t.variance;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::A:
      return "A";
    case Regime::B:
      return "B";
    case Regime::C:
      return "C";
  }
  return "A";
}

Regime parse_regime(std::string_view s) {
  if (s.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(s[0]))) {
      case 'A':
        return Regime::A;
      case 'B':
        return Regime::B;
      case 'C':
        return Regime::C;
    }
  }
  throw ConfigError(fmt::format("unknown regime '{}'", s));
}

double regime_term(Regime regime, double t, double tau2_h, std::optional<double> rho_inf) {
  switch (regime) {
    case Regime::A:
      return t * std::sqrt(tau2_h);
    case Regime::B:
      if (!rho_inf) throw MissingDensityBound("regime B needs a density bound rho_inf");
      return *rho_inf * std::sqrt(tau2_h);
    case Regime::C:
      return t * t * std::pow(tau2_h, 2.0 / 3.0);
  }
  return 0.0;
}

BridgeBound bridge_bound(const CantorBase& base, std::uint64_t n, std::size_t h) {
  const std::size_t l = base.length(n);
  check_window(l, h);
  const std::uint64_t block = *base.weight_u64(l - h);
  BridgeBound b;
  b.uniform = static_cast<double>(base.weight_u64(l - h).value()) /
              static_cast<double>(base.weight_u64(l).value());
  b.remainder = n % block;
  b.sharp = static_cast<double>(b.remainder) / static_cast<double>(n);
  return b;
}

WindowBoundReport total_bound(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                              std::size_t h, double t, Regime regime,
                              std::optional<double> rho_inf, const ReferenceCdf& ref) {
  WindowBoundReport r;
  r.n = n;
  r.l = base.length(n);
  r.h = h;
  r.a_lh = window_size(base, r.l, h);
  r.bridge = bridge_bound(base, n, h).uniform;
  r.tau1 = tau1(map, base, r.l);
  r.conditional = !r.tau1;
  r.tau2_h = tau2(map, base, r.l, h);
  r.regime = regime;
  r.t = t;
  if (regime != Regime::B && !(t > 0.0)) throw ConfigError("T must be positive");
  r.g_term = regime_term(regime, t, r.tau2_h, rho_inf);
  r.total = r.bridge + std::sqrt(r.tau1.value_or(0.0)) + r.g_term;
  if (regime != Regime::B) {
    r.qf_term = ref.concentration(1.0 / t).hi;
    r.total += r.qf_term + 1.0 / t;
  }
  return r;
}

bool third_moments_vanish(const DigitMap& map, const CantorBase& base, std::size_t l) {
  for (std::size_t j = 0; j <= l; ++j)
    if (digit_stats(map, base, j).third_moment != 0.0) return false;
  return true;
}

OptimizedWindow optimize_window(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                                Regime regime, std::optional<double> rho_inf,
                                const ReferenceCdf& ref, const OptimizeOptions& options) {
  const std::size_t l = base.length(n);
  if (l < 1) throw ConfigError("optimize_window needs L(N) >= 1");
  if (regime == Regime::C && !third_moments_vanish(map, base, l))
    throw ConfigError("regime C needs vanishing third moments on every level up to L");
  if (regime == Regime::B && !rho_inf)
    throw MissingDensityBound("regime B needs a density bound rho_inf");

  std::vector<double> var(l);
  for (std::size_t j = 0; j < l; ++j) var[j] = digit_stats(map, base, j).variance;
  const double t1 = std::sqrt(tau1(map, base, l).value_or(0.0));
  const double q_l = static_cast<double>(base.weight_u64(l).value());

  // Larger T first so a tie keeps the larger T.
  std::vector<double> ts;
  if (regime == Regime::B) {
    ts.push_back(1.0);
  } else {
    for (int k = 0; k <= options.k_max; ++k)
      ts.push_back(std::ldexp(1.0, options.grid == TGrid::unit ? -k : k));
    std::sort(ts.rbegin(), ts.rend());
  }
  std::vector<double> smoothing(ts.size(), 0.0);
  if (regime != Regime::B)
    for (std::size_t i = 0; i < ts.size(); ++i)
      smoothing[i] = ref.concentration(1.0 / ts[i]).hi + 1.0 / ts[i];

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_h = 0;
  double best_t = 1.0;
  double window = 0.0;
  for (std::size_t h = 1; h <= l; ++h) {
    window += var[l - h];
    const double bridge = static_cast<double>(base.weight_u64(l - h).value()) / q_l;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double total = bridge + t1 + smoothing[i] + regime_term(regime, ts[i], window, rho_inf);
      if (total < best) {
        best = total;
        best_h = h;
        best_t = ts[i];
      }
    }
  }
  return {best_h, best_t, total_bound(map, base, n, best_h, best_t, regime, rho_inf, ref)};
}

double predicted_rate_example_i(double alpha, std::uint64_t q, std::uint64_t n) {
  if (!(alpha > 1.0)) throw ConfigError("example I needs alpha > 1");
  if (q < 2 || n < q * q) throw ConfigError("example I needs N >= q^2");
  const double l = static_cast<double>(floor_log(q, n));
  return std::pow(l, -alpha / 2.0) * std::pow(std::log(l), 0.25);
}

double gamma_example_ii(double beta, std::uint64_t q) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("example II needs 0 < beta < 1");
  const double a = std::log(1.0 / beta);
  return a / (a + 2.0 * std::log(static_cast<double>(q)));
}

double predicted_rate_example_ii(double beta, std::uint64_t q, std::uint64_t n) {
  if (q < 2 || n < q * q) throw ConfigError("example II needs N >= q^2");
  return std::pow(static_cast<double>(n), -gamma_example_ii(beta, q));
}

}  // namespace ewlab
