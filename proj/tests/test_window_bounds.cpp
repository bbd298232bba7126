#include "ewlab/window_bounds.hpp"

#include <cmath>

#include "doctest.h"
#include "ewlab/error.hpp"
#include "ewlab/limitlaw.hpp"

using namespace ewlab;

namespace {

const CantorBase kBase2 = build_base(ConstantRule{2});
const CantorBase kBase3 = build_base(ConstantRule{3});
const CantorBase kFact = build_base(AffineRule{1, 2});
const DigitMap kGeo = LinearWeightMap{WeightKind::geometric, 0, 0.5, {0, 1}};
const DigitMap kVdc = LinearWeightMap{WeightKind::radical_inverse, 0, 0, {}};

// Same search as optimize_window, assembled from total_bound one cell at a time.
std::pair<std::size_t, double> brute_force(const DigitMap& map, const CantorBase& base,
                                           std::uint64_t n, Regime regime,
                                           std::optional<double> rho, const ReferenceCdf& ref,
                                           double* best_total) {
  const std::size_t l = base.length(n);
  std::pair<std::size_t, double> best{0, 0.0};
  *best_total = 1e300;
  for (std::size_t h = 1; h <= l; ++h) {
    for (int k = 0; k <= (regime == Regime::B ? 0 : 40); ++k) {
      const double t = std::ldexp(1.0, -k);
      const double total = total_bound(map, base, n, h, t, regime, rho, ref).total;
      if (total < *best_total * (1 - 1e-14)) {
        *best_total = total;
        best = {h, t};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("window_size examples") {
  CHECK(window_size(kBase2, 10, 3) == 8);
  CHECK(window_size(kFact, 5, 2) == 30);
  CHECK(window_size(kBase3, 7, 7) == radix_weight(kBase3, 7));
  CHECK_THROWS_AS(window_size(kBase2, 4, 5), ConfigError);
  CHECK_THROWS_AS(window_size(kBase2, 4, 0), ConfigError);
  for (std::size_t h = 1; h <= 12; ++h) CHECK(window_size(kFact, 12, h) >= BigInt(1) << h);
}

TEST_CASE("tau2 examples and monotonicity") {
  CHECK(tau2(kGeo, kBase2, 10, 10) == doctest::Approx((1 - std::pow(4.0, -10)) / 3).epsilon(1e-15));
  CHECK(tau2(ZeroMap{}, kBase2, 10, 4) == 0.0);
  CHECK(tau2(kGeo, kBase2, 10, 1) == digit_stats(kGeo, kBase2, 9).variance);
  double prev = 0.0;
  for (std::size_t h = 1; h <= 15; ++h) {
    const double t = tau2(SkewedPolyweightMap{}, kBase3, 15, h);
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("tau1 examples") {
  CHECK(*tau1(kGeo, kBase2, 10) ==
        doctest::Approx(std::ldexp(1.0, -11) + std::pow(4.0, -11) / 3).epsilon(1e-14));
  CHECK(*tau1(ZeroMap{}, kBase2, 10) == 0.0);
  const DigitMap poly = LinearWeightMap{WeightKind::polynomial, 1.5, 0, {-1, 1}};
  for (std::size_t l : {10u, 100u, 1000u}) {
    double oracle = 0.0;  // partial sum of s_j^2 = j^-3 beyond L
    for (std::size_t j = l + 1; j < 200000; ++j) oracle += std::pow(static_cast<double>(j), -3.0);
    const double t = *tau1(poly, kBase2, l);
    CHECK(t >= oracle);
    const double scaled = t * static_cast<double>(l * l);
    CHECK(scaled > 0.4);
    CHECK(scaled < 0.6);
  }
  const DigitMap bare = CustomTableMap{{{0, 1}}, std::nullopt};
  CHECK_FALSE(tau1(bare, kBase2, 3));
}

TEST_CASE("regime_term examples") {
  CHECK(regime_term(Regime::A, 1.0, 1.0, std::nullopt) == 1.0);
  CHECK(regime_term(Regime::B, 0.3, 0.04, 1.0) == doctest::Approx(0.2));
  CHECK(regime_term(Regime::C, 0.5, 0.001, std::nullopt) == doctest::Approx(0.0025));
  CHECK_THROWS_AS(regime_term(Regime::B, 1.0, 1.0, std::nullopt), MissingDensityBound);
  CHECK(parse_regime("b") == Regime::B);
  CHECK_THROWS_AS(parse_regime("D"), ConfigError);
}

TEST_CASE("bridge_bound examples") {
  CHECK(bridge_bound(kBase2, 1024, 3).sharp == 0.0);
  CHECK(bridge_bound(kBase2, 1024, 3).uniform == 0.125);
  const auto b = bridge_bound(kBase2, 1025, 1);
  CHECK(b.remainder == 1025 % 512);
  CHECK(b.sharp == 1.0 / 1025);
  CHECK(bridge_bound(kFact, 720, 5).uniform == doctest::Approx(1.0 / 720));
}

TEST_CASE("total_bound examples") {
  const UniformCdf u;
  const auto zero = total_bound(ZeroMap{}, kBase2, 4096, 5, 1.0, Regime::B, 7.0, u);
  CHECK(zero.total == zero.bridge);
  CHECK(zero.bridge == std::ldexp(1.0, -5));

  const auto g = limit_cdf_conv(kGeo, kBase2, {.pitch = std::ldexp(1.0, -16)});
  const double rho = 1.0;
  const auto r = total_bound(kGeo, kBase2, 1024, 5, 1.0, Regime::B, rho, g);
  const double t1 = std::ldexp(1.0, -11) + std::pow(4.0, -11) / 3;
  double t2 = 0.0;
  for (int j = 5; j < 10; ++j) t2 += std::pow(4.0, -j) / 4;
  CHECK(r.total == doctest::Approx(1.0 / 32 + std::sqrt(t1) + rho * std::sqrt(t2)).epsilon(1e-13));
  CHECK_FALSE(r.conditional);

  const auto a = total_bound(ZeroMap{}, kBase2, 4096, 5, 1.0, Regime::A, std::nullopt, u);
  CHECK(a.total == doctest::Approx(std::ldexp(1.0, -5) + 1.0 + 1.0));

  const DigitMap bare = CustomTableMap{{{0, 1}, {0, 0.5}}, std::nullopt};
  CHECK(total_bound(bare, kBase2, 64, 2, 1.0, Regime::B, 1.0, u).conditional);
}

TEST_CASE("optimize_window equals an independent brute force") {
  const UniformCdf u;
  const auto grid = limit_cdf_conv(kGeo, kBase2, {.pitch = std::ldexp(1.0, -14)});
  struct Case {
    DigitMap map;
    CantorBase base;
    Regime regime;
    std::optional<double> rho;
    const ReferenceCdf* ref;
  };
  const std::vector<Case> cases{
      {kVdc, kBase2, Regime::B, 1.0, &u},
      {kVdc, kBase2, Regime::A, std::nullopt, &u},
      {kGeo, kBase2, Regime::A, std::nullopt, &grid},
      {SymmetricTernaryMap{}, kBase3, Regime::C, std::nullopt, &u},
  };
  for (const auto& c : cases) {
    for (std::uint64_t n : {300ULL, 5000ULL, 70000ULL}) {
      double oracle_total = 0.0;
      const auto [h, t] = brute_force(c.map, c.base, n, c.regime, c.rho, *c.ref, &oracle_total);
      const auto opt = optimize_window(c.map, c.base, n, c.regime, c.rho, *c.ref);
      CHECK(opt.report.total == doctest::Approx(oracle_total).epsilon(1e-12));
      CHECK(opt.h == h);
      CHECK(opt.t == t);
    }
  }
}

TEST_CASE("optimize_window edge cases") {
  const UniformCdf u;
  const auto z = optimize_window(ZeroMap{}, kBase2, 1 << 12, Regime::A, std::nullopt, u);
  CHECK(z.h == 12);
  CHECK_THROWS_AS(optimize_window(SkewedPolyweightMap{}, build_base(ConstantRule{4}), 1000, Regime::C, std::nullopt, u),
                  ConfigError);
  CHECK_THROWS_AS(optimize_window(kVdc, kBase2, 1000, Regime::B, std::nullopt, u),
                  MissingDensityBound);
  CHECK(third_moments_vanish(SymmetricTernaryMap{}, kBase3, 30));

  const auto g = limit_cdf_conv(kGeo, kBase2, {.pitch = std::ldexp(1.0, -14)});
  double prev = 1e300;
  for (std::size_t l = 4; l <= 20; ++l) {
    const auto o = optimize_window(kGeo, kBase2, std::uint64_t{1} << l, Regime::A, std::nullopt, g);
    CHECK(o.report.total <= prev);
    prev = o.report.total;
  }
}

TEST_CASE("predicted rates") {
  CHECK(gamma_example_ii(0.5, 2) == doctest::Approx(1.0 / 3));
  CHECK(predicted_rate_example_ii(0.5, 2, 1 << 15) == doctest::Approx(std::ldexp(1.0, -5)));
  CHECK(predicted_rate_example_i(2.0, 2, 1 << 16) ==
        doctest::Approx(std::pow(std::log(16.0), 0.25) / 16));
  CHECK(gamma_example_ii(1 - 1e-12, 2) < 1e-11);
  CHECK_THROWS_AS(predicted_rate_example_ii(0.5, 2, 3), ConfigError);
}
