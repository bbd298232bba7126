#include "ewlab/qadditive.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ewlab/error.hpp"

using namespace ewlab;
using Rational = boost::multiprecision::cpp_rational;

namespace {

const CantorBase kBase2 = build_base(ConstantRule{2});
const CantorBase kBase3 = build_base(ConstantRule{3});

DigitMap radical_inverse() { return LinearWeightMap{WeightKind::radical_inverse, 0, 0, {}}; }
DigitMap geometric_half() { return LinearWeightMap{WeightKind::geometric, 0, 0.5, {0.0, 1.0}}; }

}  // namespace

TEST_CASE("digit_value examples") {
  CHECK(digit_value(radical_inverse(), kBase2, 1, 1) == 0.25);
  CHECK(digit_value(SymmetricTernaryMap{}, kBase3, 2, 0) == 1.0);
  CHECK(digit_value(geometric_half(), kBase2, 0, 7) == 0.0);
  CHECK_THROWS_AS(digit_value(radical_inverse(), kBase2, 2, 0), DigitOutOfRange);
  CHECK_THROWS_AS(digit_value(SymmetricTernaryMap{}, kBase2, 1, 0), DigitOutOfRange);
  // g table shorter than the alphabet
  const DigitMap short_g = LinearWeightMap{WeightKind::geometric, 0, 0.5, {0.0, 1.0}};
  CHECK_THROWS_AS(digit_value(short_g, kBase3, 2, 0), DigitOutOfRange);
}

TEST_CASE("eval examples") {
  CHECK(eval(radical_inverse(), kBase2, 3) == 0.75);
  CHECK(eval(radical_inverse(), kBase2, 0) == 0.0);
  CHECK(eval(SymmetricTernaryMap{}, kBase3, 0) == 0.0);
  CHECK(eval(SymmetricTernaryMap{}, kBase3, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval(ZeroMap{}, kBase3, 12345) == 0.0);
}

TEST_CASE("Evaluator agrees with eval bit for bit") {
  std::mt19937_64 rng(7);
  const std::vector<std::pair<DigitMap, CantorBase>> cases{
      {radical_inverse(), kBase2},
      {radical_inverse(), build_base(AffineRule{1, 2})},
      {SymmetricTernaryMap{}, kBase3},
      {SkewedPolyweightMap{}, build_base(ConstantRule{5})},
      {LinearWeightMap{WeightKind::polynomial, 1.5, 0, {-1.0, 1.0}}, kBase2}};
  for (const auto& [map, base] : cases) {
    const Evaluator f(map, base);
    for (int i = 0; i < 500; ++i) {
      const std::uint64_t n = rng() >> (rng() % 64);
      CHECK(f(n) == eval(map, base, n));
    }
  }
}

TEST_CASE("eval distributes over digit decompositions") {
  std::mt19937_64 rng(11);
  const auto base = build_base(PeriodicRule{{2, 3, 5}});
  const DigitMap map = LinearWeightMap{WeightKind::geometric, 0, 0.7, {0.3, -1.0, 2.0, 0.5, 4.0}};
  for (int i = 0; i < 300; ++i) {
    std::vector<std::uint64_t> digits(1 + rng() % 30);
    double expected = 0.0;
    for (std::size_t j = 0; j < digits.size(); ++j) {
      digits[j] = rng() % base.radix(j);
    }
    // Leading zeros are not part of the expansion.
    while (!digits.empty() && digits.back() == 0) digits.pop_back();
    for (std::size_t j = 0; j < digits.size(); ++j) expected += digit_value(map, base, digits[j], j);
    const auto n = compress(base, digits).convert_to<std::uint64_t>();
    CHECK(eval(map, base, n) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("digit_stats examples") {
  auto s = digit_stats(radical_inverse(), kBase2, 0);
  CHECK(s.mean == 0.25);
  CHECK(s.variance == 0.0625);

  s = digit_stats(SymmetricTernaryMap{}, kBase3, 0);
  CHECK(s.mean == 0.0);
  CHECK(s.variance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s.third_moment == 0.0);

  s = digit_stats(SkewedPolyweightMap{}, kBase3, 1);
  CHECK(s.mean == 1.0);
  CHECK(s.variance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("moment inequalities hold at every level") {
  const std::vector<std::pair<DigitMap, CantorBase>> cases{
      {radical_inverse(), build_base(AffineRule{1, 2})},
      {SymmetricTernaryMap{}, kBase3},
      {SkewedPolyweightMap{}, build_base(ConstantRule{7})},
      {LinearWeightMap{WeightKind::geometric, 0, 0.9, {0.0, 0.1, 5.0}}, kBase3}};
  for (const auto& [map, base] : cases) {
    for (std::size_t j = 0; j <= 20; ++j) {
      const auto s = digit_stats(map, base, j);
      CHECK(s.variance >= 0.0);
      CHECK(s.variance <= s.oscillation * s.oscillation * (1 + 1e-12));
      CHECK(std::abs(s.third_moment) <= s.oscillation * s.variance * (1 + 1e-12) + 1e-300);
    }
  }
  for (std::size_t j = 0; j <= 40; ++j) {
    CHECK(digit_stats(SymmetricTernaryMap{}, kBase3, j).third_moment == 0.0);
  }
}

TEST_CASE("tail_sums examples") {
  auto t = tail_sums(geometric_half(), kBase2, 10);
  CHECK(t.exact);
  CHECK(t.variance == doctest::Approx(std::pow(4.0, -10) / 12).epsilon(1e-15));
  CHECK(t.mean == doctest::Approx(std::pow(2.0, -11)).epsilon(1e-15));

  t = tail_sums(ZeroMap{}, kBase2, 10);
  CHECK(t.mean == 0.0);
  CHECK(t.variance == 0.0);

  // g = (-1, +1): zero mean, unit variance; sum_{j>L} j^-3 <= L^-2 / 2.
  const DigitMap poly = LinearWeightMap{WeightKind::polynomial, 1.5, 0, {-1.0, 1.0}};
  for (std::size_t l : {1, 5, 10, 100}) {
    t = tail_sums(poly, kBase2, l);
    CHECK(t.mean == 0.0);
    CHECK(t.variance == doctest::Approx(std::pow(double(l), -2.0) / 2).epsilon(1e-14));
  }

  const DigitMap custom = CustomTableMap{{{0.0, 1.0}}, std::nullopt};
  CHECK_THROWS_AS(tail_sums(custom, kBase2, 3), NoTailMeta);
}

TEST_CASE("tail bounds dominate brute-force partial tails") {
  const std::vector<std::pair<DigitMap, CantorBase>> cases{
      {radical_inverse(), build_base(AffineRule{1, 2})},
      {radical_inverse(), build_base(PeriodicRule{{2, 5, 3}})},
      {LinearWeightMap{WeightKind::radical_inverse, 0, 0, {1.0, -2.0, 0.5}}, kBase3},
      {LinearWeightMap{WeightKind::radical_inverse, 0, 0, {1.0, -2.0, 0.5, 3.0}},
       build_base(TableRule{{4, 2}, ConstantRule{3}})},
      {SymmetricTernaryMap{}, kBase3},
      {SkewedPolyweightMap{}, build_base(ConstantRule{4})},
      {SkewedPolyweightMap{}, build_base(AffineRule{1, 2})},
      {LinearWeightMap{WeightKind::geometric, 0, 0.6, {0.0, 1.0, 3.0}}, build_base(PeriodicRule{{2, 3}})},
      {LinearWeightMap{WeightKind::geometric, 0, 0.6, {0.0, 1.0, 3.0}},
       build_base(TableRule{{3, 2, 3}, ConstantRule{2}})},
      {LinearWeightMap{WeightKind::polynomial, 2.5, 0, {0.0, 1.0}}, kBase2}};
  for (const auto& [map, base] : cases) {
    for (std::size_t l : {0, 1, 3, 8}) {
      const auto t = tail_sums(map, base, l);
      double mean = 0.0, var = 0.0, osc = 0.0;
      for (std::size_t j = l + 1; j < l + 400; ++j) {
        const auto s = digit_stats(map, base, j);
        mean += s.mean;
        var += s.variance;
        osc += s.oscillation;
      }
      CHECK(t.mean >= std::abs(mean) * (1 - 1e-12));
      CHECK(t.variance >= var * (1 - 1e-12));
      CHECK(t.oscillation >= osc * (1 - 1e-12));
      if (t.exact) {
        CHECK(t.mean == doctest::Approx(std::abs(mean)).epsilon(1e-12));
        CHECK(t.variance == doctest::Approx(var).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("digit_stats matches rational enumeration") {
  // Radical inverse on the factorial base: values d / q_{j+1} are rational.
  const auto fact = build_base(AffineRule{1, 2});
  for (std::size_t j = 0; j <= 20; ++j) {
    const auto a = fact.radix(j);
    Rational sum = 0, sum_sq = 0;
    const Rational q(fact.weight(j + 1));
    for (std::uint64_t d = 0; d < a; ++d) {
      sum += Rational(d) / q;
    }
    const Rational mean = sum / a;
    for (std::uint64_t d = 0; d < a; ++d) {
      const Rational c = Rational(d) / q - mean;
      sum_sq += c * c;
    }
    const auto s = digit_stats(radical_inverse(), fact, j);
    const double exact_mean = mean.convert_to<double>();
    const double exact_var = (sum_sq / a).convert_to<double>();
    CHECK(std::abs(s.mean - exact_mean) <= 1e-15 * exact_mean);
    CHECK(std::abs(s.variance - exact_var) <= 1e-15 * exact_var);
  }
}

TEST_CASE("ew_diagnose verdicts") {
  auto d = ew_diagnose(radical_inverse(), kBase2, 30);
  CHECK(d.verdict == EwVerdict::converges);
  CHECK(d.analytic);
  CHECK(d.trace.size() == 31);

  CHECK(ew_diagnose(ZeroMap{}, kBase2, 10).verdict == EwVerdict::converges);

  // Polynomial weights with alpha <= 1 and positive digit means diverge.
  const DigitMap slow = LinearWeightMap{WeightKind::polynomial, 0.9, 0, {0.0, 1.0}};
  CHECK(ew_diagnose(slow, kBase2, 50).verdict == EwVerdict::diverges);

  // Harmonic means m_j = 1 / (j + 1) through a tail-free custom table.
  CustomTableMap harmonic;
  for (std::size_t j = 0; j < 1024; ++j) harmonic.levels.push_back({0.0, 2.0 / double(j + 1)});
  d = ew_diagnose(harmonic, kBase2, 1000);
  CHECK_FALSE(d.analytic);
  CHECK(d.verdict == EwVerdict::diverges);

  // A fast-decaying custom table settles.
  CustomTableMap fast;
  for (std::size_t j = 0; j < 200; ++j) fast.levels.push_back({0.0, std::pow(0.5, double(j))});
  CHECK(ew_diagnose(fast, kBase2, 150).verdict == EwVerdict::converges);
}
