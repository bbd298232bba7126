#include "ewlab/markov_digits.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ewlab/error.hpp"

using namespace ewlab;

namespace {

const std::vector<std::vector<double>> kSticky{{0.9, 0.1}, {0.1, 0.9}};
const DigitMap kSign = LinearWeightMap{WeightKind::geometric, 0, 1.0, {-1, 1}};

// Var(sum_{j<h} Y_j) for the sticky chain with Y = +-1: sum_{i,k} 0.8^|i-k|.
double sticky_window_variance(std::size_t h) {
  double v = 0.0;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t k = 0; k < h; ++k)
      v += std::pow(0.8, std::abs(static_cast<double>(i) - static_cast<double>(k)));
  return v;
}

}  // namespace

TEST_CASE("build_chain examples") {
  const auto iid = build_chain({{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25},
                                {0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}});
  CHECK(iid.lambda == 0.0);
  for (double p : iid.pi) CHECK(p == doctest::Approx(0.25));

  const auto sticky = build_chain(kSticky);
  CHECK(sticky.lambda == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(sticky.pi[0] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(build_chain({{1, 0}, {0, 1}}), NotPrimitive);
  CHECK_THROWS_AS(build_chain({{0, 1}, {1, 0}}), NotPrimitive);  // periodic
  CHECK_THROWS_AS(build_chain({{1, 0}, {1, 0}}), NotPrimitive);
  CHECK_THROWS_AS(build_chain({{0.5, 0.6}, {0.5, 0.5}}), NotStochastic);
  CHECK_THROWS_AS(build_chain({{1.5, -0.5}, {0.5, 0.5}}), NotStochastic);
}

TEST_CASE("stationary distribution is invariant") {
  const auto c = build_chain({{0.1, 0.6, 0.3}, {0.5, 0.0, 0.5}, {0.2, 0.2, 0.6}});
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += c.pi[i] * c.p(static_cast<int>(i), static_cast<int>(k));
    CHECK(s == doctest::Approx(c.pi[k]).epsilon(1e-10));
  }
  CHECK(c.lambda < 1.0);
}

TEST_CASE("generate: determinism and frequencies") {
  const auto sticky = build_chain(kSticky);
  CHECK(generate(sticky, 1000, 42) == generate(sticky, 1000, 42));
  CHECK(generate(sticky, 1000, 42) != generate(sticky, 1000, 43));

  const auto iid = build_chain({{0.5, 0.5}, {0.5, 0.5}});
  const std::size_t n = 1'000'000;
  const auto seq = generate(iid, n, 7);
  double ones = 0.0, lag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ones += seq[i];
    if (i + 1 < n) lag += (seq[i] - 0.5) * (seq[i + 1] - 0.5);
  }
  CHECK(std::abs(ones - n / 2.0) < 3 * std::sqrt(n * 0.25));
  // Each product is +-1/4 with variance 1/16.
  CHECK(std::abs(lag / (n - 1)) < 3 * 0.25 / std::sqrt(n - 1.0));
}

TEST_CASE("covariance_decay on the sticky chain") {
  const auto sticky = build_chain(kSticky);
  const auto fit = covariance_decay(sticky, kSign, 20, {200'000, 11, 2});
  for (const auto& l : fit.lags)
    CHECK(std::abs(l.cov - std::pow(0.8, static_cast<double>(l.lag))) < 5 * l.stderr_ + 1e-12);
  CHECK(std::abs(fit.slope - std::log(0.8)) < 0.15 * std::abs(std::log(0.8)));

  const DigitMap flipped = LinearWeightMap{WeightKind::geometric, 0, 1.0, {1, -1}};
  const auto flip = covariance_decay(sticky, flipped, 20, {200'000, 11, 2});
  for (std::size_t r = 0; r < fit.lags.size(); ++r)
    CHECK(std::abs(flip.lags[r].cov) == doctest::Approx(std::abs(fit.lags[r].cov)).epsilon(1e-9));

  std::ostringstream csv;
  write_covariance_csv(csv, fit);
  CHECK(csv.str().rfind("r,cov,stderr\n1,", 0) == 0);
}

TEST_CASE("covariance_decay: independent digits") {
  const auto iid = build_chain({{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  const auto fit = covariance_decay(iid, SymmetricTernaryMap{}, 10, {100'000, 3, 1});
  for (const auto& l : fit.lags) CHECK(std::abs(l.cov) < 3.5 * l.stderr_);
  CHECK_THROWS_AS(covariance_decay(build_chain(kSticky), SymmetricTernaryMap{}, 5), AlphabetMismatch);
  const DigitMap wide = CustomTableMap{{{0, 1, 2}}, std::nullopt};
  CHECK_THROWS_AS(covariance_decay(build_chain(kSticky), wide, 5), AlphabetMismatch);
}

TEST_CASE("window_variance against the closed form and the independent case") {
  const auto sticky = build_chain(kSticky);
  for (std::size_t h : {1u, 4u, 12u}) {
    const auto w = window_variance(sticky, kSign, 20, h, {200'000, 5, 2});
    CHECK(w.tau2 == doctest::Approx(static_cast<double>(h)));
    CHECK(std::abs(w.variance - sticky_window_variance(h)) <= 4 * w.stderr_ + 1e-12);
    CHECK(w.lambda_h == doctest::Approx(std::pow(0.8, h)));
  }
  const auto iid = build_chain({{0.5, 0.5}, {0.5, 0.5}});
  const DigitMap geo = LinearWeightMap{WeightKind::geometric, 0, 0.5, {0, 1}};
  const auto w = window_variance(iid, geo, 10, 6, {200'000, 9, 1});
  CHECK(w.lambda_h == 0.0);
  CHECK(std::abs(w.variance - w.tau2) < 3 * w.stderr_);
  CHECK_THROWS_AS(window_variance(iid, geo, 4, 5), ConfigError);
}
