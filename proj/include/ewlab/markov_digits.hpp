#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "ewlab/qadditive.hpp"

namespace ewlab {

/// A primitive Markov chain on the digits {0..a-1}.
struct DigitChain {
  std::size_t a = 0;
  Eigen::MatrixXd p;
  std::vector<double> pi;  // stationary distribution
  double lambda = 0.0;     // second largest eigenvalue modulus
};

/// Throws NotStochastic or NotPrimitive.
DigitChain build_chain(const std::vector<std::vector<double>>& p);

/// Stationary start, then Markov steps; path `path` of the stream `seed`.
std::vector<std::uint32_t> generate(const DigitChain& chain, std::size_t length,
                                    std::uint64_t seed, std::uint64_t path = 0);

struct LagEstimate {
  std::size_t lag = 0;
  double cov = 0.0;
  double stderr_ = 0.0;
};

struct DecayFit {
  std::vector<LagEstimate> lags;
  double slope = 0.0;       // of log|Cov| against r
  double half_width = 0.0;  // 95% confidence half-width of the slope
  double intercept = 0.0;
  std::size_t used = 0;     // lags entering the fit
};

struct MonteCarloOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Cov(Y_0, Y_r) for r = 1..r_max over independent stationary paths, where
/// Y = f(d q_0) is the level-0 table of map; fits log|Cov| on the lags whose
/// |Cov| exceeds 5 standard errors. Throws AlphabetMismatch.
DecayFit covariance_decay(const DigitChain& chain, const DigitMap& map, std::size_t r_max,
                          const MonteCarloOptions& options = {});

void write_covariance_csv(std::ostream& out, const DecayFit& fit);

struct WindowVariance {
  double variance = 0.0;  // sample Var(R_{L,h})
  double stderr_ = 0.0;
  double tau2 = 0.0;      // sum of Var_pi(Y_j) over the window
  double lambda_h = 0.0;  // lambda^h
  double ratio = 0.0;     // variance / (tau2 + lambda^h)
};

/// R_{L,h} = sum_{j=L-h}^{L-1} (Y_j - E_pi Y_j) with Y_j = f(delta_j a^j) and
/// digits driven by the chain. Throws AlphabetMismatch.
WindowVariance window_variance(const DigitChain& chain, const DigitMap& map, std::size_t l,
                               std::size_t h, const MonteCarloOptions& options = {});

}  // namespace ewlab
