#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ewlab/empirical.hpp"
#include "ewlab/mixed_radix.hpp"
#include "ewlab/qadditive.hpp"

namespace ewlab {

using Complex = std::complex<double>;

/// phi_j(t) = (1/a_j) sum_d exp(i t f(d q_j)).
Complex cf_factor(const DigitMap& map, const CantorBase& base, std::size_t j, double t);

struct CfValue {
  Complex value;
  std::optional<double> error;  // bound on |truncated - full|; empty without tail data
};

/// Product of the factors at levels 0..depth with cached digit tables.
class CfProduct {
 public:
  CfProduct(const DigitMap& map, const CantorBase& base, std::size_t depth);

  std::size_t depth() const { return depth_; }
  Complex value(double t) const;
  /// sum_{j > depth} (|m_j| |t| + s_j^2 t^2 / 2), or empty.
  std::optional<double> error(double t) const;
  CfValue operator()(double t) const { return {value(t), error(t)}; }

  /// sum_{j <= depth} m_j, the mean of the truncated law.
  double mean() const { return mean_; }
  std::optional<double> tail_mean() const { return tail_mean_; }
  std::optional<double> tail_variance() const { return tail_var_; }

  /// Evaluates the product on ts, split over threads.
  std::vector<CfValue> trace(std::span<const double> ts, unsigned threads = 1) const;

 private:
  std::size_t depth_;
  std::vector<std::vector<double>> levels_;
  double mean_ = 0.0;
  std::optional<double> tail_mean_, tail_var_;
};

CfValue cf_truncated(const DigitMap& map, const CantorBase& base, std::size_t depth, double t);

/// CSV with header t,re,im,err; err is empty when unavailable.
void write_cf_trace_csv(std::ostream& out, std::span<const double> ts,
                        std::span<const CfValue> values);

/// Step c.d.f. on knots origin + k * pitch with a certified envelope: the
/// true F satisfies G(x - eps_x) - eps_p <= F(x) <= G(x + eps_x) + eps_p.
class GridCdf final : public ReferenceCdf {
 public:
  /// A negative w1_tol means eps_x + eps_p * (support width + 2 eps_x).
  GridCdf(double origin, double pitch, std::vector<double> cumulative, double eps_x, double eps_p,
          double w1_tol = -1.0);

  double origin() const { return origin_; }
  double pitch() const { return pitch_; }
  double eps_x() const { return eps_x_; }
  double eps_p() const { return eps_p_; }
  std::size_t size() const { return cum_.size(); }
  double knot(std::size_t i) const { return origin_ + static_cast<double>(i) * pitch_; }
  std::span<const double> cumulative() const { return cum_; }

  double value(double x) const override;
  double left(double x) const override;
  Band band(double x) const override;
  Band band_left(double x) const override;
  std::pair<double, double> support() const override;
  double integral(double a, double b) const override;
  double quantile(double c) const override;
  Band concentration(double r) const override;
  double w1_tolerance() const override;

  /// Largest mass of a closed interval of length r, in knot steps.
  double max_window_mass(double r, bool strict) const;

  /// CSV with header x,F,eps_x,eps_p.
  void write_csv(std::ostream& out) const;

 private:
  // Index of the last knot <= x (strict: < x), or -1.
  std::ptrdiff_t floor_index(double x, bool strict) const;
  double antiderivative(double x) const;

  double origin_, pitch_;
  std::vector<double> cum_;
  std::vector<double> prefix_;  // prefix_[i] = sum_{k<i} cum_[k]
  double eps_x_, eps_p_;
  double w1_tol_;
  struct Memo;
  std::shared_ptr<Memo> memo_;  // concentration values by r
};

/// How the levels beyond the convolution depth enter the envelope.
enum class TailMode {
  deterministic,  // |R| <= |sum m_j| + sum Omega_j
  chebyshev,      // P(|R - E R| > v^(1/3)) <= v^(1/3), v = sum s_j^2
  automatic,      // whichever gives the smaller eps_x + eps_p
};

struct TailEnvelope {
  double shift = 0.0;  // added to eps_x
  double mass = 0.0;   // added to eps_p
  double w1 = 0.0;     // bound on W1 between the truncated and the full law
};

/// Envelope contribution of the levels >= depth.
TailEnvelope tail_envelope(const DigitMap& map, const CantorBase& base, std::size_t depth,
                           TailMode mode);

struct ConvolutionOptions {
  double pitch = 1.0 / 1048576.0;
  /// Number of levels convolved (0..depth-1). Default: smallest depth whose
  /// tail envelope (shift + mass) is at most the pitch.
  std::optional<std::size_t> depth;
  /// Knots outside this range are dropped; their mass goes into eps_p.
  std::optional<std::pair<double, double>> range;
  std::size_t knot_cap = std::size_t{1} << 26;
  double eps_p_ceiling = 1e-3;
  std::size_t max_depth = 4096;
  TailMode tail = TailMode::automatic;
};

/// Smallest depth whose tail envelope (shift + mass) is <= pitch.
std::size_t default_conv_depth(const DigitMap& map, const CantorBase& base, double pitch,
                               std::size_t max_depth = 4096, TailMode mode = TailMode::automatic);

/// Iterated convolution of the per-level digit laws, atoms rounded to knots.
GridCdf limit_cdf_conv(const DigitMap& map, const CantorBase& base,
                       const ConvolutionOptions& options = {});

struct InversionOptions {
  double t_max = 2000.0;
  double step = 0.05;
  double ceiling = 0.1;  // NonIntegrable above this cutoff-tail estimate
  unsigned threads = 1;
};

struct InvertedCdf {
  std::vector<double> x;
  std::vector<double> value;
  std::vector<double> envelope;
  double quadrature = 0.0;  // |I_h - I_2h| maximised over x
  double truncation = 0.0;  // CF truncation contribution
  double cutoff = 0.0;      // frequency cutoff contribution
  void write_csv(std::ostream& out) const;
};

/// F(x) = 1/2 - (1/pi) int_0^T Im(exp(-itx) phi(t)) / t dt by the trapezoid rule.
InvertedCdf limit_cdf_invert(const CfProduct& cf, std::span<const double> xs,
                             const InversionOptions& options = {});

/// Smallest depth whose CF truncation integral up to t_max is below target.
std::size_t default_cf_depth(const DigitMap& map, const CantorBase& base, double t_max,
                             double target = 1e-10, std::size_t max_depth = 4096);

}  // namespace ewlab
