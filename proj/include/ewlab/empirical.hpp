#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ewlab/mixed_radix.hpp"
#include "ewlab/qadditive.hpp"

namespace ewlab {

/// Closed interval of possible values, lo <= hi.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// A reference c.d.f. F. Exact references return degenerate bands; numerical
/// ones (GridCdf) return the range F is certified to lie in.
class ReferenceCdf {
 public:
  virtual ~ReferenceCdf() = default;

  /// Central value of F(x).
  virtual double value(double x) const = 0;
  /// Central value of the left limit F(x-).
  virtual double left(double x) const { return value(x); }

  virtual Band band(double x) const {
    const double v = value(x);
    return {v, v};
  }
  virtual Band band_left(double x) const {
    const double v = left(x);
    return {v, v};
  }

  /// [lo, hi] with F = 0 below lo and F = 1 from hi on (central values).
  virtual std::pair<double, double> support() const = 0;

  /// Integral of the central F over [a, b]; adaptive Simpson by default.
  virtual double integral(double a, double b) const;

  /// inf{x : F(x) >= c} for the central F; bisection by default.
  virtual double quantile(double c) const;

  /// Q_F(r) = sup_x F(x + r) - F(x), as a band on the true value.
  virtual Band concentration(double r) const;

  /// Bound on W1(central F, true F).
  virtual double w1_tolerance() const { return 0.0; }
};

/// Unif[lo, hi].
class UniformCdf final : public ReferenceCdf {
 public:
  UniformCdf(double lo = 0.0, double hi = 1.0);
  double value(double x) const override;
  std::pair<double, double> support() const override { return {lo_, hi_}; }
  double integral(double a, double b) const override;
  double quantile(double c) const override;
  Band concentration(double r) const override;

 private:
  double lo_, hi_;
};

/// Point mass at a.
class PointMassCdf final : public ReferenceCdf {
 public:
  explicit PointMassCdf(double a = 0.0) : a_(a) {}
  double value(double x) const override { return x >= a_ ? 1.0 : 0.0; }
  double left(double x) const override { return x > a_ ? 1.0 : 0.0; }
  std::pair<double, double> support() const override { return {a_, a_}; }
  double integral(double a, double b) const override;
  double quantile(double) const override { return a_; }
  Band concentration(double) const override { return {1.0, 1.0}; }

 private:
  double a_;
};

/// A continuous c.d.f. given as a callable; generic numerical fallbacks.
class FunctionCdf final : public ReferenceCdf {
 public:
  FunctionCdf(std::function<double(double)> f, double lo, double hi);
  double value(double x) const override;
  std::pair<double, double> support() const override { return {lo_, hi_}; }

 private:
  std::function<double(double)> f_;
  double lo_, hi_;
};

/// F_N(x) = #{samples <= x} / N over a sorted multiset.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  /// Sorts the samples.
  explicit EmpiricalCdf(std::vector<double> samples);

  std::span<const double> samples() const { return samples_; }
  std::size_t count() const { return samples_.size(); }

  double operator()(double x) const;
  double left(double x) const;

  /// One "x,F" row per distinct sample value.
  void write_knots_csv(std::ostream& out) const;

 private:
  std::vector<double> samples_;
};

/// An empirical c.d.f. viewed as a reference (exact step function).
class StepCdf final : public ReferenceCdf {
 public:
  /// Keeps a reference to ecdf, which must outlive this object.
  explicit StepCdf(const EmpiricalCdf& ecdf);
  double value(double x) const override { return (*ecdf_)(x); }
  double left(double x) const override { return ecdf_->left(x); }
  std::pair<double, double> support() const override;
  double integral(double a, double b) const override;
  double quantile(double c) const override;
  Band concentration(double r) const override;

 private:
  double antiderivative(double x) const;

  const EmpiricalCdf* ecdf_;
  std::vector<double> prefix_;
};

struct EnumerationOptions {
  std::uint64_t cap = std::uint64_t{1} << 24;
  unsigned threads = 1;
};

/// The sorted multiset {f(n) : 0 <= n < N}. Throws ResourceLimit above cap.
EmpiricalCdf empirical_cdf(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                           const EnumerationOptions& options = {});

/// sup_x |F_N(x) - F(x)|; lo == hi for exact references.
Band kolmogorov(const EmpiricalCdf& ecdf, const ReferenceCdf& ref);

struct W1Result {
  double value = 0.0;
  double tolerance = 0.0;
};

/// Integral of |F_N - F| computed piecewise between the jumps of F_N.
W1Result wasserstein1(const EmpiricalCdf& ecdf, const ReferenceCdf& ref);

Band concentration(const ReferenceCdf& ref, double r);

/// Exact one-dimensional star discrepancy. Throws PointOutOfRange.
double star_discrepancy(std::span<const double> points);

struct SmoothingRow {
  double sigma = 0.0;
  double bound = 0.0;  // W1 / sigma + rho_inf * sigma
  bool violated = false;
};

struct SmoothingReport {
  double dk = 0.0;
  double w1 = 0.0;
  double optimized = 0.0;  // 2 sqrt(rho_inf W1), the minimum over sigma
  std::vector<SmoothingRow> rows;
  bool any_violation = false;
};

SmoothingReport smoothing_check(const EmpiricalCdf& g, const ReferenceCdf& h, double rho_inf,
                                std::span<const double> sigmas);

}  // namespace ewlab
