#include "ewlab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double simpson(double a, double fa, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const ReferenceCdf& f, double a, double fa, double b, double fb,
                        double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f.value(lm), frm = f.value(rm);
  const double left = simpson(a, fa, flm, m, fm);
  const double right = simpson(m, fm, frm, b, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

// Integral over [a, b] of |c - F| for a nondecreasing F.
double abs_gap_integral(const ReferenceCdf& ref, double a, double b, double c) {
  if (!(b > a)) return 0.0;
  const double cross = std::clamp(ref.quantile(c), a, b);
  const double below = std::max(0.0, c * (cross - a) - ref.integral(a, cross));
  const double above = std::max(0.0, ref.integral(cross, b) - c * (b - cross));
  return below + above;
}

}  // namespace

double ReferenceCdf::integral(double a, double b) const {
  if (!(b > a)) return 0.0;
  const double fa = value(a), fb = value(b), m = 0.5 * (a + b), fm = value(m);
  return adaptive_simpson(*this, a, fa, b, fb, m, fm, simpson(a, fa, fm, b, fb), 1e-13,
                          40);
}

double ReferenceCdf::quantile(double c) const {
  auto [lo, hi] = support();
  if (c <= 0.0) return -kInf;
  if (value(lo) >= c) return lo;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (value(mid) >= c ? hi : lo) = mid;
  }
  return hi;
}

Band ReferenceCdf::concentration(double r) const {
  const auto [lo, hi] = support();
  constexpr double kMaxSteps = double(1 << 22);
  const double pitch = std::max(r / 16.0, (hi - lo + r) / kMaxSteps);
  double best = 0.0;
  for (double x = lo - r; x <= hi; x += pitch) best = std::max(best, value(x + r) - value(x));
  best = std::min(best, 1.0);
  return {best, best};
}

UniformCdf::UniformCdf(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(hi > lo)) throw ConfigError("uniform reference needs lo < hi");
}

double UniformCdf::value(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return (x - lo_) / (hi_ - lo_);
}

double UniformCdf::integral(double a, double b) const {
  const double w = hi_ - lo_;
  auto antiderivative = [&](double x) {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 0.5 * w + (x - hi_);
    return (x - lo_) * (x - lo_) / (2.0 * w);
  };
  return antiderivative(b) - antiderivative(a);
}

double UniformCdf::quantile(double c) const {
  if (c <= 0.0) return -kInf;
  if (c >= 1.0) return hi_;
  return lo_ + c * (hi_ - lo_);
}

double PointMassCdf::integral(double a, double b) const {
  auto anti = [&](double x) { return std::max(0.0, x - a_); };
  return anti(b) - anti(a);
}

Band UniformCdf::concentration(double r) const {
  const double q = std::min(r / (hi_ - lo_), 1.0);
  return {q, q};
}

FunctionCdf::FunctionCdf(std::function<double(double)> f, double lo, double hi)
    : f_(std::move(f)), lo_(lo), hi_(hi) {}

double FunctionCdf::value(double x) const {
  if (x < lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return std::clamp(f_(x), 0.0, 1.0);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
  if (!std::is_sorted(samples_.begin(), samples_.end())) {
    std::sort(samples_.begin(), samples_.end());
  }
}

double EmpiricalCdf::operator()(double x) const {
  const auto k = std::upper_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
  return static_cast<double>(k) / static_cast<double>(samples_.size());
}

double EmpiricalCdf::left(double x) const {
  const auto k = std::lower_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
  return static_cast<double>(k) / static_cast<double>(samples_.size());
}

void EmpiricalCdf::write_knots_csv(std::ostream& out) const {
  out << "x,F\n";
  const double n = static_cast<double>(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (i + 1 < samples_.size() && samples_[i + 1] == samples_[i]) continue;
    out << fmt::format("{:.17g},{:.17g}\n", samples_[i], static_cast<double>(i + 1) / n);
  }
}

std::pair<double, double> StepCdf::support() const {
  const auto s = ecdf_->samples();
  return {s.front(), s.back()};
}

StepCdf::StepCdf(const EmpiricalCdf& ecdf) : ecdf_(&ecdf) {
  const auto s = ecdf.samples();
  prefix_.resize(s.size() + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) prefix_[i + 1] = prefix_[i] + s[i];
}

double StepCdf::antiderivative(double x) const {
  // sum_{s <= x} (x - s) / N
  const auto s = ecdf_->samples();
  const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
  return (static_cast<double>(k) * x - prefix_[k]) / static_cast<double>(s.size());
}

double StepCdf::integral(double a, double b) const {
  if (!(b > a)) return 0.0;
  return antiderivative(b) - antiderivative(a);
}

double StepCdf::quantile(double c) const {
  const auto s = ecdf_->samples();
  if (c <= 0.0) return -kInf;
  const double n = static_cast<double>(s.size());
  auto k = static_cast<std::size_t>(std::clamp(std::ceil(c * n), 1.0, n));
  while (k > 1 && static_cast<double>(k - 1) / n >= c) --k;
  while (k < s.size() && static_cast<double>(k) / n < c) ++k;
  return s[k - 1];
}

Band StepCdf::concentration(double r) const {
  const auto s = ecdf_->samples();
  std::size_t best = 0;
  // max_i #{s in [s_i, s_i + r)}
  for (std::size_t i = 0, j = 0; i < s.size(); ++i) {
    j = std::max(j, i);
    while (j < s.size() && s[j] < s[i] + r) ++j;
    best = std::max(best, j - i);
  }
  const double q = static_cast<double>(best) / static_cast<double>(s.size());
  return {q, q};
}

EmpiricalCdf empirical_cdf(const DigitMap& map, const CantorBase& base, std::uint64_t n,
                           const EnumerationOptions& options) {
  if (n == 0) throw ConfigError("empirical_cdf needs N >= 1");
  if (n > options.cap) {
    throw ResourceLimit(fmt::format("N = {} exceeds the enumeration cap {}", n, options.cap));
  }
  const Evaluator f(map, base);
  std::vector<double> samples(n);
  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(options.threads, 1, std::max<std::uint64_t>(1, n / 4096)));
  std::vector<std::uint64_t> bounds(threads + 1);
  for (unsigned t = 0; t <= threads; ++t) bounds[t] = n * t / threads;
  auto fill = [&](unsigned t) {
    for (std::uint64_t k = bounds[t]; k < bounds[t + 1]; ++k) samples[k] = f(k);
    std::sort(samples.begin() + bounds[t], samples.begin() + bounds[t + 1]);
  };
  if (threads == 1) {
    fill(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(fill, t);
  }
  for (unsigned t = 1; t < threads; ++t) {
    std::inplace_merge(samples.begin(), samples.begin() + bounds[t],
                       samples.begin() + bounds[t + 1]);
  }
  return EmpiricalCdf(std::move(samples));
}

Band kolmogorov(const EmpiricalCdf& ecdf, const ReferenceCdf& ref) {
  const auto s = ecdf.samples();
  const double n = static_cast<double>(s.size());
  double hi = 0.0, lo = 0.0;
  std::size_t first = 0;
  while (first < s.size()) {
    std::size_t last = first;
    while (last + 1 < s.size() && s[last + 1] == s[first]) ++last;
    const double x = s[first];
    const double at = static_cast<double>(last + 1) / n;
    const double before = static_cast<double>(first) / n;
    const Band b = ref.band(x);
    const Band bl = ref.band_left(x);
    hi = std::max({hi, at - b.lo, b.hi - at, bl.hi - before, before - bl.lo});
    lo = std::max({lo, at - b.hi, b.lo - at, before - bl.hi, bl.lo - before});
    first = last + 1;
  }
  return {lo, hi};
}

W1Result wasserstein1(const EmpiricalCdf& ecdf, const ReferenceCdf& ref) {
  const auto s = ecdf.samples();
  const double n = static_cast<double>(s.size());
  const auto [slo, shi] = ref.support();
  const double start = std::min(slo, s.front());
  const double end = std::max(shi, s.back());
  double total = abs_gap_integral(ref, start, s.front(), 0.0);
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t last = i;
    while (last + 1 < s.size() && s[last + 1] == s[i]) ++last;
    const double c = static_cast<double>(last + 1) / n;
    const double next = last + 1 < s.size() ? s[last + 1] : end;
    total += abs_gap_integral(ref, s[i], next, c);
    i = last + 1;
  }
  // Adaptive quadrature accumulates at most ~1e-13 per piece.
  const bool exact = dynamic_cast<const FunctionCdf*>(&ref) == nullptr;
  const double quad_tol = exact ? 0.0 : 1e-13 * (n + 2.0);
  return {total, ref.w1_tolerance() + quad_tol};
}

Band concentration(const ReferenceCdf& ref, double r) {
  if (!(r > 0.0)) throw ConfigError("concentration needs r > 0");
  return ref.concentration(r);
}

double star_discrepancy(std::span<const double> points) {
  for (double x : points) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw PointOutOfRange(fmt::format("point {} lies outside [0, 1]", x));
    }
  }
  std::vector<double> copy;
  if (!std::is_sorted(points.begin(), points.end())) {
    copy.assign(points.begin(), points.end());
    std::sort(copy.begin(), copy.end());
    points = copy;
  }
  const double n = static_cast<double>(points.size());
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i];
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

SmoothingReport smoothing_check(const EmpiricalCdf& g, const ReferenceCdf& h, double rho_inf,
                                std::span<const double> sigmas) {
  SmoothingReport report;
  report.dk = kolmogorov(g, h).hi;
  report.w1 = wasserstein1(g, h).value;
  report.optimized = 2.0 * std::sqrt(rho_inf * report.w1);
  for (double sigma : sigmas) {
    SmoothingRow row{sigma, report.w1 / sigma + rho_inf * sigma, false};
    row.violated = report.dk > row.bound;
    report.any_violation = report.any_violation || row.violated;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ewlab
