#include "ewlab/limitlaw.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

std::vector<double> level_values(const DigitMap& map, const CantorBase& base, std::size_t j) {
  std::vector<double> v(base.radix(j));
  for (std::uint64_t d = 0; d < v.size(); ++d) v[d] = digit_value(map, base, d, j);
  return v;
}

Complex average_exp(const std::vector<double>& values, double t) {
  Complex s = 0.0;
  for (double v : values) s += std::polar(1.0, t * v);
  return s / static_cast<double>(values.size());
}

std::optional<TailSums> maybe_tails(const DigitMap& map, const CantorBase& base,
                                    std::size_t level) {
  if (!has_tail_meta(map)) return std::nullopt;
  return tail_sums(map, base, level);
}

}  // namespace

Complex cf_factor(const DigitMap& map, const CantorBase& base, std::size_t j, double t) {
  if (t == 0.0) return 1.0;
  return average_exp(level_values(map, base, j), t);
}

CfProduct::CfProduct(const DigitMap& map, const CantorBase& base, std::size_t depth)
    : depth_(depth) {
  levels_.reserve(depth + 1);
  for (std::size_t j = 0; j <= depth; ++j) {
    levels_.push_back(level_values(map, base, j));
    double s = 0.0;
    for (double v : levels_.back()) s += v;
    mean_ += s / static_cast<double>(levels_.back().size());
  }
  if (const auto tails = maybe_tails(map, base, depth)) {
    tail_mean_ = tails->mean;
    tail_var_ = tails->variance;
  }
}

Complex CfProduct::value(double t) const {
  if (t == 0.0) return 1.0;
  Complex p = 1.0;
  for (const auto& level : levels_) {
    p *= average_exp(level, t);
    if (p == 0.0) break;
  }
  return p;
}

std::optional<double> CfProduct::error(double t) const {
  if (!tail_mean_) return std::nullopt;
  // |E e^{itR} - 1| <= |t| |E R| + t^2 Var(R) / 2 for the tail R.
  return std::abs(t) * *tail_mean_ + 0.5 * t * t * *tail_var_;
}

std::vector<CfValue> CfProduct::trace(std::span<const double> ts, unsigned threads) const {
  std::vector<CfValue> out(ts.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ts.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&, k] {
        for (std::size_t i = k; i < ts.size(); i += threads) out[i] = (*this)(ts[i]);
      });
    }
  }
  return out;
}

CfValue cf_truncated(const DigitMap& map, const CantorBase& base, std::size_t depth, double t) {
  return CfProduct(map, base, depth)(t);
}

void write_cf_trace_csv(std::ostream& out, std::span<const double> ts,
                        std::span<const CfValue> values) {
  out << "t,re,im,err\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    fmt::print(out, "{:.17g},{:.17g},{:.17g},", ts[i], values[i].value.real(),
               values[i].value.imag());
    if (values[i].error) fmt::print(out, "{:.17g}", *values[i].error);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

struct GridCdf::Memo {
  std::mutex mutex;
  std::map<double, Band> concentration;
};

GridCdf::GridCdf(double origin, double pitch, std::vector<double> cumulative, double eps_x,
                 double eps_p, double w1_tol)
    : origin_(origin),
      pitch_(pitch),
      cum_(std::move(cumulative)),
      eps_x_(eps_x),
      eps_p_(eps_p),
      w1_tol_(w1_tol),
      memo_(std::make_shared<Memo>()) {
  if (!(pitch > 0.0)) throw ConfigError("grid pitch must be positive");
  if (cum_.empty()) throw ConfigError("grid c.d.f. needs at least one knot");
  prefix_.resize(cum_.size() + 1);
  for (std::size_t i = 0; i < cum_.size(); ++i) prefix_[i + 1] = prefix_[i] + cum_[i];
}

std::ptrdiff_t GridCdf::floor_index(double x, bool strict) const {
  const auto n = static_cast<std::ptrdiff_t>(cum_.size());
  const double guess = std::floor((x - origin_) / pitch_);
  if (guess < -1.0) return -1;
  std::ptrdiff_t i = guess >= static_cast<double>(n) ? n - 1 : static_cast<std::ptrdiff_t>(guess);
  auto below = [&](std::ptrdiff_t k) {
    const double kx = knot(static_cast<std::size_t>(k));
    return strict ? kx < x : kx <= x;
  };
  while (i + 1 < n && below(i + 1)) ++i;
  while (i >= 0 && !below(i)) --i;
  return i;
}

double GridCdf::value(double x) const {
  const auto i = floor_index(x, false);
  return i < 0 ? 0.0 : cum_[static_cast<std::size_t>(i)];
}

double GridCdf::left(double x) const {
  const auto i = floor_index(x, true);
  return i < 0 ? 0.0 : cum_[static_cast<std::size_t>(i)];
}

Band GridCdf::band(double x) const {
  return {std::max(0.0, value(x - eps_x_) - eps_p_), std::min(1.0, value(x + eps_x_) + eps_p_)};
}

Band GridCdf::band_left(double x) const {
  return {std::max(0.0, left(x - eps_x_) - eps_p_), std::min(1.0, left(x + eps_x_) + eps_p_)};
}

std::pair<double, double> GridCdf::support() const { return {knot(0), knot(cum_.size() - 1)}; }

double GridCdf::antiderivative(double x) const {
  const auto i = floor_index(x, false);
  if (i < 0) return 0.0;
  const auto k = static_cast<std::size_t>(i);
  return prefix_[k] * pitch_ + cum_[k] * (x - knot(k));
}

double GridCdf::integral(double a, double b) const { return antiderivative(b) - antiderivative(a); }

double GridCdf::quantile(double c) const {
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), c);
  if (it == cum_.end()) return knot(cum_.size() - 1);
  return knot(static_cast<std::size_t>(it - cum_.begin()));
}

double GridCdf::max_window_mass(double r, bool strict) const {
  if (r < 0.0) return 0.0;
  // A window holds knots i..i+span.
  double steps = r / pitch_;
  std::ptrdiff_t span = static_cast<std::ptrdiff_t>(std::floor(steps));
  if (strict && static_cast<double>(span) == steps) --span;
  if (span < 0) return 0.0;
  const auto n = static_cast<std::ptrdiff_t>(cum_.size());
  if (span >= n - 1) return cum_.back();
  double best = cum_[static_cast<std::size_t>(span)];
  for (std::ptrdiff_t i = 1; i + span < n; ++i)
    best = std::max(best, cum_[static_cast<std::size_t>(i + span)] - cum_[static_cast<std::size_t>(i - 1)]);
  return best;
}

Band GridCdf::concentration(double r) const {
  {
    std::lock_guard lock(memo_->mutex);
    if (const auto it = memo_->concentration.find(r); it != memo_->concentration.end())
      return it->second;
  }
  // F(x + r) - F(x) is the mass of (x, x + r]; shifts of size eps_x move
  // the ends, and eps_p covers the mass the grid does not see.
  const double lo = max_window_mass(r - 2.0 * eps_x_, true) - eps_p_;
  const double hi = max_window_mass(r + 2.0 * eps_x_, false) + eps_p_;
  const Band b{std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
  std::lock_guard lock(memo_->mutex);
  memo_->concentration.emplace(r, b);
  return b;
}

double GridCdf::w1_tolerance() const {
  if (w1_tol_ >= 0.0) return w1_tol_;
  const auto [lo, hi] = support();
  return eps_x_ + eps_p_ * (hi - lo + 2.0 * eps_x_);
}

void GridCdf::write_csv(std::ostream& out) const {
  out << "x,F,eps_x,eps_p\n";
  for (std::size_t i = 0; i < cum_.size(); ++i)
    fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g}\n", knot(i), cum_[i], eps_x_, eps_p_);
}

// ---------------------------------------------------------------------------

TailEnvelope tail_envelope(const DigitMap& map, const CantorBase& base, std::size_t depth,
                           TailMode mode) {
  if (depth < 1) throw ConfigError("convolution depth must be at least 1");
  const auto t = tail_sums(map, base, depth - 1);
  const TailEnvelope det{t.mean + t.oscillation, 0.0, t.mean + t.oscillation};
  const double c = std::cbrt(t.variance);
  const TailEnvelope cheb{t.mean + c, c, t.mean + std::min(t.oscillation, std::sqrt(t.variance))};
  switch (mode) {
    case TailMode::deterministic:
      return det;
    case TailMode::chebyshev:
      return cheb;
    case TailMode::automatic:
      return det.shift + det.mass <= cheb.shift + cheb.mass ? det : cheb;
  }
  return det;
}

std::size_t default_conv_depth(const DigitMap& map, const CantorBase& base, double pitch,
                               std::size_t max_depth, TailMode mode) {
  if (!has_tail_meta(map)) throw NoTailMeta("convolution depth needs tail bounds");
  for (std::size_t depth = 1; depth <= max_depth; ++depth) {
    const auto e = tail_envelope(map, base, depth, mode);
    if (e.shift + e.mass <= pitch) return depth;
  }
  throw ResourceLimit(fmt::format("tail envelope stays above the pitch {} up to depth {}", pitch,
                                  max_depth));
}

GridCdf limit_cdf_conv(const DigitMap& map, const CantorBase& base,
                       const ConvolutionOptions& options) {
  const double w = options.pitch;
  if (!(w > 0.0)) throw ConfigError("pitch must be positive");
  const std::size_t depth = options.depth
                                ? *options.depth
                                : default_conv_depth(map, base, w, options.max_depth, options.tail);
  const TailEnvelope tail = tail_envelope(map, base, depth, options.tail);

  // Knot k sits at k * w; mass[i] belongs to knot lo + i.
  std::int64_t lo = 0;
  std::vector<double> mass{1.0};
  std::vector<double> next;
  double below = 0.0, above = 0.0;
  std::int64_t clip_lo = std::numeric_limits<std::int64_t>::min();
  std::int64_t clip_hi = std::numeric_limits<std::int64_t>::max();
  if (options.range) {
    clip_lo = static_cast<std::int64_t>(std::ceil(options.range->first / w));
    clip_hi = static_cast<std::int64_t>(std::floor(options.range->second / w));
    if (clip_hi < clip_lo) throw RangeTooSmall("range holds no knot");
  }

  std::vector<std::vector<std::int64_t>> offsets(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    const auto values = level_values(map, base, j);
    for (double v : values) offsets[j].push_back(std::llround(v / w));
  }
  // Later levels can still move a knot by [reach_lo[j], reach_hi[j]].
  std::vector<std::int64_t> reach_lo(depth + 1, 0), reach_hi(depth + 1, 0);
  for (std::size_t j = depth; j-- > 0;) {
    const auto [mn, mx] = std::minmax_element(offsets[j].begin(), offsets[j].end());
    reach_lo[j] = reach_lo[j + 1] + *mn;
    reach_hi[j] = reach_hi[j + 1] + *mx;
  }

  for (std::size_t j = 0; j < depth; ++j) {
    const auto& offs = offsets[j];
    const auto [mn, mx] = std::minmax_element(offs.begin(), offs.end());
    const std::int64_t new_lo = lo + *mn;
    const std::size_t new_size = mass.size() + static_cast<std::size_t>(*mx - *mn);
    if (new_size > options.knot_cap)
      throw ResourceLimit(fmt::format("convolution needs {} knots (cap {})", new_size,
                                      options.knot_cap));
    next.assign(new_size, 0.0);
    const double p = 1.0 / static_cast<double>(offs.size());
    for (const std::int64_t o : offs) {
      const auto shift_i = static_cast<std::size_t>(o - *mn);
      for (std::size_t i = 0; i < mass.size(); ++i) next[i + shift_i] += p * mass[i];
    }
    // Trim empty ends and mass that can no longer reach the range.
    std::size_t first = 0, last = next.size();
    while (first < last && next[first] == 0.0) ++first;
    while (last > first && next[last - 1] == 0.0) --last;
    for (; first < last && new_lo + static_cast<std::int64_t>(first) + reach_hi[j + 1] < clip_lo; ++first)
      below += next[first];
    for (; last > first && new_lo + static_cast<std::int64_t>(last - 1) + reach_lo[j + 1] > clip_hi; --last)
      above += next[last - 1];
    if (first == last) throw RangeTooSmall("all mass fell outside the range");
    mass.assign(next.begin() + static_cast<std::ptrdiff_t>(first),
                next.begin() + static_cast<std::ptrdiff_t>(last));
    lo = new_lo + static_cast<std::int64_t>(first);
  }

  const double eps_p = below + above + tail.mass;
  if (eps_p > options.eps_p_ceiling)
    throw RangeTooSmall(fmt::format("uncovered mass {} exceeds {}", eps_p, options.eps_p_ceiling));
  std::vector<double> cum(mass.size());
  double acc = below;
  for (std::size_t i = 0; i < mass.size(); ++i) cum[i] = std::min(1.0, acc += mass[i]);
  if (below + above == 0.0) cum.back() = 1.0;
  const double binning = static_cast<double>(depth) * w / 2.0;
  const double width = static_cast<double>(mass.size() - 1) * w;
  return GridCdf(static_cast<double>(lo) * w, w, std::move(cum), binning + tail.shift, eps_p,
                 binning + tail.w1 + (below + above) * (width + 2.0 * (binning + tail.shift)));
}

// ---------------------------------------------------------------------------

std::size_t default_cf_depth(const DigitMap& map, const CantorBase& base, double t_max,
                             double target, std::size_t max_depth) {
  if (!has_tail_meta(map)) throw NoTailMeta("inversion needs tail bounds");
  for (std::size_t depth = 0; depth <= max_depth; ++depth) {
    const auto t = tail_sums(map, base, depth);
    if ((t.mean * t_max + t.variance * t_max * t_max / 4.0) / std::numbers::pi <= target)
      return depth;
  }
  return max_depth;
}

InvertedCdf limit_cdf_invert(const CfProduct& cf, std::span<const double> xs,
                             const InversionOptions& options) {
  if (!cf.tail_mean()) throw NoTailMeta("inversion needs a CF error bound");
  if (!(options.t_max >= 1.0)) throw ConfigError("t_max must be at least 1");
  if (!(options.step > 0.0)) throw ConfigError("step must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(options.t_max / options.step / 2.0)) * 2;
  const double h = options.t_max / static_cast<double>(n);

  std::vector<double> ts(n + 1);
  for (std::size_t k = 0; k <= n; ++k) ts[k] = h * static_cast<double>(k);
  const auto phi = cf.trace(ts, options.threads);

  double decay = 0.0;
  for (std::size_t k = n / 2; k <= n; ++k) decay = std::max(decay, std::abs(phi[k].value));
  const double cutoff = std::max(1.0 / options.t_max, decay);
  if (cutoff > options.ceiling)
    throw NonIntegrable(fmt::format("|phi| stays near {} up to t = {}; no decay to invert",
                                    decay, options.t_max));

  InvertedCdf out;
  out.x.assign(xs.begin(), xs.end());
  out.value.resize(xs.size());
  out.envelope.resize(xs.size());
  out.truncation = (*cf.tail_mean() * options.t_max +
                    *cf.tail_variance() * options.t_max * options.t_max / 4.0) /
                   std::numbers::pi;
  out.cutoff = cutoff;
  const double mean = cf.mean();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    auto integrand = [&](std::size_t k) {
      if (k == 0) return mean - x;
      return std::imag(std::polar(1.0, -ts[k] * x) * phi[k].value) / ts[k];
    };
    double fine = 0.5 * (integrand(0) + integrand(n)), coarse = fine;
    for (std::size_t k = 1; k < n; ++k) {
      const double v = integrand(k);
      fine += v;
      if (k % 2 == 0) coarse += v;
    }
    fine *= h;
    coarse *= 2.0 * h;
    const double quad = std::abs(fine - coarse) / 3.0;
    out.quadrature = std::max(out.quadrature, quad / std::numbers::pi);
    out.value[i] = std::clamp(0.5 - fine / std::numbers::pi, 0.0, 1.0);
    out.envelope[i] = quad / std::numbers::pi + out.truncation + cutoff;
  }
  return out;
}

void InvertedCdf::write_csv(std::ostream& out) const {
  out << "x,F,envelope\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    fmt::print(out, "{:.17g},{:.17g},{:.17g}\n", x[i], value[i], envelope[i]);
}

}  // namespace ewlab
