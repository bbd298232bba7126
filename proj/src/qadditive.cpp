#include "ewlab/qadditive.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Shape { table, identity, skewed };

// Built-in families as f(d q_j) = c_j * shape(d).
struct Linearized {
  WeightKind weight = WeightKind::geometric;
  double alpha = 2.0;
  double beta = 0.5;
  Shape shape = Shape::table;
  std::vector<double> table;
  bool ternary = false;  // alphabet must be exactly 3
};

std::optional<Linearized> linearize(const DigitMap& map) {
  if (const auto* m = std::get_if<LinearWeightMap>(&map)) {
    return Linearized{m->weight, m->alpha, m->beta,
                      m->g.empty() ? Shape::identity : Shape::table, m->g, false};
  }
  if (std::holds_alternative<SymmetricTernaryMap>(map)) {
    return Linearized{WeightKind::geometric, 2.0, 1.0 / 3.0, Shape::table, {-1.0, 0.0, 1.0},
                      true};
  }
  if (std::holds_alternative<SkewedPolyweightMap>(map)) {
    return Linearized{WeightKind::polynomial, 2.0, 0.5, Shape::skewed, {}, false};
  }
  return std::nullopt;
}

double level_weight(const Linearized& lin, const CantorBase& base, std::size_t j) {
  switch (lin.weight) {
    case WeightKind::polynomial:
      return j == 0 ? 1.0 : std::pow(static_cast<double>(j), -lin.alpha);
    case WeightKind::geometric:
      // 3^j is exact, so 3^-j is rounded once instead of j times.
      if (lin.ternary) return 1.0 / std::pow(3.0, static_cast<double>(j));
      return std::pow(lin.beta, static_cast<double>(j));
    case WeightKind::radical_inverse:
      return 1.0 / base.weight_double(j + 1);
  }
  return 0.0;
}

double shape_value(const Linearized& lin, std::uint64_t d) {
  switch (lin.shape) {
    case Shape::identity:
      return static_cast<double>(d);
    case Shape::skewed:
      return d == 0 ? 0.0 : (d == 1 ? 1.0 : 2.0);
    case Shape::table:
      if (d >= lin.table.size()) {
        throw DigitOutOfRange("digit " + std::to_string(d) + " not covered by a g table of size " +
                              std::to_string(lin.table.size()));
      }
      return lin.table[d];
  }
  return 0.0;
}

void check_digit(const CantorBase& base, std::uint64_t d, std::size_t j) {
  if (d >= base.radix(j)) {
    throw DigitOutOfRange("digit " + std::to_string(d) + " at level " + std::to_string(j) +
                          " exceeds a_j - 1 = " + std::to_string(base.radix(j) - 1));
  }
}

// Moments of the shape over the uniform alphabet {0..a-1}.
struct ShapeMoments {
  double mean = 0.0;
  double variance = 0.0;
  double oscillation = 0.0;
};

ShapeMoments shape_moments(const Linearized& lin, std::uint64_t a) {
  double sum = 0.0;
  for (std::uint64_t d = 0; d < a; ++d) sum += shape_value(lin, d);
  const double mean = sum / static_cast<double>(a);
  double var = 0.0;
  double osc = 0.0;
  for (std::uint64_t d = 0; d < a; ++d) {
    const double c = shape_value(lin, d) - mean;
    var += c * c;
    osc = std::max(osc, std::abs(c));
  }
  return {mean, var / static_cast<double>(a), osc};
}

void collect_alphabets(const BaseRule& rule, std::size_t level, std::set<std::uint64_t>& out,
                       bool& unbounded) {
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRule>) {
          out.insert(r.q);
        } else if constexpr (std::is_same_v<R, PeriodicRule>) {
          out.insert(r.pattern.begin(), r.pattern.end());
        } else if constexpr (std::is_same_v<R, AffineRule>) {
          if (r.c == 0) {
            out.insert(static_cast<std::uint64_t>(r.d));
          } else {
            unbounded = true;
          }
        } else {
          for (std::size_t j = level + 1; j < r.table.size(); ++j) out.insert(r.table[j]);
          std::visit([&](const auto& c) { collect_alphabets(BaseRule{c}, level, out, unbounded); },
                     r.then);
        }
      },
      rule);
}

// Alphabet sizes a_j that occur for j > level, or nullopt when unbounded.
std::optional<std::set<std::uint64_t>> alphabets_beyond(const CantorBase& base,
                                                        std::size_t level) {
  std::set<std::uint64_t> out;
  bool unbounded = false;
  collect_alphabets(base.rule(), level, out, unbounded);
  if (unbounded) return std::nullopt;
  return out;
}

// Worst-case shape moments over the alphabets beyond `level`.
struct MomentBounds {
  double abs_mean = 0.0;
  double variance = 0.0;
  double oscillation = 0.0;
};

MomentBounds moment_bounds(const Linearized& lin, const CantorBase& base, std::size_t level) {
  auto alphabets = alphabets_beyond(base, level);
  if (!alphabets) {
    switch (lin.shape) {
      case Shape::identity:
        return {kInf, kInf, kInf};
      case Shape::skewed:
        // Values lie in [0, 2].
        return {2.0, 1.0, 2.0};
      case Shape::table: {
        // Alphabets larger than the table cannot be evaluated at all.
        alphabets.emplace();
        for (std::uint64_t a = 2; a <= lin.table.size(); ++a) alphabets->insert(a);
        break;
      }
    }
  }
  MomentBounds b;
  for (auto a : *alphabets) {
    if (lin.shape == Shape::table && a > lin.table.size()) {
      throw DigitOutOfRange("alphabet " + std::to_string(a) + " exceeds the g table");
    }
    const auto m = shape_moments(lin, a);
    b.abs_mean = std::max(b.abs_mean, std::abs(m.mean));
    b.variance = std::max(b.variance, m.variance);
    b.oscillation = std::max(b.oscillation, m.oscillation);
  }
  return b;
}

// Certified bound on sum_{j>L} c_j^power.
double weight_tail(const Linearized& lin, const CantorBase& base, std::size_t level, int power) {
  const double l = static_cast<double>(level);
  switch (lin.weight) {
    case WeightKind::polynomial: {
      const double p = lin.alpha * power;
      if (p <= 1.0) return kInf;
      // sum_{j>L} j^-p <= integral_L^inf x^-p dx for L >= 1.
      if (level == 0) return 1.0 + 1.0 / (p - 1.0);
      return std::pow(l, 1.0 - p) / (p - 1.0);
    }
    case WeightKind::geometric: {
      const double b = std::pow(std::abs(lin.beta), power);
      if (b >= 1.0) return kInf;
      return std::pow(b, l + 1.0) / (1.0 - b);
    }
    case WeightKind::radical_inverse: {
      // q_{j+1} >= 2^{j-L-1} q_{L+2} for j > L.
      const double q = base.weight_double(level + 2);
      return power == 1 ? 2.0 / q : (4.0 / 3.0) / (q * q);
    }
  }
  return kInf;
}

double scaled(double factor, double tail) { return factor == 0.0 ? 0.0 : factor * tail; }

// Exact tails when c_{j+p} = rho c_j and the alphabet repeats with period p.
std::optional<TailSums> periodic_exact_tails(const Linearized& lin, const CantorBase& base,
                                             std::size_t level) {
  if (lin.weight == WeightKind::polynomial) return std::nullopt;
  if (!std::holds_alternative<ConstantRule>(base.rule()) &&
      !std::holds_alternative<PeriodicRule>(base.rule())) {
    return std::nullopt;
  }
  const auto pattern = *base.period();
  const std::size_t p = pattern.size();
  double rho = 1.0;
  if (lin.weight == WeightKind::geometric) {
    rho = std::pow(lin.beta, static_cast<double>(p));
  } else {
    for (auto a : pattern) rho /= static_cast<double>(a);
  }
  if (!(std::abs(rho) < 1.0)) return std::nullopt;
  double mean = 0.0, var = 0.0, osc = 0.0;
  for (std::size_t i = 1; i <= p; ++i) {
    const std::size_t j = level + i;
    const double c = level_weight(lin, base, j);
    const auto m = shape_moments(lin, base.radix(j));
    mean += c * m.mean;
    var += c * c * m.variance;
    osc += std::abs(c) * m.oscillation;
  }
  return TailSums{std::abs(mean / (1.0 - rho)), var / (1.0 - rho * rho),
                  osc / (1.0 - std::abs(rho)), true};
}

TailSums linear_tails(const Linearized& lin, const CantorBase& base, std::size_t level) {
  if (lin.ternary) {
    for (std::size_t j = 0; j < CantorBase::kEagerLevels; ++j) {
      if (base.radix(j) != 3) throw DigitOutOfRange("symmetric-ternary needs a_j = 3");
    }
  }
  if (lin.weight == WeightKind::radical_inverse && lin.shape == Shape::identity) {
    // Tail digits of the radical inverse form a uniform law on [0, 1/q_{L+1}).
    const double q = base.weight_double(level + 1);
    return TailSums{0.5 / q, 1.0 / (12.0 * q * q), 0.5 / q, true};
  }
  if (auto exact = periodic_exact_tails(lin, base, level)) return *exact;
  const auto b = moment_bounds(lin, base, level);
  return TailSums{scaled(b.abs_mean, weight_tail(lin, base, level, 1)),
                  scaled(b.variance, weight_tail(lin, base, level, 2)),
                  scaled(b.oscillation, weight_tail(lin, base, level, 1)), false};
}

}  // namespace

double digit_value(const DigitMap& map, const CantorBase& base, std::uint64_t d, std::size_t j) {
  check_digit(base, d, j);
  if (std::holds_alternative<ZeroMap>(map)) return 0.0;
  if (const auto* t = std::get_if<CustomTableMap>(&map)) {
    if (j >= t->levels.size()) return 0.0;
    const auto& row = t->levels[j];
    if (d >= row.size()) {
      throw DigitOutOfRange("custom table level " + std::to_string(j) + " has no entry for digit " +
                            std::to_string(d));
    }
    return row[d];
  }
  const auto lin = *linearize(map);
  if (lin.ternary && base.radix(j) != 3) {
    throw DigitOutOfRange("symmetric-ternary needs a_j = 3 at level " + std::to_string(j));
  }
  return level_weight(lin, base, j) * shape_value(lin, d);
}

double eval(const DigitMap& map, const CantorBase& base, std::uint64_t n) {
  double sum = 0.0;
  for_each_digit(base, n, [&](std::size_t j, std::uint64_t d) { sum += digit_value(map, base, d, j); });
  return sum;
}

Evaluator::Evaluator(DigitMap map, CantorBase base) : map_(std::move(map)), base_(std::move(base)) {
  constexpr std::uint64_t kMaxTable = std::uint64_t{1} << 16;
  for (std::size_t j = 0; j < 64; ++j) {
    // Levels whose weight exceeds 2^64 never carry a digit of a 64-bit N.
    if (!base_.weight_u64(j)) break;
    const std::uint64_t a = base_.radix(j);
    std::vector<double> row;
    if (a <= kMaxTable) {
      row.reserve(a);
      for (std::uint64_t d = 0; d < a; ++d) {
        // Out-of-range table entries only fail when actually reached.
        try {
          row.push_back(digit_value(map_, base_, d, j));
        } catch (const DigitOutOfRange&) {
          row.clear();
          break;
        }
      }
    }
    tables_.push_back(std::move(row));
  }
}

double Evaluator::operator()(std::uint64_t n) const {
  double sum = 0.0;
  for_each_digit(base_, n, [&](std::size_t j, std::uint64_t d) {
    const auto& row = tables_[j];
    sum += row.empty() ? digit_value(map_, base_, d, j) : row[d];
  });
  return sum;
}

DigitStats digit_stats(const DigitMap& map, const CantorBase& base, std::size_t j) {
  const std::uint64_t a = base.radix(j);
  std::vector<double> values(a);
  double sum = 0.0;
  for (std::uint64_t d = 0; d < a; ++d) {
    values[d] = digit_value(map, base, d, j);
    sum += values[d];
  }
  DigitStats s;
  s.level = j;
  s.mean = sum / static_cast<double>(a);
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double c = v - s.mean;
    m2 += c * c;
    m3 += c * c * c;
    s.oscillation = std::max(s.oscillation, std::abs(c));
  }
  s.variance = m2 / static_cast<double>(a);
  s.third_moment = m3 / static_cast<double>(a);
  return s;
}

bool has_tail_meta(const DigitMap& map) {
  if (const auto* t = std::get_if<CustomTableMap>(&map)) return t->tails.has_value();
  return true;
}

TailSums tail_sums(const DigitMap& map, const CantorBase& base, std::size_t level) {
  if (std::holds_alternative<ZeroMap>(map)) return TailSums{0.0, 0.0, 0.0, true};
  if (const auto* t = std::get_if<CustomTableMap>(&map)) {
    if (!t->tails) throw NoTailMeta("custom table has no tail bounds; tau1 is unavailable");
    double mean = 0.0, var = 0.0, osc = 0.0;
    for (std::size_t j = level + 1; j < t->levels.size(); ++j) {
      const auto s = digit_stats(map, base, j);
      mean += s.mean;
      var += s.variance;
      osc += s.oscillation;
    }
    return TailSums{std::abs(mean) + t->tails->mean, var + t->tails->variance,
                    osc + t->tails->oscillation, false};
  }
  return linear_tails(*linearize(map), base, level);
}

std::string to_string(EwVerdict v) {
  switch (v) {
    case EwVerdict::converges:
      return "converges";
    case EwVerdict::diverges:
      return "diverges";
    case EwVerdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

EwDiagnosis ew_diagnose(const DigitMap& map, const CantorBase& base, std::size_t j_max,
                        const EwOptions& options) {
  EwDiagnosis out;
  out.trace.reserve(j_max + 1);
  double msum = 0.0, vsum = 0.0;
  std::vector<double> means, vars;
  for (std::size_t j = 0; j <= j_max; ++j) {
    const auto s = digit_stats(map, base, j);
    msum += s.mean;
    vsum += s.variance;
    means.push_back(s.mean);
    vars.push_back(s.variance);
    out.trace.push_back({j, msum, vsum});
  }

  if (has_tail_meta(map)) {
    out.analytic = true;
    const auto tails = tail_sums(map, base, j_max);
    if (std::isfinite(tails.mean) && std::isfinite(tails.variance)) {
      out.verdict = EwVerdict::converges;
      return out;
    }
    // An infinite certified bound proves divergence only when the per-level
    // factors cannot cancel.
    const auto lin = linearize(map);
    const auto alphabets = alphabets_beyond(base, j_max);
    if (lin && alphabets) {
      bool same_sign_mean = true, positive_var = true;
      int sign = 0;
      for (auto a : *alphabets) {
        const auto m = shape_moments(*lin, a);
        const int sg = m.mean > 0 ? 1 : (m.mean < 0 ? -1 : 0);
        if (sg == 0 || (sign != 0 && sg != sign)) same_sign_mean = false;
        sign = sg;
        if (m.variance <= 0.0) positive_var = false;
      }
      const bool mean_diverges = !std::isfinite(tails.mean) && same_sign_mean;
      const bool var_diverges = !std::isfinite(tails.variance) && positive_var;
      out.verdict = (mean_diverges || var_diverges) ? EwVerdict::diverges : EwVerdict::inconclusive;
    } else {
      out.verdict = EwVerdict::inconclusive;
    }
    return out;
  }

  // Heuristic Cauchy check on dyadic blocks [2^k - 1, 2^{k+1} - 1).
  if (std::abs(msum) > options.divergence_threshold || vsum > options.divergence_threshold) {
    out.verdict = EwVerdict::diverges;
    return out;
  }
  std::vector<double> mean_blocks, var_blocks;
  for (std::size_t lo = 0, width = 1; lo + width <= j_max + 1; lo += width, width *= 2) {
    double bm = 0.0, bv = 0.0;
    for (std::size_t j = lo; j < lo + width; ++j) {
      bm += means[j];
      bv += vars[j];
    }
    mean_blocks.push_back(std::abs(bm));
    var_blocks.push_back(bv);
  }
  if (mean_blocks.empty()) return out;
  if (mean_blocks.back() < options.tol && var_blocks.back() < options.tol) {
    out.verdict = EwVerdict::converges;
    return out;
  }
  // Dyadic block sums of a convergent j^-p series shrink by 2^{1-p} per block;
  // ratios near 1 (harmonic-like, p <= ~1.07) are read as divergence.
  auto stalled = [&](const std::vector<double>& blocks) {
    if (blocks.size() < 3 || blocks.back() < options.tol) return false;
    const std::size_t n = blocks.size();
    return blocks[n - 1] >= options.stall_ratio * blocks[n - 2] &&
           blocks[n - 2] >= options.stall_ratio * blocks[n - 3];
  };
  if (stalled(mean_blocks) || stalled(var_blocks)) {
    out.verdict = EwVerdict::diverges;
  }
  return out;
}

}  // namespace ewlab
