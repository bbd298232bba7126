#include "ewlab/markov_digits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ewlab/error.hpp"
#include "ewlab/mixed_radix.hpp"

namespace ewlab {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) determined by (seed, path, step).
double counter_uniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
  const std::uint64_t key = splitmix(seed ^ splitmix(path * 0xd1b54a32d192ed03ULL));
  return static_cast<double>(splitmix(key + step) >> 11) * 0x1.0p-53;
}

std::uint32_t draw(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(
      it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

struct Sampler {
  std::vector<double> start;
  std::vector<std::vector<double>> rows;

  explicit Sampler(const DigitChain& c) {
    start.resize(c.a);
    std::partial_sum(c.pi.begin(), c.pi.end(), start.begin());
    rows.resize(c.a);
    for (std::size_t i = 0; i < c.a; ++i) {
      rows[i].resize(c.a);
      double acc = 0.0;
      for (std::size_t k = 0; k < c.a; ++k) rows[i][k] = acc += c.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }

  template <class Visit>
  void walk(std::size_t length, std::uint64_t seed, std::uint64_t path, Visit&& visit) const {
    std::uint32_t d = draw(start, counter_uniform(seed, path, 0));
    visit(0, d);
    for (std::size_t s = 1; s < length; ++s) {
      d = draw(rows[d], counter_uniform(seed, path, s));
      visit(s, d);
    }
  }
};

// Digit values of level j on the constant base a; mismatches become AlphabetMismatch.
std::vector<double> level_table(const DigitMap& map, std::size_t a, std::size_t j) {
  if (const auto* t = std::get_if<CustomTableMap>(&map)) {
    if (j < t->levels.size() && t->levels[j].size() != a)
      throw AlphabetMismatch(fmt::format("table level {} has {} digits, chain has {}", j,
                                         t->levels[j].size(), a));
  }
  const auto base = build_base(ConstantRule{a});
  std::vector<double> y(a);
  try {
    for (std::size_t d = 0; d < a; ++d) y[d] = digit_value(map, base, d, j);
  } catch (const Error& e) {
    throw AlphabetMismatch(fmt::format("map does not fit a {}-letter chain: {}", a, e.what()));
  }
  return y;
}

// Runs work(first, last, slot) on contiguous chunks of [0, n).
template <class Work>
void parallel_chunks(std::size_t n, unsigned threads, Work&& work) {
  threads = std::max(1u, threads);
  std::vector<std::jthread> pool;
  for (unsigned k = 0; k < threads; ++k) {
    const std::size_t first = n * k / threads, last = n * (k + 1) / threads;
    pool.emplace_back([&work, first, last, k] { work(first, last, k); });
  }
}

}  // namespace

DigitChain build_chain(const std::vector<std::vector<double>>& rows) {
  const std::size_t a = rows.size();
  if (a < 2) throw NotStochastic("a chain needs at least two states");
  DigitChain c;
  c.a = a;
  c.p.resize(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
  for (std::size_t i = 0; i < a; ++i) {
    if (rows[i].size() != a) throw NotStochastic("transition matrix is not square");
    double sum = 0.0;
    for (std::size_t k = 0; k < a; ++k) {
      const double v = rows[i][k];
      if (!(v >= 0.0)) throw NotStochastic(fmt::format("negative entry in row {}", i));
      c.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw NotStochastic(fmt::format("row {} sums to {:.17g}", i, sum));
  }

  // Some power up to a^2 must be strictly positive (Wielandt: (a-1)^2 + 1 suffices).
  Eigen::MatrixXi pattern = (c.p.array() > 0.0).cast<int>();
  Eigen::MatrixXi power = pattern;
  bool primitive = false;
  for (std::size_t k = 1; k <= a * a; ++k) {
    if ((power.array() > 0).all()) {
      primitive = true;
      break;
    }
    power = ((power * pattern).array() > 0).cast<int>();
  }
  if (!primitive) throw NotPrimitive("no power of the transition matrix is positive");

  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(a), 1.0 / static_cast<double>(a));
  for (int it = 0; it < 10'000'000; ++it) {
    Eigen::RowVectorXd next = pi * c.p;
    next /= next.sum();
    const double diff = (next - pi).lpNorm<1>();
    pi = next;
    if (diff < 1e-13) break;
  }
  c.pi.assign(pi.data(), pi.data() + a);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(c.p, false);
  std::vector<double> moduli;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    moduli.push_back(std::abs(solver.eigenvalues()[i]));
  std::sort(moduli.rbegin(), moduli.rend());
  c.lambda = moduli[1] < 1e-14 ? 0.0 : moduli[1];
  return c;
}

std::vector<std::uint32_t> generate(const DigitChain& chain, std::size_t length,
                                    std::uint64_t seed, std::uint64_t path) {
  if (length < 1) throw ConfigError("sequence length must be at least 1");
  std::vector<std::uint32_t> out(length);
  Sampler(chain).walk(length, seed, path, [&](std::size_t s, std::uint32_t d) { out[s] = d; });
  return out;
}

DecayFit covariance_decay(const DigitChain& chain, const DigitMap& map, std::size_t r_max,
                          const MonteCarloOptions& options) {
  if (r_max < 2) throw ConfigError("r_max must be at least 2");
  if (options.samples < 2) throw ConfigError("need at least two samples");
  const auto y = level_table(map, chain.a, 0);
  const Sampler sampler(chain);
  const std::size_t n = options.samples;

  // Per thread: sums of Y_0, Y_r, Y_0 Y_r and (Y_0 Y_r)^2 for each lag.
  struct Acc {
    std::vector<double> s0, sr, p, pp;
  };
  std::vector<Acc> accs(std::max(1u, options.threads));
  parallel_chunks(n, options.threads, [&](std::size_t first, std::size_t last, unsigned slot) {
    Acc& acc = accs[slot];
    acc.s0.assign(r_max + 1, 0.0);
    acc.sr = acc.p = acc.pp = acc.s0;
    std::vector<double> path(r_max + 1);
    for (std::size_t i = first; i < last; ++i) {
      sampler.walk(r_max + 1, options.seed, i, [&](std::size_t s, std::uint32_t d) { path[s] = y[d]; });
      for (std::size_t r = 1; r <= r_max; ++r) {
        const double prod = path[0] * path[r];
        acc.s0[r] += path[0];
        acc.sr[r] += path[r];
        acc.p[r] += prod;
        acc.pp[r] += prod * prod;
      }
    }
  });

  DecayFit fit;
  const double nd = static_cast<double>(n);
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t r = 1; r <= r_max; ++r) {
    double s0 = 0.0, sr = 0.0, p = 0.0, pp = 0.0;
    for (const auto& acc : accs) {
      if (acc.s0.empty()) continue;
      s0 += acc.s0[r];
      sr += acc.sr[r];
      p += acc.p[r];
      pp += acc.pp[r];
    }
    const double cov = p / nd - (s0 / nd) * (sr / nd);
    const double var_prod = std::max(0.0, pp / nd - (p / nd) * (p / nd));
    const double se = std::sqrt(var_prod / nd);
    fit.lags.push_back({r, cov, se});
    if (std::abs(cov) > 5.0 * se && se > 0.0) {
      // Var(log|Cov|) ~ (se / cov)^2.
      const double w = (cov / se) * (cov / se);
      const double x = static_cast<double>(r), v = std::log(std::abs(cov));
      sw += w;
      sx += w * x;
      sy += w * v;
      sxx += w * x * x;
      sxy += w * x * v;
      ++fit.used;
    }
  }
  if (fit.used >= 2) {
    const double det = sw * sxx - sx * sx;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / sw;
    fit.half_width = 1.96 * std::sqrt(sw / det);
  }
  return fit;
}

void write_covariance_csv(std::ostream& out, const DecayFit& fit) {
  out << "r,cov,stderr\n";
  for (const auto& l : fit.lags) fmt::print(out, "{},{:.17g},{:.17g}\n", l.lag, l.cov, l.stderr_);
}

WindowVariance window_variance(const DigitChain& chain, const DigitMap& map, std::size_t l,
                               std::size_t h, const MonteCarloOptions& options) {
  if (h < 1 || h > l) throw ConfigError(fmt::format("window h = {} outside 1..L = {}", h, l));
  if (options.samples < 2) throw ConfigError("need at least two samples");
  std::vector<std::vector<double>> tables;
  std::vector<double> means;
  WindowVariance out;
  for (std::size_t j = l - h; j < l; ++j) {
    tables.push_back(level_table(map, chain.a, j));
    double m = 0.0, m2 = 0.0;
    for (std::size_t d = 0; d < chain.a; ++d) {
      m += chain.pi[d] * tables.back()[d];
      m2 += chain.pi[d] * tables.back()[d] * tables.back()[d];
    }
    means.push_back(m);
    out.tau2 += m2 - m * m;
  }
  const Sampler sampler(chain);
  const std::size_t n = options.samples;
  struct Acc {
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  };
  std::vector<Acc> accs(std::max(1u, options.threads));
  parallel_chunks(n, options.threads, [&](std::size_t first, std::size_t last, unsigned slot) {
    Acc acc;
    for (std::size_t i = first; i < last; ++i) {
      double r = 0.0;
      sampler.walk(h, options.seed, i, [&](std::size_t s, std::uint32_t d) { r += tables[s][d] - means[s]; });
      acc.s1 += r;
      acc.s2 += r * r;
      acc.s4 += r * r * r * r;
    }
    accs[slot] = acc;
  });
  Acc total;
  for (const auto& a : accs) {
    total.s1 += a.s1;
    total.s2 += a.s2;
    total.s4 += a.s4;
  }
  const double nd = static_cast<double>(n);
  // R is centred exactly under pi, so E R^2 estimates the variance.
  out.variance = total.s2 / nd;
  out.stderr_ = std::sqrt(std::max(0.0, total.s4 / nd - out.variance * out.variance) / nd);
  out.lambda_h = std::pow(chain.lambda, static_cast<double>(h));
  out.ratio = out.variance / (out.tau2 + out.lambda_h);
  return out;
}

}  // namespace ewlab
