// Command-line front end: one subcommand per library operation.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ewlab/empirical.hpp"
#include "ewlab/error.hpp"
#include "ewlab/experiments.hpp"
#include "ewlab/limitlaw.hpp"
#include "ewlab/markov_digits.hpp"
#include "ewlab/mixed_radix.hpp"
#include "ewlab/qadditive.hpp"
#include "ewlab/window_bounds.hpp"

using namespace ewlab;

namespace {

constexpr int kConfigError = 2;
constexpr int kResourceCap = 3;
constexpr int kConditional = 4;

struct Common {
  std::string base = "2";
  std::string map = "vdc";
  std::string out;
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

void add_base_map(CLI::App* sub, Common& c) {
  sub->add_option("--base", c.base, "constant:Q, periodic:a,b,.., affine:c,d, factorial, Q or JSON")
      ->capture_default_str();
  sub->add_option("--map", c.map,
                  "vdc, ternary, skewed, zero, geometric:beta[:g], polynomial:alpha[:g], "
                  "radical[:g] or JSON")
      ->capture_default_str();
}

void add_out(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output file (default: standard output)");
}

// Writes through fn to --out or stdout.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot open '{}' for writing", path));
  fn(f);
}

std::string read_text(const std::string& path_or_json) {
  if (!path_or_json.empty() && (path_or_json.front() == '{' || path_or_json.front() == '['))
    return path_or_json;
  std::ifstream f(path_or_json);
  if (!f) throw ConfigError(fmt::format("cannot read '{}'", path_or_json));
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", what, e.what()));
  }
}

struct RefOptions {
  std::string kind = "uniform";
  int pitch_log2 = 16;
  double lo = 0.0, hi = 1.0;
};

void add_reference(CLI::App* sub, RefOptions& r) {
  sub->add_option("--reference", r.kind, "uniform, conv or point")
      ->check(CLI::IsMember({"uniform", "conv", "point"}))
      ->capture_default_str();
  sub->add_option("--pitch-log2", r.pitch_log2, "convolution pitch 2^-k")->capture_default_str();
  sub->add_option("--lo", r.lo, "uniform reference lower end")->capture_default_str();
  sub->add_option("--hi", r.hi, "uniform reference upper end")->capture_default_str();
}

std::unique_ptr<ReferenceCdf> make_reference(const RefOptions& r, const DigitMap& map,
                                             const CantorBase& base) {
  if (r.kind == "point") return std::make_unique<PointMassCdf>(0.0);
  if (r.kind == "conv") {
    ConvolutionOptions o;
    o.pitch = std::ldexp(1.0, -r.pitch_log2);
    return std::make_unique<GridCdf>(limit_cdf_conv(map, base, o));
  }
  return std::make_unique<UniformCdf>(r.lo, r.hi);
}

std::optional<double> opt(double v) { return std::isnan(v) ? std::nullopt : std::optional(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-radix digit laws: expansions, limit laws and effective Kolmogorov bounds"};
  app.require_subcommand(1);
  Common c;

  // expand
  std::uint64_t n = 0;
  auto* expand_cmd = app.add_subcommand("expand", "digits of N in the Cantor base");
  expand_cmd->add_option("--base", c.base)->capture_default_str();
  expand_cmd->add_option("N", n)->required();

  // eval
  std::uint64_t n_to = 0;
  auto* eval_cmd = app.add_subcommand("eval", "f(N), or a CSV of f over [N, --to)");
  add_base_map(eval_cmd, c);
  eval_cmd->add_option("N", n)->required();
  eval_cmd->add_option("--to", n_to, "exclusive end of a range");
  add_out(eval_cmd, c);

  // stats
  std::size_t levels = 20;
  auto* stats_cmd = app.add_subcommand("stats", "per-level digit statistics");
  add_base_map(stats_cmd, c);
  stats_cmd->add_option("--levels", levels, "levels 0..J-1")->capture_default_str();
  add_out(stats_cmd, c);

  // ewcheck
  std::size_t j_max = 200;
  bool show_trace = false;
  auto* ew_cmd = app.add_subcommand("ewcheck", "Erdos-Wintner convergence diagnosis");
  add_base_map(ew_cmd, c);
  ew_cmd->add_option("--jmax", j_max)->capture_default_str();
  ew_cmd->add_flag("--trace", show_trace, "print the partial-sum trace as CSV");

  // cf
  double t_min = -10.0, t_max = 10.0;
  std::size_t count = 201, depth = 40;
  auto* cf_cmd = app.add_subcommand("cf", "truncated characteristic-function product");
  add_base_map(cf_cmd, c);
  cf_cmd->add_option("--t-min", t_min)->capture_default_str();
  cf_cmd->add_option("--t-max", t_max)->capture_default_str();
  cf_cmd->add_option("--count", count)->capture_default_str();
  cf_cmd->add_option("--depth", depth)->capture_default_str();
  cf_cmd->add_option("--threads", c.threads)->capture_default_str();
  add_out(cf_cmd, c);

  // limit
  std::string method = "conv";
  int pitch_log2 = 16;
  std::size_t limit_depth = 0;
  double inv_tmax = 2000.0, inv_step = 0.05;
  auto* limit_cmd = app.add_subcommand("limit", "limit c.d.f. by convolution or inversion");
  add_base_map(limit_cmd, c);
  limit_cmd->add_option("--method", method)->check(CLI::IsMember({"conv", "invert"}))->capture_default_str();
  limit_cmd->add_option("--pitch-log2", pitch_log2)->capture_default_str();
  limit_cmd->add_option("--depth", limit_depth, "levels (0: automatic)")->capture_default_str();
  limit_cmd->add_option("--t-max", inv_tmax, "inversion cutoff")->capture_default_str();
  limit_cmd->add_option("--step", inv_step, "inversion step")->capture_default_str();
  limit_cmd->add_option("--threads", c.threads)->capture_default_str();
  add_out(limit_cmd, c);

  // empirical
  RefOptions ref_opts;
  auto* emp_cmd = app.add_subcommand("empirical", "F_N and its distances to a reference");
  add_base_map(emp_cmd, c);
  emp_cmd->add_option("N", n)->required();
  add_reference(emp_cmd, ref_opts);
  std::string knots_path;
  emp_cmd->add_option("--knots", knots_path, "write the knots of F_N as CSV");
  emp_cmd->add_option("--threads", c.threads)->capture_default_str();

  // bound
  std::size_t h = 1;
  double t_param = 1.0;
  double rho = std::nan("");
  std::string regime = "A";
  auto* bound_cmd = app.add_subcommand("bound", "window bound at a given (h, T)");
  add_base_map(bound_cmd, c);
  bound_cmd->add_option("N", n)->required();
  bound_cmd->add_option("--window", h, "window size h")->capture_default_str();
  bound_cmd->add_option("--T", t_param)->capture_default_str();
  bound_cmd->add_option("--regime", regime)->check(CLI::IsMember({"A", "B", "C"}))->capture_default_str();
  bound_cmd->add_option("--rho", rho, "density bound (regime B)");
  add_reference(bound_cmd, ref_opts);

  // optimize
  std::string grid = "unit";
  auto* opt_cmd = app.add_subcommand("optimize", "minimise the window bound over (h, T)");
  add_base_map(opt_cmd, c);
  opt_cmd->add_option("N", n)->required();
  opt_cmd->add_option("--regime", regime)->check(CLI::IsMember({"A", "B", "C"}))->capture_default_str();
  opt_cmd->add_option("--rho", rho, "density bound (regime B)");
  opt_cmd->add_option("--grid", grid, "T grid: unit (2^-k) or esseen (2^k)")
      ->check(CLI::IsMember({"unit", "esseen"}))
      ->capture_default_str();
  add_reference(opt_cmd, ref_opts);

  // discrepancy
  std::string points_path;
  auto* disc_cmd = app.add_subcommand("discrepancy", "star discrepancy of f(0..N-1) or of a file");
  add_base_map(disc_cmd, c);
  disc_cmd->add_option("N", n);
  disc_cmd->add_option("--points", points_path, "file with one point per line");

  // markov
  std::string chain_text;
  std::size_t r_max = 20, samples = 1'000'000, mk_l = 20, mk_h = 0;
  auto* markov_cmd = app.add_subcommand("markov", "dependent digits: covariance decay and window variance");
  markov_cmd->add_option("--chain", chain_text, "row-major matrix as JSON, or a file")->required();
  markov_cmd->add_option("--map", c.map)->capture_default_str();
  markov_cmd->add_option("--rmax", r_max)->capture_default_str();
  markov_cmd->add_option("--samples", samples)->capture_default_str();
  markov_cmd->add_option("--seed", c.seed)->capture_default_str();
  markov_cmd->add_option("--threads", c.threads)->capture_default_str();
  markov_cmd->add_option("--L", mk_l)->capture_default_str();
  markov_cmd->add_option("--window", mk_h, "window size h (0: covariance decay only)");
  add_out(markov_cmd, c);

  // experiment
  std::string config_path, preset_name, out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<unsigned> threads_override;
  auto* exp_cmd = app.add_subcommand("experiment", "run an experiment config or preset");
  exp_cmd->add_option("--config", config_path, "JSON config file");
  exp_cmd->add_option("--preset", preset_name, "preset name (see preset-list)");
  exp_cmd->add_option("--seed", seed_override);
  exp_cmd->add_option("--threads", threads_override);
  exp_cmd->add_option("--out", out_dir, "directory for <name>.csv / .json / _cf.csv / _reference.csv");
  exp_cmd->add_option("--regime", regime, "override the regime (auto, A, B, C)");

  // preset-list
  std::string show;
  auto* list_cmd = app.add_subcommand("preset-list", "list presets, or print one as JSON");
  list_cmd->add_option("--show", show);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*expand_cmd) {
      const auto base = build_base(parse_base(c.base));
      const auto e = expand(base, n);
      std::cout << "L=" << e.length << "\n";
      for (std::size_t j = 0; j < e.digits.size(); ++j)
        fmt::print("j={} a={} q={} delta={}\n", j, base.radix(j), radix_weight(base, j).str(), e.digits[j]);
      return 0;
    }
    if (*eval_cmd) {
      const Evaluator f(parse_map(c.map), build_base(parse_base(c.base)));
      if (n_to <= n) {
        fmt::print("{:.17g}\n", f(n));
        return 0;
      }
      emit(c.out, [&](std::ostream& o) {
        o << "n,f\n";
        for (std::uint64_t k = n; k < n_to; ++k) fmt::print(o, "{},{:.17g}\n", k, f(k));
      });
      return 0;
    }
    if (*stats_cmd) {
      const auto map = parse_map(c.map);
      const auto base = build_base(parse_base(c.base));
      emit(c.out, [&](std::ostream& o) {
        o << "j,a,mean,variance,oscillation,third_moment\n";
        for (std::size_t j = 0; j < levels; ++j) {
          const auto s = digit_stats(map, base, j);
          fmt::print(o, "{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", j, base.radix(j), s.mean, s.variance,
                     s.oscillation, s.third_moment);
        }
      });
      return 0;
    }
    if (*ew_cmd) {
      const auto d = ew_diagnose(parse_map(c.map), build_base(parse_base(c.base)), j_max);
      fmt::print("verdict={} analytic={}\n", to_string(d.verdict), d.analytic);
      if (show_trace) {
        std::cout << "j,mean_sum,variance_sum\n";
        for (const auto& p : d.trace) fmt::print("{},{:.17g},{:.17g}\n", p.level, p.mean_sum, p.variance_sum);
      }
      return 0;
    }
    if (*cf_cmd) {
      const CfProduct cf(parse_map(c.map), build_base(parse_base(c.base)), depth);
      std::vector<double> ts(count);
      for (std::size_t i = 0; i < count; ++i)
        ts[i] = count == 1 ? t_min : t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(count - 1);
      const auto values = cf.trace(ts, c.threads);
      emit(c.out, [&](std::ostream& o) { write_cf_trace_csv(o, ts, values); });
      return 0;
    }
    if (*limit_cmd) {
      const auto map = parse_map(c.map);
      const auto base = build_base(parse_base(c.base));
      ConvolutionOptions o;
      o.pitch = std::ldexp(1.0, -pitch_log2);
      if (limit_depth > 0) o.depth = limit_depth;
      const auto g = limit_cdf_conv(map, base, o);
      if (method == "conv") {
        std::cerr << fmt::format("knots={} eps_x={:.3g} eps_p={:.3g}\n", g.size(), g.eps_x(), g.eps_p());
        emit(c.out, [&](std::ostream& out) { g.write_csv(out); });
        return 0;
      }
      std::vector<double> xs;
      const std::size_t stride = std::max<std::size_t>(1, g.size() / 1024);
      for (std::size_t i = 0; i < g.size(); i += stride) xs.push_back(g.knot(i));
      const CfProduct cf(map, base, limit_depth > 0 ? limit_depth : default_cf_depth(map, base, inv_tmax));
      const auto inv = limit_cdf_invert(cf, xs, {inv_tmax, inv_step, 0.1, c.threads});
      emit(c.out, [&](std::ostream& out) { inv.write_csv(out); });
      return 0;
    }
    if (*emp_cmd) {
      const auto map = parse_map(c.map);
      const auto base = build_base(parse_base(c.base));
      const auto ecdf = empirical_cdf(map, base, n, {std::uint64_t{1} << 24, c.threads});
      const auto ref = make_reference(ref_opts, map, base);
      const Band dk = kolmogorov(ecdf, *ref);
      const auto w1 = wasserstein1(ecdf, *ref);
      fmt::print("N={} dk_lo={:.17g} dk_hi={:.17g} w1={:.17g} w1_tol={:.3g}\n", n, dk.lo, dk.hi, w1.value,
                 w1.tolerance);
      if (!knots_path.empty()) emit(knots_path, [&](std::ostream& o) { ecdf.write_knots_csv(o); });
      return 0;
    }
    if (*bound_cmd || *opt_cmd) {
      const auto map = parse_map(c.map);
      const auto base = build_base(parse_base(c.base));
      const auto ref = make_reference(ref_opts, map, base);
      const Regime rg = parse_regime(regime);
      WindowBoundReport report;
      if (*bound_cmd) {
        report = total_bound(map, base, n, h, t_param, rg, opt(rho), *ref);
      } else {
        report = optimize_window(map, base, n, rg, opt(rho), *ref,
                                 {grid == "unit" ? TGrid::unit : TGrid::esseen, 40})
                     .report;
      }
      std::cout << report_to_json(report).dump(2) << "\n";
      return report.conditional ? kConditional : 0;
    }
    if (*disc_cmd) {
      std::vector<double> pts;
      if (!points_path.empty()) {
        std::ifstream f(points_path);
        if (!f) throw ConfigError(fmt::format("cannot read '{}'", points_path));
        for (double x; f >> x;) pts.push_back(x);
      } else {
        if (n == 0) throw ConfigError("give N or --points");
        const auto e = empirical_cdf(parse_map(c.map), build_base(parse_base(c.base)), n);
        pts.assign(e.samples().begin(), e.samples().end());
      }
      fmt::print("{:.17g}\n", star_discrepancy(pts));
      return 0;
    }
    if (*markov_cmd) {
      const Json j = parse_json(read_text(chain_text), "--chain");
      std::vector<std::vector<double>> rows;
      try {
        rows = j.get<std::vector<std::vector<double>>>();
      } catch (const Json::exception&) {
        throw ConfigError("--chain: expected a matrix [[...], ...]");
      }
      const auto chain = build_chain(rows);
      const auto map = parse_map(c.map);
      const MonteCarloOptions mc{samples, c.seed, c.threads};
      std::cerr << fmt::format("lambda={:.17g}\n", chain.lambda);
      if (mk_h > 0) {
        const auto w = window_variance(chain, map, mk_l, mk_h, mc);
        const Json out = {{"lambda", chain.lambda}, {"L", mk_l},          {"h", mk_h},
                          {"variance", w.variance}, {"stderr", w.stderr_}, {"tau2", w.tau2},
                          {"lambda_h", w.lambda_h}, {"ratio", w.ratio}};
        emit(c.out, [&](std::ostream& o) { o << out.dump(2) << "\n"; });
        return 0;
      }
      const auto fit = covariance_decay(chain, map, r_max, mc);
      emit(c.out, [&](std::ostream& o) { write_covariance_csv(o, fit); });
      std::cerr << Json{{"lambda", chain.lambda},
                        {"slope", fit.slope},
                        {"half_width", fit.half_width},
                        {"log_lambda", std::log(chain.lambda)},
                        {"lags_used", fit.used}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*exp_cmd) {
      if (config_path.empty() == preset_name.empty())
        throw ConfigError("give exactly one of --config and --preset");
      ExperimentConfig config = preset_name.empty()
                                    ? config_from_json(parse_json(read_text(config_path), config_path))
                                    : preset(preset_name);
      if (seed_override) config.seed = *seed_override;
      if (threads_override) config.threads = *threads_override;
      if (!regime.empty() && exp_cmd->count("--regime")) config.regime = regime;
      const auto result = run_experiment(config, &std::cerr);
      auto path_for = [&](const std::string& configured, const std::string& suffix) {
        if (!configured.empty()) return configured;
        if (out_dir.empty()) return std::string();
        std::filesystem::create_directories(out_dir);
        return (std::filesystem::path(out_dir) / (config.name + suffix)).string();
      };
      const auto csv_path = path_for(config.outputs.csv, ".csv");
      emit(csv_path, [&](std::ostream& o) { write_result_csv(o, result); });
      if (const auto p = path_for(config.outputs.json, ".json"); !p.empty())
        emit(p, [&](std::ostream& o) { o << result_to_json(result).dump(2) << "\n"; });
      if (const auto p = path_for(config.outputs.cf_trace, "_cf.csv"); !p.empty() && !result.cf.empty())
        emit(p, [&](std::ostream& o) { write_cf_trace_csv(o, result.cf_t, result.cf); });
      if (const auto p = path_for(config.outputs.reference, "_reference.csv");
          !p.empty() && config.reference.kind == ReferenceSpec::Kind::convolution) {
        const auto ref = build_reference(config);
        emit(p, [&](std::ostream& o) { static_cast<const GridCdf&>(*ref).write_csv(o); });
      }
      return result.conditional ? kConditional : 0;
    }
    if (*list_cmd) {
      if (!show.empty()) {
        std::cout << config_to_json(preset(show)).dump(2) << "\n";
        return 0;
      }
      for (const auto& name : preset_names()) std::cout << name << "\n";
      return 0;
    }
  } catch (const ResourceLimit& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return kResourceCap;
  } catch (const RangeTooSmall& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return kResourceCap;
  } catch (const NoTailMeta& e) {
    std::cerr << "conditional: " << e.what() << "\n";
    return kConditional;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return 0;
}
