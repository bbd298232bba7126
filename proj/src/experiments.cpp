#include "ewlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ewlab/empirical.hpp"
#include "ewlab/error.hpp"

namespace ewlab {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(fmt::format("{}: {}", path.empty() ? "/" : path, message));
}

const Json& need(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing");
  return *it;
}

void only_keys(const Json& j, std::initializer_list<std::string_view> keys,
               const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(path + "/" + k, "unknown field");
}

double as_double(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

std::uint64_t as_u64(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(path, "expected a non-negative integer");
}

std::int64_t as_i64(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  fail(path, "expected an integer");
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_array(const Json& v, const std::string& path, F&& element) {
  if (!v.is_array()) fail(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(element(v[i], fmt::format("{}/{}", path, i)));
  return out;
}

double opt_double(const Json& j, const char* key, const std::string& path, double fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_double(*it, path + "/" + key);
}

std::vector<double> doubles(const Json& v, const std::string& path) {
  return as_array<double>(v, path, as_double);
}

std::vector<std::uint64_t> u64s(const Json& v, const std::string& path) {
  return as_array<std::uint64_t>(v, path, as_u64);
}

Json continuation_to_json(const ContinuationRule& rule) {
  return std::visit([](const auto& r) { return base_to_json(BaseRule(r)); }, rule);
}

std::string weight_name(WeightKind w) {
  switch (w) {
    case WeightKind::polynomial:
      return "polynomial";
    case WeightKind::geometric:
      return "geometric";
    case WeightKind::radical_inverse:
      return "radical_inverse";
  }
  return "radical_inverse";
}

std::string tail_name(TailMode m) {
  switch (m) {
    case TailMode::deterministic:
      return "deterministic";
    case TailMode::chebyshev:
      return "chebyshev";
    case TailMode::automatic:
      return "automatic";
  }
  return "automatic";
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T number(std::string_view s, std::string_view what) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(fmt::format("{}: cannot parse '{}'", what, s));
  return v;
}

double real_number(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string text(s);
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: cannot parse '{}'", what, s));
}

std::vector<double> real_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(real_number(part, what));
  return out;
}

Json parse_json_text(std::string_view text, const std::string& path) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(path, fmt::format("invalid JSON ({})", e.what()));
  }
}

std::optional<std::uint64_t> checked_pow(std::uint64_t b, unsigned e) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / b) return std::nullopt;
    r *= b;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> NSpec::values() const {
  if (!ladder) return list;
  std::vector<std::uint64_t> out;
  for (unsigned k = ladder->from; k <= ladder->to; k += std::max(1u, ladder->step)) {
    const auto v = checked_pow(ladder->base, k);
    if (!v) throw ConfigError(fmt::format("/n/ladder: {}^{} overflows 64 bits", ladder->base, k));
    out.push_back(*v);
  }
  return out;
}

Json base_to_json(const BaseRule& rule) {
  return std::visit(
      [](const auto& r) -> Json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantRule>) {
          return {{"kind", "constant"}, {"q", r.q}};
        } else if constexpr (std::is_same_v<T, PeriodicRule>) {
          return {{"kind", "periodic"}, {"pattern", r.pattern}};
        } else if constexpr (std::is_same_v<T, AffineRule>) {
          return {{"kind", "affine"}, {"c", r.c}, {"d", r.d}};
        } else {
          return {{"kind", "table"}, {"table", r.table}, {"then", continuation_to_json(r.then)}};
        }
      },
      rule);
}

BaseRule base_from_json(const Json& j, const std::string& path) {
  const auto kind = as_string(need(j, "kind", path), path + "/kind");
  BaseRule rule;
  if (kind == "constant") {
    only_keys(j, {"kind", "q"}, path);
    rule = ConstantRule{as_u64(need(j, "q", path), path + "/q")};
  } else if (kind == "periodic") {
    only_keys(j, {"kind", "pattern"}, path);
    rule = PeriodicRule{u64s(need(j, "pattern", path), path + "/pattern")};
  } else if (kind == "affine") {
    only_keys(j, {"kind", "c", "d"}, path);
    rule = AffineRule{as_i64(need(j, "c", path), path + "/c"), as_i64(need(j, "d", path), path + "/d")};
  } else if (kind == "factorial") {
    only_keys(j, {"kind"}, path);
    rule = AffineRule{1, 2};
  } else if (kind == "table") {
    only_keys(j, {"kind", "table", "then"}, path);
    TableRule t;
    t.table = u64s(need(j, "table", path), path + "/table");
    if (j.contains("then")) {
      const auto then = base_from_json(j["then"], path + "/then");
      if (std::holds_alternative<TableRule>(then)) fail(path + "/then", "must not be a table");
      std::visit(
          [&](const auto& r) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(r)>, TableRule>) t.then = r;
          },
          then);
    }
    rule = t;
  } else {
    fail(path + "/kind", fmt::format("unknown base kind '{}'", kind));
  }
  try {
    build_base(rule);
  } catch (const InvalidBase& e) {
    fail(path, e.what());
  }
  return rule;
}

Json map_to_json(const DigitMap& map) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMap>) {
          return {{"kind", "zero"}};
        } else if constexpr (std::is_same_v<T, LinearWeightMap>) {
          return {{"kind", "linear"},
                  {"weight", weight_name(m.weight)},
                  {"alpha", m.alpha},
                  {"beta", m.beta},
                  {"g", m.g}};
        } else if constexpr (std::is_same_v<T, SymmetricTernaryMap>) {
          return {{"kind", "symmetric_ternary"}};
        } else if constexpr (std::is_same_v<T, SkewedPolyweightMap>) {
          return {{"kind", "skewed_polyweight"}};
        } else {
          Json j = {{"kind", "custom"}, {"levels", m.levels}};
          if (m.tails)
            j["tails"] = {{"mean", m.tails->mean},
                          {"variance", m.tails->variance},
                          {"oscillation", m.tails->oscillation}};
          return j;
        }
      },
      map);
}

DigitMap map_from_json(const Json& j, const std::string& path) {
  const auto kind = as_string(need(j, "kind", path), path + "/kind");
  if (kind == "zero") {
    only_keys(j, {"kind"}, path);
    return ZeroMap{};
  }
  if (kind == "symmetric_ternary") {
    only_keys(j, {"kind"}, path);
    return SymmetricTernaryMap{};
  }
  if (kind == "skewed_polyweight") {
    only_keys(j, {"kind"}, path);
    return SkewedPolyweightMap{};
  }
  if (kind == "linear") {
    only_keys(j, {"kind", "weight", "alpha", "beta", "g"}, path);
    LinearWeightMap m;
    const auto w = as_string(need(j, "weight", path), path + "/weight");
    if (w == "polynomial") {
      m.weight = WeightKind::polynomial;
    } else if (w == "geometric") {
      m.weight = WeightKind::geometric;
    } else if (w == "radical_inverse") {
      m.weight = WeightKind::radical_inverse;
    } else {
      fail(path + "/weight", fmt::format("unknown weight '{}'", w));
    }
    m.alpha = opt_double(j, "alpha", path, m.alpha);
    m.beta = opt_double(j, "beta", path, m.beta);
    if (j.contains("g")) m.g = doubles(j["g"], path + "/g");
    if (m.weight == WeightKind::polynomial && !(m.alpha > 0.0)) fail(path + "/alpha", "must be positive");
    return m;
  }
  if (kind == "custom") {
    only_keys(j, {"kind", "levels", "tails"}, path);
    CustomTableMap m;
    m.levels = as_array<std::vector<double>>(need(j, "levels", path), path + "/levels", doubles);
    if (j.contains("tails")) {
      const auto& t = j["tails"];
      const auto tp = path + "/tails";
      only_keys(t, {"mean", "variance", "oscillation"}, tp);
      m.tails = TailBounds{as_double(need(t, "mean", tp), tp + "/mean"),
                           as_double(need(t, "variance", tp), tp + "/variance"),
                           opt_double(t, "oscillation", tp, 0.0)};
    }
    return m;
  }
  fail(path + "/kind", fmt::format("unknown map kind '{}'", kind));
}

BaseRule parse_base(std::string_view text) {
  if (!text.empty() && text.front() == '{') return base_from_json(parse_json_text(text, "--base"), "--base");
  const auto parts = split(text, ':');
  const auto kind = parts[0];
  BaseRule rule;
  if (kind == "factorial" && parts.size() == 1) {
    rule = AffineRule{1, 2};
  } else if (kind == "constant" && parts.size() == 2) {
    rule = ConstantRule{number<std::uint64_t>(parts[1], "--base")};
  } else if (kind == "periodic" && parts.size() == 2) {
    PeriodicRule p;
    for (auto a : split(parts[1], ',')) p.pattern.push_back(number<std::uint64_t>(a, "--base"));
    rule = p;
  } else if (kind == "affine" && parts.size() == 2) {
    const auto cd = split(parts[1], ',');
    if (cd.size() != 2) throw ConfigError("--base: affine needs c,d");
    rule = AffineRule{number<std::int64_t>(cd[0], "--base"), number<std::int64_t>(cd[1], "--base")};
  } else if (parts.size() == 1 && !kind.empty() && std::isdigit(static_cast<unsigned char>(kind[0]))) {
    rule = ConstantRule{number<std::uint64_t>(kind, "--base")};
  } else {
    throw ConfigError(fmt::format("--base: cannot parse '{}'", text));
  }
  try {
    build_base(rule);
  } catch (const InvalidBase& e) {
    throw ConfigError(fmt::format("--base: {}", e.what()));
  }
  return rule;
}

DigitMap parse_map(std::string_view text) {
  if (!text.empty() && text.front() == '{') return map_from_json(parse_json_text(text, "--map"), "--map");
  const auto parts = split(text, ':');
  const auto kind = parts[0];
  if (parts.size() == 1) {
    if (kind == "vdc" || kind == "radical") return LinearWeightMap{WeightKind::radical_inverse, 2.0, 0.5, {}};
    if (kind == "ternary") return SymmetricTernaryMap{};
    if (kind == "skewed") return SkewedPolyweightMap{};
    if (kind == "zero") return ZeroMap{};
  }
  if (kind == "radical" && parts.size() == 2)
    return LinearWeightMap{WeightKind::radical_inverse, 2.0, 0.5, real_list(parts[1], "--map")};
  if ((kind == "geometric" || kind == "polynomial") && (parts.size() == 2 || parts.size() == 3)) {
    LinearWeightMap m;
    m.weight = kind == "geometric" ? WeightKind::geometric : WeightKind::polynomial;
    const double p = real_number(parts[1], "--map");
    (kind == "geometric" ? m.beta : m.alpha) = p;
    if (parts.size() == 3) m.g = real_list(parts[2], "--map");
    return m;
  }
  throw ConfigError(fmt::format("--map: cannot parse '{}'", text));
}

// ---------------------------------------------------------------------------

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["base"] = base_to_json(c.base);
  j["map"] = map_to_json(c.map);
  if (c.n.ladder) {
    j["n"] = {{"ladder",
               {{"base", c.n.ladder->base},
                {"from", c.n.ladder->from},
                {"to", c.n.ladder->to},
                {"step", c.n.ladder->step}}}};
  } else {
    j["n"] = c.n.list;
  }
  j["regime"] = c.regime;
  if (c.rho_inf) j["rho_inf"] = *c.rho_inf;
  j["t_grid"] = c.t_grid == TGrid::unit ? "unit" : "esseen";
  Json r;
  switch (c.reference.kind) {
    case ReferenceSpec::Kind::uniform:
      r = {{"kind", "uniform"}, {"lo", c.reference.lo}, {"hi", c.reference.hi}};
      break;
    case ReferenceSpec::Kind::point:
      r = {{"kind", "point"}, {"at", c.reference.at}};
      break;
    case ReferenceSpec::Kind::convolution:
      r = {{"kind", "convolution"}, {"pitch_log2", c.reference.pitch_log2}};
      if (c.reference.depth) r["depth"] = *c.reference.depth;
      if (c.reference.range) r["range"] = {c.reference.range->first, c.reference.range->second};
      r["tail"] = tail_name(c.reference.tail);
      r["eps_p_ceiling"] = c.reference.eps_p_ceiling;
      break;
  }
  j["reference"] = r;
  if (c.family.kind == FamilySpec::Kind::example_i)
    j["family"] = {{"kind", "example-I"}, {"alpha", c.family.alpha}, {"q", c.family.q}};
  if (c.family.kind == FamilySpec::Kind::example_ii)
    j["family"] = {{"kind", "example-II"}, {"beta", c.family.beta}, {"q", c.family.q}};
  j["seed"] = c.seed;
  j["cap"] = c.cap;
  j["threads"] = c.threads;
  if (c.cf_trace)
    j["cf_trace"] = {{"t_min", c.cf_trace->t_min},
                     {"t_max", c.cf_trace->t_max},
                     {"count", c.cf_trace->count},
                     {"depth", c.cf_trace->depth}};
  j["outputs"] = {{"csv", c.outputs.csv},
                  {"json", c.outputs.json},
                  {"cf_trace", c.outputs.cf_trace},
                  {"reference", c.outputs.reference}};
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  only_keys(j, {"name", "base", "map", "n", "regime", "rho_inf", "t_grid", "reference", "family",
                "seed", "cap", "threads", "cf_trace", "outputs"},
            "");
  ExperimentConfig c;
  if (j.contains("name")) c.name = as_string(j["name"], "/name");
  c.base = base_from_json(need(j, "base", ""), "/base");
  c.map = map_from_json(need(j, "map", ""), "/map");

  const auto& n = need(j, "n", "");
  if (n.is_array()) {
    c.n.list = u64s(n, "/n");
  } else {
    only_keys(n, {"ladder"}, "/n");
    const auto& l = need(n, "ladder", "/n");
    only_keys(l, {"base", "from", "to", "step"}, "/n/ladder");
    Ladder ladder;
    ladder.base = as_u64(need(l, "base", "/n/ladder"), "/n/ladder/base");
    ladder.from = static_cast<unsigned>(as_u64(need(l, "from", "/n/ladder"), "/n/ladder/from"));
    ladder.to = static_cast<unsigned>(as_u64(need(l, "to", "/n/ladder"), "/n/ladder/to"));
    if (l.contains("step")) ladder.step = static_cast<unsigned>(as_u64(l["step"], "/n/ladder/step"));
    c.n.ladder = ladder;
  }
  if (j.contains("regime")) c.regime = as_string(j["regime"], "/regime");
  if (j.contains("rho_inf") && !j["rho_inf"].is_null()) c.rho_inf = as_double(j["rho_inf"], "/rho_inf");
  if (j.contains("t_grid")) {
    const auto g = as_string(j["t_grid"], "/t_grid");
    if (g == "unit") {
      c.t_grid = TGrid::unit;
    } else if (g == "esseen") {
      c.t_grid = TGrid::esseen;
    } else {
      fail("/t_grid", fmt::format("unknown grid '{}' (unit or esseen)", g));
    }
  }
  if (j.contains("reference")) {
    const auto& r = j["reference"];
    const std::string p = "/reference";
    const auto kind = as_string(need(r, "kind", p), p + "/kind");
    auto& ref = c.reference;
    if (kind == "uniform") {
      only_keys(r, {"kind", "lo", "hi"}, p);
      ref.kind = ReferenceSpec::Kind::uniform;
      ref.lo = opt_double(r, "lo", p, 0.0);
      ref.hi = opt_double(r, "hi", p, 1.0);
    } else if (kind == "point") {
      only_keys(r, {"kind", "at"}, p);
      ref.kind = ReferenceSpec::Kind::point;
      ref.at = opt_double(r, "at", p, 0.0);
    } else if (kind == "convolution") {
      only_keys(r, {"kind", "pitch_log2", "depth", "range", "tail", "eps_p_ceiling"}, p);
      ref.kind = ReferenceSpec::Kind::convolution;
      if (r.contains("pitch_log2")) ref.pitch_log2 = static_cast<int>(as_i64(r["pitch_log2"], p + "/pitch_log2"));
      if (r.contains("depth")) ref.depth = as_u64(r["depth"], p + "/depth");
      if (r.contains("range")) {
        const auto v = doubles(r["range"], p + "/range");
        if (v.size() != 2) fail(p + "/range", "expected [lo, hi]");
        ref.range = std::pair{v[0], v[1]};
      }
      if (r.contains("tail")) {
        const auto t = as_string(r["tail"], p + "/tail");
        if (t == "deterministic") {
          ref.tail = TailMode::deterministic;
        } else if (t == "chebyshev") {
          ref.tail = TailMode::chebyshev;
        } else if (t == "automatic") {
          ref.tail = TailMode::automatic;
        } else {
          fail(p + "/tail", fmt::format("unknown tail mode '{}'", t));
        }
      }
      ref.eps_p_ceiling = opt_double(r, "eps_p_ceiling", p, ref.eps_p_ceiling);
    } else {
      fail(p + "/kind", fmt::format("unknown reference kind '{}'", kind));
    }
  }
  if (j.contains("family") && !j["family"].is_null()) {
    const auto& f = j["family"];
    const std::string p = "/family";
    const auto kind = as_string(need(f, "kind", p), p + "/kind");
    if (kind == "example-I") {
      only_keys(f, {"kind", "alpha", "q"}, p);
      c.family.kind = FamilySpec::Kind::example_i;
      c.family.alpha = as_double(need(f, "alpha", p), p + "/alpha");
    } else if (kind == "example-II") {
      only_keys(f, {"kind", "beta", "q"}, p);
      c.family.kind = FamilySpec::Kind::example_ii;
      c.family.beta = as_double(need(f, "beta", p), p + "/beta");
    } else {
      fail(p + "/kind", fmt::format("unknown family '{}'", kind));
    }
    c.family.q = as_u64(need(f, "q", p), p + "/q");
  }
  if (j.contains("seed")) c.seed = as_u64(j["seed"], "/seed");
  if (j.contains("cap")) c.cap = as_u64(j["cap"], "/cap");
  if (j.contains("threads")) c.threads = static_cast<unsigned>(as_u64(j["threads"], "/threads"));
  if (j.contains("cf_trace") && !j["cf_trace"].is_null()) {
    const auto& t = j["cf_trace"];
    const std::string p = "/cf_trace";
    only_keys(t, {"t_min", "t_max", "count", "depth"}, p);
    CfTraceSpec s;
    s.t_min = opt_double(t, "t_min", p, s.t_min);
    s.t_max = opt_double(t, "t_max", p, s.t_max);
    if (t.contains("count")) s.count = as_u64(t["count"], p + "/count");
    if (t.contains("depth")) s.depth = as_u64(t["depth"], p + "/depth");
    c.cf_trace = s;
  }
  if (j.contains("outputs")) {
    const auto& o = j["outputs"];
    only_keys(o, {"csv", "json", "cf_trace", "reference"}, "/outputs");
    if (o.contains("csv")) c.outputs.csv = as_string(o["csv"], "/outputs/csv");
    if (o.contains("json")) c.outputs.json = as_string(o["json"], "/outputs/json");
    if (o.contains("cf_trace")) c.outputs.cf_trace = as_string(o["cf_trace"], "/outputs/cf_trace");
    if (o.contains("reference")) c.outputs.reference = as_string(o["reference"], "/outputs/reference");
  }
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  const auto base = build_base(c.base);
  try {
    for (std::uint64_t d = 0; d < base.radix(0); ++d) digit_value(c.map, base, d, 0);
  } catch (const DigitOutOfRange& e) {
    fail("/map", e.what());
  }
  const auto ns = c.n.values();
  if (ns.empty()) fail("/n", "no N values");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto path = c.n.ladder ? std::string("/n/ladder") : fmt::format("/n/{}", i);
    if (ns[i] < base.radix(0)) fail(path, fmt::format("N = {} has L(N) = 0; need N >= a_0", ns[i]));
    if (ns[i] > c.cap) fail(path, fmt::format("N = {} exceeds cap {}", ns[i], c.cap));
  }
  if (c.regime != "auto") parse_regime(c.regime);
  if (c.rho_inf && !(*c.rho_inf >= 0.0)) fail("/rho_inf", "must be non-negative");
  if (c.regime == "B" && !c.rho_inf) fail("/rho_inf", "required for regime B");
  if (c.threads < 1) fail("/threads", "must be at least 1");
  const auto& r = c.reference;
  if (r.kind == ReferenceSpec::Kind::uniform && !(r.lo < r.hi)) fail("/reference", "need lo < hi");
  if (r.kind == ReferenceSpec::Kind::convolution) {
    if (r.pitch_log2 < 1 || r.pitch_log2 > 40) fail("/reference/pitch_log2", "must be in 1..40");
    if (r.depth && *r.depth < 1) fail("/reference/depth", "must be at least 1");
    if (r.range && !(r.range->first < r.range->second)) fail("/reference/range", "need lo < hi");
  }
  if (c.family.kind == FamilySpec::Kind::example_i && !(c.family.alpha > 1.0))
    fail("/family/alpha", "must exceed 1");
  if (c.family.kind == FamilySpec::Kind::example_ii &&
      !(c.family.beta > 0.0 && c.family.beta < 1.0))
    fail("/family/beta", "must be in (0, 1)");
  if (c.family.kind != FamilySpec::Kind::none && c.family.q < 2) fail("/family/q", "must be at least 2");
  if (c.cf_trace) {
    if (c.cf_trace->count < 1) fail("/cf_trace/count", "must be at least 1");
    if (!(c.cf_trace->t_min <= c.cf_trace->t_max)) fail("/cf_trace", "need t_min <= t_max");
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"vdc-q2",        "vdc-cantor-factorial", "regimeB-binary", "regimeC-ternary",
          "regimeA-skewed", "example-I",            "example-II",     "qadic-delange",
          "zero-map"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  const DigitMap vdc = LinearWeightMap{WeightKind::radical_inverse, 2.0, 0.5, {}};
  auto convolution = [](int pitch_log2) {
    ReferenceSpec r;
    r.kind = ReferenceSpec::Kind::convolution;
    r.pitch_log2 = pitch_log2;
    return r;
  };
  if (name == "vdc-q2") {
    c.base = ConstantRule{2};
    c.map = vdc;
    c.n.ladder = Ladder{2, 4, 16, 1};
    c.rho_inf = 1.0;
  } else if (name == "vdc-cantor-factorial") {
    c.base = AffineRule{1, 2};
    c.map = vdc;
    c.n.ladder = Ladder{10, 1, 6, 1};
    c.rho_inf = 1.0;
  } else if (name == "regimeB-binary") {
    c.base = ConstantRule{2};
    c.map = LinearWeightMap{WeightKind::geometric, 2.0, 0.5, {0.0, 0.5}};
    c.n.ladder = Ladder{2, 8, 20, 2};
    c.rho_inf = 1.0;
  } else if (name == "regimeC-ternary") {
    c.base = ConstantRule{3};
    c.map = SymmetricTernaryMap{};
    c.n.ladder = Ladder{2, 8, 20, 2};
    c.reference = convolution(20);
  } else if (name == "regimeA-skewed") {
    c.base = ConstantRule{4};
    c.map = SkewedPolyweightMap{};
    c.n.ladder = Ladder{2, 8, 20, 2};
    c.reference = convolution(14);
    c.reference.depth = 256;
    c.reference.eps_p_ceiling = 0.01;
  } else if (name == "example-I") {
    c.base = ConstantRule{2};
    c.map = LinearWeightMap{WeightKind::polynomial, 1.5, 0.5, {-1.0, 1.0}};
    c.n.ladder = Ladder{2, 8, 20, 2};
    c.regime = "A";
    c.reference = convolution(16);
    c.reference.depth = 512;
    c.reference.eps_p_ceiling = 0.05;
    c.family = {FamilySpec::Kind::example_i, 1.5, 0.0, 2};
  } else if (name == "example-II") {
    c.base = ConstantRule{2};
    c.map = LinearWeightMap{WeightKind::geometric, 2.0, 0.5, {0.0, 1.0}};
    c.n.ladder = Ladder{2, 8, 20, 1};
    c.regime = "A";
    c.reference = convolution(22);
    c.family = {FamilySpec::Kind::example_ii, 0.0, 0.5, 2};
  } else if (name == "qadic-delange") {
    c.base = ConstantRule{3};
    c.map = LinearWeightMap{WeightKind::geometric, 2.0, 0.5, {0.0, 1.0, 2.0}};
    c.n.ladder = Ladder{3, 4, 12, 1};
    c.reference = convolution(18);
    c.cf_trace = CfTraceSpec{};
  } else if (name == "zero-map") {
    c.base = ConstantRule{2};
    c.map = ZeroMap{};
    c.n.ladder = Ladder{2, 4, 12, 1};
    c.regime = "B";
    c.rho_inf = 1.0;
    c.reference.kind = ReferenceSpec::Kind::point;
  } else {
    throw UnknownPreset(fmt::format("unknown preset '{}'", name));
  }
  return c;
}

Regime resolve_regime(const ExperimentConfig& c) {
  if (c.regime != "auto") return parse_regime(c.regime);
  if (c.rho_inf) return Regime::B;
  const auto base = build_base(c.base);
  std::size_t l_max = 0;
  for (auto n : c.n.values()) l_max = std::max(l_max, base.length(n));
  return third_moments_vanish(c.map, base, l_max) ? Regime::C : Regime::A;
}

std::unique_ptr<ReferenceCdf> build_reference(const ExperimentConfig& c) {
  const auto& r = c.reference;
  switch (r.kind) {
    case ReferenceSpec::Kind::uniform:
      return std::make_unique<UniformCdf>(r.lo, r.hi);
    case ReferenceSpec::Kind::point:
      return std::make_unique<PointMassCdf>(r.at);
    case ReferenceSpec::Kind::convolution: {
      ConvolutionOptions o;
      o.pitch = std::ldexp(1.0, -r.pitch_log2);
      o.depth = r.depth;
      o.range = r.range;
      o.tail = r.tail;
      o.eps_p_ceiling = r.eps_p_ceiling;
      return std::make_unique<GridCdf>(limit_cdf_conv(c.map, build_base(c.base), o));
    }
  }
  return nullptr;
}

ExperimentRow experiment_row(const ExperimentConfig& c, Regime regime, std::uint64_t n,
                             const ReferenceCdf& ref, unsigned enum_threads) {
  const auto base = build_base(c.base);
  ExperimentRow row;
  row.n = n;
  const auto ecdf = empirical_cdf(c.map, base, n, {c.cap, enum_threads});
  const Band dk = kolmogorov(ecdf, ref);
  row.dk_lo = dk.lo;
  row.dk_hi = dk.hi;
  row.w1 = wasserstein1(ecdf, ref).value;
  const auto s = ecdf.samples();
  if (c.reference.kind == ReferenceSpec::Kind::uniform && c.reference.lo == 0.0 &&
      c.reference.hi == 1.0 && s.front() >= 0.0 && s.back() < 1.0)
    row.dstar = star_discrepancy(s);
  row.report = optimize_window(c.map, base, n, regime, c.rho_inf, ref, {c.t_grid, 40}).report;
  if (c.family.kind == FamilySpec::Kind::example_i && n >= c.family.q * c.family.q)
    row.predicted_rate = predicted_rate_example_i(c.family.alpha, c.family.q, n);
  if (c.family.kind == FamilySpec::Kind::example_ii && n >= c.family.q * c.family.q)
    row.predicted_rate = predicted_rate_example_ii(c.family.beta, c.family.q, n);
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.regime = resolve_regime(config);
  if (log) fmt::print(*log, "[{}] regime {}; building reference\n", config.name, to_string(result.regime));
  const auto ref = build_reference(config);

  const auto ns = config.n.values();
  result.rows.resize(ns.size());
  const unsigned threads = std::min<unsigned>(config.threads, static_cast<unsigned>(ns.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (log) fmt::print(*log, "[{}] N = {}\n", config.name, ns[i]);
      result.rows[i] = experiment_row(config, result.regime, ns[i], *ref, config.threads);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < threads; ++k) {
        pool.emplace_back([&, k] {
          try {
            for (std::size_t i; (i = next++) < ns.size();)
              result.rows[i] = experiment_row(config, result.regime, ns[i], *ref, 1);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& row : result.rows) result.conditional |= row.report.conditional;

  if (config.cf_trace) {
    const auto& t = *config.cf_trace;
    result.cf_t.resize(t.count);
    for (std::size_t i = 0; i < t.count; ++i)
      result.cf_t[i] = t.count == 1 ? t.t_min
                                    : t.t_min + (t.t_max - t.t_min) * static_cast<double>(i) /
                                                    static_cast<double>(t.count - 1);
    result.cf = CfProduct(config.map, build_base(config.base), t.depth).trace(result.cf_t, config.threads);
  }
  if (log) fmt::print(*log, "[{}] done, {} rows\n", config.name, result.rows.size());
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string cell(std::optional<double> v) { return v ? fmt::format("{:.17g}", *v) : std::string(); }

Json nullable(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void write_result_csv(std::ostream& out, const ExperimentResult& result) {
  out << "N,L,h_star,T_star,regime,bridge,tau1,tau2,qf,g,total,dk_lo,dk_hi,w1,dstar,predicted_rate\n";
  for (const auto& row : result.rows) {
    const auto& r = row.report;
    fmt::print(out, "{},{},{},{:.17g},{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n",
               row.n, r.l, r.h, r.t, to_string(r.regime), r.bridge, cell(r.tau1), r.tau2_h, r.qf_term,
               r.g_term, r.total, row.dk_lo, row.dk_hi, row.w1, cell(row.dstar),
               cell(row.predicted_rate));
  }
}

Json report_to_json(const WindowBoundReport& r) {
  return {{"N", r.n},
          {"L", r.l},
          {"h", r.h},
          {"A_Lh", r.a_lh.str()},
          {"bridge", r.bridge},
          {"tau1", nullable(r.tau1)},
          {"tau2_h", r.tau2_h},
          {"T", r.t},
          {"qf_term", r.qf_term},
          {"g_term", r.g_term},
          {"total", r.total},
          {"regime", to_string(r.regime)},
          {"conditional", r.conditional}};
}

Json result_to_json(const ExperimentResult& result) {
  Json rows = Json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"N", row.n},
                    {"dk_lo", row.dk_lo},
                    {"dk_hi", row.dk_hi},
                    {"w1", row.w1},
                    {"dstar", nullable(row.dstar)},
                    {"predicted_rate", nullable(row.predicted_rate)},
                    {"report", report_to_json(row.report)}});
  Json j = {{"config", config_to_json(result.config)},
            {"regime", to_string(result.regime)},
            {"conditional", result.conditional},
            {"rows", rows}};
  if (!result.cf.empty()) {
    Json cf = Json::array();
    for (std::size_t i = 0; i < result.cf.size(); ++i)
      cf.push_back({{"t", result.cf_t[i]},
                    {"re", result.cf[i].value.real()},
                    {"im", result.cf[i].value.imag()},
                    {"err", nullable(result.cf[i].error)}});
    j["cf_trace"] = cf;
  }
  return j;
}

}  // namespace ewlab
