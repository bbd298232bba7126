#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ewlab/limitlaw.hpp"
#include "ewlab/mixed_radix.hpp"
#include "ewlab/qadditive.hpp"
#include "ewlab/window_bounds.hpp"

namespace ewlab {

using Json = nlohmann::ordered_json;

/// N = base^k for k = from, from + step, ..., to.
struct Ladder {
  std::uint64_t base = 2;
  unsigned from = 4;
  unsigned to = 16;
  unsigned step = 1;
  bool operator==(const Ladder&) const = default;
};

struct NSpec {
  std::vector<std::uint64_t> list;
  std::optional<Ladder> ladder;  // used when set, otherwise list
  std::vector<std::uint64_t> values() const;
  bool operator==(const NSpec&) const = default;
};

struct ReferenceSpec {
  enum class Kind { uniform, convolution, point };
  Kind kind = Kind::uniform;
  double lo = 0.0, hi = 1.0;  // uniform
  double at = 0.0;            // point
  int pitch_log2 = 20;        // convolution
  std::optional<std::size_t> depth;
  std::optional<std::pair<double, double>> range;
  TailMode tail = TailMode::automatic;
  double eps_p_ceiling = 1e-3;
  bool operator==(const ReferenceSpec&) const = default;
};

struct FamilySpec {
  enum class Kind { none, example_i, example_ii };
  Kind kind = Kind::none;
  double alpha = 0.0;  // example I
  double beta = 0.0;   // example II
  std::uint64_t q = 2;
  bool operator==(const FamilySpec&) const = default;
};

struct CfTraceSpec {
  double t_min = -10.0, t_max = 10.0;
  std::size_t count = 201;
  std::size_t depth = 40;
  bool operator==(const CfTraceSpec&) const = default;
};

struct OutputSpec {
  std::string csv, json, cf_trace, reference;
  bool operator==(const OutputSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  BaseRule base = ConstantRule{2};
  DigitMap map = ZeroMap{};
  NSpec n;
  std::string regime = "auto";  // auto, A, B or C
  std::optional<double> rho_inf;
  TGrid t_grid = TGrid::unit;
  ReferenceSpec reference;
  FamilySpec family;
  std::uint64_t seed = 1;
  std::uint64_t cap = std::uint64_t{1} << 24;
  unsigned threads = 1;
  std::optional<CfTraceSpec> cf_trace;
  OutputSpec outputs;
  bool operator==(const ExperimentConfig&) const = default;
};

Json base_to_json(const BaseRule& rule);
BaseRule base_from_json(const Json& j, const std::string& path = "/base");
Json map_to_json(const DigitMap& map);
DigitMap map_from_json(const Json& j, const std::string& path = "/map");

/// Shorthands: "constant:Q", "periodic:a,b,..", "affine:c,d", "factorial", or JSON.
BaseRule parse_base(std::string_view text);
/// Shorthands: "vdc", "ternary", "skewed", "zero", "geometric:beta[:g0,g1,..]",
/// "polynomial:alpha[:g0,..]", "radical[:g0,..]", or JSON.
DigitMap parse_map(std::string_view text);

Json config_to_json(const ExperimentConfig& config);
/// Throws ConfigError naming the offending field path.
ExperimentConfig config_from_json(const Json& j);
void validate(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws UnknownPreset.
ExperimentConfig preset(std::string_view name);

/// B with rho_inf, else C when every third moment up to the largest L vanishes, else A.
Regime resolve_regime(const ExperimentConfig& config);

/// Builds the reference c.d.f. the config asks for.
std::unique_ptr<ReferenceCdf> build_reference(const ExperimentConfig& config);

struct ExperimentRow {
  std::uint64_t n = 0;
  WindowBoundReport report;  // at the optimum
  double dk_lo = 0.0, dk_hi = 0.0;
  double w1 = 0.0;
  std::optional<double> dstar;
  std::optional<double> predicted_rate;
};

struct ExperimentResult {
  ExperimentConfig config;
  Regime regime = Regime::A;
  std::vector<ExperimentRow> rows;
  bool conditional = false;  // some row lacks tau1
  std::vector<double> cf_t;
  std::vector<CfValue> cf;
};

/// One row per N, in the order of the config.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Optimum search for one N against a prepared reference.
ExperimentRow experiment_row(const ExperimentConfig& config, Regime regime, std::uint64_t n,
                             const ReferenceCdf& ref, unsigned enum_threads = 1);

void write_result_csv(std::ostream& out, const ExperimentResult& result);
Json report_to_json(const WindowBoundReport& report);
Json result_to_json(const ExperimentResult& result);

}  // namespace ewlab
