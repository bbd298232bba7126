#include "ewlab/experiments.hpp"

#include <sstream>

#include "doctest.h"
#include "ewlab/error.hpp"

using namespace ewlab;

namespace {

std::string error_of(const Json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_result_csv(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("presets resolve their regimes") {
  CHECK(resolve_regime(preset("vdc-q2")) == Regime::B);
  CHECK(resolve_regime(preset("regimeB-binary")) == Regime::B);
  CHECK(resolve_regime(preset("regimeC-ternary")) == Regime::C);
  CHECK(resolve_regime(preset("regimeA-skewed")) == Regime::A);
  CHECK(resolve_regime(preset("example-I")) == Regime::A);
  CHECK(resolve_regime(preset("example-II")) == Regime::A);
  CHECK(resolve_regime(preset("qadic-delange")) == Regime::C);
  const auto c = preset("regimeC-ternary");
  CHECK(c.regime == "auto");
  CHECK(std::holds_alternative<SymmetricTernaryMap>(c.map));
  CHECK(std::get<ConstantRule>(c.base).q == 3);
  CHECK(preset("qadic-delange").cf_trace.has_value());
  CHECK_THROWS_AS(preset("nope"), UnknownPreset);
}

TEST_CASE("configs round-trip through JSON") {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    const Json j = config_to_json(c);
    const auto back = config_from_json(Json::parse(j.dump()));
    CHECK(back == c);
    CHECK(config_to_json(back).dump() == j.dump());
  }
  ExperimentConfig c;
  c.base = TableRule{{2, 3, 5}, PeriodicRule{{4, 7}}};
  c.map = CustomTableMap{{{0, 0.1}, {0, 1.0 / 3, 2.0 / 3}}, TailBounds{0.1, 1e-17, 0.3}};
  c.n.list = {2, 17, 999};
  c.rho_inf = 0.1 + 0.2;
  CHECK(config_from_json(Json::parse(config_to_json(c).dump())) == c);
}

TEST_CASE("config errors name the field") {
  Json j = config_to_json(preset("vdc-q2"));
  j.erase("base");
  CHECK(error_of(j) == "/base: missing");

  j = config_to_json(preset("vdc-q2"));
  j["map"]["weight"] = "harmonic";
  CHECK(error_of(j).rfind("/map/weight:", 0) == 0);

  j = config_to_json(preset("vdc-q2"));
  j["n"] = {8, 1};
  CHECK(error_of(j).rfind("/n/1:", 0) == 0);

  j = config_to_json(preset("vdc-q2"));
  j["bogus"] = 1;
  CHECK(error_of(j) == "/bogus: unknown field");

  j = config_to_json(preset("vdc-q2"));
  j["base"]["q"] = 1;
  CHECK(error_of(j).rfind("/base:", 0) == 0);

  j = config_to_json(preset("regimeC-ternary"));
  j["base"]["q"] = 2;
  CHECK(error_of(j).rfind("/map:", 0) == 0);

  j = config_to_json(preset("vdc-q2"));
  j["n"]["ladder"]["to"] = 30;
  CHECK(error_of(j).find("exceeds cap") != std::string::npos);
}

TEST_CASE("shorthand descriptors") {
  CHECK(parse_base("2") == BaseRule(ConstantRule{2}));
  CHECK(parse_base("periodic:2,3") == BaseRule(PeriodicRule{{2, 3}}));
  CHECK(parse_base("factorial") == BaseRule(AffineRule{1, 2}));
  CHECK(parse_base(R"({"kind":"affine","c":2,"d":3})") == BaseRule(AffineRule{2, 3}));
  CHECK_THROWS_AS(parse_base("constant:1"), ConfigError);
  CHECK(std::holds_alternative<SymmetricTernaryMap>(parse_map("ternary")));
  const auto g = std::get<LinearWeightMap>(parse_map("geometric:0.5:0,1"));
  CHECK(g.beta == 0.5);
  CHECK(g.g == std::vector<double>{0, 1});
  CHECK_THROWS_AS(parse_map("geometric"), ConfigError);
}

TEST_CASE("vdc-q2: Kolmogorov column equals the star discrepancy") {
  const auto r = run_experiment(preset("vdc-q2"));
  REQUIRE(r.rows.size() == 13);
  for (const auto& row : r.rows) {
    REQUIRE(row.dstar);
    CHECK(row.dk_hi == *row.dstar);
    CHECK(row.dk_lo == row.dk_hi);
    CHECK(row.report.regime == Regime::B);
    CHECK(row.dk_hi <= row.report.total);
  }
  CHECK(r.rows.front().n == 16);
  CHECK(*r.rows.front().dstar == 1.0 / 16);
}

TEST_CASE("zero-map: all distances vanish and the bound is the bridge") {
  const auto r = run_experiment(preset("zero-map"));
  for (const auto& row : r.rows) {
    CHECK(row.dk_hi == 0.0);
    CHECK(row.w1 == 0.0);
    CHECK(row.report.total == row.report.bridge);
  }
}

TEST_CASE("qadic-delange: window size is q^h and the CF trace is present") {
  auto c = preset("qadic-delange");
  c.n.ladder = Ladder{3, 4, 7, 1};
  c.reference.pitch_log2 = 12;
  const auto r = run_experiment(c);
  for (const auto& row : r.rows) CHECK(row.report.a_lh == pow(BigInt(3), static_cast<unsigned>(row.report.h)));
  CHECK(r.cf.size() == 201);
  CHECK(result_to_json(r)["cf_trace"].size() == 201);
}

TEST_CASE("runs are deterministic, also across threads") {
  auto c = preset("regimeB-binary");
  c.n.ladder = Ladder{2, 8, 14, 2};
  const auto a = csv_of(run_experiment(c));
  CHECK(a == csv_of(run_experiment(c)));
  c.threads = 3;
  CHECK(a == csv_of(run_experiment(c)));
  CHECK(a.rfind("N,L,h_star,T_star,regime,bridge,tau1,tau2,qf,g,total,dk_lo,dk_hi,w1,dstar,predicted_rate\n", 0) == 0);
}

TEST_CASE("conditional rows without tail data") {
  ExperimentConfig c;
  c.map = CustomTableMap{{{0, 1}, {0, 0.5}}, std::nullopt};
  c.n.list = {4, 8};
  c.regime = "A";
  const auto r = run_experiment(c);
  CHECK(r.conditional);
  CHECK(csv_of(r).find(",A,0.5,,") != std::string::npos);
}
