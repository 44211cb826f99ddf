#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "obsent/ledger_io.hpp"
#include "support.hpp"

using namespace obsent;
using Json = nlohmann::json;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

ThermoLedger small_open(ModelKind kind = ModelKind::SpinStar) {
  ModelSpec s;
  s.kind = kind;
  RunSettings r;
  r.t_max = 1.0;
  r.steps = 5;
  if (kind == ModelKind::SpinStar) {
    s.bath_sites = {3};
    return run_open(build(s), r, testing::real_diag({0.4, 0.6}));
  }
  s.system_sites = 1;
  s.bath_sites = {2, 2};
  s.coupling = {0.3, 0.3};
  r.betas = {1.0, 1.0};
  r.mus = {0.2, -0.2};
  return run_particle(build(s), r, testing::real_diag({1.0, 0.0}));
}

}  // namespace

TEST_CASE("format_double round-trips with 17 significant digits") {
  testing::Rng rng(90);
  for (int i = 0; i < 500; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.integer(-300, 300)));
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
    const auto e = s.find('e');
    REQUIRE(e != std::string::npos);
    const std::string mantissa = s.substr(0, e);
    CHECK(std::count_if(mantissa.begin(), mantissa.end(), ::isdigit) == 17);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(format_double(1.0) == "1.0000000000000000e+00");
  CHECK(format_double(-0.0) == format_double(0.0));
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("column registries") {
  CHECK(isolated_columns().front() == "time");
  CHECK(ft_columns() == std::vector<std::string>{"delta_s", "p_forward", "q_reversed", "ratio", "expected_ratio"});
  const auto one = open_columns(1, false);
  for (const char* c : {"sigma_a", "sigma_b", "sigma_c", "sigma_d", "sigma_d_tilde", "line1", "line2", "line3",
                        "Q_1", "beta_star_1", "epsilon_hat"}) {
    CHECK(std::count(one.begin(), one.end(), c) == 1);
  }
  const auto two = open_columns(2, true);
  for (const char* c : {"Q_2", "mu_star_1", "N_B_2", "clausius_2"}) CHECK(std::count(two.begin(), two.end(), c) == 1);
  CHECK(std::count(one.begin(), one.end(), "Q_2") == 0);
  // names are unique
  auto sorted = two;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("open ledger CSV reproduces the ledger cell by cell") {
  const ThermoLedger L = small_open();
  std::ostringstream os;
  write_ledger_csv(os, L);
  const auto rows = parse_csv(os.str());
  REQUIRE(rows.size() == L.time.size() + 1);
  CHECK(rows[0] == open_columns(1, false));
  const std::size_t sa = column(rows[0], "sigma_a"), q = column(rows[0], "Q_1"), t = column(rows[0], "time");
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    REQUIRE(rows[k + 1].size() == rows[0].size());
    CHECK(std::strtod(rows[k + 1][t].c_str(), nullptr) == L.time[k]);
    CHECK(std::strtod(rows[k + 1][sa].c_str(), nullptr) == L.hierarchy.points[k].sigma_a);
    CHECK(std::strtod(rows[k + 1][q].c_str(), nullptr) == L.energy[k].Q[0]);
  }
}

TEST_CASE("particle and isolated ledgers use their own registries") {
  const ThermoLedger P = small_open(ModelKind::HoppingParticle);
  std::ostringstream os;
  write_ledger_csv(os, P);
  const auto rows = parse_csv(os.str());
  CHECK(rows[0] == open_columns(2, true));
  const std::size_t n2 = column(rows[0], "N_B_2");
  CHECK(std::strtod(rows.back()[n2].c_str(), nullptr) == P.N_bath[1].back());

  ModelSpec s;
  s.bath_sites = {2};
  RunSettings r;
  r.t_max = 1.0;
  r.steps = 4;
  const BuiltModel m = build(s);
  const ThermoLedger I = run_isolated(m, r, coarse_gibbs_state(m.total_hamiltonian(0.0), 1.0, r.delta));
  std::ostringstream is;
  write_ledger_csv(is, I);
  const auto irows = parse_csv(is.str());
  CHECK(irows[0] == isolated_columns());
  CHECK(irows.size() == 6);
}

TEST_CASE("summary JSON carries final values, residuals and flags") {
  const ThermoLedger L = small_open();
  const Json j = Json::parse(ledger_summary_json(L, {{"sigma_a_nonnegative", 0.5, -1.0, -1e-9}}));
  CHECK(j["kind"] == "open");
  for (const char* k : {"sigma_a", "sigma_b", "sigma_c", "sigma_d", "sigma_d_tilde", "line1", "line2", "line3"}) {
    CHECK(j["final"].contains(k));
  }
  CHECK(j["final"]["sigma_a"].get<double>() == L.hierarchy.points.back().sigma_a);
  for (const char* k : {"r_delta", "slack", "quadrature_tolerance", "epsilon_hat_max", "first_law_max"}) {
    CHECK(j["residuals"].contains(k));
  }
  for (const char* k : {"initial_state_ok", "saturated", "zero_probability"}) CHECK(j["flags"].contains(k));
  REQUIRE(j["violations"].size() == 1);
  CHECK(j["violations"][0]["invariant"] == "sigma_a_nonnegative");

  // key order is fixed: sigma_a comes before sigma_d_tilde in the text
  const std::string text = ledger_summary_json(L, {});
  CHECK(text.find("\"sigma_a\"") < text.find("\"sigma_b\""));
  CHECK(text.find("\"sigma_c\"") < text.find("\"sigma_d_tilde\""));
}

TEST_CASE("FT CSV and fluctuation summary") {
  ModelSpec s;
  s.bath_sites = {3};
  s.coupling = {0.3};
  s.driving.kind = DriveKind::Quench;
  RunSettings r;
  r.t_max = 2.0;
  r.steps = 10;
  r.delta = 0.5;
  const FluctuationResult f = run_fluctuation(build(s), r);
  std::ostringstream os;
  write_ft_csv(os, f.detailed);
  const auto rows = parse_csv(os.str());
  CHECK(rows[0] == ft_columns());
  REQUIRE(rows.size() == f.detailed.rows.size() + 1);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double ds = std::strtod(rows[k][0].c_str(), nullptr);
    const double ratio = std::strtod(rows[k][3].c_str(), nullptr);
    if (std::isfinite(ratio)) CHECK(std::abs(std::log(ratio) - ds) <= 1e-6);
  }
  const Json j = Json::parse(fluctuation_summary_json(f));
  CHECK(j["ift_average"].get<double>() == f.ift.value);
  CHECK(j["flags"].contains("zero_probability"));
  CHECK(j["flags"]["initial_member"] == true);
}
