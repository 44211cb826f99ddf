#include "obsent/ledger_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "obsent/errors.hpp"

namespace obsent {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& isolated_columns() {
  static const std::vector<std::string> cols{
      "time",     "epsilon",          "U",        "W",    "S_obs",     "sigma",
      "clausius", "clausius_endpoint", "S_eq",    "beta_star", "first_law_residual"};
  return cols;
}

std::vector<std::string> open_columns(std::size_t baths, bool particles) {
  std::vector<std::string> cols{"time",     "epsilon",  "U_S",      "W",       "W_chem",        "S_global",
                                "S_system", "S_system_vn", "sigma_a", "sigma_b", "sigma_c",     "sigma_d",
                                "sigma_d_tilde", "gap_ab", "gap_bc", "gap_cd_tilde", "I_obs",    "I_quantum",
                                "line1",    "line2",    "line3",    "sigma_d_rate", "epsilon_hat",
                                "first_law_residual"};
  for (std::size_t nu = 1; nu <= baths; ++nu) {
    const std::string s = "_" + std::to_string(nu);
    for (const char* base : {"U_B", "U_B_binned", "Q", "beta_star"}) cols.push_back(base + s);
    if (particles) {
      cols.push_back("mu_star" + s);
      cols.push_back("N_B" + s);
    }
    for (const char* base : {"S_B", "S_eq_B", "clausius"}) cols.push_back(base + s);
  }
  return cols;
}

const std::vector<std::string>& ft_columns() {
  static const std::vector<std::string> cols{"delta_s", "p_forward", "q_reversed", "ratio", "expected_ratio"};
  return cols;
}

namespace {

void write_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << format_double(row[i]);
  }
  os << '\n';
}

void write_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << ',';
    os << cols[i];
  }
  os << '\n';
}

// JSON has no NaN/inf; those become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double max_abs_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void write_ledger_csv(std::ostream& os, const ThermoLedger& L) {
  const std::size_t n = L.time.size();
  if (L.kind == RunKind::Isolated) {
    write_header(os, isolated_columns());
    for (std::size_t k = 0; k < n; ++k) {
      write_row(os, {L.time[k], L.epsilon[k], L.U_total[k], L.energy[k].W, L.S_obs[k], L.sigma[k],
                     L.clausius_isolated[k], L.clausius_endpoint[k], L.S_eq[k], L.beta_star[k],
                     L.first_law_residual[k]});
    }
    return;
  }
  const bool particles = L.kind == RunKind::Particle;
  const std::size_t nb = L.S_bath.size();
  const auto cols = open_columns(nb, particles);
  write_header(os, cols);
  std::vector<double> row;
  row.reserve(cols.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = L.energy[k];
    const auto& h = L.hierarchy.points[k];
    const auto& d = L.decomposition[k];
    row = {L.time[k],     L.epsilon[k],      e.U_S,       e.W,       e.W_chem,         L.S_global[k],
           L.S_system[k], L.S_system_vn[k],  h.sigma_a,   h.sigma_b, h.sigma_c,        h.sigma_d,
           h.sigma_d_tilde, h.gap_ab,        h.gap_bc,    h.gap_cd_tilde, h.I_obs,     h.I_quantum,
           d.line1,       d.line2,           d.line3,     L.sigma_d_rate[k], e.epsilon_hat,
           L.first_law_residual[k]};
    for (std::size_t nu = 0; nu < nb; ++nu) {
      row.push_back(e.U_B[nu]);
      row.push_back(L.U_bath_binned[nu][k]);
      row.push_back(e.Q[nu]);
      row.push_back(e.beta_star[nu]);
      if (particles) {
        row.push_back(e.mu_star ? (*e.mu_star)[nu] : 0.0);
        row.push_back(L.N_bath[nu][k]);
      }
      row.push_back(L.S_bath[nu][k]);
      row.push_back(L.S_eq_bath[nu][k]);
      row.push_back(L.clausius[nu][k]);
    }
    write_row(os, row);
  }
}

void write_ft_csv(std::ostream& os, const DetailedFt& ft) {
  write_header(os, ft_columns());
  for (const auto& r : ft.rows) write_row(os, {r.delta_s, r.p_forward, r.q_reversed, r.ratio, r.expected_ratio});
}

std::string ledger_summary_json(const ThermoLedger& L, const std::vector<Violation>& violations) {
  if (L.time.empty()) throw Error(ErrorCode::InvalidArgument, "empty ledger");
  Json j;
  j["kind"] = to_string(L.kind);
  j["steps"] = L.steps;
  j["dt"] = L.dt;
  j["t_final"] = L.time.back();
  const std::size_t last = L.time.size() - 1;
  Json fin;
  if (L.kind == RunKind::Isolated) {
    fin["sigma"] = L.sigma[last];
    fin["clausius"] = L.clausius_isolated[last];
    fin["clausius_endpoint"] = L.clausius_endpoint[last];
    fin["S_obs"] = L.S_obs[last];
    fin["beta_star"] = num(L.beta_star[last]);
    fin["W"] = L.energy[last].W;
    fin["delta_U"] = L.U_total[last] - L.U_total[0];
  } else {
    const auto& h = L.hierarchy.points[last];
    fin["sigma_a"] = h.sigma_a;
    fin["sigma_b"] = h.sigma_b;
    fin["sigma_c"] = h.sigma_c;
    fin["sigma_d"] = h.sigma_d;
    fin["sigma_d_tilde"] = h.sigma_d_tilde;
    fin["gap_ab"] = h.gap_ab;
    fin["gap_bc"] = h.gap_bc;
    fin["gap_cd_tilde"] = h.gap_cd_tilde;
    fin["I_obs"] = h.I_obs;
    fin["I_quantum"] = h.I_quantum;
    const auto& d = L.decomposition[last];
    fin["line1"] = d.line1;
    fin["line2"] = d.line2;
    fin["line3"] = d.line3;
    const auto& e = L.energy[last];
    fin["W"] = e.W;
    fin["W_chem"] = e.W_chem;
    fin["Q"] = e.Q;
    fin["beta_star"] = e.beta_star;
    if (e.mu_star) fin["mu_star"] = *e.mu_star;
  }
  j["final"] = fin;

  Json res;
  res["r_delta"] = L.r_delta;
  res["slack"] = L.slack;
  res["quadrature_tolerance"] = L.quadrature_tolerance;
  res["clausius_closure"] = clausius_closure_residual(L);
  res["first_law_max"] = max_abs_of(L.first_law_residual);
  double eps_hat = 0.0;
  for (const auto& e : L.energy) eps_hat = std::max(eps_hat, e.epsilon_hat);
  res["epsilon_hat_max"] = eps_hat;
  if (L.kind != RunKind::Isolated) {
    double ab = 0.0, bc = 0.0;
    for (const auto& h : L.hierarchy.points) {
      ab = std::max(ab, std::abs(h.sigma_b - h.sigma_a - h.gap_ab));
      bc = std::max(bc, std::abs(h.sigma_c - h.sigma_b - h.gap_bc));
    }
    res["gap_ab_identity"] = ab;
    res["gap_bc_identity"] = bc;
  }
  j["residuals"] = res;

  Json flags;
  flags["initial_state_ok"] = L.initial_state_ok;
  flags["initial_state_residual"] = L.initial_state_residual;
  flags["saturated"] = L.saturated;
  flags["grand_unsolved"] = L.grand_unsolved;
  flags["zero_probability"] = false;
  j["flags"] = flags;

  Json v = Json::array();
  for (const auto& x : violations) {
    v.push_back({{"invariant", x.invariant}, {"time", x.time}, {"value", num(x.value)}, {"bound", num(x.bound)}});
  }
  j["violations"] = v;
  j["warnings"] = L.warnings;
  return j.dump(2) + "\n";
}

std::string fluctuation_summary_json(const FluctuationResult& r) {
  Json j;
  j["kind"] = "fluctuation";
  j["outcome_pairs"] = r.forward.entries.size();
  j["ift_average"] = r.ift.value;
  j["ift_deviation"] = std::abs(r.ift.value - 1.0);
  j["central_residual"] = r.central_residual;
  j["mean_delta_s"] = r.mean_delta_s;
  j["delta_S_obs"] = r.delta_S_obs;
  j["detailed_max_relative_error"] = num(r.detailed.max_relative_error);
  j["equal_initial"] = r.detailed.equal_initial;
  j["equal_initial_residual"] = r.detailed.equal_initial_residual;
  j["detailed_tr_max_relative_error"] = num(r.detailed.max_relative_error_tr);
  j["forward_total"] = r.forward.total_probability;
  j["reversed_total"] = r.reversed.total_probability;
  Json flags;
  flags["initial_member"] = r.initial_member;
  flags["initial_residual"] = r.initial_residual;
  flags["zero_probability"] = r.forward.zero_probability_outcome;
  flags["precondition_violated"] = r.ift.precondition_violated;
  j["flags"] = flags;
  return j.dump(2) + "\n";
}

}  // namespace obsent
