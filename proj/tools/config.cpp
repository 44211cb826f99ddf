#include "config.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "obsent/entropy.hpp"
#include "obsent/errors.hpp"
#include "obsent/fluct.hpp"
#include "obsent/ledger_io.hpp"
#include "obsent/thermo.hpp"

namespace obsent::cli {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + why);
}

template <class E>
struct Names {
  E value;
  const char* name;
};

constexpr Names<RunType> kRunNames[] = {{RunType::Isolated, "isolated"},   {RunType::Open, "open"},
                                        {RunType::OpenGeneralized, "open_generalized"},
                                        {RunType::Multibath, "multibath"}, {RunType::Particle, "particle"},
                                        {RunType::Fluctuation, "fluctuation"}};
constexpr Names<IsolatedStart> kStartNames[] = {{IsolatedStart::CoarseGibbs, "coarse_gibbs"},
                                                {IsolatedStart::Gibbs, "gibbs"},
                                                {IsolatedStart::Counterexample, "counterexample"}};

template <class E, std::size_t N>
E enum_from(const Names<E> (&table)[N], const std::string& s, const std::string& field) {
  for (const auto& n : table) {
    if (s == n.name) return n.value;
  }
  std::string options;
  for (const auto& n : table) options += std::string(options.empty() ? "" : ", ") + n.name;
  bad(field, "unknown value '" + s + "' (expected one of " + options + ")");
}

template <class E, std::size_t N>
std::string enum_name(const Names<E> (&table)[N], E e) {
  for (const auto& n : table) {
    if (n.value == e) return n.name;
  }
  return "?";
}

// Reads fields from one JSON object and rejects any it did not consume.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "config" : path_, "must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) bad(field(k), "unknown field");
    }
  }

  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const Json* get(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& k, double& out) {
    if (const Json* v = get(k)) out = as_number(*v, field(k));
  }
  void opt_number(const std::string& k, std::optional<double>& out) {
    if (const Json* v = get(k)) out = v->is_null() ? std::nullopt : std::optional<double>(as_number(*v, field(k)));
  }
  void integer(const std::string& k, int& out) {
    if (const Json* v = get(k)) {
      if (!v->is_number_integer()) bad(field(k), "must be an integer");
      out = v->get<int>();
    }
  }
  void count(const std::string& k, std::size_t& out) {
    if (const Json* v = get(k)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) bad(field(k), "must be a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void text(const std::string& k, std::string& out) {
    if (const Json* v = get(k)) {
      if (!v->is_string()) bad(field(k), "must be a string");
      out = v->get<std::string>();
    }
  }
  void numbers(const std::string& k, std::vector<double>& out) {
    if (const Json* v = get(k)) {
      if (!v->is_array()) bad(field(k), "must be an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], field(k) + "[" + std::to_string(i) + "]"));
    }
  }
  void integers(const std::string& k, std::vector<int>& out) {
    if (const Json* v = get(k)) {
      if (!v->is_array()) bad(field(k), "must be an array of integers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number_integer()) bad(field(k), "must be an array of integers");
        out.push_back(x.get<int>());
      }
    }
  }

  static double as_number(const Json& v, const std::string& f) {
    if (!v.is_number()) bad(f, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(f, "must be finite");
    return d;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Real entries, or [re, im] pairs.
ComplexMatrix read_matrix(const Json& j, const std::string& f) {
  if (!j.is_array() || j.empty()) bad(f, "must be a non-empty array of rows");
  const Index n = static_cast<Index>(j.size());
  ComplexMatrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) bad(f, "must be square");
    for (Index c = 0; c < n; ++c) {
      const Json& e = row[static_cast<std::size_t>(c)];
      const std::string ef = f + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (e.is_array()) {
        if (e.size() != 2) bad(ef, "complex entries are [re, im]");
        m(r, c) = Complex(Reader::as_number(e[0], ef), Reader::as_number(e[1], ef));
      } else {
        m(r, c) = Reader::as_number(e, ef);
      }
    }
  }
  return m;
}

Json write_matrix(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(r, c).imag() == 0.0) {
        row.push_back(m(r, c).real());
      } else {
        row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ComplexMatrix> read_matrices(Reader& r, const std::string& k) {
  std::vector<ComplexMatrix> out;
  if (const Json* v = r.get(k)) {
    if (!v->is_array()) bad(r.field(k), "must be an array of matrices");
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(read_matrix((*v)[i], r.field(k) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_custom(const Json& j, CustomModel& c) {
  Reader r(j, "model.custom");
  const Json* s = r.get("system_static");
  const Json* d = r.get("system_drive");
  if (!s) bad("model.custom.system_static", "required");
  c.system_static = read_matrix(*s, "model.custom.system_static");
  c.system_drive = d ? read_matrix(*d, "model.custom.system_drive")
                     : ComplexMatrix::Zero(c.system_static.rows(), c.system_static.cols());
  c.bath_hamiltonians = read_matrices(r, "bath_hamiltonians");
  c.bath_numbers = read_matrices(r, "bath_numbers");
  c.couplings = read_matrices(r, "couplings");
  if (const Json* n = r.get("system_number"); n && !n->is_null()) {
    c.system_number = read_matrix(*n, "model.custom.system_number");
  }
}

void read_model(const Json& j, ModelSpec& m) {
  Reader r(j, "model");
  std::string kind = to_string(m.kind);
  r.text("kind", kind);
  try {
    m.kind = model_kind_from_string(kind);
  } catch (const Error&) {
    bad("model.kind", "unknown value '" + kind + "'");
  }
  r.integer("system_sites", m.system_sites);
  r.integers("bath_sites", m.bath_sites);
  r.number("tunneling", m.tunneling);
  r.numbers("coupling", m.coupling);
  r.number("bath_coupling", m.bath_coupling);
  r.number("hopping", m.hopping);
  r.number("flux", m.flux);
  r.numbers("omegas", m.omegas);
  if (const Json* s = r.get("seed")) {
    if (s->is_number_unsigned()) {
      m.seed = s->get<std::uint64_t>();
    } else if (s->is_string()) {
      try {
        std::size_t pos = 0;
        m.seed = std::stoull(s->get<std::string>(), &pos, 0);
        if (pos != s->get<std::string>().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        bad("model.seed", "must be a 64-bit unsigned integer");
      }
    } else {
      bad("model.seed", "must be a 64-bit unsigned integer");
    }
  }
  if (const Json* d = r.get("driving")) {
    Reader dr(*d, "model.driving");
    std::string dk = to_string(m.driving.kind);
    dr.text("kind", dk);
    try {
      m.driving.kind = drive_kind_from_string(dk);
    } catch (const Error&) {
      bad("model.driving.kind", "unknown value '" + dk + "'");
    }
    dr.number("start", m.driving.start);
    dr.number("end", m.driving.end);
    dr.number("ramp_time", m.driving.ramp_time);
    dr.number("amplitude", m.driving.amplitude);
    dr.number("period", m.driving.period);
    dr.number("quench_time", m.driving.quench_time);
  }
  if (const Json* c = r.get("custom"); c && !c->is_null()) {
    CustomModel cm;
    read_custom(*c, cm);
    m.custom = std::move(cm);
  }
}

}  // namespace

std::string to_string(RunType r) { return enum_name(kRunNames, r); }

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad("config", std::string("not valid JSON (") + e.what() + ")");
  }
  ExperimentConfig c;
  {
    Reader r(j, "");
    std::string run = to_string(c.run);
    r.text("run", run);
    c.run = enum_from(kRunNames, run, "run");
    std::string mode = "strict";
    r.text("assertions", mode);
    if (mode == "strict") {
      c.assertions = AssertionMode::Strict;
    } else if (mode == "report_only") {
      c.assertions = AssertionMode::ReportOnly;
    } else {
      bad("assertions", "unknown value '" + mode + "' (expected strict or report_only)");
    }
    if (const Json* m = r.get("model")) read_model(*m, c.model);
    if (const Json* g = r.get("grid")) {
      Reader gr(*g, "grid");
      gr.number("t_max", c.settings.t_max);
      gr.count("steps", c.settings.steps);
    }
    r.number("delta", c.settings.delta);
    r.opt_number("anchor", c.settings.anchor);
    r.numbers("betas", c.settings.betas);
    r.numbers("mus", c.settings.mus);
    if (const Json* g = r.get("graining")) {
      Reader gr(*g, "graining");
      std::string basis = "eigenbasis";
      gr.text("system_basis", basis);
      if (basis == "eigenbasis") {
        c.settings.system_basis = SystemBasisMode::Eigenbasis;
      } else if (basis == "fixed") {
        c.settings.system_basis = SystemBasisMode::Fixed;
      } else {
        bad("graining.system_basis", "unknown value '" + basis + "' (expected eigenbasis or fixed)");
      }
      if (const Json* fb = gr.get("fixed_basis"); fb && !fb->is_null()) {
        c.settings.fixed_basis = read_matrix(*fb, "graining.fixed_basis");
      }
    }
    std::string check = "strict";
    r.text("initial_check", check);
    if (check == "strict") {
      c.settings.initial_check = InitialCheck::Strict;
    } else if (check == "flag") {
      c.settings.initial_check = InitialCheck::Flag;
    } else {
      bad("initial_check", "unknown value '" + check + "' (expected strict or flag)");
    }
    r.number("quadrature_constant", c.settings.quadrature_constant);
    if (const Json* s = r.get("initial_state")) {
      Reader sr(*s, "initial_state");
      sr.numbers("system_populations", c.system_populations);
      sr.number("system_coherence", c.system_coherence);
      sr.numbers("joint", c.initial_joint);
      std::string iso = enum_name(kStartNames, c.isolated_start);
      sr.text("isolated", iso);
      c.isolated_start = enum_from(kStartNames, iso, "initial_state.isolated");
    }
    if (const Json* f = r.get("fluctuation")) {
      Reader fr(*f, "fluctuation");
      fr.count("bins", c.ft_bins);
    }
    if (const Json* o = r.get("output")) {
      Reader orr(*o, "output");
      orr.text("csv", c.csv_path);
      orr.text("summary", c.summary_path);
      orr.text("ft_csv", c.ft_csv_path);
    }
  }
  if (c.settings.steps < 1) bad("grid.steps", "must be at least 1");
  if (!(c.settings.t_max > 0)) bad("grid.t_max", "must be positive");
  if (!(c.settings.delta > 0)) bad("delta", "must be positive");
  if (!(c.settings.quadrature_constant > 0)) bad("quadrature_constant", "must be positive");
  if (c.settings.system_basis == SystemBasisMode::Eigenbasis && c.settings.fixed_basis) {
    bad("graining.fixed_basis", "only used with system_basis = fixed");
  }
  for (double p : c.system_populations) {
    if (p < 0) bad("initial_state.system_populations", "entries must be non-negative");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  Json j;
  j["run"] = to_string(c.run);
  j["assertions"] = c.assertions == AssertionMode::Strict ? "strict" : "report_only";
  Json m;
  const ModelSpec& s = c.model;
  m["kind"] = to_string(s.kind);
  m["system_sites"] = s.system_sites;
  m["bath_sites"] = s.bath_sites;
  m["tunneling"] = s.tunneling;
  m["coupling"] = s.coupling;
  m["bath_coupling"] = s.bath_coupling;
  m["hopping"] = s.hopping;
  m["flux"] = s.flux;
  m["omegas"] = s.omegas;
  m["seed"] = s.seed;
  m["driving"] = {{"kind", to_string(s.driving.kind)}, {"start", s.driving.start},
                  {"end", s.driving.end},             {"ramp_time", s.driving.ramp_time},
                  {"amplitude", s.driving.amplitude}, {"period", s.driving.period},
                  {"quench_time", s.driving.quench_time}};
  if (s.custom) {
    Json cj;
    cj["system_static"] = write_matrix(s.custom->system_static);
    cj["system_drive"] = write_matrix(s.custom->system_drive);
    for (const char* k : {"bath_hamiltonians", "bath_numbers", "couplings"}) cj[k] = Json::array();
    for (const auto& x : s.custom->bath_hamiltonians) cj["bath_hamiltonians"].push_back(write_matrix(x));
    for (const auto& x : s.custom->bath_numbers) cj["bath_numbers"].push_back(write_matrix(x));
    for (const auto& x : s.custom->couplings) cj["couplings"].push_back(write_matrix(x));
    cj["system_number"] = s.custom->system_number ? write_matrix(*s.custom->system_number) : Json(nullptr);
    m["custom"] = cj;
  } else {
    m["custom"] = nullptr;
  }
  j["model"] = m;
  j["grid"] = {{"t_max", c.settings.t_max}, {"steps", c.settings.steps}};
  j["delta"] = c.settings.delta;
  j["anchor"] = c.settings.anchor ? Json(*c.settings.anchor) : Json(nullptr);
  j["betas"] = c.settings.betas;
  j["mus"] = c.settings.mus;
  j["graining"] = {{"system_basis", c.settings.system_basis == SystemBasisMode::Eigenbasis ? "eigenbasis" : "fixed"},
                   {"fixed_basis", c.settings.fixed_basis ? write_matrix(*c.settings.fixed_basis) : Json(nullptr)}};
  j["initial_check"] = c.settings.initial_check == InitialCheck::Strict ? "strict" : "flag";
  j["quadrature_constant"] = c.settings.quadrature_constant;
  j["initial_state"] = {{"system_populations", c.system_populations},
                        {"system_coherence", c.system_coherence},
                        {"joint", c.initial_joint},
                        {"isolated", enum_name(kStartNames, c.isolated_start)}};
  j["fluctuation"] = {{"bins", c.ft_bins}};
  j["output"] = {{"csv", c.csv_path}, {"summary", c.summary_path}, {"ft_csv", c.ft_csv_path}};
  return j.dump(2) + "\n";
}

std::string defaults_json() { return to_json(parse_config("{}")); }

namespace {

ComplexMatrix system_state(const ExperimentConfig& c, Index ds) {
  std::vector<double> p = c.system_populations;
  if (p.empty()) {
    p.assign(static_cast<std::size_t>(ds), 0.0);
    p[0] = 1.0;
  }
  if (p.size() != static_cast<std::size_t>(ds)) {
    bad("initial_state.system_populations", "needs " + std::to_string(ds) + " entries");
  }
  ComplexMatrix r = ComplexMatrix::Zero(ds, ds);
  for (Index i = 0; i < ds; ++i) r(i, i) = p[static_cast<std::size_t>(i)];
  if (c.system_coherence != 0.0) {
    if (ds < 2) bad("initial_state.system_coherence", "needs at least two system levels");
    r(0, 1) = c.system_coherence;
    r(1, 0) = c.system_coherence;
  }
  return r;
}

void check_lengths(const ExperimentConfig& c, const BuiltModel& m) {
  const std::size_t nb = m.bath_count();
  if (c.run == RunType::Isolated) {
    if (c.settings.betas.empty()) bad("betas", "isolated runs need one reference beta");
    return;
  }
  if (c.settings.betas.size() != nb) {
    bad("betas", "needs one entry per bath (" + std::to_string(nb) + ")");
  }
  if (c.run == RunType::Particle && c.settings.mus.size() != nb) {
    bad("mus", "needs one entry per bath (" + std::to_string(nb) + ")");
  }
  if ((c.run == RunType::Open || c.run == RunType::OpenGeneralized) && nb != 1) {
    bad("model.bath_sites", "open runs need exactly one bath");
  }
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const BuiltModel m = build(c.model);
  check_lengths(c, m);
  const Index ds = m.dims()[0];
  if (c.run != RunType::Isolated && c.run != RunType::Fluctuation) {
    (void)DensityMatrix(system_state(c, ds), {ds});
  }
  if (c.settings.fixed_basis &&
      (c.settings.fixed_basis->rows() != ds || c.settings.fixed_basis->cols() != ds)) {
    bad("graining.fixed_basis", "must be " + std::to_string(ds) + "x" + std::to_string(ds));
  }
  if (const auto tq = m.quench_time()) {
    const double dt = c.settings.t_max / static_cast<double>(c.settings.steps);
    const double k = std::round(*tq / dt);
    if (std::abs(k * dt - *tq) > 1e-9 * dt) bad("model.driving.quench_time", "must lie on the time grid");
  }
  if (c.run == RunType::Particle) {
    if (!m.conserves_particles()) {
      throw Error(ErrorCode::NonConserving, "particle runs need number operators for every bath");
    }
    for (std::size_t nu = 0; nu < m.bath_count(); ++nu) (void)joint_spectrum(m.bath_hamiltonian(nu), m.bath_number(nu));
    const HermitianOperator n = m.total_number();
    for (double t : {0.0, 0.5 * c.settings.t_max, c.settings.t_max}) {
      const double r = commutator_norm(m.total_hamiltonian(t).matrix(), n.matrix());
      if (r > 1e-9) {
        std::ostringstream os;
        os << "total particle number is not conserved (max|[H,N]| = " << r << " at t = " << t << ")";
        throw Error(ErrorCode::NonConserving, os.str());
      }
    }
  }
  if (c.run == RunType::OpenGeneralized && !c.initial_joint.empty()) {
    const CoarseGraining x = open_initial_graining(m, c.settings);
    if (c.initial_joint.size() != x.size()) {
      bad("initial_state.joint", "needs " + std::to_string(x.size()) + " entries");
    }
  }
}

OutputPaths output_paths(const ExperimentConfig& c, const std::optional<std::filesystem::path>& out_dir,
                         const std::string& stem) {
  if (!out_dir) return {c.csv_path, c.summary_path, c.ft_csv_path};
  return {*out_dir / (stem + "_ledger.csv"), *out_dir / (stem + "_summary.json"), *out_dir / (stem + "_ft.csv")};
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigInvalid, "output: cannot write " + p.string());
  return out;
}

DensityMatrix isolated_state(const ExperimentConfig& c, const BuiltModel& m) {
  const HermitianOperator h = m.hamiltonian_for(m.epsilon(0.0));
  const double beta = c.settings.betas.front();
  switch (c.isolated_start) {
    case IsolatedStart::Gibbs: return gibbs_state(h, beta, m.dims());
    case IsolatedStart::CoarseGibbs: {
      const DensityMatrix r = coarse_gibbs_state(h, beta, c.settings.delta, c.settings.anchor);
      return DensityMatrix::trusted(r.matrix(), m.dims());
    }
    case IsolatedStart::Counterexample: {
      // Coherence between the ground state and the top level, which sit in
      // different energy windows.
      const DensityMatrix r = coarse_gibbs_state(h, beta, c.settings.delta, c.settings.anchor);
      const Spectrum& sp = h.spectrum();
      const ComplexVector g = sp.vectors.col(0);
      const ComplexVector e = sp.vectors.col(sp.vectors.cols() - 1);
      const double pg = std::real(g.dot(r.matrix() * g));
      const double pe = std::real(e.dot(r.matrix() * e));
      const double c0 = c.system_coherence != 0.0 ? c.system_coherence : 0.5 * std::sqrt(pg * pe);
      ComplexMatrix rho = r.matrix() + c0 * (g * e.adjoint() + e * g.adjoint());
      return DensityMatrix(rho, m.dims());
    }
  }
  return gibbs_state(h, beta, m.dims());
}

}  // namespace

ThermoLedger run_ledger(const ExperimentConfig& c, const BuiltModel& m) {
  if (c.run == RunType::Fluctuation) bad("run", "fluctuation runs produce no thermodynamic ledger");
  ThermoLedger ledger;
  const Index ds = m.dims()[0];
  switch (c.run) {
    case RunType::Isolated: ledger = run_isolated(m, c.settings, isolated_state(c, m)); break;
    case RunType::Open: ledger = run_open(m, c.settings, system_state(c, ds)); break;
    case RunType::Multibath: ledger = run_multibath(m, c.settings, system_state(c, ds)); break;
    case RunType::Particle: ledger = run_particle(m, c.settings, system_state(c, ds)); break;
    case RunType::OpenGeneralized: {
      OutcomeDistribution joint;
      if (c.initial_joint.empty()) {
        const ComplexMatrix rs = system_state(c, ds);
        std::vector<double> p(static_cast<std::size_t>(ds));
        for (Index i = 0; i < ds; ++i) p[static_cast<std::size_t>(i)] = rs(i, i).real();
        joint = product_initial_joint(m, c.settings, p);
      } else {
        joint.probabilities = c.initial_joint;
      }
      ledger = run_open_generalized(m, c.settings, joint);
      break;
    }
    case RunType::Fluctuation: break;
  }
  return ledger;
}

RunOutcome execute(const ExperimentConfig& c, const OutputPaths& paths) {
  validate(c);
  const BuiltModel m = build(c.model);
  RunOutcome out;
  if (c.run == RunType::Fluctuation) {
    const FluctuationResult r = run_fluctuation(m, c.settings, c.system_populations, c.system_coherence, c.ft_bins);
    {
      auto f = open_out(paths.ft_csv);
      write_ft_csv(f, r.detailed);
    }
    if (!r.ift.precondition_violated && std::abs(r.ift.value - 1.0) > 1e-9) out.failed.push_back("ift_average");
    if (r.central_residual > 1e-9) out.failed.push_back("central_relation");
    if (r.detailed.max_relative_error > 1e-8) out.failed.push_back("detailed_ratio");
    Json j = Json::parse(fluctuation_summary_json(r));
    j["assertions"] = c.assertions == AssertionMode::Strict ? "strict" : "report_only";
    j["failed"] = out.failed;
    auto f = open_out(paths.summary);
    f << j.dump(2) << '\n';
  } else {
    const ThermoLedger ledger = run_ledger(c, m);
    out.violations = check_hierarchy(ledger);
    {
      auto f = open_out(paths.csv);
      write_ledger_csv(f, ledger);
    }
    Json j = Json::parse(ledger_summary_json(ledger, out.violations));
    j["assertions"] = c.assertions == AssertionMode::Strict ? "strict" : "report_only";
    auto f = open_out(paths.summary);
    f << j.dump(2) << '\n';
    for (const auto& v : out.violations) out.failed.push_back(v.invariant);
  }
  if (!out.failed.empty() && c.assertions == AssertionMode::Strict) out.exit_code = 2;
  return out;
}

}  // namespace obsent::cli
