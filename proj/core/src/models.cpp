#include "obsent/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "obsent/errors.hpp"

namespace obsent {

namespace {

constexpr Index kMaxDim = 4096;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::SpecInvalid, what); }

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) invalid(std::string(field) + " must be finite");
}

ComplexMatrix identity(Index d) { return ComplexMatrix::Identity(d, d); }

// Bonds of a chain of n sites; closed into a ring for n >= 3.
std::vector<std::pair<int, int>> bonds(int n, bool ring) {
  std::vector<std::pair<int, int>> b;
  for (int i = 0; i + 1 < n; ++i) b.emplace_back(i, i + 1);
  if (ring && n >= 3) b.emplace_back(n - 1, 0);
  return b;
}

std::vector<double> bath_frequencies(const ModelSpec& spec, int total_sites) {
  if (!spec.omegas.empty()) {
    if (static_cast<int>(spec.omegas.size()) != total_sites) {
      std::ostringstream os;
      os << "omegas lists " << spec.omegas.size() << " values for " << total_sites << " bath sites";
      invalid(os.str());
    }
    for (double w : spec.omegas) require_finite(w, "omegas");
    return spec.omegas;
  }
  SplitMix64 rng(spec.seed);
  std::vector<double> w(static_cast<std::size_t>(total_sites));
  for (double& v : w) v = 0.5 + rng.uniform();
  return w;
}

ComplexMatrix spin_bath(const std::vector<double>& omega, double jb, bool ring) {
  const int n = static_cast<int>(omega.size());
  const Index d = Index{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < n; ++k) h += 0.5 * omega[static_cast<std::size_t>(k)] * site_operator(sigma_z(), k, n);
  for (auto [a, b] : bonds(n, ring)) h += jb * site_operator(sigma_x(), a, n) * site_operator(sigma_x(), b, n);
  return h;
}

ComplexMatrix hopping_terms(int n, double j, double phase, bool ring) {
  const Index d = Index{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  const Complex w = std::polar(j, phase);
  for (auto [a, b] : bonds(n, ring)) {
    const ComplexMatrix hop = site_operator(sigma_plus(), a, n) * site_operator(sigma_minus(), b, n);
    h += w * hop + std::conj(w) * hop.adjoint();
  }
  return h;
}

ComplexMatrix particle_bath(const std::vector<double>& omega, double jb, double flux) {
  const int n = static_cast<int>(omega.size());
  const Index d = Index{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  ComplexMatrix occ(2, 2);
  occ << 0, 0, 0, 1;
  for (int k = 0; k < n; ++k) h += omega[static_cast<std::size_t>(k)] * site_operator(occ, k, n);
  return h + hopping_terms(n, jb, flux, true);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SpinStar: return "spin_star";
    case ModelKind::SpinChainTwoBath: return "spin_chain_two_bath";
    case ModelKind::HoppingParticle: return "hopping_particle";
    case ModelKind::Custom: return "custom";
  }
  return "?";
}

std::string to_string(DriveKind kind) {
  switch (kind) {
    case DriveKind::None: return "none";
    case DriveKind::Ramp: return "ramp";
    case DriveKind::Periodic: return "periodic";
    case DriveKind::Quench: return "quench";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (auto k : {ModelKind::SpinStar, ModelKind::SpinChainTwoBath, ModelKind::HoppingParticle, ModelKind::Custom}) {
    if (to_string(k) == s) return k;
  }
  invalid("unknown model kind '" + s + "'");
}

DriveKind drive_kind_from_string(const std::string& s) {
  for (auto k : {DriveKind::None, DriveKind::Ramp, DriveKind::Periodic, DriveKind::Quench}) {
    if (to_string(k) == s) return k;
  }
  invalid("unknown driving kind '" + s + "'");
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

ComplexMatrix site_operator(const ComplexMatrix& local, int site, int sites) {
  Dims dims(static_cast<std::size_t>(sites), 2);
  return embed(local, dims, static_cast<std::size_t>(site));
}

ComplexMatrix number_operator(int sites) {
  const Index d = Index{1} << sites;
  ComplexMatrix n = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < sites; ++k) n += 0.5 * (identity(d) - site_operator(sigma_z(), k, sites));
  return n;
}

double BuiltModel::epsilon(double t) const {
  const auto& d = spec_.driving;
  switch (d.kind) {
    case DriveKind::None: return d.start;
    case DriveKind::Ramp: return t >= d.ramp_time ? d.end : d.start + (d.end - d.start) * t / d.ramp_time;
    case DriveKind::Periodic: return d.start + d.amplitude * std::sin(2 * std::numbers::pi * t / d.period);
    case DriveKind::Quench: return t > d.quench_time ? d.end : d.start;
  }
  return d.start;
}

double BuiltModel::epsilon_rate(double t) const {
  const auto& d = spec_.driving;
  switch (d.kind) {
    case DriveKind::Ramp: return t < d.ramp_time ? (d.end - d.start) / d.ramp_time : 0.0;
    case DriveKind::Periodic:
      return d.amplitude * 2 * std::numbers::pi / d.period * std::cos(2 * std::numbers::pi * t / d.period);
    default: return 0.0;
  }
}

double BuiltModel::epsilon_jump() const {
  return spec_.driving.kind == DriveKind::Quench ? spec_.driving.end - spec_.driving.start : 0.0;
}

std::optional<double> BuiltModel::quench_time() const {
  if (spec_.driving.kind == DriveKind::Quench) return spec_.driving.quench_time;
  return std::nullopt;
}

HermitianOperator BuiltModel::system_hamiltonian(double t) const {
  return HermitianOperator(system_static_ + epsilon(t) * system_drive_);
}

ComplexMatrix BuiltModel::system_hamiltonian_full(double t) const {
  return embed(ComplexMatrix(system_static_ + epsilon(t) * system_drive_), dims_, 0);
}

ComplexMatrix BuiltModel::coupling_total() const {
  ComplexMatrix v = ComplexMatrix::Zero(dim(), dim());
  for (const auto& c : coupling_) v += c;
  return v;
}

HermitianOperator BuiltModel::total_number() const {
  if (!conserves_particles()) throw Error(ErrorCode::InvalidArgument, "model has no particle number");
  ComplexMatrix n = ComplexMatrix::Zero(dim(), dim());
  if (system_n_) n += embed(system_n_->matrix(), dims_, 0);
  for (std::size_t nu = 0; nu < bath_n_.size(); ++nu) n += embed(bath_n_[nu].matrix(), dims_, nu + 1);
  return HermitianOperator(std::move(n));
}

HermitianOperator BuiltModel::total_hamiltonian(double t) const { return hamiltonian_for(epsilon(t)); }

HermitianOperator BuiltModel::hamiltonian_for(double eps) const {
  return HermitianOperator(static_full_ + eps * drive_full_);
}

Protocol BuiltModel::protocol(double duration, std::size_t steps) const {
  std::ostringstream desc;
  desc << to_string(spec_.kind) << ", " << to_string(spec_.driving.kind) << " drive";
  if (spec_.driving.kind == DriveKind::None) {
    Protocol p = Protocol::constant(total_hamiltonian(0.0), duration, steps);
    return p;
  }
  const double dt = duration / static_cast<double>(std::max<std::size_t>(steps, 1));
  // The generator holds its own copy so the protocol can outlive the model.
  auto self = std::make_shared<const BuiltModel>(*this);
  return Protocol(duration, steps, dim(),
                  [self, dt](std::size_t k) { return self->total_hamiltonian((static_cast<double>(k) + 0.5) * dt); },
                  desc.str());
}

BuiltModel build(const ModelSpec& spec) {
  BuiltModel m;
  m.spec_ = spec;
  const auto& dr = spec.driving;
  for (double v : {dr.start, dr.end, dr.ramp_time, dr.amplitude, dr.period, dr.quench_time}) {
    require_finite(v, "driving parameters");
  }
  if (dr.kind == DriveKind::Ramp && !(dr.ramp_time > 0)) invalid("driving.ramp_time must be positive");
  if (dr.kind == DriveKind::Periodic && !(dr.period > 0)) invalid("driving.period must be positive");
  for (double v : {spec.tunneling, spec.bath_coupling, spec.hopping, spec.flux}) require_finite(v, "couplings");
  for (double g : spec.coupling) require_finite(g, "coupling");

  if (spec.kind == ModelKind::Custom) {
    if (!spec.custom) invalid("custom model without operators");
    const auto& c = *spec.custom;
    const Index ds = c.system_static.rows();
    if (ds < 1 || c.system_static.cols() != ds || c.system_drive.rows() != ds || c.system_drive.cols() != ds) {
      invalid("custom system operators must be square and of equal size");
    }
    m.dims_ = {ds};
    for (const auto& hb : c.bath_hamiltonians) m.dims_.push_back(hb.rows());
    if (total_dim(m.dims_) > kMaxDim) invalid("total dimension exceeds 4096");
    m.system_static_ = c.system_static;
    m.system_drive_ = c.system_drive;
    for (const auto& hb : c.bath_hamiltonians) m.bath_h_.emplace_back(hb);
    if (!c.bath_numbers.empty()) {
      if (c.bath_numbers.size() != c.bath_hamiltonians.size()) invalid("one number operator per bath required");
      for (const auto& nb : c.bath_numbers) m.bath_n_.emplace_back(nb);
      if (c.system_number) m.system_n_ = HermitianOperator(*c.system_number);
    }
    if (c.couplings.size() != c.bath_hamiltonians.size()) invalid("one coupling operator per bath required");
    for (const auto& v : c.couplings) {
      if (v.rows() != total_dim(m.dims_) || v.cols() != v.rows()) invalid("coupling operator has the wrong size");
      m.coupling_.push_back(v);
    }
  } else {
    const auto nb = spec.bath_sites.size();
    if (nb == 0) invalid("at least one bath is required");
    if (spec.coupling.size() != nb) invalid("coupling needs one entry per bath");
    int total_sites = 0;
    for (int s : spec.bath_sites) {
      if (s < 1 || s > 12) invalid("bath_sites entries must be in [1, 12]");
      total_sites += s;
    }
    const int ns = spec.kind == ModelKind::HoppingParticle ? spec.system_sites : 1;
    if (ns < 1 || ns > 6) invalid("system_sites must be in [1, 6]");
    if (spec.kind == ModelKind::SpinChainTwoBath && nb != 2) invalid("spin_chain_two_bath needs exactly two baths");
    if (spec.kind == ModelKind::HoppingParticle && nb > 2) invalid("hopping_particle supports one or two baths");
    if (ns + total_sites > 12) invalid("total dimension exceeds 4096");
    if (spec.kind != ModelKind::HoppingParticle && spec.flux != 0.0) invalid("flux is only defined for hopping_particle");

    m.dims_ = {Index{1} << ns};
    for (int s : spec.bath_sites) m.dims_.push_back(Index{1} << s);
    const auto omega = bath_frequencies(spec, total_sites);
    std::size_t offset = 0;

    if (spec.kind == ModelKind::HoppingParticle) {
      m.system_static_ = hopping_terms(ns, spec.hopping, 0.0, false);
      m.system_drive_ = number_operator(ns);
      m.system_n_ = HermitianOperator(number_operator(ns));
    } else {
      m.system_static_ = 0.5 * spec.tunneling * sigma_x();
      m.system_drive_ = 0.5 * sigma_z();
    }

    for (std::size_t nu = 0; nu < nb; ++nu) {
      const int s = spec.bath_sites[nu];
      std::vector<double> w(omega.begin() + static_cast<std::ptrdiff_t>(offset),
                            omega.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(s)));
      offset += static_cast<std::size_t>(s);
      const double g = spec.coupling[nu];
      ComplexMatrix v;
      switch (spec.kind) {
        case ModelKind::SpinStar: {
          m.bath_h_.emplace_back(spin_bath(w, spec.bath_coupling, true));
          ComplexMatrix sx = ComplexMatrix::Zero(Index{1} << s, Index{1} << s);
          for (int k = 0; k < s; ++k) sx += site_operator(sigma_x(), k, s);
          v = (g / std::sqrt(static_cast<double>(s))) * embed(sigma_x(), m.dims_, 0) * embed(sx, m.dims_, nu + 1);
          break;
        }
        case ModelKind::SpinChainTwoBath: {
          m.bath_h_.emplace_back(spin_bath(w, spec.bath_coupling, false));
          // The system sits between the two chains and touches their inner ends.
          const int edge = nu == 0 ? s - 1 : 0;
          v = g * embed(sigma_x(), m.dims_, 0) * embed(site_operator(sigma_x(), edge, s), m.dims_, nu + 1);
          break;
        }
        case ModelKind::HoppingParticle: {
          m.bath_h_.emplace_back(particle_bath(w, spec.bath_coupling, spec.flux));
          m.bath_n_.emplace_back(number_operator(s));
          const int site = nu == 0 ? 0 : ns - 1;
          const ComplexMatrix hop = embed(site_operator(sigma_plus(), site, ns), m.dims_, 0) *
                                    embed(site_operator(sigma_minus(), 0, s), m.dims_, nu + 1);
          v = g * (hop + hop.adjoint());
          break;
        }
        case ModelKind::Custom: break;
      }
      m.coupling_.push_back(std::move(v));
    }
  }

  m.static_full_ = embed(m.system_static_, m.dims_, 0);
  for (std::size_t nu = 0; nu < m.bath_h_.size(); ++nu) {
    m.static_full_ += embed(m.bath_h_[nu].matrix(), m.dims_, nu + 1);
    m.static_full_ += m.coupling_[nu];
  }
  m.drive_full_ = embed(m.system_drive_, m.dims_, 0);
  // Hermiticity of every piece is checked by HermitianOperator.
  (void)HermitianOperator(m.static_full_);
  (void)HermitianOperator(m.drive_full_);
  return m;
}

}  // namespace obsent
