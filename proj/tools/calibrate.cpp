// Step-halving estimate of the quadrature constant C in tol = C·dt².
//
// Each config is run at its own step count N and at 2N. For every
// discretization-limited residual r the coefficient r/dt² is printed at both
// resolutions together with the halving ratio r(N)/r(2N); a ratio near 4
// confirms second-order behaviour. The suggested C is ten times the largest
// coefficient seen.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>

#include "config.hpp"
#include "obsent/errors.hpp"

using namespace obsent;

namespace {

struct Residuals {
  double first_law = 0.0;
  double closure = 0.0;
  double gap_bc = 0.0;
  double decomposition = 0.0;
};

Residuals measure(const ThermoLedger& L) {
  Residuals r;
  r.first_law = max_first_law_residual(L);
  r.closure = clausius_closure_residual(L);
  for (std::size_t k = 0; k < L.hierarchy.points.size(); ++k) {
    const auto& h = L.hierarchy.points[k];
    const auto& d = L.decomposition[k];
    r.gap_bc = std::max(r.gap_bc, std::abs(h.sigma_c - h.sigma_b - h.gap_bc));
    r.decomposition = std::max(r.decomposition, std::abs(d.line1 + d.line2 + d.line3 - h.sigma_a));
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: obsent_calibrate config.json...\n";
    return 1;
  }
  double worst = 0.0;
  std::cout << std::scientific << std::setprecision(3);
  for (int i = 1; i < argc; ++i) {
    try {
      cli::ExperimentConfig c = cli::load_config(argv[i]);
      const BuiltModel m = build(c.model);
      Residuals r[2];
      double dt[2];
      for (int level = 0; level < 2; ++level) {
        if (level == 1) c.settings.steps *= 2;
        const ThermoLedger L = cli::run_ledger(c, m);
        r[level] = measure(L);
        dt[level] = L.dt;
      }
      std::cout << argv[i] << "  (dt = " << dt[0] << " -> " << dt[1] << ")\n";
      auto row = [&](const char* name, double a, double b) {
        const double ca = a / (dt[0] * dt[0]);
        const double cb = b / (dt[1] * dt[1]);
        worst = std::max({worst, ca, cb});
        std::cout << "  " << std::setw(14) << std::left << name << std::right << "  C(N) " << ca << "  C(2N) " << cb
                  << "  ratio " << (b > 0 ? a / b : 0.0) << '\n';
      };
      row("first_law", r[0].first_law, r[1].first_law);
      row("closure", r[0].closure, r[1].closure);
      row("gap_bc", r[0].gap_bc, r[1].gap_bc);
      row("decomposition", r[0].decomposition, r[1].decomposition);
    } catch (const Error& e) {
      std::cerr << argv[i] << ": " << to_string(e.code()) << ": " << e.what() << '\n';
      return 1;
    }
  }
  std::cout << "largest coefficient " << worst << "; suggested C = " << 10.0 * worst << '\n';
  return 0;
}
