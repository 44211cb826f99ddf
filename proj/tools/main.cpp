#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "obsent/errors.hpp"
#include "obsent/thermo.hpp"

namespace fs = std::filesystem;
using namespace obsent;

namespace {

std::mutex io_mutex;

void report_error(const std::string& where, const Error& e) {
  std::lock_guard lock(io_mutex);
  std::cerr << where << "error " << to_string(e.code()) << ": " << e.what() << '\n';
}

int run_one(const fs::path& config_path, const std::optional<fs::path>& out_dir, bool prefix) {
  const std::string where = prefix ? config_path.string() + ": " : "";
  try {
    const cli::ExperimentConfig c = cli::load_config(config_path);
    const auto paths = cli::output_paths(c, out_dir, config_path.stem().string());
    const cli::RunOutcome r = cli::execute(c, paths);
    std::lock_guard lock(io_mutex);
    for (const auto& v : r.violations) {
      std::cerr << where << "assertion " << v.invariant << " violated at t = " << v.time << " (value " << v.value
                << ", bound " << v.bound << ")\n";
    }
    if (r.violations.empty()) {
      for (const auto& f : r.failed) std::cerr << where << "assertion " << f << " violated\n";
    }
    std::cout << where << (r.failed.empty() ? "ok" : "assertions failed") << ", wrote " << paths.summary.string()
              << '\n';
    return r.exit_code;
  } catch (const Error& e) {
    report_error(where, e);
  } catch (const std::exception& e) {
    std::lock_guard lock(io_mutex);
    std::cerr << where << "error: " << e.what() << '\n';
  }
  return 1;
}

std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OBSENT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      std::cerr << "ignoring OBSENT_THREADS=" << env << '\n';
    }
  }
  return n;
}

int sweep(const std::vector<fs::path>& configs, const std::optional<fs::path>& out_dir) {
  std::vector<int> codes(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(thread_cap(), configs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < configs.size();) codes[i] = run_one(configs[i], out_dir, true);
    });
  }
  for (auto& t : pool) t.join();
  // Any error wins over assertion failures.
  int code = 0;
  for (int c : codes) {
    if (c == 1) return 1;
    code = std::max(code, c);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observational-entropy thermodynamics experiments"};
  app.require_subcommand(1);

  std::vector<fs::path> run_configs;
  std::optional<fs::path> out_dir;
  bool sweep_mode = false;
  auto* run = app.add_subcommand("run", "Run experiment config(s) and write CSV/JSON artifacts");
  run->add_option("config", run_configs, "Config file(s)")->required()->check(CLI::ExistingFile);
  run->add_flag("--sweep", sweep_mode, "Run several configs in parallel (OBSENT_THREADS caps workers)");
  run->add_option("--out-dir", out_dir, "Write <stem>_ledger.csv, <stem>_summary.json, <stem>_ft.csv here");

  fs::path validate_config;
  auto* val = app.add_subcommand("validate", "Check a config without running it");
  val->add_option("config", validate_config, "Config file")->required()->check(CLI::ExistingFile);

  fs::path temp_config;
  double energy = 0.0;
  auto* temp = app.add_subcommand("temperature", "Effective inverse temperature of a model energy");
  temp->add_option("config", temp_config, "Config file")->required()->check(CLI::ExistingFile);
  temp->add_option("energy", energy, "Target energy")->required();
  std::string which = "total";
  temp->add_option("--hamiltonian", which, "total, system, or bath<N> (1-based)");

  app.add_subcommand("print-defaults", "Print every config field with its default");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("print-defaults")) {
    std::cout << cli::defaults_json();
    return 0;
  }
  if (run->parsed()) {
    if (run_configs.size() > 1 && !sweep_mode) {
      std::cerr << "several configs given; pass --sweep to run them\n";
      return 1;
    }
    if (sweep_mode) return sweep(run_configs, out_dir);
    return run_one(run_configs.front(), out_dir, false);
  }
  try {
    if (val->parsed()) {
      cli::validate(cli::load_config(validate_config));
      std::cout << "ok\n";
      return 0;
    }
    if (temp->parsed()) {
      const cli::ExperimentConfig c = cli::load_config(temp_config);
      const BuiltModel m = build(c.model);
      std::optional<HermitianOperator> h;
      if (which == "total") {
        h = m.hamiltonian_for(m.epsilon(0.0));
      } else if (which == "system") {
        h = m.system_hamiltonian(0.0);
      } else if (which.rfind("bath", 0) == 0) {
        std::size_t nu = 0;
        try {
          nu = std::stoul(which.substr(4));
        } catch (const std::exception&) {
        }
        if (nu < 1 || nu > m.bath_count()) throw Error(ErrorCode::ConfigInvalid, "--hamiltonian: no bath " + which.substr(4));
        h = m.bath_hamiltonian(nu - 1);
      } else {
        throw Error(ErrorCode::ConfigInvalid, "--hamiltonian: expected total, system or bath<N>");
      }
      const EffectiveTemperature t = effective_beta(*h, energy);
      std::cout.precision(17);
      std::cout << "beta* = " << t.beta_star << '\n';
      std::cout << "T* = " << (t.beta_star == 0.0 ? INFINITY : 1.0 / t.beta_star) << '\n';
      if (t.saturated) std::cout << "saturated: energy within 1e-12 of a spectral edge\n";
      return 0;
    }
  } catch (const Error& e) {
    report_error("", e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
