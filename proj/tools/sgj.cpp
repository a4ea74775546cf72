// sgj: command-line front end for profiles, spectra, Z-sweeps, evolution runs
// and the built-in self-check.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sgjunction/acceptance.hpp"
#include "sgjunction/experiments.hpp"
#include "sgjunction/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAcceptance = 4;

struct FlagSet {
  std::map<std::string, std::string> values;
  std::string config_path;
  bool fault = false;

  void attach(CLI::App* sub) {
    static const char* kKeys[][2] = {
        {"speeds", "edge speeds c1,c2,c3"},
        {"type", "junction type I or II"},
        {"z", "vertex coupling Z"},
        {"z-grid", "coupling grid lo:hi:n"},
        {"family", "kink, antikink or free"},
        {"length", "edge length L"},
        {"spacing", "mesh spacing h"},
        {"dt", "time step (default h/4)"},
        {"tfinal", "final time (default 0.8 L / max c)"},
        {"eps", "perturbation amplitude"},
        {"seed-mode", "ground, second or random"},
        {"seed", "random seed"},
        {"out", "output directory"},
        {"jobs", "worker threads (0 = all cores)"},
    };
    for (const auto& kv : kKeys) {
      const std::string key = kv[0];
      sub->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { values[key] = v; }, kv[1]);
    }
    sub->add_flag_function(
        "--matrix-market", [this](std::int64_t) { values["matrix-market"] = "1"; },
        "also dump stiffness and mass in Matrix Market format");
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_flag("--fault-flip-vertex", fault, "test hook: assemble -Z at the vertex")
        ->group("");
  }
};

void print_selfcheck_row(const sgj::CheckResult& r) {
  std::cout << std::left << std::setw(4) << r.criterion << std::setw(48) << r.name
            << (r.pass ? "PASS  " : "FAIL  ") << "expected: " << r.expected
            << " | observed: " << r.observed << "\n"
            << std::flush;
}

int selfcheck(const sgj::RunConfig& cfg) {
  sgj::SuiteScale scale = sgj::selfcheck_scale();
  scale.assembly.flip_vertex_coupling = cfg.flip_vertex_coupling;
  scale.jobs = cfg.jobs;
  sgj::ensure_dir(cfg.out);
  scale.scratch = cfg.out / "selfcheck_scratch";
  std::cout << "self-check at h=" << scale.spacing << " L=" << scale.length << "\n";
  const auto results = sgj::run_acceptance(scale, print_selfcheck_row);
  sgj::CsvWriter csv(cfg.out / "selfcheck.csv",
                     sgj::provenance("suite", cfg, scale.length, std::nullopt),
                     {"criterion", "check", "expected", "observed", "verdict"});
  std::size_t failed = 0;
  auto quote = [](std::string s) {
    for (char& c : s)
      if (c == '"') c = '\'';
    return "\"" + s + "\"";
  };
  for (const auto& r : results) {
    csv.row({r.criterion, quote(r.name), quote(r.expected), quote(r.observed),
             r.pass ? "PASS" : "FAIL"});
    failed += r.pass ? 0 : 1;
  }
  std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed ? kExitAcceptance : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sine-Gordon on a delta-coupled Y-junction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sgj::kToolVersion);

  const std::pair<const char*, sgj::Command> commands[] = {
      {"profile", sgj::Command::Profile},
      {"spectrum", sgj::Command::Spectrum},
      {"sweep-z", sgj::Command::SweepZ},
      {"evolve", sgj::Command::Evolve},
      {"resolvent-check", sgj::Command::ResolventCheck},
      {"selfcheck", sgj::Command::SelfCheck}};
  const char* help[] = {"stationary profile CSVs and summary",
                        "Morse index, eigenvalues and certification at one Z",
                        "spectral certification over a Z-grid",
                        "perturbed evolution and growth-rate fit",
                        "resolvent determinant and convergence check",
                        "run the acceptance suite at reduced resolution"};
  FlagSet flags;
  std::map<CLI::App*, sgj::Command> which;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
    flags.attach(sub);
    which[sub] = commands[i].second;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    sgj::Command cmd = sgj::Command::Profile;
    for (const auto& [sub, c] : which)
      if (sub->parsed()) cmd = c;
    const sgj::Settings file =
        flags.config_path.empty() ? sgj::Settings{} : sgj::read_config_file(flags.config_path);
    sgj::RunConfig cfg = sgj::make_config(cmd, file, flags.values);
    cfg.flip_vertex_coupling = flags.fault;

    sgj::json summary;
    switch (cmd) {
      case sgj::Command::Profile: summary = sgj::run_profile(cfg); break;
      case sgj::Command::Spectrum: summary = sgj::run_spectrum(cfg); break;
      case sgj::Command::SweepZ: summary = sgj::run_sweep_z(cfg); break;
      case sgj::Command::Evolve: summary = sgj::run_evolve(cfg); break;
      case sgj::Command::ResolventCheck: summary = sgj::run_resolvent_check(cfg); break;
      case sgj::Command::SelfCheck: return selfcheck(cfg);
    }
    if (cmd == sgj::Command::SweepZ) {
      std::cout << summary["passed"] << "/" << summary["total"] << " points PASS\n";
      for (const auto& p : summary["points"])
        std::cout << "  Z=" << p["Z"] << "  " << p["verdict"].get<std::string>() << "  "
                  << p["diagnosis"].get<std::string>() << "\n";
    } else {
      std::cout << summary.dump(2) << "\n";
    }
    std::cout << "wrote " << cfg.out.string() << "\n";
    return 0;
  } catch (const sgj::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sgj::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
