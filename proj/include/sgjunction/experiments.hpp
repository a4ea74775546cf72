#pragma once

// Experiment drivers behind the command-line tool. Each runner validates its
// configuration, writes CSV/JSON artifacts into cfg.out and returns the JSON
// summary it wrote.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sgjunction/dynamics.hpp"
#include "sgjunction/io.hpp"
#include "sgjunction/operators.hpp"
#include "sgjunction/profiles.hpp"
#include "sgjunction/spectra.hpp"

namespace sgj {

using json = nlohmann::json;

inline json json_number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
template <class T>
json json_opt(const std::optional<T>& x) {
  return x ? json_number(static_cast<double>(*x)) : json(nullptr);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

inline void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + p.string() + ": " + ec.message());
}

inline Profile make_profile(Family f, double Z, const YJunction& J) {
  switch (f) {
    case Family::Kink: return solve_kink_shift(Z, J);
    case Family::AntiKink:
      if (!(J.speeds == std::array<double, kEdges>{1.0, 1.0, 1.0}))
        throw ConfigError("the anti-kink family is defined for unit speeds only");
      return solve_antikink_shift(Z, J.orientation);
    case Family::Free: break;
  }
  throw ConfigError("the free family has no stationary profile");
}

inline void check_family_range(Family f, double Z, const YJunction& J) {
  if (f == Family::Kink) check_kink_range(Z, J);
  if (f == Family::AntiKink) check_antikink_range(Z);
}

// Order-preserving map over a bounded pool of worker threads.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, F&& task) {
  std::vector<T> out(n);
  unsigned workers = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) out[i] = task(i);
  };
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Spectral analysis of one coupling value.

struct PointAnalysis {
  double Z = 0.0;
  std::optional<double> a1;
  std::string kind;
  std::optional<SpectralReport> report;
  CertificationResult cert;
  std::optional<double> oracle_margin;  // shooting flux residual at mu = 0
  std::string error;                    // non-empty if the point failed
};

inline AssembledOperator assemble_for(Family f, double Z, const Mesh& mesh,
                                      AssemblyOptions opt,
                                      std::optional<Profile>* profile_out = nullptr) {
  if (f == Family::Free) return assemble_free(mesh, Z, opt);
  Profile p = make_profile(f, Z, mesh.junction);
  if (profile_out) *profile_out = p;
  return assemble_linearized(mesh, p, opt);
}

inline PointAnalysis analyze_point(Family f, double Z, const YJunction& J, double L,
                                   double h, AssemblyOptions opt = {},
                                   CertificationFloors floors = {}) {
  PointAnalysis pa;
  pa.Z = Z;
  try {
    const Mesh mesh = build_mesh(J, L, h);
    std::optional<Profile> profile;
    const auto op = assemble_for(f, Z, mesh, opt, &profile);
    std::optional<ShootingProblem> oracle;
    if (profile) {
      oracle = shooting_problem(*profile, L, h / 4.0);
      if (const auto* k = std::get_if<KinkProfile>(&*profile)) {
        pa.a1 = k->shifts[0];
        pa.kind = to_string(k->kind);
      } else {
        pa.a1 = std::get<AntiKinkProfile>(*profile).shift;
        pa.kind = pa.a1 > 0.0 ? "positive-shift" : "non-positive-shift";
      }
    } else {
      pa.kind = "free";
      if (Z < 0.0) oracle = shooting_problem_constant(Z, J, 0.0, L, h / 4.0);
    }
    pa.report = spectral_report(op, oracle);
    if (oracle) pa.oracle_margin = ShootingSolver(*oracle).flux_residual(0.0);
    pa.cert = certify_criterion(*pa.report, floors);
  } catch (const std::exception& e) {
    pa.error = e.what();
    pa.cert.pass = false;
    pa.cert.diagnosis = std::string("error: ") + e.what();
  }
  return pa;
}

inline json to_json(const PointAnalysis& pa) {
  json j;
  j["Z"] = pa.Z;
  j["a1"] = json_opt(pa.a1);
  j["kind"] = pa.kind;
  if (pa.report) {
    const auto& r = *pa.report;
    j["morse_index"] = r.morse_index;
    json neg = json::array();
    for (const auto& e : r.negative_eigenvalues) neg.push_back(json_number(e.mu));
    j["negative_eigenvalues"] = neg;
    j["mu1"] = json_number(r.lowest_eigenvalue);
    j["mu2"] = json_number(r.second_eigenvalue);
    j["kernel_gap"] = json_number(r.kernel_gap);
    j["essential_edge_estimate"] = json_number(r.essential_edge_estimate);
    j["oracle_mu0"] = json_opt(r.oracle_mu0);
    j["mesh"] = {{"L", r.length}, {"h", r.spacing}};
  }
  j["oracle_flux_residual_at_zero"] = json_opt(pa.oracle_margin);
  j["verdict"] = pa.cert.pass ? "PASS" : "FAIL";
  j["diagnosis"] = pa.cert.diagnosis;
  j["predicted_growth_rate"] = pa.cert.pass ? json_number(pa.cert.predicted_growth_rate) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

inline json run_profile(const RunConfig& cfg) {
  if (!cfg.z) throw ConfigError("profile needs --z");
  const YJunction J = cfg.junction();
  const Profile p = make_profile(cfg.family, *cfg.z, J);
  const Mesh mesh = build_mesh(J, cfg.length, cfg.spacing);
  ensure_dir(cfg.out);
  const std::string prov = provenance(fmt17(*cfg.z), cfg, cfg.length, std::nullopt);
  for (std::size_t j = 0; j < kEdges; ++j) {
    CsvWriter csv(cfg.out / ("profile_edge" + std::to_string(j + 1) + ".csv"), prov,
                  {"x", "phi", "dphi", "d2phi"});
    for (std::size_t i = 0; i <= mesh.nodes[j]; ++i) {
      const double x = J.to_physical(j, mesh.s(j, i));
      const auto v = evaluate(p, j, x);
      csv.row({x, v.phi, v.dphi, v.d2phi});
    }
  }
  const auto vr = profile_vertex_residuals(p);
  json s;
  s["family"] = to_string(cfg.family);
  s["Z"] = *cfg.z;
  s["speeds"] = cfg.speeds;
  s["type"] = cfg.orientation == Orientation::TypeI ? "I" : "II";
  if (const auto* k = std::get_if<KinkProfile>(&p)) {
    s["a1"] = k->shifts[0];
    s["shifts"] = k->shifts;
    s["kind"] = to_string(k->kind);
  } else {
    const double a = std::get<AntiKinkProfile>(p).shift;
    s["a1"] = a;
    s["shifts"] = {a, a, a};
  }
  s["vertex_value"] = eval_outward(p, 0, 0.0).phi;
  s["continuity_residual"] = vr.continuity;
  s["flux_residual"] = vr.flux;
  s["version"] = kToolVersion;
  s["provenance"] = prov;
  write_json(cfg.out / "profile_summary.json", s);
  return s;
}

inline json run_spectrum(const RunConfig& cfg) {
  if (!cfg.z) throw ConfigError("spectrum needs --z");
  const YJunction J = cfg.junction();
  check_family_range(cfg.family, *cfg.z, J);
  AssemblyOptions opt{cfg.flip_vertex_coupling};
  const Mesh mesh = build_mesh(J, cfg.length, cfg.spacing);
  const auto op = assemble_for(cfg.family, *cfg.z, mesh, opt);
  const PointAnalysis pa = analyze_point(cfg.family, *cfg.z, J, cfg.length, cfg.spacing, opt);
  if (!pa.error.empty()) throw NumericalError(pa.error);
  ensure_dir(cfg.out);
  const std::string prov = provenance(fmt17(*cfg.z), cfg, cfg.length, std::nullopt);
  const auto pairs = lowest_eigenpairs(op, std::max<std::size_t>(2, pa.report->morse_index + 1));
  {
    CsvWriter csv(cfg.out / "eigenvalues.csv", prov, {"index", "mu"});
    for (std::size_t k = 0; k < pairs.size(); ++k) csv.row({k + 1, pairs[k].mu});
  }
  {
    CsvWriter csv(cfg.out / "ground_mode.csv", prov, {"edge", "x", "value"});
    const GraphField g = eigen_field(mesh, pairs[0]);
    for (std::size_t j = 0; j < kEdges; ++j)
      for (std::size_t i = 0; i <= mesh.nodes[j]; ++i)
        csv.row({j + 1, J.to_physical(j, mesh.s(j, i)), g.at(j, i)});
  }
  if (cfg.matrix_market) {
    std::ofstream k(cfg.out / "stiffness.mtx"), m(cfg.out / "mass.mtx");
    write_matrix_market(k, op.stiffness, prov);
    write_matrix_market(m, op.mass, prov);
  }
  json s = to_json(pa);
  s["family"] = to_string(cfg.family);
  s["version"] = kToolVersion;
  s["provenance"] = prov;
  write_json(cfg.out / "spectrum.json", s);
  return s;
}

struct SweepOutcome {
  std::vector<PointAnalysis> points;
  std::size_t passed = 0;
};

inline SweepOutcome sweep_z(Family f, const std::vector<double>& zs, const YJunction& J,
                            double L, double h, unsigned jobs, AssemblyOptions opt = {}) {
  SweepOutcome out;
  out.points = parallel_map<PointAnalysis>(zs.size(), jobs, [&](std::size_t i) {
    return analyze_point(f, zs[i], J, L, h, opt);
  });
  for (const auto& p : out.points) out.passed += p.cert.pass ? 1 : 0;
  return out;
}

inline json run_sweep_z(const RunConfig& cfg) {
  if (!cfg.z_grid) throw ConfigError("sweep-z needs --z-grid lo:hi:n");
  if (cfg.z_grid->n < 10) throw ConfigError("sweep-z needs at least 10 grid points");
  const YJunction J = cfg.junction();
  const auto zs = cfg.z_grid->points();
  check_family_range(cfg.family, zs.front(), J);
  check_family_range(cfg.family, zs.back(), J);
  const auto res = sweep_z(cfg.family, zs, J, cfg.length, cfg.spacing, cfg.jobs,
                           AssemblyOptions{cfg.flip_vertex_coupling});
  ensure_dir(cfg.out);
  const std::string prov = provenance(cfg.z_grid->text(), cfg, cfg.length, std::nullopt);
  CsvWriter csv(cfg.out / "sweep.csv", prov,
                {"Z", "a1", "kind", "mu1", "mu2", "morse_index", "kernel_gap",
                 "predicted_growth_rate", "oracle_mu1"});
  json points = json::array();
  for (const auto& p : res.points) {
    const double nan = std::nan("");
    const auto* r = p.report ? &*p.report : nullptr;
    csv.row({p.Z, p.a1 ? *p.a1 : nan, p.kind.empty() ? std::string("error") : p.kind,
             r ? r->lowest_eigenvalue : nan, r ? r->second_eigenvalue : nan,
             r ? std::to_string(r->morse_index) : std::string("nan"),
             r ? r->kernel_gap : nan, p.cert.pass ? p.cert.predicted_growth_rate : nan,
             r && r->oracle_mu0 ? *r->oracle_mu0 : nan});
    points.push_back(to_json(p));
  }
  json s;
  s["family"] = to_string(cfg.family);
  s["speeds"] = cfg.speeds;
  s["z_grid"] = cfg.z_grid->text();
  s["points"] = points;
  s["passed"] = res.passed;
  s["total"] = res.points.size();
  s["version"] = kToolVersion;
  s["provenance"] = prov;
  write_json(cfg.out / "sweep_summary.json", s);
  return s;
}

// ---------------------------------------------------------------------------

struct GrowthExperiment {
  EvolutionRecord record;
  std::optional<GrowthFit> fit;
  double predicted_s = 0.0;
  double mu1 = 0.0, mu2 = 0.0;
  double t_final = 0.0;
  bool t_final_capped = false;
};

// Cap on the run length so waves reflected at the far ends never reach the
// vertex during the run.
inline double reflection_cap(const Mesh& mesh) {
  return 0.8 * mesh.max_length() / mesh.junction.max_speed();
}

inline GrowthExperiment growth_experiment(const Profile& profile, const Mesh& mesh,
                                          EvolveConfig ec,
                                          std::optional<std::pair<double, double>> window = {},
                                          AssemblyOptions opt = {}) {
  GrowthExperiment g;
  const double cap = reflection_cap(mesh);
  if (ec.t_final > cap * (1.0 + 1e-12)) {
    ec.t_final = cap;
    g.t_final_capped = true;
  }
  g.t_final = ec.t_final;
  auto run = seed_run(profile, mesh, ec, opt);
  const auto spectral = lowest_eigenpairs(assemble_linearized(mesh, profile, opt), 2);
  g.mu1 = spectral[0].mu;
  g.mu2 = spectral[1].mu;
  g.predicted_s = g.mu1 < 0.0 ? std::sqrt(-g.mu1) : 0.0;
  g.record = evolve(run.system, run.initial, ec, run.reference);
  try {
    g.fit = window ? growth_rate(g.record, window->first, window->second)
                   : fit_linear_regime(g.record, ec.perturbation_eps);
  } catch (const NumericalError&) {
    g.fit.reset();
  }
  return g;
}

inline json run_evolve(const RunConfig& cfg) {
  if (!cfg.z) throw ConfigError("evolve needs --z");
  if (cfg.family == Family::Free) throw ConfigError("evolve needs the kink or antikink family");
  const YJunction J = cfg.junction();
  const Profile p = make_profile(cfg.family, *cfg.z, J);
  const Mesh mesh = build_mesh(J, cfg.length, cfg.spacing);
  EvolveConfig ec;
  ec.dt = cfg.time_step();
  ec.t_final = cfg.t_final ? *cfg.t_final : reflection_cap(mesh);
  ec.record_every = std::max(1, static_cast<int>(std::llround(0.05 / ec.dt)));
  ec.formulation = is_antikink(p) ? Formulation::PerturbationAboutAntiKink : Formulation::Full;
  ec.perturbation_eps = cfg.eps;
  ec.seed_mode = cfg.seed_mode;
  ec.seed = cfg.seed;
  const auto g = growth_experiment(p, mesh, ec, std::nullopt,
                                   AssemblyOptions{cfg.flip_vertex_coupling});
  ensure_dir(cfg.out);
  const std::string prov = provenance(fmt17(*cfg.z), cfg, cfg.length, ec.dt);
  {
    CsvWriter csv(cfg.out / "evolution.csv", prov,
                  {"t", "deviation_norm", "energy", "vertex_value"});
    for (std::size_t i = 0; i < g.record.times.size(); ++i)
      csv.row({g.record.times[i], g.record.deviation_norm[i], g.record.energy[i],
               g.record.vertex_value[i]});
  }
  json s;
  if (g.fit) {
    s["s"] = g.fit->s;
    s["r_squared"] = g.fit->r_squared;
    s["window"] = {g.fit->t_lo, g.fit->t_hi};
    s["valid"] = g.fit->valid;
  } else {
    s["s"] = nullptr;
    s["r_squared"] = nullptr;
    s["window"] = nullptr;
    s["valid"] = false;
  }
  s["predicted_s"] = json_number(g.predicted_s);
  s["rel_diff"] = g.fit && g.predicted_s > 0.0
                      ? json_number(std::abs(g.fit->s - g.predicted_s) / g.predicted_s)
                      : json(nullptr);
  s["mu1"] = g.mu1;
  s["mu2"] = g.mu2;
  s["t_final"] = g.t_final;
  s["t_final_capped"] = g.t_final_capped;
  s["blew_up"] = g.record.blew_up;
  s["seed_mode"] = to_string(cfg.seed_mode);
  s["eps"] = cfg.eps;
  s["version"] = kToolVersion;
  s["provenance"] = prov;
  write_json(cfg.out / "fit.json", s);
  return s;
}

// ---------------------------------------------------------------------------
// Resolvent checks.

// Smooth test datum, continuous at the vertex.
inline double resolvent_test_datum(std::size_t j, double s) {
  return std::exp(-s * s) * (1.0 + 0.5 * static_cast<double>(j + 1) * s);
}

// ||(K + lambda^2 M) Phi - M u|| / ||M u|| in the lumped dual norm, with Phi
// the closed-form resolvent sampled at the nodes.
inline double resolvent_residual(const YJunction& J, double Z, double lambda, double L,
                                 double h, ResolventForm form = ResolventForm::Matching,
                                 AssemblyOptions opt = {}) {
  const Mesh m = build_mesh(J, L, h);
  const EdgeFunction u = resolvent_test_datum;
  const auto r = resolvent_free_apply(u, m, lambda, Z, form);
  const auto op = assemble_free(m, Z, opt);
  const auto phi = to_dofs(r.field);
  const auto K = op.stiffness.apply(phi), M = op.mass.apply(phi);
  const auto Mu = op.mass.apply(to_dofs(sample_outward(m, u)));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double x = K[i] + lambda * lambda * M[i] - Mu[i];
    num += x * x / op.lumped_mass[i];
    den += Mu[i] * Mu[i] / op.lumped_mass[i];
  }
  return std::sqrt(num / den);
}

struct DetCheck {
  double max_error = 0.0;
  std::size_t samples = 0;
};

// Random (Z, lambda) pairs, lambda in (0.1, 5), Z in (-3, 3).
inline DetCheck resolvent_det_check(const YJunction& J, std::size_t samples,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> zd(-3.0, 3.0), ld(0.1, 5.0);
  DetCheck d;
  d.samples = samples;
  for (std::size_t k = 0; k < samples; ++k) {
    const double Z = zd(rng), lambda = ld(rng);
    const double got = det3(resolvent_matrix(lambda, Z, J));
    const double want = resolvent_det_formula(lambda, Z, J);
    d.max_error = std::max(d.max_error, std::abs(got - want));
  }
  return d;
}

struct ConvergenceStudy {
  std::vector<double> spacings, residuals, orders;
};

inline ConvergenceStudy resolvent_convergence(const YJunction& J, double Z, double lambda,
                                              const std::vector<double>& spacings,
                                              ResolventForm form = ResolventForm::Matching,
                                              AssemblyOptions opt = {}) {
  // Long enough that the slowest decaying branch exp(-lambda s / c) is
  // negligible at the truncation point.
  const double L = 40.0 * J.max_speed() / std::min(lambda, 1.0);
  ConvergenceStudy cs;
  cs.spacings = spacings;
  for (double h : spacings) cs.residuals.push_back(resolvent_residual(J, Z, lambda, L, h, form, opt));
  for (std::size_t k = 1; k < spacings.size(); ++k)
    cs.orders.push_back(std::log(cs.residuals[k - 1] / cs.residuals[k]) /
                        std::log(spacings[k - 1] / spacings[k]));
  return cs;
}

inline json run_resolvent_check(const RunConfig& cfg) {
  const YJunction J = cfg.junction();
  const double Z = cfg.z ? *cfg.z : -1.0;
  const double lambda = 1.0;
  const std::vector<double> hs{4.0 * cfg.spacing, 2.0 * cfg.spacing, cfg.spacing};
  AssemblyOptions opt{cfg.flip_vertex_coupling};
  const auto det = resolvent_det_check(J, 100, cfg.seed);
  const auto matching = resolvent_convergence(J, Z, lambda, hs, ResolventForm::Matching, opt);
  const auto projected = resolvent_convergence(J, Z, lambda, hs, ResolventForm::WithProjectionTerm, opt);
  ensure_dir(cfg.out);
  const std::string prov = provenance(fmt17(Z), cfg, 40.0 * J.max_speed(), std::nullopt);
  CsvWriter csv(cfg.out / "resolvent_check.csv", prov,
                {"h", "residual_matching", "residual_projection"});
  for (std::size_t k = 0; k < hs.size(); ++k)
    csv.row({hs[k], matching.residuals[k], projected.residuals[k]});
  json s;
  s["Z"] = Z;
  s["lambda"] = lambda;
  s["det_samples"] = det.samples;
  s["det_max_error"] = det.max_error;
  s["spacings"] = hs;
  s["residuals"] = matching.residuals;
  s["orders"] = matching.orders;
  s["projection_form_residuals"] = projected.residuals;
  s["projection_form_orders"] = projected.orders;
  s["version"] = kToolVersion;
  s["provenance"] = prov;
  write_json(cfg.out / "resolvent_check.json", s);
  return s;
}

}  // namespace sgj
