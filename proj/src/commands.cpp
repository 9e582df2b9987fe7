#include "rmtfid/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rmtfid/analytic.hpp"
#include "rmtfid/ensembles.hpp"
#include "rmtfid/svg.hpp"

namespace rmtfid {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kSchemaLine = "# schema_version=1";
constexpr double kValidatedTauCaseII = 2.5;
constexpr double kFloorFidelity = 0.01;
constexpr double kFloorCrossFF = 0.02;

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string label_of(const PerturbationStrengths& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.4g, %.4g)", s.lambda_par(), s.lambda_perp());
  return buf;
}

int hardware_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots; the first exception (lowest index) is rethrown.
template <class Body>
void parallel_for(std::size_t count, int threads, Body body) {
  const int workers = std::max(1, std::min<int>(threads > 0 ? threads : hardware_threads(),
                                                static_cast<int>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_file(const fs::path& path, const std::string& content, CommandResult& out) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
  out.files.push_back(path.string());
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

int resolve_threads(std::optional<int> cli_threads, const char* env_value, int config_threads) {
  if (cli_threads) {
    if (*cli_threads < 0) throw ConfigError("--threads must be non-negative");
    return *cli_threads;
  }
  int threads = config_threads;
  if (env_value && *env_value) {
    char* end = nullptr;
    const long cap = std::strtol(env_value, &end, 10);
    if (*end != '\0' || cap < 1) throw ConfigError("RMTFID_THREADS must be a positive integer");
    threads = threads == 0 ? static_cast<int>(cap) : std::min(threads, static_cast<int>(cap));
  }
  return threads;
}

// ---------------------------------------------------------------- analytic

std::vector<AnalyticRow> compute_analytic_rows(SymmetryCase c,
                                               const std::vector<PerturbationStrengths>& strengths,
                                               const std::vector<double>& taus,
                                               const QuadratureConfig& quad, int threads) {
  std::vector<AnalyticRow> rows;
  for (const auto& s : strengths) {
    for (double tau : taus) rows.push_back({c, s, tau, 0.0, 0.0, true, true, ""});
  }
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    AnalyticRow& r = rows[i];
    const SquaredStrengths sq = SquaredStrengths::from(r.strengths);
    try {
      r.fidelity = fidelity_analytic(c, sq, r.tau, quad);
    } catch (const NonConvergenceError& e) {
      r.fidelity = e.best_estimate();
      r.fidelity_converged = false;
    }
    try {
      r.cross_ff = cross_ff_analytic(c, sq, r.tau, quad);
    } catch (const NonConvergenceError& e) {
      r.cross_ff = (4.0 / beta_of(c)) * r.tau * r.tau * e.best_estimate();
      r.cross_ff_converged = false;
    }
    std::vector<std::string> flags;
    if (!r.fidelity_converged) flags.emplace_back("f_nonconverged");
    if (!r.cross_ff_converged) flags.emplace_back("k_nonconverged");
    if (c == SymmetryCase::II && r.tau > kValidatedTauCaseII) flags.emplace_back("tau_beyond_2.5");
    if (flags.empty()) {
      r.status = "ok";
    } else {
      for (std::size_t k = 0; k < flags.size(); ++k) r.status += (k ? "+" : "") + flags[k];
    }
  });
  return rows;
}

std::string analytic_csv(const std::vector<AnalyticRow>& rows) {
  std::ostringstream os;
  os << kSchemaLine << "\n";
  os << "case,lambda_par,lambda_perp,tau,f,k,status\n";
  for (const auto& r : rows) {
    os << to_string(r.symmetry_case) << "," << g17(r.strengths.lambda_par()) << ","
       << g17(r.strengths.lambda_perp()) << "," << g17(r.tau) << "," << g17(r.fidelity) << ","
       << g17(r.cross_ff) << "," << r.status << "\n";
  }
  return os.str();
}

CommandResult run_analytic(const RunConfig& cfg) {
  CommandResult out;
  const auto dir = prepare_out_dir(cfg);
  const auto strengths = cfg.resolved_strengths();
  const auto rows =
      compute_analytic_rows(cfg.symmetry_case, strengths, cfg.tau_grid(), cfg.quad, cfg.threads);
  write_file(dir / "analytic.csv", analytic_csv(rows), out);

  if (cfg.plot) {
    const bool fid = cfg.plot_observable == "fidelity";
    std::vector<PlotSeries> series;
    const std::size_t per = cfg.tau_grid().size();
    for (std::size_t k = 0; k < strengths.size(); ++k) {
      PlotSeries s{label_of(strengths[k]), {}, {}};
      for (std::size_t i = 0; i < per; ++i) {
        const auto& r = rows[k * per + i];
        const bool ok = fid ? r.fidelity_converged : r.cross_ff_converged;
        if (!ok) continue;
        s.x.push_back(r.tau);
        s.y.push_back(fid ? r.fidelity : r.cross_ff);
      }
      series.push_back(std::move(s));
    }
    const std::string title = "case " + to_string(cfg.symmetry_case) + ", analytic";
    write_file(dir / (fid ? "analytic_fidelity.svg" : "analytic_cross_ff.svg"),
               render_line_chart(series, "τ", fid ? "Re f(τ)" : "K̃(τ)", title), out);
  }

  std::size_t failed = 0;
  for (const auto& r : rows) failed += (!r.fidelity_converged || !r.cross_ff_converged) ? 1 : 0;
  if (failed > 0) {
    out.exit_code = kExitNonConvergence;
    out.message = std::to_string(failed) + " analytic row(s) did not converge";
  } else {
    out.message = std::to_string(rows.size()) + " analytic rows";
  }
  return out;
}

// ---------------------------------------------------------------- simulate

std::vector<SimulateBlock> compute_simulate_blocks(const RunConfig& cfg, int threads) {
  std::vector<SimulateBlock> blocks;
  for (const auto& s : cfg.resolved_strengths()) {
    McConfig mc;
    mc.symmetry_case = cfg.symmetry_case;
    mc.n = cfg.n;
    mc.realizations = cfg.realizations;
    mc.strengths = s;
    mc.tau_grid = cfg.tau_grid();
    mc.master_seed = cfg.master_seed;
    mc.connected_subtraction = cfg.connected;
    mc.window = cfg.window;
    mc.probes = cfg.probes;
    mc.threads = threads;
    blocks.push_back({s, mc_curves(mc)});
  }
  return blocks;
}

std::string simulate_csv(const RunConfig& cfg, const std::vector<SimulateBlock>& blocks) {
  std::ostringstream os;
  os << kSchemaLine << "\n";
  os << "case,lambda_par,lambda_perp,tau,f_re,f_im,f_stderr,k_re,k_im,k_stderr,k_connected_re,"
        "k_connected_stderr,n,realizations,seed,D_calibrated,f_abs,f_im_stderr\n";
  for (const auto& b : blocks) {
    const McResult& r = b.result;
    for (std::size_t i = 0; i < r.fidelity.size(); ++i) {
      const CurvePoint& f = r.fidelity[i];
      const CurvePoint& k = r.cross_ff_full[i];
      const CurvePoint& kc = r.cross_ff_connected[i];
      os << to_string(cfg.symmetry_case) << "," << g17(b.strengths.lambda_par()) << ","
         << g17(b.strengths.lambda_perp()) << "," << g17(f.tau) << "," << g17(f.value.real())
         << "," << g17(f.value.imag()) << "," << g17(f.std_error) << "," << g17(k.value.real())
         << "," << g17(k.value.imag()) << "," << g17(k.std_error) << ","
         << g17(kc.value.real()) << "," << g17(kc.std_error) << "," << cfg.n << ","
         << cfg.realizations << "," << cfg.master_seed << "," << g17(r.mean_spacing) << ","
         << g17(std::abs(f.value)) << "," << g17(f.std_error_im) << "\n";
    }
  }
  return os.str();
}

namespace {

std::string simulate_metadata(const RunConfig& cfg, const std::vector<SimulateBlock>& blocks) {
  ordered_json j;
  j["schema_version"] = 1;
  j["case"] = to_string(cfg.symmetry_case);
  j["n"] = cfg.n;
  j["realizations"] = cfg.realizations;
  j["seed"] = cfg.master_seed;
  j["probes"] = cfg.probes;
  j["D_calibrated"] = blocks.empty() ? 1.0 : blocks.front().result.mean_spacing;
  j["D_levels"] = cfg.symmetry_case == SymmetryCase::II ? "distinct Kramers pairs, central quarter"
                                                        : "central quarter";
  j["window"] = blocks.empty() ? cfg.window.describe() : blocks.front().result.window;
  j["cross_ff_scale"] = cfg.symmetry_case == SymmetryCase::II ? 0.5 : 1.0;
  j["cross_ff_normalization"] = cfg.symmetry_case == SymmetryCase::II
                                    ? "per distinct level (half the complex-dimension value)"
                                    : "per level";
  j["k_columns"] = "k_* full correlator, k_connected_* with <tr><tr> subtracted";
  j["connected_subtraction_default"] = cfg.connected;
  return j.dump(2) + "\n";
}

}  // namespace

CommandResult run_simulate(const RunConfig& cfg) {
  CommandResult out;
  const auto dir = prepare_out_dir(cfg);
  const auto blocks = compute_simulate_blocks(cfg, cfg.threads);
  write_file(dir / "simulate.csv", simulate_csv(cfg, blocks), out);
  write_file(dir / "simulate_meta.json", simulate_metadata(cfg, blocks), out);
  if (cfg.plot) {
    std::vector<PlotSeries> series;
    for (const auto& b : blocks) {
      PlotSeries s{label_of(b.strengths), {}, {}};
      for (const auto& p : b.result.fidelity) {
        s.x.push_back(p.tau);
        s.y.push_back(p.value.real());
      }
      series.push_back(std::move(s));
    }
    write_file(dir / "simulate_fidelity.svg",
               render_line_chart(series, "τ", "Re f(τ)",
                                 "case " + to_string(cfg.symmetry_case) + ", Monte-Carlo"),
               out);
  }
  out.message = std::to_string(blocks.size()) + " Monte-Carlo curve(s)";
  return out;
}

// ---------------------------------------------------------------- compare

CommandResult run_compare(const RunConfig& cfg) {
  CommandResult out;
  const auto dir = prepare_out_dir(cfg);
  const SymmetryCase reference = cfg.reference_case.value_or(cfg.symmetry_case);

  ordered_json summary;
  summary["schema_version"] = 1;
  summary["case"] = to_string(cfg.symmetry_case);
  summary["reference_case"] = to_string(reference);
  summary["note"] = "GUE-perturbation reference curve is not part of this comparison";

  if (reference != cfg.symmetry_case) {
    summary["status"] = "case mismatch: simulated case " + to_string(cfg.symmetry_case) +
                        " cannot be compared with analytic case " + to_string(reference);
    summary["verdict"] = "fail";
    summary["curves"] = ordered_json::array();
    write_file(dir / "compare_summary.json", summary.dump(2) + "\n", out);
    out.exit_code = kExitFailure;
    out.message = summary["status"].get<std::string>();
    return out;
  }

  const auto strengths = cfg.resolved_strengths();
  const auto taus = cfg.tau_grid();
  const auto rows = compute_analytic_rows(reference, strengths, taus, cfg.quad, cfg.threads);
  const auto blocks = compute_simulate_blocks(cfg, cfg.threads);

  std::ostringstream csv;
  csv << kSchemaLine << "\n";
  csv << "case,lambda_par,lambda_perp,tau,observable,analytic,mc,mc_stderr,z,tolerance,within,"
         "status\n";
  ordered_json curves = ordered_json::array();
  bool all_pass = true;
  bool nonconverged = false;

  for (std::size_t k = 0; k < strengths.size(); ++k) {
    for (const std::string obs : {"f", "k"}) {
      const bool is_f = obs == "f";
      std::size_t within_count = 0;
      double max_abs_z = 0.0;
      for (std::size_t i = 0; i < taus.size(); ++i) {
        const AnalyticRow& a = rows[k * taus.size() + i];
        const CurvePoint& m = is_f ? blocks[k].result.fidelity[i] : blocks[k].result.cross_ff[i];
        const double ref = is_f ? a.fidelity : a.cross_ff;
        const bool conv = is_f ? a.fidelity_converged : a.cross_ff_converged;
        const double diff = m.value.real() - ref;
        double z = 0.0;
        if (m.std_error > 0.0) {
          z = diff / m.std_error;
        } else if (std::abs(diff) > 1e-6) {
          z = diff > 0 ? INFINITY : -INFINITY;
        }
        const double tol = std::max(3.0 * m.std_error, is_f ? kFloorFidelity : kFloorCrossFF);
        const bool within = conv && std::abs(diff) <= tol;
        within_count += within ? 1 : 0;
        nonconverged = nonconverged || !conv;
        if (std::isfinite(z)) max_abs_z = std::max(max_abs_z, std::abs(z));
        csv << to_string(cfg.symmetry_case) << "," << g17(strengths[k].lambda_par()) << ","
            << g17(strengths[k].lambda_perp()) << "," << g17(a.tau) << "," << obs << ","
            << g17(ref) << "," << g17(m.value.real()) << "," << g17(m.std_error) << "," << g17(z)
            << "," << g17(tol) << "," << (within ? 1 : 0) << "," << (conv ? "ok" : "analytic_nonconverged")
            << "\n";
      }
      const double fraction = static_cast<double>(within_count) / static_cast<double>(taus.size());
      const bool pass = fraction >= 0.95;
      all_pass = all_pass && pass;
      ordered_json c;
      c["lambda_par"] = strengths[k].lambda_par();
      c["lambda_perp"] = strengths[k].lambda_perp();
      c["observable"] = is_f ? "fidelity" : (cfg.connected ? "cross_ff_connected" : "cross_ff_full");
      c["points"] = taus.size();
      c["within"] = within_count;
      c["fraction_within"] = fraction;
      c["max_abs_z"] = max_abs_z;
      c["verdict"] = pass ? "pass" : "fail";
      curves.push_back(c);
    }
  }
  summary["D_calibrated"] = blocks.empty() ? 1.0 : blocks.front().result.mean_spacing;
  summary["window"] = blocks.empty() ? cfg.window.describe() : blocks.front().result.window;
  summary["criterion"] = "pass if >= 95% of points satisfy |mc - analytic| <= max(3 stderr, floor); "
                         "floor 0.01 for f, 0.02 for k";
  summary["curves"] = curves;
  summary["status"] = nonconverged ? "some analytic points did not converge" : "ok";
  summary["verdict"] = all_pass ? "pass" : "fail";
  write_file(dir / "compare.csv", csv.str(), out);
  write_file(dir / "compare_summary.json", summary.dump(2) + "\n", out);

  if (!all_pass) {
    out.exit_code = kExitFailure;
    out.message = "comparison failed";
  } else if (nonconverged) {
    out.exit_code = kExitNonConvergence;
    out.message = "comparison passed but some analytic points did not converge";
  } else {
    out.message = "comparison passed";
  }
  return out;
}

// ---------------------------------------------------------------- selftest

namespace {

ordered_json suite(const std::string& name, bool pass, ordered_json checks) {
  ordered_json s;
  s["name"] = name;
  s["pass"] = pass;
  s["checks"] = std::move(checks);
  return s;
}

ordered_json variance_suite(const RunConfig& cfg) {
  struct Item {
    EnsembleClass cls;
    SymmetryCase c;
    EnsembleRole role;
    const char* label;
  };
  const Item items[] = {
      {EnsembleClass::GOE, SymmetryCase::I, EnsembleRole::Background, "GOE background"},
      {EnsembleClass::GOE, SymmetryCase::I, EnsembleRole::Parallel, "GOE parallel"},
      {EnsembleClass::BType, SymmetryCase::I, EnsembleRole::Perpendicular, "B-type"},
      {EnsembleClass::GUE, SymmetryCase::I, EnsembleRole::Perturbed, "GUE (case I sum)"},
      {EnsembleClass::GSE, SymmetryCase::II, EnsembleRole::Background, "GSE background"},
      {EnsembleClass::GSE, SymmetryCase::II, EnsembleRole::Parallel, "GSE parallel"},
      {EnsembleClass::CType, SymmetryCase::II, EnsembleRole::Perpendicular, "C-type"},
      {EnsembleClass::GUE, SymmetryCase::II, EnsembleRole::Perturbed, "GUE (case II sum)"},
  };
  ordered_json checks = ordered_json::array();
  bool pass = true;
  std::vector<std::pair<const Item*, int>> jobs;
  for (const auto& it : items) {
    for (int n : {4, 8}) jobs.emplace_back(&it, n);
  }
  std::vector<VarianceReport> reports(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const auto& [it, n] = jobs[i];
    reports[i] = variance_selftest(it->cls, it->c, n, cfg.draws,
                                   SeedSpec{cfg.master_seed, i * cfg.draws}, it->role);
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& r = reports[i];
    const bool ok = r.structure_exact && r.max_abs_z() < 5.0;
    pass = pass && ok;
    ordered_json c;
    c["sampler"] = jobs[i].first->label;
    c["n"] = jobs[i].second;
    c["draws"] = r.draws;
    c["structure_exact"] = r.structure_exact;
    c["max_abs_z"] = r.max_abs_z();
    c["pass"] = ok;
    checks.push_back(c);
  }
  return suite("ensemble_variance", pass, checks);
}

ordered_json structure_suite(const RunConfig& cfg) {
  ordered_json checks = ordered_json::array();
  bool structure_ok = true;
  for (int n = 2; n <= 64; ++n) {
    const SeedSpec s{cfg.master_seed, static_cast<std::uint64_t>(n)};
    structure_ok = structure_ok && is_real_symmetric(sample_background(SymmetryCase::I, n, s).entries());
    structure_ok = structure_ok && is_real_symmetric(sample_parallel(SymmetryCase::I, n, s).entries());
    structure_ok =
        structure_ok && is_imaginary_antisymmetric(sample_perpendicular(SymmetryCase::I, n, s).entries());
    if (n % 2 == 0) {
      structure_ok = structure_ok &&
                     is_self_dual_quaternion(sample_background(SymmetryCase::II, n, s).entries());
      structure_ok = structure_ok &&
                     is_self_dual_quaternion(sample_parallel(SymmetryCase::II, n, s).entries());
      structure_ok = structure_ok &&
                     is_ctype_block(sample_perpendicular(SymmetryCase::II, n, s).entries());
    }
  }
  checks.push_back({{"check", "exact structure n=2..64"}, {"pass", structure_ok}});

  bool trace_ok = true;
  double worst_trace = 0.0;
  for (SymmetryCase c : {SymmetryCase::I, SymmetryCase::II}) {
    for (int p = 0; p < 100; ++p) {
      const int n = 8 + 2 * (p % 5);
      const SeedSpec a{cfg.master_seed, 1000 + static_cast<std::uint64_t>(p)};
      const SeedSpec b{cfg.master_seed, 5000 + static_cast<std::uint64_t>(p)};
      const auto h0 = sample_background(c, n, a).entries();
      const auto v = sample_perpendicular(c, n, b).entries();
      const double t = std::abs((h0 * v).trace());
      const double tv = std::abs(v.trace());
      worst_trace = std::max({worst_trace, t, tv});
    }
  }
  trace_ok = worst_trace <= 1e-12;
  checks.push_back({{"check", "tr(H0 Vperp) = tr(Vperp) = 0 over 100 pairings per case"},
                    {"max_abs", worst_trace},
                    {"pass", trace_ok}});

  double worst_gap = 0.0;
  for (int p = 0; p < 20; ++p) {
    const SeedSpec s{cfg.master_seed, 9000 + static_cast<std::uint64_t>(p)};
    for (const auto& m : {sample_background(SymmetryCase::II, 8, s).entries(),
                          sample_parallel(SymmetryCase::II, 8, s).entries()}) {
      const Eigen::VectorXd e = hermitian_eigenvalues(m);
      const double scale = e.cwiseAbs().maxCoeff();
      for (Eigen::Index k = 0; k + 1 < e.size(); k += 2) {
        worst_gap = std::max(worst_gap, (e[k + 1] - e[k]) / scale);
      }
    }
  }
  const bool kramers_ok = worst_gap <= 1e-10;
  checks.push_back({{"check", "Kramers degeneracy of GSE spectra"},
                    {"max_relative_gap", worst_gap},
                    {"pass", kramers_ok}});
  return suite("exact_structure", structure_ok && trace_ok && kramers_ok, checks);
}

ordered_json zero_perturbation_suite(const RunConfig& cfg) {
  ordered_json checks = ordered_json::array();
  bool pass = true;
  for (SymmetryCase c : {SymmetryCase::I, SymmetryCase::II}) {
    std::vector<double> taus;
    for (int i = 1; i <= 20; ++i) taus.push_back(0.1 * i);
    const auto rows = compute_analytic_rows(c, {PerturbationStrengths(0, 0)}, taus, cfg.quad,
                                            cfg.threads);
    double worst = 0.0;
    bool conv = true;
    for (const auto& r : rows) {
      worst = std::max(worst, std::abs(r.fidelity - 1.0));
      conv = conv && r.fidelity_converged;
    }
    const bool ok = conv && worst <= 1e-6;
    pass = pass && ok;
    checks.push_back({{"case", to_string(c)}, {"max_abs_deviation", worst}, {"pass", ok}});
  }
  return suite("zero_perturbation_fidelity", pass, checks);
}

ordered_json relation_suite(const RunConfig& cfg) {
  ordered_json checks = ordered_json::array();
  struct Job {
    double lpar, lperp, tau;
    double r1 = 0, r2 = 0;
  };
  std::vector<Job> jobs;
  for (double lp : {0.05, 0.1, 0.2}) {
    for (double lq : {0.05, 0.1, 0.2}) {
      for (double tau : {0.3, 0.6, 0.9}) jobs.push_back({lp, lq, tau});
    }
  }
  QuadratureConfig q = cfg.quad;
  q.rel_tol = std::min(q.rel_tol, 1e-12);
  q.abs_tol = std::min(q.abs_tol, 1e-15);
  const double h = 1e-3;
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    AnalyticPoint p{SymmetryCase::I, PerturbationStrengths(jobs[i].lpar, jobs[i].lperp), jobs[i].tau, q};
    jobs[i].r1 = relation_defect(p, h);
    jobs[i].r2 = relation_defect(p, h / 2);
  });
  bool pass = true;
  for (const auto& j : jobs) {
    const double ratio = std::abs(j.r1) / std::abs(j.r2);
    // Richardson combination removes the O(h^2) term and exposes the identity itself.
    const double extrapolated = (4.0 * j.r2 - j.r1) / 3.0;
    const bool ok = ratio >= 3.5 && ratio <= 4.5 && std::abs(extrapolated) < 1e-6;
    pass = pass && ok;
    checks.push_back({{"lambda_par", j.lpar},
                      {"lambda_perp", j.lperp},
                      {"tau", j.tau},
                      {"residual_h", std::abs(j.r1)},
                      {"residual_h_below_1e-6", std::abs(j.r1) < 1e-6},
                      {"ratio_h_over_half_h", ratio},
                      {"extrapolated_residual", std::abs(extrapolated)},
                      {"pass", ok}});
  }
  return suite("differential_relation", pass, checks);
}

ordered_json oracle_suite(const RunConfig& cfg) {
  ordered_json checks = ordered_json::array();
  struct Job {
    double tau, lambda;
    double z = 0, o = 0;
  };
  std::vector<Job> jobs;
  for (double tau : {0.3, 0.6, 0.9, 1.2, 1.5}) {
    for (double l : {0.05, 0.1, 0.3}) jobs.push_back({tau, l});
  }
  QuadratureConfig q = cfg.quad;
  q.rel_tol = std::min(q.rel_tol, 1e-10);
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const double l = jobs[i].lambda / std::sqrt(2.0);
    const PerturbationStrengths s(l, l);
    jobs[i].z = z_case1(s, jobs[i].tau, q);
    jobs[i].o = z_case1_thsa_oracle(s, jobs[i].tau, q);
  });
  bool pass = true;
  for (const auto& j : jobs) {
    const double rel = std::abs(j.z - j.o) / std::abs(j.z);
    const bool ok = rel <= 1e-4;
    pass = pass && ok;
    checks.push_back({{"tau", j.tau},
                      {"lambda", j.lambda},
                      {"z_case1", j.z},
                      {"oracle", j.o},
                      {"relative_difference", rel},
                      {"pass", ok}});
  }
  return suite("oracle_equivalence", pass, checks);
}

ordered_json quadrature_suite() {
  ordered_json checks = ordered_json::array();
  const QuadratureConfig q;
  struct Case {
    const char* name;
    std::function<double(double)> f;
    double a, b;
    SingularEnds ends;
    double exact;
  };
  const Case cases[] = {
      {"1 on [0,1]", [](double) { return 1.0; }, 0.0, 1.0, {}, 1.0},
      {"1/sqrt(1-x^2) on [0,1]", [](double x) { return 1.0 / std::sqrt(1.0 - x * x); }, 0.0, 1.0,
       {false, true}, std::numbers::pi / 2},
      {"ln x on [0,1]", [](double x) { return std::log(x); }, 0.0, 1.0, {}, -1.0},
      {"1/sqrt(x(1-x)) on [0,1]", [](double x) { return 1.0 / std::sqrt(x * (1.0 - x)); }, 0.0, 1.0,
       {true, true}, std::numbers::pi},
      {"exp(x) on [0,2]", [](double x) { return std::exp(x); }, 0.0, 2.0, {}, std::expm1(2.0)},
  };
  bool pass = true;
  for (const auto& c : cases) {
    const auto r = integrate_1d(c.f, c.a, c.b, c.ends, q);
    const double err = std::abs(r.value - c.exact);
    const bool ok = r.converged && err <= std::max(q.rel_tol * std::abs(c.exact), q.abs_tol);
    pass = pass && ok;
    checks.push_back({{"integral", c.name}, {"abs_error", err}, {"pass", ok}});
  }
  return suite("quadrature_corpus", pass, checks);
}

ordered_json determinism_suite(const RunConfig& cfg) {
  RunConfig small = cfg;
  small.symmetry_case = SymmetryCase::I;
  small.strengths = {PerturbationStrengths(0.1, 0.1)};
  small.lambda.reset();
  small.ratios.clear();
  small.tau_values = {0.2, 0.5, 1.0};
  small.n = 32;
  small.realizations = 24;
  small.probes = 10;
  const std::string one = simulate_csv(small, compute_simulate_blocks(small, 1));
  const std::string three = simulate_csv(small, compute_simulate_blocks(small, 3));
  const std::string again = simulate_csv(small, compute_simulate_blocks(small, 2));
  const bool ok = one == three && one == again;
  ordered_json checks = ordered_json::array();
  checks.push_back({{"check", "simulate CSV identical for 1, 2 and 3 worker threads"}, {"pass", ok}});
  return suite("determinism", ok, checks);
}

}  // namespace

CommandResult run_selftest(const RunConfig& cfg) {
  CommandResult out;
  const auto dir = prepare_out_dir(cfg);
  ordered_json report;
  report["schema_version"] = 1;
  report["seed"] = cfg.master_seed;
  report["draws"] = cfg.draws;
  ordered_json suites = ordered_json::array();
  suites.push_back(variance_suite(cfg));
  suites.push_back(structure_suite(cfg));
  suites.push_back(quadrature_suite());
  suites.push_back(zero_perturbation_suite(cfg));
  suites.push_back(relation_suite(cfg));
  suites.push_back(oracle_suite(cfg));
  suites.push_back(determinism_suite(cfg));
  bool all = true;
  std::ostringstream msg;
  for (const auto& s : suites) {
    all = all && s["pass"].get<bool>();
    msg << (s["pass"].get<bool>() ? "PASS " : "FAIL ") << s["name"].get<std::string>() << "\n";
  }
  report["suites"] = suites;
  report["pass"] = all;
  write_file(dir / "selftest.json", report.dump(2) + "\n", out);
  out.exit_code = all ? kExitOk : kExitFailure;
  out.message = msg.str();
  return out;
}

CommandResult run_command(Command cmd, const RunConfig& cfg) {
  try {
    cfg.validate();
    if (cmd != Command::Selftest && cfg.resolved_strengths().empty()) {
      throw ConfigError("no strengths given");
    }
    switch (cmd) {
      case Command::Analytic: return run_analytic(cfg);
      case Command::Simulate: return run_simulate(cfg);
      case Command::Compare: return run_compare(cfg);
      case Command::Selftest: return run_selftest(cfg);
    }
  } catch (const ConfigError& e) {
    return {kExitConfigError, {}, std::string("config error: ") + e.what()};
  } catch (const NonConvergenceError& e) {
    return {kExitNonConvergence, {}, std::string("non-convergence: ") + e.what()};
  } catch (const McError& e) {
    return {kExitNonConvergence, {}, std::string("Monte-Carlo failure: ") + e.what()};
  } catch (const EigenError& e) {
    return {kExitNonConvergence, {}, std::string("eigensolver failure: ") + e.what()};
  } catch (const std::invalid_argument& e) {
    return {kExitConfigError, {}, std::string("invalid input: ") + e.what()};
  }
  return {kExitConfigError, {}, "unknown command"};
}

}  // namespace rmtfid
