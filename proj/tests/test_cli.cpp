#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtfid/commands.hpp"
#include "rmtfid/config.hpp"

using namespace rmtfid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rmtfid_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data rows of a CSV artifact as a header-keyed table, skipping comment lines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string at(std::size_t r, const std::string& col) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col) return rows.at(r).at(i);
    }
    FAIL("no column " << col);
    return {};
  }
  double num(std::size_t r, const std::string& col) const { return std::stod(at(r, col)); }
};

Table read_csv(const fs::path& p) {
  Table t;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("RMTFID_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "RMTFID_BIN is not set");
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

RunConfig small_simulate(const fs::path& out) {
  RunConfig c;
  c.strengths = {{0.1, 0.1}};
  c.tau_values = {0.2, 0.5, 1.0};
  c.n = 40;
  c.realizations = 40;
  c.probes = 10;
  c.master_seed = 99;
  c.threads = 1;
  c.out_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  const std::string text = R"(
[common]
case = II
strengths = 0.1,0; 0,0.1
lambda = 0.1
ratios = inf, 2, 1, 0.5, 0
tau_values = 0.2, 0.5, 1.5
master_seed = 18446744073709551615
out_dir = somewhere
plot = true

[quadrature]
rel_tol = 1e-9
max_depth = 20
nodes_per_panel = 21

[simulate]
n = 100
realizations = 500
connected = false
window = full
threads = 3

[analytic]
plot_observable = cross_ff

[compare]
reference_case = I

[selftest]
draws = 20000
)";
  const RunConfig c = parse_config(text);
  CHECK(c.symmetry_case == SymmetryCase::II);
  CHECK(c.strengths.size() == 2);
  CHECK(c.resolved_strengths().size() == 7);
  CHECK(c.master_seed == 18446744073709551615ULL);
  CHECK(c.quad.nodes_per_panel == 21);
  CHECK(c.window.kind == SpectralWindow::Kind::FullTrace);
  CHECK(c.reference_case == SymmetryCase::I);
  CHECK(c.tau_grid() == std::vector<double>{0.2, 0.5, 1.5});
  CHECK(parse_config(serialize_config(c)) == c);

  RunConfig d;
  d.tau_start = 0.1;
  d.tau_stop = 2.0;
  d.tau_count = 20;
  d.strengths = {{1.0 / 3.0, std::sqrt(2.0)}};
  CHECK(parse_config(serialize_config(d)) == d);
  const auto grid = d.tau_grid();
  CHECK(grid.size() == 20);
  CHECK(grid.front() == doctest::Approx(0.1));
  CHECK(grid.back() == doctest::Approx(2.0));
}

TEST_CASE("malformed configs are rejected") {
  const char* bad[] = {
      "[common]\ncase = III\n",
      "[common]\nstrengths = 0.1\n",
      "[common]\nstrengths = -0.1,0\n",
      "[common]\nunknown_key = 1\n",
      "[nosuch]\nx = 1\n",
      "[simulate]\nrealizations = 1\n",
      "[common]\ntau_values = 0.5, 0.2\n",
      "[quadrature]\nrel_tol = abc\n",
      "[simulate]\nconnected = maybe\n",
      "[analytic]\nplot_observable = both\n",
      "[simulate]\nn = 41\n[common]\ncase = II\n",
      "stray = 1\n",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text).validate(), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/rmtfid.ini"), ConfigError);
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(4, "2", 8) == 4);
  CHECK(resolve_threads(std::nullopt, "2", 8) == 2);
  CHECK(resolve_threads(std::nullopt, "16", 8) == 8);
  CHECK(resolve_threads(std::nullopt, "3", 0) == 3);
  CHECK(resolve_threads(std::nullopt, nullptr, 5) == 5);
  CHECK_THROWS_AS(resolve_threads(std::nullopt, "zero", 1), ConfigError);
  CHECK_THROWS_AS(resolve_threads(-1, nullptr, 1), ConfigError);
}

TEST_CASE("command names") {
  for (Command c : {Command::Analytic, Command::Simulate, Command::Compare, Command::Selftest}) {
    CHECK(parse_command(to_string(c)) == c);
  }
  CHECK_THROWS(parse_command("plot"));
}

TEST_CASE("analytic at zero perturbation") {
  const fs::path out = scratch("analytic_zero");
  RunConfig c;
  c.strengths = {{0.0, 0.0}};
  c.out_dir = out.string();
  c.plot = true;
  for (SymmetryCase sc : {SymmetryCase::I, SymmetryCase::II}) {
    c.symmetry_case = sc;
    const auto r = run_analytic(c);
    const Table t = read_csv(out / "analytic.csv");
    REQUIRE(t.rows.size() == 20);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      CHECK(std::abs(t.num(i, "f") - 1.0) <= 1e-6);
      // The case II cross form-factor diverges at tau = 1.
      const bool heisenberg = sc == SymmetryCase::II && std::abs(t.num(i, "tau") - 1.0) < 1e-12;
      CHECK(t.at(i, "status") == (heisenberg ? "k_nonconverged" : "ok"));
    }
    CHECK(r.exit_code == (sc == SymmetryCase::I ? kExitOk : kExitNonConvergence));
    CHECK(slurp(out / "analytic.csv").rfind("# schema_version=1\n", 0) == 0);
    const std::string svg = slurp(out / "analytic_fidelity.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
}

TEST_CASE("analytic curves are ordered by the strength ratio") {
  const fs::path out = scratch("analytic_ratio");
  RunConfig c;
  c.lambda = 0.1;
  c.ratios = {INFINITY, 2.0, 1.0, 0.5, 0.0};
  c.out_dir = out.string();
  REQUIRE(run_analytic(c).exit_code == kExitOk);
  const Table t = read_csv(out / "analytic.csv");
  REQUIRE(t.rows.size() == 100);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t k = 1; k < 5; ++k) {
      CHECK(t.num(k * 20 + i, "f") >= t.num((k - 1) * 20 + i, "f") - 1e-6);
    }
  }
}

TEST_CASE("strong perpendicular perturbation decays slowest in case I") {
  const auto rows = compute_analytic_rows(
      SymmetryCase::I, {{1.5, 0.0}, {1.5 / std::sqrt(2.0), 1.5 / std::sqrt(2.0)}, {0.0, 1.5}},
      {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0}, {}, 1);
  for (std::size_t i = 0; i < 10; ++i) {
    CAPTURE(rows[i].tau);
    CHECK(rows[20 + i].fidelity >= rows[i].fidelity);
    CHECK(rows[20 + i].fidelity >= rows[10 + i].fidelity);
  }
}

TEST_CASE("analytic rows flag non-convergence and long times") {
  QuadratureConfig q;
  q.max_depth = 10;
  const auto rows = compute_analytic_rows(SymmetryCase::II, {{0.1, 0.0}}, {0.5, 1.0, 2.6}, q, 1);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status.find("k_nonconverged") != std::string::npos);
  CHECK(rows[2].status.find("tau_beyond_2.5") != std::string::npos);
  CHECK(analytic_csv(rows).find("k_nonconverged") != std::string::npos);
}

TEST_CASE("simulate at zero perturbation") {
  const fs::path out = scratch("simulate_zero");
  RunConfig c = small_simulate(out);
  c.strengths = {{0.0, 0.0}};
  REQUIRE(run_simulate(c).exit_code == kExitOk);
  const Table t = read_csv(out / "simulate.csv");
  REQUIRE(t.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(t.at(i, "f_re") == "1");
    CHECK(t.at(i, "f_stderr") == "0");
  }
  const auto meta = nlohmann::json::parse(slurp(out / "simulate_meta.json"));
  CHECK(meta.contains("D_calibrated"));
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
  const fs::path a = scratch("simulate_a");
  const fs::path b = scratch("simulate_b");
  RunConfig c = small_simulate(a);
  REQUIRE(run_simulate(c).exit_code == kExitOk);
  c.out_dir = b.string();
  c.threads = 3;
  REQUIRE(run_simulate(c).exit_code == kExitOk);
  CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
  c.master_seed = 100;
  REQUIRE(run_simulate(c).exit_code == kExitOk);
  CHECK(slurp(a / "simulate.csv") != slurp(b / "simulate.csv"));
}

TEST_CASE("compare at zero perturbation") {
  const fs::path out = scratch("compare_zero");
  RunConfig c = small_simulate(out);
  c.strengths = {{0.0, 0.0}};
  run_compare(c);
  const Table t = read_csv(out / "compare.csv");
  int f_rows = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.at(i, "observable") != "f") continue;
    ++f_rows;
    CHECK(t.num(i, "z") == 0.0);
  }
  CHECK(f_rows == 3);
}

TEST_CASE("compare with mismatched cases fails") {
  const fs::path out = scratch("compare_mismatch");
  RunConfig c = small_simulate(out);
  c.reference_case = SymmetryCase::II;
  const auto r = run_compare(c);
  CHECK(r.exit_code == kExitFailure);
  const auto summary = nlohmann::json::parse(slurp(out / "compare_summary.json"));
  CHECK(summary["verdict"] == "fail");
  CHECK(summary["status"].get<std::string>().find("mismatch") != std::string::npos);
}

TEST_CASE("binary exit codes") {
  const fs::path dir = scratch("binary");
  SUBCASE("bad config exits 2") {
    write_file(dir / "bad.ini", "[common]\ncase = IV\n");
    CHECK(run_binary("analytic --config " + (dir / "bad.ini").string()) == kExitConfigError);
    CHECK(run_binary("analytic --config " + (dir / "missing.ini").string()) == kExitConfigError);
    CHECK(run_binary("analytic") == kExitConfigError);
    write_file(dir / "nostrengths.ini", "[common]\ncase = I\n");
    CHECK(run_binary("analytic --config " + (dir / "nostrengths.ini").string()) == kExitConfigError);
    CHECK_NOTHROW(load_config((dir / "nostrengths.ini").string()));
    CHECK(run_binary("frobnicate --config x") == kExitConfigError);
  }
  SUBCASE("analytic succeeds and writes artifacts") {
    write_file(dir / "ok.ini", "[common]\nstrengths = 0.1,0.1\ntau_values = 0.5, 1.0\n");
    CHECK(run_binary("analytic --plot --config " + (dir / "ok.ini").string() + " --out " +
                     (dir / "ok").string()) == kExitOk);
    CHECK(fs::exists(dir / "ok" / "analytic.csv"));
    CHECK(fs::exists(dir / "ok" / "analytic_fidelity.svg"));
  }
  SUBCASE("non-convergence exits 3") {
    write_file(dir / "nc.ini",
               "[common]\ncase = II\nstrengths = 0.1,0\ntau_values = 1.0\n[quadrature]\nmax_depth = 10\n");
    CHECK(run_binary("analytic --config " + (dir / "nc.ini").string() + " --out " +
                     (dir / "nc").string()) == kExitNonConvergence);
    CHECK(fs::exists(dir / "nc" / "analytic.csv"));
  }
  SUBCASE("seed and thread overrides keep simulate output stable") {
    write_file(dir / "sim.ini",
               "[common]\nstrengths = 0.1,0\ntau_values = 0.5\n[simulate]\nn = 20\nrealizations = 20\nprobes = 10\n");
    const std::string base = "simulate --config " + (dir / "sim.ini").string() + " --seed 5";
    REQUIRE(run_binary(base + " --threads 1 --out " + (dir / "s1").string()) == kExitOk);
    REQUIRE(run_binary(base + " --threads 2 --out " + (dir / "s2").string()) == kExitOk);
    CHECK(slurp(dir / "s1" / "simulate.csv") == slurp(dir / "s2" / "simulate.csv"));
  }
}
