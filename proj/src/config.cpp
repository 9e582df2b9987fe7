#include "rmtfid/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace rmtfid {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"common",
       {"case", "strengths", "lambda", "ratios", "tau_start", "tau_stop", "tau_count",
        "tau_values", "master_seed", "out_dir", "plot"}},
      {"quadrature", {"rel_tol", "abs_tol", "max_depth", "nodes_per_panel"}},
      {"simulate", {"n", "realizations", "probes", "connected", "window", "window_width", "threads"}},
      {"analytic", {"plot_observable"}},
      {"compare", {"reference_case"}},
      {"selftest", {"draws"}},
  };
  return keys;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = boost::trim_copy(text);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || std::isnan(v)) {
    throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = boost::trim_copy(text);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': not an integer: '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  const std::string t = boost::trim_copy(text);
  errno = 0;
  char* end = nullptr;
  if (!t.empty() && t[0] == '-') throw ConfigError("key '" + key + "': must be non-negative");
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& p : parts) {
    if (boost::trim_copy(p).empty()) continue;
    out.push_back(to_double(key, p));
  }
  return out;
}

std::vector<PerturbationStrengths> to_pairs(const std::string& text) {
  std::vector<std::string> items;
  boost::split(items, text, boost::is_any_of(";"));
  std::vector<PerturbationStrengths> out;
  for (const auto& item : items) {
    if (boost::trim_copy(item).empty()) continue;
    const auto xs = to_list("strengths", item);
    if (xs.size() != 2) throw ConfigError("strengths: each entry must be 'lpar,lperp'");
    if (!(xs[0] >= 0.0) || !(xs[1] >= 0.0) || std::isinf(xs[0]) || std::isinf(xs[1])) {
      throw ConfigError("strengths must be finite and non-negative");
    }
    out.emplace_back(xs[0], xs[1]);
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

SymmetryCase to_case(const std::string& key, const std::string& text) {
  try {
    return parse_symmetry_case(boost::trim_copy(text));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Analytic: return "analytic";
    case Command::Simulate: return "simulate";
    case Command::Compare: return "compare";
    case Command::Selftest: return "selftest";
  }
  return "?";
}

Command parse_command(const std::string& text) {
  if (text == "analytic") return Command::Analytic;
  if (text == "simulate") return Command::Simulate;
  if (text == "compare") return Command::Compare;
  if (text == "selftest") return Command::Selftest;
  throw ConfigError("unknown command '" + text + "'");
}

std::vector<PerturbationStrengths> RunConfig::resolved_strengths() const {
  std::vector<PerturbationStrengths> out = strengths;
  if (lambda) {
    for (double r : ratios) out.push_back(PerturbationStrengths::from_ratio(*lambda, r));
  }
  return out;
}

std::vector<double> RunConfig::tau_grid() const {
  if (!tau_values.empty()) return tau_values;
  std::vector<double> grid;
  if (tau_count == 1) return {tau_start};
  for (int i = 0; i < tau_count; ++i) {
    grid.push_back(tau_start + (tau_stop - tau_start) * i / (tau_count - 1));
  }
  return grid;
}

void RunConfig::validate() const {
  if (lambda && ratios.empty()) throw ConfigError("lambda given without ratios");
  if (!lambda && !ratios.empty()) throw ConfigError("ratios given without lambda");
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
    throw ConfigError("lambda must be finite and non-negative");
  }
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("ratios must be non-negative");
  }
  if (tau_values.empty()) {
    if (tau_count < 1) throw ConfigError("tau_count must be at least 1");
    if (!(tau_start > 0.0) || !std::isfinite(tau_stop) ||
        (tau_count > 1 && !(tau_stop > tau_start))) {
      throw ConfigError("tau grid needs 0 < tau_start < tau_stop");
    }
  }
  const auto grid = tau_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw ConfigError("tau values must be positive and strictly increasing");
    }
  }
  try {
    quad.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (n < 2 || (symmetry_case == SymmetryCase::II && n % 2 != 0)) {
    throw ConfigError("n must be >= 2 (and even in case II)");
  }
  if (realizations < 2) throw ConfigError("realizations must be at least 2");
  if (probes < 10) throw ConfigError("probes must be at least 10");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (window.width_levels < 0.0) throw ConfigError("window_width must be non-negative");
  if (plot_observable != "fidelity" && plot_observable != "cross_ff") {
    throw ConfigError("plot_observable must be fidelity or cross_ff");
  }
  if (draws < 10000) throw ConfigError("draws must be at least 10000");
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.symmetry_case == b.symmetry_case && a.strengths == b.strengths &&
         a.lambda == b.lambda && a.ratios == b.ratios && a.tau_start == b.tau_start &&
         a.tau_stop == b.tau_stop && a.tau_count == b.tau_count && a.tau_values == b.tau_values &&
         a.master_seed == b.master_seed && a.out_dir == b.out_dir && a.plot == b.plot &&
         a.quad == b.quad && a.n == b.n && a.realizations == b.realizations &&
         a.probes == b.probes && a.connected == b.connected && a.window.kind == b.window.kind &&
         a.window.width_levels == b.window.width_levels && a.threads == b.threads &&
         a.plot_observable == b.plot_observable && a.reference_case == b.reference_case &&
         a.draws == b.draws;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    const auto sec = known_keys().find(section);
    if (sec == known_keys().end() || !body.data().empty()) {
      throw ConfigError("unknown section or key outside a section: '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      if (!sec->second.count(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      }
      const std::string v = boost::trim_copy(node.data());
      if (key == "case") c.symmetry_case = to_case(key, v);
      else if (key == "strengths") c.strengths = to_pairs(v);
      else if (key == "lambda") c.lambda = to_double(key, v);
      else if (key == "ratios") c.ratios = to_list(key, v);
      else if (key == "tau_start") c.tau_start = to_double(key, v);
      else if (key == "tau_stop") c.tau_stop = to_double(key, v);
      else if (key == "tau_count") c.tau_count = static_cast<int>(to_integer(key, v));
      else if (key == "tau_values") c.tau_values = to_list(key, v);
      else if (key == "master_seed") c.master_seed = to_u64(key, v);
      else if (key == "out_dir") c.out_dir = v;
      else if (key == "plot") c.plot = to_bool(key, v);
      else if (key == "rel_tol") c.quad.rel_tol = to_double(key, v);
      else if (key == "abs_tol") c.quad.abs_tol = to_double(key, v);
      else if (key == "max_depth") c.quad.max_depth = static_cast<int>(to_integer(key, v));
      else if (key == "nodes_per_panel") c.quad.nodes_per_panel = static_cast<int>(to_integer(key, v));
      else if (key == "n") c.n = static_cast<int>(to_integer(key, v));
      else if (key == "realizations") c.realizations = static_cast<int>(to_integer(key, v));
      else if (key == "probes") c.probes = static_cast<int>(to_integer(key, v));
      else if (key == "connected") c.connected = to_bool(key, v);
      else if (key == "window") {
        if (v == "gaussian") c.window.kind = SpectralWindow::Kind::Gaussian;
        else if (v == "full") c.window.kind = SpectralWindow::Kind::FullTrace;
        else throw ConfigError("window must be gaussian or full");
      }
      else if (key == "window_width") c.window.width_levels = to_double(key, v);
      else if (key == "threads") c.threads = static_cast<int>(to_integer(key, v));
      else if (key == "plot_observable") c.plot_observable = v;
      else if (key == "reference_case") c.reference_case = to_case(key, v);
      else if (key == "draws") c.draws = static_cast<std::size_t>(to_u64(key, v));
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[common]\n";
  os << "case = " << to_string(c.symmetry_case) << "\n";
  if (!c.strengths.empty()) {
    os << "strengths = ";
    for (std::size_t i = 0; i < c.strengths.size(); ++i) {
      os << (i ? "; " : "") << fmt(c.strengths[i].lambda_par()) << ","
         << fmt(c.strengths[i].lambda_perp());
    }
    os << "\n";
  }
  if (c.lambda) os << "lambda = " << fmt(*c.lambda) << "\n";
  if (!c.ratios.empty()) os << "ratios = " << join(c.ratios) << "\n";
  os << "tau_start = " << fmt(c.tau_start) << "\n";
  os << "tau_stop = " << fmt(c.tau_stop) << "\n";
  os << "tau_count = " << c.tau_count << "\n";
  if (!c.tau_values.empty()) os << "tau_values = " << join(c.tau_values) << "\n";
  os << "master_seed = " << c.master_seed << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  os << "plot = " << (c.plot ? "true" : "false") << "\n";
  os << "\n[quadrature]\n";
  os << "rel_tol = " << fmt(c.quad.rel_tol) << "\n";
  os << "abs_tol = " << fmt(c.quad.abs_tol) << "\n";
  os << "max_depth = " << c.quad.max_depth << "\n";
  os << "nodes_per_panel = " << c.quad.nodes_per_panel << "\n";
  os << "\n[simulate]\n";
  os << "n = " << c.n << "\n";
  os << "realizations = " << c.realizations << "\n";
  os << "probes = " << c.probes << "\n";
  os << "connected = " << (c.connected ? "true" : "false") << "\n";
  os << "window = " << (c.window.kind == SpectralWindow::Kind::Gaussian ? "gaussian" : "full")
     << "\n";
  os << "window_width = " << fmt(c.window.width_levels) << "\n";
  os << "threads = " << c.threads << "\n";
  os << "\n[analytic]\n";
  os << "plot_observable = " << c.plot_observable << "\n";
  if (c.reference_case) {
    os << "\n[compare]\n";
    os << "reference_case = " << to_string(*c.reference_case) << "\n";
  }
  os << "\n[selftest]\n";
  os << "draws = " << c.draws << "\n";
  return os.str();
}

}  // namespace rmtfid
