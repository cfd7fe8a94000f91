#include "kahlerlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "kahlerlab/approximation.hpp"
#include "kahlerlab/curvature.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/estimates.hpp"
#include "kahlerlab/flow.hpp"
#include "kahlerlab/geometry.hpp"

#ifndef KAHLERLAB_VERSION
#define KAHLERLAB_VERSION "0.0.0"
#endif

namespace kahlerlab::cli {

namespace fs = std::filesystem;

std::string_view tool_version() { return KAHLERLAB_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Keys accepted per section; "*" accepts any numeric parameter.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"", {"task", "profile", "n", "out_dir", "seed"}},
      {"grid", {"r_min", "r_max", "nodes"}},
      {"profile", {"family", "file", "*"}},
      {"estimate", {"K", "kappa", "C", "c", "t_max", "t_count"}},
      {"approx", {"hat", "alpha", "beta", "k_list", "shape"}},
      {"flow",
       {"t_end", "dt0", "tol", "dt_max", "reference", "monitors", "boundary", "rho0", "r_max",
        "cells", "override", "tick_every", "ticks", "monitor_tol"}},
      {"geometry", {"a", "C", "tau_lo"}},
      {"verify", {}},
  };
  return k;
}

const std::set<std::string>& tasks() {
  static const std::set<std::string> t = {"profile", "estimate", "approx",
                                          "flow",    "geometry", "verify"};
  return t;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Line of the first "key =" occurrence in `section`, for diagnostics.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, cur;
  for (int no = 1; std::getline(in, line); ++no) {
    const std::string t = trim(line);
    if (!t.empty() && t.front() == '[') {
      cur = trim(t.substr(1, t.find(']') - 1));
      continue;
    }
    if (cur == section && t.rfind(key, 0) == 0) return no;
  }
  return 0;
}

[[noreturn]] void config_error(const std::string& origin, int line, const std::string& field,
                               const std::string& what) {
  std::ostringstream os;
  os << origin;
  if (line > 0) os << ":" << line;
  os << ": field '" << field << "': " << what;
  fail(ErrorCode::ConfigInvalid, os.str());
}

GridPtr log_grid(const Scenario& s) { return RadialGrid::log_uniform(s.r_min, s.r_max, s.nodes); }

std::string key_value_report(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << ": " << v << "\n";
  return os.str();
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

// ---------------------------------------------------------------- Scenario

std::string Scenario::canonical() const {
  std::map<std::string, std::string> all = params;
  all["task"] = task;
  all["profile"] = profile;
  all["n"] = std::to_string(n);
  all["grid.r_min"] = fmt(r_min);
  all["grid.r_max"] = fmt(r_max);
  all["grid.nodes"] = std::to_string(nodes);
  all["seed"] = std::to_string(seed);
  std::ostringstream os;
  for (const auto& [k, v] : all) os << k << " = " << v << "\n";
  return os.str();
}

double Scenario::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const auto v = to_double(it->second);
  if (!v) config_error("<scenario>", 0, key, "expected a number, got '" + it->second + "'");
  return *v;
}

std::string Scenario::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

bool Scenario::get_bool(const std::string& key, bool fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const std::string v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  config_error("<scenario>", 0, key, "expected a boolean, got '" + v + "'");
}

std::vector<double> Scenario::get_list(const std::string& key,
                                       const std::vector<double>& fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<double> out;
  for (const auto& part : split(it->second, ',')) {
    if (part.empty()) continue;
    const auto v = to_double(part);
    if (!v) config_error("<scenario>", 0, key, "expected a list of numbers, got '" + it->second + "'");
    out.push_back(*v);
  }
  return out;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigInvalid, origin + ": " + e.what());
  }
  Scenario s;
  std::map<std::string, std::string> profile_params;
  std::string family;
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    std::string section;
    for (const auto& p : it.parents) section += (section.empty() ? "" : ".") + p;
    const std::string field = section.empty() ? it.name : section + "." + it.name;
    const int line = line_of(text, section, it.name);
    const auto ks = known_keys().find(section);
    if (ks == known_keys().end()) config_error(origin, line, field, "unknown section");
    if (!ks->second.count(it.name) && !ks->second.count("*"))
      config_error(origin, line, field, "unknown key");
    std::string value;
    for (std::size_t k = 0; k < it.inputs.size(); ++k) value += (k ? "," : "") + it.inputs[k];
    if (value.empty()) config_error(origin, line, field, "missing value");

    auto number = [&]() {
      const auto v = to_double(value);
      if (!v) config_error(origin, line, field, "expected a number, got '" + value + "'");
      return *v;
    };
    if (section.empty()) {
      if (it.name == "task") {
        if (!tasks().count(value)) config_error(origin, line, field, "unknown task '" + value + "'");
        s.task = value;
      } else if (it.name == "profile") {
        s.profile = value;
      } else if (it.name == "n") {
        const double v = number();
        if (v < 1 || v != std::floor(v)) config_error(origin, line, field, "n must be a positive integer");
        s.n = static_cast<int>(v);
      } else if (it.name == "out_dir") {
        s.out_dir = value;
      } else if (it.name == "seed") {
        const double v = number();
        if (v < 0 || v != std::floor(v)) config_error(origin, line, field, "seed must be a non-negative integer");
        s.seed = static_cast<std::uint64_t>(v);
      }
    } else if (section == "grid") {
      const double v = number();
      if (it.name == "r_min") s.r_min = v;
      if (it.name == "r_max") s.r_max = v;
      if (it.name == "nodes") {
        if (v < 16 || v != std::floor(v)) config_error(origin, line, field, "nodes must be an integer >= 16");
        s.nodes = static_cast<std::size_t>(v);
      }
    } else if (section == "profile") {
      if (it.name == "family") {
        family = value;
      } else if (it.name == "file") {
        s.profile = value;
      } else {
        number();
        profile_params[it.name] = value;
      }
    } else {
      s.params[field] = value;
    }
  }
  if (!family.empty()) {
    std::string spec = family;
    char sep = ':';
    for (const auto& [k, v] : profile_params) {
      spec += sep + k + "=" + v;
      sep = ',';
    }
    s.profile = spec;
  }
  try {
    validate(s);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigInvalid, origin + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ConfigInvalid, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

void validate(const Scenario& s) {
  require(s.task.empty() || tasks().count(s.task), ErrorCode::ConfigInvalid,
          "field 'task': unknown task '" + s.task + "'");
  require(s.n >= 1, ErrorCode::ConfigInvalid, "field 'n': must be >= 1");
  require(s.r_min > 0.0 && s.r_max > s.r_min, ErrorCode::ConfigInvalid,
          "field 'grid': need 0 < r_min < r_max");
  require(s.nodes >= 16, ErrorCode::ConfigInvalid, "field 'grid.nodes': must be >= 16");
  for (const auto& [key, value] : s.params) {
    const auto dot = key.find('.');
    require(dot != std::string::npos, ErrorCode::ConfigInvalid, "field '" + key + "': unknown key");
    const auto ks = known_keys().find(key.substr(0, dot));
    require(ks != known_keys().end() && ks->second.count(key.substr(dot + 1)), ErrorCode::ConfigInvalid,
            "field '" + key + "': unknown key");
    static const std::set<std::string> textual = {"approx.hat", "approx.shape", "flow.reference",
                                                  "flow.monitors", "flow.boundary", "flow.override"};
    if (textual.count(key)) continue;
    if (key == "approx.k_list" || key == "flow.ticks") {
      s.get_list(key, {});
      continue;
    }
    require(to_double(value).has_value(), ErrorCode::ConfigInvalid,
            "field '" + key + "': expected a number, got '" + value + "'");
  }
  parse_profile_spec(s.profile);
}

ProfilePtr parse_profile_spec(const std::string& spec) {
  const std::string t = trim(spec);
  require(!t.empty(), ErrorCode::ConfigInvalid, "empty profile spec");
  std::error_code ec;
  if (fs::is_regular_file(t, ec)) {
    std::ifstream in(t);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string body = ss.str();
    if (body.find("family") != std::string::npos) {
      std::istringstream is(body);
      std::string family;
      std::map<std::string, double> params;
      for (const auto& it : CLI::ConfigINI().from_config(is)) {
        if (it.name == "++" || it.name == "--" || it.inputs.empty()) continue;
        if (it.name == "family") {
          family = it.inputs.front();
          continue;
        }
        const auto v = to_double(it.inputs.front());
        require(v.has_value(), ErrorCode::ConfigInvalid,
                t + ": field '" + it.name + "': expected a number");
        params[it.name] = *v;
      }
      return profiles::make(family, params);
    }
    // Knot table: r, xi, xi_prime.
    std::vector<double> r, xi, xp;
    std::istringstream is(body);
    std::string line;
    for (int no = 1; std::getline(is, line); ++no) {
      const std::string l = trim(line);
      if (l.empty() || l.front() == '#' || std::isalpha(static_cast<unsigned char>(l.front()))) continue;
      const auto cols = split(l, ',');
      require(cols.size() >= 3, ErrorCode::ConfigInvalid,
              t + ":" + std::to_string(no) + ": knot rows need r, xi, xi_prime");
      std::array<double, 3> v{};
      for (int k = 0; k < 3; ++k) {
        const auto d = to_double(cols[static_cast<std::size_t>(k)]);
        require(d.has_value(), ErrorCode::ConfigInvalid,
                t + ":" + std::to_string(no) + ": not a number '" + cols[static_cast<std::size_t>(k)] + "'");
        v[static_cast<std::size_t>(k)] = *d;
      }
      r.push_back(v[0]);
      xi.push_back(v[1]);
      xp.push_back(v[2]);
    }
    return profiles::tabulated(std::move(r), std::move(xi), std::move(xp));
  }
  const auto colon = t.find(':');
  const std::string family = t.substr(0, colon);
  std::map<std::string, double> params;
  if (colon != std::string::npos) {
    for (const auto& kv : split(t.substr(colon + 1), ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      require(eq != std::string::npos, ErrorCode::ConfigInvalid,
              "profile parameter '" + kv + "' is not key=value");
      const auto v = to_double(kv.substr(eq + 1));
      require(v.has_value(), ErrorCode::ConfigInvalid,
              "profile parameter '" + kv + "' is not numeric");
      params[trim(kv.substr(0, eq))] = *v;
    }
  }
  return profiles::make(family, params);
}

// ------------------------------------------------------------------ Output

Output::Output(fs::path dir, const Scenario& scenario)
    : dir_(std::move(dir)), scenario_hash_(scenario.hash()), seed_(scenario.seed) {
  fs::create_directories(dir_);
}

std::string Output::header() const {
  return "# kahlerlab " + std::string(tool_version()) + "\n# scenario_hash " +
         hex64(scenario_hash_) + "\n# seed " + std::to_string(seed_) + "\n";
}

void Output::write_atomic(const std::string& name, const std::string& body) {
  const fs::path target = dir_ / name;
  const fs::path tmp = dir_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << body;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
  artifacts_.emplace_back(name, fnv1a64(body));
}

void Output::csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  os << header();
  for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << fmt(row[k]);
    os << "\n";
  }
  write_atomic(name, os.str());
}

void Output::text(const std::string& name, const std::string& body) {
  write_atomic(name, header() + body);
}

void Output::finish() {
  std::ostringstream os;
  os << header();
  for (const auto& [name, h] : artifacts_) os << hex64(h) << "  " << name << "\n";
  const std::string body = os.str();
  const fs::path tmp = dir_ / "manifest.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
  }
  fs::rename(tmp, dir_ / "manifest");
}

// ------------------------------------------------------------------- tasks

namespace {

int task_profile(const Scenario& s, Output& out) {
  const auto p = parse_profile_spec(s.profile);
  const auto g = log_grid(s);
  const auto m = RadialMetric::from_profile(p, s.n, g);
  const auto xi = m.xi();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < g->size(); ++i) rows.push_back({g->r(i), m.f()[i], m.h()[i], xi[i]});
  out.csv("metric.csv", {"r", "f", "h", "xi"}, rows);

  const auto cp = curvature_ABC(m);
  rows.clear();
  for (std::size_t i = 0; i < g->size(); ++i)
    rows.push_back({g->r(i), cp.A[i], cp.B[i], cp.C[i], cp.R[i], cp.xi_prime_over_h[i]});
  out.csv("curvature.csv", {"r", "A", "B", "C", "R", "xi_prime_over_h"}, rows);

  const auto comp = completeness_check(m);
  const auto sign = sign_class(*p, *g);
  const auto decay = decay_and_bound_class(m);
  const auto bb = bisectional_bounds(m, std::max(s.r_min, 1e-4), std::min(s.r_max, 1e4), s.seed, 1000);
  out.text("report.txt",
           key_value_report({{"profile", p->name()},
                             {"n", std::to_string(s.n)},
                             {"completeness", to_string(comp.verdict)},
                             {"completeness_reason", comp.reason},
                             {"tail_exponent", fmt(comp.tail_exponent)},
                             {"sign_class", to_string(sign.label)},
                             {"curvature_bounded", yes_no(decay.bounded)},
                             {"curvature_decays", yes_no(decay.decays)},
                             {"sup_xi_prime_over_h", fmt(decay.sup_xi_prime_over_h)},
                             {"bisectional_kappa", fmt(bb.kappa)},
                             {"bisectional_K", fmt(bb.K)},
                             {"kahler_residual", fmt(m.kahler_residual())}}));
  return kOk;
}

int task_estimate(const Scenario& s, Output& out) {
  ComparisonInputs in{s.n, s.get("estimate.K", 1.0), s.get("estimate.kappa", 0.0),
                      s.get("estimate.C", 1.0)};
  kahlerlab::validate(in);
  const double T = in.K > 0.0 ? 1.0 / (2.0 * s.n * in.K) : INFINITY;
  const double t_max = s.get("estimate.t_max", std::isfinite(T) ? 0.9 * T : 1.0);
  const int count = static_cast<int>(s.get("estimate.t_count", 50));
  require(count >= 2, ErrorCode::ConfigInvalid, "field 'estimate.t_count': must be >= 2");
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < count; ++k) {
    const double t = t_max * k / (count - 1);
    const auto c = comparison_functions(t, in);
    rows.push_back({t, c.v1, c.v2, c.w});
  }
  out.csv("estimate.csv", {"t", "v1", "v2", "w"}, rows);
  std::vector<std::pair<std::string, std::string>> kv = {
      {"existence_time_lower_only", fmt(existence_time(ExistenceVariant::LowerOnly, {s.n, in.K, {}, {}}))},
      {"existence_time_equivalent",
       fmt(existence_time(ExistenceVariant::Equivalent, {s.n, in.K, in.C, {}}))}};
  if (s.params.count("estimate.c"))
    kv.emplace_back("existence_time_blend_potential",
                    fmt(existence_time(ExistenceVariant::BlendPotential,
                                       {s.n, in.K, {}, s.get("estimate.c", 0.0)})));
  kv.emplace_back("w0", fmt(comparison_functions(0.0, in).w));
  out.text("report.txt", key_value_report(kv));
  return kOk;
}

int task_approx(const Scenario& s, Output& out) {
  const auto xi = parse_profile_spec(s.profile);
  const auto g = log_grid(s);
  const double alpha = s.get("approx.alpha", 0.0);
  const double beta = s.get("approx.beta", 0.0);
  const std::string hat_spec = s.get_string("approx.hat", "auto");
  std::vector<std::pair<std::string, std::string>> kv = {{"profile", xi->name()}};
  ProfilePtr hat;
  if (hat_spec == "auto") {
    const auto cls = approx::classify_hat_case(*xi, alpha, beta, g);
    const auto hc = approx::construct_hat_xi(xi, cls.tag, alpha, beta, g);
    hat = hc.profile;
    kv.emplace_back("case", approx::to_string(cls.tag));
    kv.emplace_back("slope_upper", fmt(cls.slope_upper));
    kv.emplace_back("slope_lower", fmt(cls.slope_lower));
    if (cls.tag == approx::HatCase::Case3) {
      kv.emplace_back("blocks_completed", std::to_string(hc.blocks_completed));
      kv.emplace_back("c3", fmt(hc.c3));
      kv.emplace_back("max_running", fmt(hc.max_running));
    }
  } else {
    hat = parse_profile_spec(hat_spec);
    kv.emplace_back("case", "given");
  }
  kv.emplace_back("hat", hat->name());

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < g->size(); ++i)
    rows.push_back({g->r(i), hat->eval(g->r(i)), hat->eval_prime(g->r(i))});
  out.csv("xihat.csv", {"r", "xi", "xi_prime"}, rows);

  approx::BlendOptions bo;
  bo.n = s.n;
  bo.shape = s.get_string("approx.shape", "exp") == "quintic" ? approx::CutoffShape::Quintic
                                                               : approx::CutoffShape::Exp;
  const auto ks = s.get_list("approx.k_list", {1.0, 2.0, 4.0, 8.0});
  const auto rep = approx::blend_sequence(xi, hat, ks, g, bo);
  rows.clear();
  bool all = true;
  for (const auto& e : rep.entries) {
    rows.push_back({e.k, e.delta.delta, e.lower, e.upper, e.measured_min, e.measured_max,
                    e.verified ? 1.0 : 0.0});
    all = all && e.verified;
  }
  out.csv("sandwich.csv", {"k", "delta", "lower", "upper", "measured_min", "measured_max", "verified"},
          rows);
  kv.emplace_back("c", fmt(rep.c));
  kv.emplace_back("c_at", fmt(rep.c_at));
  kv.emplace_back("ck_divergent", yes_no(rep.ck_divergent));
  kv.emplace_back("sandwich_verified", yes_no(all));
  out.text("report.txt", key_value_report(kv));
  return all ? kOk : kViolation;
}

int task_flow(const Scenario& s, Output& out) {
  const auto p = parse_profile_spec(s.profile);
  const auto g = log_grid(s);
  const auto initial = RadialMetric::from_profile(p, s.n, g);
  const auto fg = flow::default_flow_grid(s.get("flow.rho0", 0.5), s.get("flow.r_max", 1e4),
                                          static_cast<std::size_t>(s.get("flow.cells", 400)));
  flow::FlowConfig cfg;
  cfg.grid = fg;
  cfg.t_end = s.get("flow.t_end", 0.1);
  cfg.dt0 = s.get("flow.dt0", 1e-6);
  cfg.control.tol = s.get("flow.tol", 1e-7);
  cfg.control.dt_max = s.get("flow.dt_max", 1e-2);
  cfg.tick_every = s.get("flow.tick_every", cfg.t_end / 10.0);
  cfg.ticks = s.get_list("flow.ticks", {});
  cfg.monitor_tol = s.get("flow.monitor_tol", 1e-6);
  cfg.override_completeness = s.get_bool("flow.override", false);
  const std::string bmode = s.get_string("flow.boundary", "MatchHat");
  require(bmode == "MatchHat" || bmode == "FreezeOuter", ErrorCode::ConfigInvalid,
          "field 'flow.boundary': expected MatchHat or FreezeOuter");
  cfg.boundary = bmode == "MatchHat" ? flow::Boundary::MatchHat : flow::Boundary::FreezeOuter;
  const std::string mon = s.get_string("flow.monitors", "abcde");
  cfg.monitors = {mon.find('a') != std::string::npos, mon.find('b') != std::string::npos,
                  mon.find('c') != std::string::npos, mon.find('d') != std::string::npos,
                  mon.find('e') != std::string::npos};

  std::vector<std::pair<std::string, std::string>> kv = {{"profile", p->name()},
                                                         {"boundary", bmode}};
  if (s.params.count("flow.reference")) {
    const auto ref = parse_profile_spec(s.get_string("flow.reference", ""));
    const auto ref_log = RadialMetric::from_profile(ref, s.n, g);
    cfg.reference = RadialMetric::from_profile(ref, s.n, fg);
    const auto bb = bisectional_bounds(ref_log, std::max(s.r_min, 1e-4),
                                       std::min(fg->r_max(), 1e4), s.seed, 1000);
    const auto s0 = flow::initial_state(initial, fg);
    double C = 1.0;
    for (std::size_t i = 0; i < fg->size(); ++i)
      for (double l : {s0.g.h()[i] / cfg.reference->h()[i], s0.g.f()[i] / cfg.reference->f()[i]})
        C = std::max({C, l, 1.0 / l});
    cfg.bounds = ComparisonInputs{s.n, bb.K, bb.kappa, C};
    kv.emplace_back("reference", ref->name());
    kv.emplace_back("K", fmt(bb.K));
    kv.emplace_back("kappa", fmt(bb.kappa));
    kv.emplace_back("C", fmt(C));
  }

  const auto rep = flow::run(cfg, initial);
  for (std::size_t j = 0; j < rep.f_snapshots.size(); ++j) {
    std::vector<std::vector<double>> rows;
    const auto& F = rep.f_snapshots[j];
    const auto& H = rep.h_snapshots[j];
    const auto xi = RadialMetric::from_samples(s.n, fg, F, H).xi();
    for (std::size_t i = 0; i < fg->size(); ++i) rows.push_back({fg->r(i), F[i], H[i], xi[i]});
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", j);
    out.csv(name, {"r", "f", "h", "xi"}, rows);
  }
  std::vector<std::vector<double>> ticks;
  for (const auto& tk : rep.ticks)
    ticks.push_back({tk.t, tk.sup_A, tk.sup_B, tk.sup_C, tk.lambda_min, tk.lambda_max, tk.kahler_residual});
  out.csv("ticks.csv", {"t", "sup_A", "sup_B", "sup_C", "lambda_min", "lambda_max", "kahler_residual"},
          ticks);

  // monitor_id is a letter, so this table is written by hand.
  std::ostringstream led;
  led << "t,monitor_id,worst_node_r,residual\n";
  for (const auto& m : rep.ledger)
    led << fmt(m.t) << "," << m.id << "," << fmt(m.worst_r) << "," << fmt(m.residual) << "\n";
  out.text("ledger.csv", led.str());

  kv.emplace_back("t_end", fmt(cfg.t_end));
  kv.emplace_back("accepted_steps", std::to_string(rep.accepted));
  kv.emplace_back("rejected_steps", std::to_string(rep.rejected));
  kv.emplace_back("violations", std::to_string(rep.violations));
  kv.emplace_back("existence_time", fmt(rep.existence_time));
  kv.emplace_back("curvature_exponent", fmt(rep.curvature_exponent));
  kv.emplace_back("c7_fit", fmt(rep.c7_fit));
  for (std::size_t k = 0; k < rep.warnings.size(); ++k)
    kv.emplace_back("warning_" + std::to_string(k), rep.warnings[k]);
  out.text("report.txt", key_value_report(kv));
  return rep.violations > 0 ? kViolation : kOk;
}

int task_geometry(const Scenario& s, Output& out) {
  const auto p = parse_profile_spec(s.profile);
  const auto g = log_grid(s);
  const auto m = RadialMetric::from_profile(p, s.n, g);
  const auto rep = geometry::geometry_report(m);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.r.size(); ++i) rows.push_back({rep.r[i], rep.tau[i], rep.V[i]});
  out.csv("geometry.csv", {"r", "tau", "V"}, rows);

  const double a = s.get("geometry.a", p->eval(g->r_max()));
  std::vector<std::pair<std::string, std::string>> kv = {
      {"profile", p->name()},
      {"annulus_exponent", fmt(rep.annulus.exponent)},
      {"volume_identity_max_rel_err", fmt(rep.max_identity_rel_err)}};
  if (a <= 1.0) {
    const auto lt = geometry::longtime_conditions(p, a, s.n, s.get("geometry.C", 5.0));
    kv.insert(kv.end(), {{"a", fmt(a)},
                         {"eventually_constant", yes_no(lt.eventually_constant)},
                         {"integral_bounded", yes_no(lt.integral_bounded)},
                         {"first_violation_r", fmt(lt.first_violation_r)},
                         {"derivative_decay", yes_no(lt.derivative_decay)},
                         {"longtime", yes_no(lt.longtime)},
                         {"curvature_decays", yes_no(lt.curvature_decays)},
                         {"volume_lower_bound", yes_no(lt.volume_lower_bound)},
                         {"long_grid_annulus_exponent", fmt(lt.annulus_exponent)},
                         {"cigar_comparable", yes_no(lt.cigar_comparable)},
                         {"plurisubharmonic", yes_no(lt.plurisubharmonic)}});
    for (std::size_t k = 0; k < lt.notes.size(); ++k) kv.emplace_back("note_" + std::to_string(k), lt.notes[k]);
  } else {
    kv.emplace_back("longtime", "not evaluated (tail value above 1)");
  }
  out.text("verdict.txt", key_value_report(kv));
  return kOk;
}

int task_verify(const Scenario& s, Output& out) {
  const auto rep = verify_suite(default_corpus(), s.n, s.seed);
  std::ostringstream os;
  os << "check,profile,passed,value\n";
  for (const auto& it : rep.items)
    os << it.check << "," << it.profile << "," << (it.passed ? 1 : 0) << "," << fmt(it.value) << "\n";
  out.text("verify.csv", os.str());
  std::ostringstream txt;
  for (const auto& it : rep.items)
    txt << (it.passed ? "PASS " : "FAIL ") << it.check << " [" << it.profile << "] " << it.detail << "\n";
  txt << "all_passed: " << yes_no(rep.all_passed()) << "\n";
  out.text("report.txt", txt.str());
  return rep.all_passed() ? kOk : kViolation;
}

}  // namespace

int dispatch(const Scenario& scenario, std::ostream& log) {
  try {
    validate(scenario);
    require(!scenario.task.empty(), ErrorCode::ConfigInvalid, "field 'task': not set");
    Output out(scenario.out_dir, scenario);
    int code = kOk;
    const auto& t = scenario.task;
    if (t == "profile") code = task_profile(scenario, out);
    else if (t == "estimate") code = task_estimate(scenario, out);
    else if (t == "approx") code = task_approx(scenario, out);
    else if (t == "flow") code = task_flow(scenario, out);
    else if (t == "geometry") code = task_geometry(scenario, out);
    else code = task_verify(scenario, out);
    out.finish();
    if (code == kViolation) log << "kahlerlab: " << t << ": bound violated, see " << out.dir().string() << "\n";
    return code;
  } catch (const Error& e) {
    log << "kahlerlab: error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    log << "kahlerlab: error: " << e.what() << "\n";
    return kError;
  }
}

// ------------------------------------------------------------ verify suite

std::vector<CorpusEntry> default_corpus() {
  return {{"flat", profiles::flat()},
          {"cigar", profiles::rational(1.0)},
          {"nonneg_cap", profiles::poly_cap(1.0)},
          {"nonpositive", profiles::rational(-0.5)},
          {"eventually_constant_0.5", profiles::eventually_constant(0.5)},
          {"eventually_constant_1", profiles::eventually_constant(1.0)},
          {"oscillator", profiles::oscillator(-1.0)},
          {"incomplete_xi_2", profiles::eventually_constant(2.0), true}};
}

bool VerifyReport::all_passed() const {
  return std::all_of(items.begin(), items.end(), [](const VerifyItem& v) { return v.passed; });
}

VerifyReport verify_suite(const std::vector<CorpusEntry>& corpus, int n, std::uint64_t seed) {
  VerifyReport rep;
  auto add = [&](std::string check, std::string prof, bool ok, double value, std::string detail) {
    rep.items.push_back({std::move(check), std::move(prof), ok, value, std::move(detail)});
  };
  const auto g = RadialGrid::log_uniform(1e-6, 1e6, 2048);

  for (const auto& e : corpus) {
    try {
      const auto m = RadialMetric::from_profile(e.profile, n, g);
      const auto comp = completeness_check(m);
      if (e.expect_incomplete) {
        add("completeness", e.name, comp.verdict == Completeness::Incomplete, comp.tail_exponent,
            "expected Incomplete, got " + to_string(comp.verdict));
        continue;
      }
      add("completeness", e.name, comp.verdict != Completeness::Incomplete, comp.tail_exponent,
          "verdict " + to_string(comp.verdict));

      const auto rec = m.reconstructed_xi();
      double worst = 0.0;
      for (std::size_t i = 3; i + 3 < g->size(); ++i) {
        const double x = e.profile->eval(g->r(i));
        worst = std::max(worst, std::abs(rec[i] - x) / std::max(std::abs(x), 1e-3));
      }
      add("reconstruction", e.name, worst < 1e-5, worst, "max relative error of -r h'/h");
      add("kahler_relation", e.name, m.kahler_residual() < 1e-5, m.kahler_residual(),
          "h = (r f)' on the nodes");

      double vol = 0.0;
      for (double r = 1e-3; r <= 1e6; r *= 10.0) vol = std::max(vol, geometry::ball_volume(m, r).identity_rel_err);
      add("volume_identity", e.name, vol < 1e-8, vol, "n int h f^(n-1) t^(n-1) = (r f)^n");

      const auto tau = geometry::geodesic_radius_nodes(m);
      const auto V = geometry::ball_volume_nodes(m);
      bool mono = true;
      for (std::size_t i = 1; i < tau.size(); ++i) mono = mono && tau[i] > tau[i - 1] && V[i] > V[i - 1];
      add("tau_V_increasing", e.name, mono, tau.back(), "tau(r_max) reported");

      const auto dec = decay_and_bound_class(m);
      add("curvature_bounds", e.name, dec.B_bound_holds && dec.C_bound_holds,
          dec.sup_xi_prime_over_h, "|B| <= sup|xi'/h| and |C| <= 2 sup|xi'/h|");
    } catch (const std::exception& ex) {
      add("exception", e.name, false, 0.0, ex.what());
    }
  }

  // Profile-independent checks.
  try {
    const auto c = comparison_functions(0.1, {2, 1.0, 0.0, 1.0});
    const double err = std::max({std::abs(c.v1 - 10.0 / 3.0), std::abs(c.v2 - 2.0),
                                 std::abs(c.w - std::sqrt(8.0 / 3.0))});
    add("comparison_arithmetic", "-", err < 1e-12, err, "(n,K,kappa,C,t) = (2,1,0,1,0.1) -> 10/3, 2, sqrt(8/3)");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.05, 5.0);
    double gap = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<double> lam(static_cast<std::size_t>(n));
      double phi = 0.0, psi = 0.0;
      for (double& l : lam) {
        l = U(rng);
        phi += 1.0 / l;
        psi += l;
      }
      const auto eg = eigen_gap_check(lam, phi, psi, n);
      gap = std::max(gap, std::abs(eg.lhs - eg.rhs) / std::max(1.0, std::abs(eg.rhs)));
    }
    add("eigen_gap_identity", "-", gap < 1e-12, gap, "10^4 random eigenvalue sets");

    const auto fg = flow::default_flow_grid();
    flow::FlowConfig cfg;
    cfg.grid = fg;
    cfg.t_end = 0.1;
    cfg.monitors = {false, false, false, false, false};
    const auto flat = flow::run(cfg, RadialMetric::from_profile(profiles::flat(), n, g));
    double dev = 0.0;
    for (const auto& f : flat.f_snapshots)
      for (double v : f) dev = std::max(dev, std::abs(v - 1.0));
    add("flow_flat_fixed_point", "flat", dev <= 1e-10, dev, "sup |f - 1| on [0, 0.1]");

    const auto cap = profiles::poly_cap(1.0);
    const auto bb = bisectional_bounds(RadialMetric::from_profile(cap, n, g), 1e-4, 1e4, seed, 1000);
    flow::FlowConfig lc;
    lc.grid = fg;
    lc.t_end = 0.8 / (2.0 * n * bb.K);
    lc.tick_every = lc.t_end / 8.0;
    lc.reference = RadialMetric::from_profile(cap, n, fg);
    lc.bounds = ComparisonInputs{n, bb.K, bb.kappa, 1.0};
    lc.monitors = {true, false, false, false, false};
    const auto lrep = flow::run(lc, RadialMetric::from_profile(profiles::rational(1.0), n, g));
    double worst = INFINITY;
    for (const auto& m : lrep.ledger)
      if (m.id == 'a') worst = std::min(worst, m.residual);
    add("lower_bound_monitor", "cigar", lrep.violations == 0, worst,
        "lambda_min - (1/n - 2Kt) on [0, 0.8T] against the nonnegative cap");

    const std::vector<double> ks{1.0, 2.0, 4.0, 8.0};
    approx::BlendOptions bo;
    bo.n = n;
    const auto blend = approx::blend_sequence(profiles::rational(1.0), cap, ks, g, bo);
    bool ok = true;
    for (const auto& e : blend.entries) ok = ok && e.verified;
    add("blend_sandwich", "cigar", ok, blend.c, "exp(-c-1/k) ghat <= h_k <= c_k ghat, k = 1,2,4,8");
  } catch (const std::exception& ex) {
    add("exception", "-", false, 0.0, ex.what());
  }
  return rep;
}

}  // namespace kahlerlab::cli
