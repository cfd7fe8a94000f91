#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "kahlerlab/cli.hpp"
#include "kahlerlab/error.hpp"

namespace kc = kahlerlab::cli;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> nodes;
  std::optional<double> r_max;
  std::optional<std::string> profile;
  std::optional<int> n;
  std::map<std::string, std::string> params;
};

// Flag that lands in Scenario::params under "section.key".
void param_flag(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.params[key] = v; }, help);
}

void common_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "scenario file (key = value with [sections])");
  app->add_option("--out-dir", o.out_dir, "output directory");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--grid-nodes", o.nodes, "log grid nodes");
  app->add_option("--r-max", o.r_max, "log grid outer radius");
  app->add_option("--profile", o.profile, "family, family:key=value,..., or a profile file");
  app->add_option("--n", o.n, "complex dimension");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kahlerlab: U(n)-invariant Kahler metrics on C^n and their Ricci flow"};
  app.set_version_flag("--version", std::string(kc::tool_version()));
  app.require_subcommand(1);
  Overrides o;

  auto* profile = app.add_subcommand("profile", "metric, curvature and classification tables");
  auto* estimate = app.add_subcommand("estimate", "comparison functions and existence times");
  param_flag(estimate, o, "--K", "estimate.K", "upper bisectional bound");
  param_flag(estimate, o, "--kappa", "estimate.kappa", "lower bisectional bound");
  param_flag(estimate, o, "--C", "estimate.C", "equivalence constant");
  param_flag(estimate, o, "--t-max", "estimate.t_max", "last time sample");
  auto* approx = app.add_subcommand("approx", "reference profile and blend sandwich");
  param_flag(approx, o, "--alpha", "approx.alpha", "lower tail value");
  param_flag(approx, o, "--beta", "approx.beta", "drawup bound");
  param_flag(approx, o, "--hat", "approx.hat", "reference profile spec or auto");
  param_flag(approx, o, "--k-list", "approx.k_list", "comma separated blend radii");
  auto* flow = app.add_subcommand("flow", "Kahler-Ricci flow with theorem monitors");
  param_flag(flow, o, "--t-end", "flow.t_end", "final time");
  param_flag(flow, o, "--reference", "flow.reference", "reference profile spec");
  param_flag(flow, o, "--monitors", "flow.monitors", "monitor letters, e.g. abd");
  param_flag(flow, o, "--boundary", "flow.boundary", "MatchHat or FreezeOuter");
  param_flag(flow, o, "--override", "flow.override", "run on data not known to be complete");
  auto* geometry = app.add_subcommand("geometry", "geodesic radius, volume and long-time verdicts");
  param_flag(geometry, o, "--a", "geometry.a", "tail value of xi");
  param_flag(geometry, o, "--C", "geometry.C", "bound for the running integral");
  auto* verify = app.add_subcommand("verify", "module invariants over the built-in corpus");
  for (auto* sub : {profile, estimate, approx, flow, geometry, verify}) common_flags(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kc::kOk : kc::kError;
  }

  kc::Scenario s;
  try {
    if (!o.config.empty()) s = kc::load_scenario(o.config);
  } catch (const kahlerlab::Error& e) {
    std::cerr << "kahlerlab: error: " << e.what() << "\n";
    return kc::kError;
  }
  s.task = app.get_subcommands().front()->get_name();
  if (o.out_dir) s.out_dir = *o.out_dir;
  if (o.seed) s.seed = *o.seed;
  if (o.nodes) s.nodes = *o.nodes;
  if (o.r_max) s.r_max = *o.r_max;
  if (o.profile) s.profile = *o.profile;
  if (o.n) s.n = *o.n;
  for (const auto& [k, v] : o.params) s.params[k] = v;
  const int code = kc::dispatch(s, std::cerr);
  if (code == kc::kOk) std::cout << "wrote " << s.out_dir << "\n";
  return code;
}
