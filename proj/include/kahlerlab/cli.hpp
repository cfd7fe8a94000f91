#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kahlerlab/profiles.hpp"

namespace kahlerlab::cli {

std::string_view tool_version();

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// A batch run: task name, common fields, and per-section task parameters
/// stored as "section.key" -> raw text.
struct Scenario {
  std::string task;
  std::string profile = "flat";
  int n = 2;
  double r_min = 1e-6;
  double r_max = 1e6;
  std::size_t nodes = 2048;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::map<std::string, std::string> params;

  /// Sorted key = value text of every field; hashed into output headers.
  std::string canonical() const;
  std::uint64_t hash() const { return fnv1a64(canonical()); }

  double get(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
};

/// Parses key = value text with [sections]. Top-level keys and the [grid]
/// section fill the common fields; [profile] may carry family + parameters.
/// Unknown keys and malformed values raise ConfigInvalid naming the line and field.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<config>");
Scenario load_scenario(const std::filesystem::path& path);
/// Checks every key against the known set and every typed field.
void validate(const Scenario& s);

/// "family", "family:key=value,...", or a path to a profile file. Profile
/// files hold either `family = name` plus parameters, or a knot table with
/// columns r, xi, xi_prime.
ProfilePtr parse_profile_spec(const std::string& spec);

/// Output directory with header conventions, atomic writes and a manifest.
class Output {
 public:
  Output(std::filesystem::path dir, const Scenario& scenario);

  void csv(const std::string& name, const std::vector<std::string>& columns,
           const std::vector<std::vector<double>>& rows);
  void text(const std::string& name, const std::string& body);
  /// Writes `manifest` listing every artifact with its FNV-1a hash.
  void finish();
  const std::filesystem::path& dir() const { return dir_; }

 private:
  void write_atomic(const std::string& name, const std::string& body);
  std::string header() const;

  std::filesystem::path dir_;
  std::uint64_t scenario_hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::uint64_t>> artifacts_;
};

/// Formats a double for CSV output (shortest round-trip form).
std::string fmt(double v);

enum ExitCode : int { kOk = 0, kError = 1, kViolation = 2 };

/// Runs the scenario's task; writes artifacts into scenario.out_dir. Errors are
/// reported on `log` and mapped to kError; theorem-monitor violations to kViolation.
int dispatch(const Scenario& scenario, std::ostream& log);

struct CorpusEntry {
  std::string name;
  ProfilePtr profile;
  /// Expected to be refused as incomplete (a designed-to-fail entry).
  bool expect_incomplete = false;
};
std::vector<CorpusEntry> default_corpus();

struct VerifyItem {
  std::string check;
  std::string profile;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};
struct VerifyReport {
  std::vector<VerifyItem> items;
  bool all_passed() const;
};
/// Module invariants over the corpus, one item per check and profile.
VerifyReport verify_suite(const std::vector<CorpusEntry>& corpus, int n = 2, std::uint64_t seed = 1);

}  // namespace kahlerlab::cli
