#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitConfig = 2;

/// Flat "section.key" -> text map read from an INI-style file. Numbers are
/// parsed with from_chars, so no locale is involved.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  /// Each getter throws ConfigInvalid naming the key when it is missing or malformed.
  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  /// Whitespace- or comma-separated; empty text gives an empty list.
  std::vector<double> numbers(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

const std::vector<std::string>& experiment_names();

/// The experiment's defaults overlaid with `user`. ConfigInvalid for an unknown
/// experiment, unknown keys, non-positive tolerances, an h_list that is not
/// strictly decreasing, or an invalid cutoff annulus.
ExperimentConfig resolve(const ExperimentConfig& user);

struct OutputFile {
  std::string name;
  std::string content;
};

struct Report {
  std::string experiment;
  std::string summary_json;  // embeds the resolved config; no timestamps
  std::vector<OutputFile> csv;
  bool passed = false;  // all built-in assertions held
};

/// Runs a resolved config. Module errors propagate as rlab::Error.
Report run(const ExperimentConfig& resolved, unsigned threads, std::ostream* log = nullptr);

/// Writes <experiment>.json and the CSV files into dir, each through a
/// temporary file and a rename, so a failed run leaves nothing behind.
void write_report(const std::filesystem::path& dir, const Report& report);

/// Command-line entry: `run EXPERIMENT [--config PATH] [--set section.key=value]...
/// [--family F] [--A A] [--E0 E] [--h-list "h..."] [--out DIR] [--threads N] [--verbose]`
/// and `list`. Returns 0, 1 (experiment failed) or 2 (config invalid).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rlab::cli
