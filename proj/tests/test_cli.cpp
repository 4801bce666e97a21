#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rlab/cli.hpp"
#include "rlab/errors.hpp"
#include "rlab/potential.hpp"

using namespace rlab;
using namespace rlab::cli;
namespace fs = std::filesystem;

namespace {

std::string config_error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  FAIL("expected ConfigInvalid");
  return {};
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "resolvent_lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("rlab_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("INI parsing and typed getters") {
  const auto c = ExperimentConfig::parse(
      "[experiment]\nname = thresholds\n; comment\n[potential]\nA = 2.5\nE0 = 1e-2\n"
      "[numerics]\nh_list = 0.2, 0.1 0.05\ngrid_points = 1000\n");
  CHECK(c.text("experiment.name") == "thresholds");
  CHECK(c.number("potential.A") == 2.5);
  CHECK(c.number("potential.E0") == 0.01);
  CHECK(c.integer("numerics.grid_points") == 1000);
  CHECK(c.numbers("numerics.h_list") == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(config_error_text([&] { c.number("experiment.name"); }).find("experiment.name") != std::string::npos);
  CHECK(config_error_text([&] { c.integer("potential.A"); }).find("potential.A") != std::string::npos);
  CHECK(config_error_text([&] { c.text("potential.missing"); }).find("potential.missing") != std::string::npos);
  config_error_text([] { ExperimentConfig::parse("[a]\nb = 1\n[a\n"); });
}

TEST_CASE("resolution and validation name the offending field") {
  ExperimentConfig u;
  u.set("experiment.name", "kernel-compare");
  const auto r = resolve(u);
  CHECK(r.numbers("numerics.h_list").size() == 4);
  CHECK(r.text("potential.family") == "bump_quartic");

  auto bad = u;
  bad.set("numerics.h_list", "0.05 0.1");
  CHECK(config_error_text([&] { resolve(bad); }).find("numerics.h_list") != std::string::npos);
  bad = u;
  bad.set("kernel.slack", "-1");
  CHECK(config_error_text([&] { resolve(bad); }).find("kernel.slack") != std::string::npos);
  bad = u;
  bad.set("kernel.typo", "1");
  CHECK(config_error_text([&] { resolve(bad); }).find("kernel.typo") != std::string::npos);
  bad.set("experiment.name", "nonsense");
  CHECK(config_error_text([&] { resolve(bad); }).find("experiment.name") != std::string::npos);

  ExperimentConfig n;
  n.set("experiment.name", "norm-sweep");
  n.set("cutoffs.anchor", "absolute");
  n.set("cutoffs.inner", "2");
  n.set("cutoffs.outer", "1");
  CHECK(config_error_text([&] { resolve(n); }).find("cutoffs.inner") != std::string::npos);
  CHECK(experiment_names().size() == 11);
}

TEST_CASE("thresholds report matches the potential module and is deterministic") {
  ExperimentConfig u;
  u.set("experiment.name", "thresholds");
  const auto c = resolve(u);
  const auto a = run(c, 1);
  const auto b = run(c, 1);
  CHECK(a.summary_json == b.summary_json);
  CHECK(a.passed);
  const auto t = compute_thresholds(bump_quartic(1.0), 0.01);
  const auto j = nlohmann::json::parse(a.summary_json);
  CHECK(j["results"]["r2"].get<double>() == t.r2);
  CHECK(j["results"]["M0"].get<double>() == t.M0);
  CHECK(j["results"]["r1"].get<double>() == t.r1);
  CHECK(j["config"]["potential"]["E0"] == "0.01");
  CHECK(a.summary_json.find("timestamp") == std::string::npos);
  REQUIRE(!a.csv.empty());
  CHECK(a.csv.front().content.rfind("r,phi\n", 0) == 0);
}

TEST_CASE("command line: exit codes, atomic files, byte-identical reruns") {
  const auto dir = fresh_dir("run");
  std::string out, err;
  CHECK(invoke({"run", "thresholds", "--family", "bump_quartic", "--E0", "0.01", "--out", dir.string()}, &out) ==
        kExitOk);
  CHECK(out.find("PASS r2 equals sqrt(M0/E0)") != std::string::npos);
  const auto first = slurp(dir / "thresholds.json");
  CHECK(first.find("\"passed\": true") != std::string::npos);
  CHECK(invoke({"run", "thresholds", "--family", "bump_quartic", "--E0", "0.01", "--out", dir.string(),
                "--threads", "2"}) == kExitOk);
  CHECK(slurp(dir / "thresholds.json") == first);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

  CHECK(invoke({"run", "kernel-compare", "--h-list", "0.05 0.1", "--out", dir.string()}, nullptr, &err) ==
        kExitConfig);
  CHECK(err.find("numerics.h_list") != std::string::npos);
  CHECK(invoke({"run", "nonsense"}) == kExitConfig);
  CHECK(invoke({"run", "thresholds", "--set", "potential.bogus=1"}) == kExitConfig);

  // a module error leaves no partial report behind
  const auto failed = fresh_dir("failed");
  CHECK(invoke({"run", "thresholds", "--family", "zero", "--out", failed.string()}, nullptr, &err) == kExitFailed);
  CHECK(err.find("NoTrapping") != std::string::npos);
  CHECK(!fs::exists(failed / "thresholds.json"));

  // config file plus override
  const auto cfg = dir / "airy.ini";
  std::ofstream(cfg) << "[experiment]\nname = airy-table\n[airy]\npoints = 11\n";
  CHECK(invoke({"run", "airy-table", "--config", cfg.string(), "--set", "airy.x_max=40", "--out", dir.string()}) ==
        kExitOk);
  const auto airy = slurp(dir / "airy-table.json");
  CHECK(airy.find("\"points\": \"11\"") != std::string::npos);
  CHECK(airy.find("\"x_max\": \"40\"") != std::string::npos);
  CHECK(invoke({"run", "thresholds", "--config", cfg.string()}) == kExitConfig);
}
