#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsm/experiments/runner.hpp"

namespace {

using qsm::experiments::KeyValueConfig;
using qsm::experiments::ScanConfig;

struct GlobalFlags {
  std::string config;
  std::string out;
  long threads = -1;
  std::string fixtures;
  std::vector<std::string> sets;
  bool quiet = false;
};

int run(const std::string& experiment, const GlobalFlags& g) {
  KeyValueConfig kv;
  if (!g.config.empty()) kv = KeyValueConfig::load(g.config);
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw qsm::Error(qsm::ErrorCode::config_error, "--set expects key=value, got '" + s + "'");
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  ScanConfig cfg = ScanConfig::from(experiment, kv);
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.threads >= 0) cfg.threads = g.threads;
  cfg.validate();

  auto fixtures = g.fixtures.empty() ? qsm::semiclassics::FixtureSet::builtin()
                                     : qsm::semiclassics::FixtureSet::load(g.fixtures);
  qsm::experiments::Runner runner(cfg, std::move(fixtures), g.fixtures.empty() ? "builtin" : g.fixtures,
                                  g.quiet ? nullptr : &std::cerr);
  const int code = runner.run();
  const auto& m = runner.manifest();
  std::cout << experiment << ": " << m.tasks.size() << " tasks, " << m.failures() << " failed, " << m.files.size()
            << " files in " << runner.root().string() << "\n";
  for (const auto& w : m.warnings) std::cout << "warning: " << w << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kicked quantum standard map laboratory"};
  app.set_version_flag("--version", QSM_VERSION);
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory (overrides output_dir)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--seed-fixtures", g.fixtures, "JSON file with relevance fixtures")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "override one config key (key=value), repeatable");
  app.add_flag("-q,--quiet", g.quiet, "no progress output on stderr");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands{
      {"correlation-scan", "eigenphases and resonance intensities over a k grid"},
      {"spectrum", "Floquet spectrum, intensities and eigenvectors at one k"},
      {"spacing", "unfolded spacings of the resonance comb against semiclassical quantization"},
      {"ipr-scan", "running IPR and participation ratio against k / k_break"},
      {"phase-diagram", "k_break as a function of N"},
      {"husimi", "Husimi maps of the strongest states with manifold overlay"},
      {"manifolds", "stable and unstable branches of the hyperbolic fixed point"},
      {"homoclinic", "primary homoclinic orbits, actions and lobe areas over a k grid"},
      {"special-functions", "interpolated and quadrature special functions"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  try {
    return run(experiment, g);
  } catch (const qsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
