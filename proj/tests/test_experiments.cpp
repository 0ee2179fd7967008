#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "qsm/experiments/gallery.hpp"
#include "qsm/experiments/runner.hpp"

using namespace qsm;
using namespace qsm::experiments;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const qsm::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no qsm::Error thrown";
  return ErrorCode::invalid_argument;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qsm-test-" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScanConfig small(const std::string& experiment, const std::string& dir) {
  ScanConfig c = ScanConfig::defaults(experiment);
  c.output_dir = scratch(dir).string();
  c.threads = 1;
  return c;
}

}  // namespace

// ------------------------------------------------------------------ config

TEST(Config, ParsesKeyValueText) {
  const auto kv = KeyValueConfig::parse("# comment\nN = 158, 1026\n k=0.5 # trailing\n\ninclude_long = yes\n");
  EXPECT_EQ(kv.get_int_list("N", {}), (std::vector<long>{158, 1026}));
  EXPECT_DOUBLE_EQ(kv.get_double("k", 0.0), 0.5);
  EXPECT_TRUE(kv.get_bool("include_long", false));
  EXPECT_EQ(kv.get_string("missing", "x"), "x");
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_EQ(code_of([] { KeyValueConfig::parse("N 158\n"); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([] { KeyValueConfig::parse(" = 3\n"); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([] { KeyValueConfig::parse("k = half\n").get_double("k", 0.0); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([] { KeyValueConfig::load("/nonexistent/qsm.cfg"); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([] { ScanConfig::from("spacing", KeyValueConfig::parse("colour = red\n")); }),
            ErrorCode::config_error);
  EXPECT_EQ(code_of([] { ScanConfig::from("spacing", KeyValueConfig::parse("experiment = husimi\n")); }),
            ErrorCode::config_error);
}

TEST(Config, ValidatesInvariants) {
  auto bad = [](const std::string& text) {
    return code_of([&] { ScanConfig::from("correlation-scan", KeyValueConfig::parse(text)); });
  };
  EXPECT_EQ(bad("window = 10\n"), ErrorCode::config_error);
  EXPECT_EQ(bad("window = 0\n"), ErrorCode::config_error);
  EXPECT_EQ(bad("k_min = 1.0\nk_max = 0.5\n"), ErrorCode::config_error);
  EXPECT_EQ(bad("top_m = 13\n"), ErrorCode::config_error);
  EXPECT_EQ(bad("N = 1\n"), ErrorCode::config_error);
  EXPECT_EQ(bad("k_scale = log\n"), ErrorCode::config_error);
  EXPECT_NO_THROW(ScanConfig::from("correlation-scan", KeyValueConfig::parse("window = 5\nk_steps = 7\n")));
}

TEST(Config, KGridIsStrictlyIncreasing) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> steps(2, 400);
  for (int t = 0; t < 50; ++t) {
    ScanConfig c = ScanConfig::defaults("correlation-scan");
    c.k_min = u(rng);
    c.k_max = c.k_min + 1e-3 + u(rng);
    c.k_steps = steps(rng);
    c.validate();
    const auto ks = c.k_grid();
    ASSERT_EQ(static_cast<long>(ks.size()), c.k_steps);
    EXPECT_DOUBLE_EQ(ks.front(), c.k_min);
    EXPECT_NEAR(ks.back(), c.k_max, 1e-12);
    for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GT(ks[i], ks[i - 1]);
  }
}

TEST(Config, ScenarioDefaults) {
  EXPECT_EQ(ScanConfig::defaults("correlation-scan").N_list, std::vector<long>{158});
  EXPECT_EQ(ScanConfig::defaults("correlation-scan").k_steps, 300);
  EXPECT_EQ(ScanConfig::defaults("spacing").N_list, (std::vector<long>{158, 1026}));
  EXPECT_EQ(ScanConfig::defaults("ipr-scan").k_scale, "break");
  EXPECT_EQ(ScanConfig::defaults("correlation-scan").window, 11);
  const auto echo = ScanConfig::defaults("spacing").echo();
  EXPECT_EQ(echo.at("N"), "158,1026");
  EXPECT_EQ(echo.at("window"), "11");
}

// ---------------------------------------------------------------------- io

TEST(Io, DoublesRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Io, CsvShape) {
  CsvTable t({"a", "b"});
  t.add({1, 0.5});
  t.add({"x", 2L});
  EXPECT_EQ(t.text(), "a,b\n1,0.5\nx,2\n");
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(code_of([&] { t.add({1}); }), ErrorCode::io_error);
}

TEST(Io, BinarySidecar) {
  BinaryArray a{{1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, {2, 3}, "test"};
  EXPECT_EQ(a.payload().size(), 48u);
  const auto j = a.sidecar("a.bin");
  EXPECT_EQ(j["shape"], nlohmann::json::array({2, 3}));
  EXPECT_EQ(j["dtype"], "float64");
  EXPECT_EQ(j["byte_order"], "little");
  a.shape = {4, 2};
  EXPECT_EQ(code_of([&] { (void)a.payload(); }), ErrorCode::io_error);
}

TEST(Io, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ---------------------------------------------------------------- parallel

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto f = [](std::size_t i) {
    if (i == 5) throw std::runtime_error("boom");
    return std::sin(static_cast<double>(i)) * 1e3;
  };
  const auto serial = parallel_map(40, 1, f);
  for (long w : {2L, 3L, 8L}) {
    const auto par = parallel_map(40, w, f);
    for (std::size_t i = 0; i < 40; ++i) {
      EXPECT_EQ(par[i].ok(), serial[i].ok());
      if (serial[i].ok()) {
        EXPECT_EQ(*par[i].value, *serial[i].value);
      }
    }
  }
  EXPECT_FALSE(serial[5].ok());
  EXPECT_EQ(serial[5].error, "boom");
}

TEST(Parallel, CorrelationScanParallelEqualsSerial) {
  std::vector<double> ks;
  for (int i = 0; i < 9; ++i) ks.push_back(0.1 + 0.2 * i);
  const auto a = correlation_scan(90, ks, 1);
  const auto b = correlation_scan(90, ks, 4);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    ASSERT_TRUE(a.slices[i].ok() && b.slices[i].ok());
    EXPECT_EQ(a.slices[i].value->eigenphases, b.slices[i].value->eigenphases);
    EXPECT_EQ(a.slices[i].value->intensities, b.slices[i].value->intensities);
  }
}

// ------------------------------------------------------------------- scans

TEST(Scans, RunningAverage) {
  EXPECT_EQ(running_average({1, 2, 3, 4, 5}, 3), (std::vector<double>{1, 2, 3, 4, 5}));
  const auto r = running_average({0, 0, 9, 0, 0}, 3);
  EXPECT_EQ(r, (std::vector<double>{0, 3, 3, 3, 0}));
  std::vector<double> v(50, 0.25);
  for (long w : {1L, 5L, 11L}) {
    for (double x : running_average(v, w)) EXPECT_DOUBLE_EQ(x, 0.25);
  }
  EXPECT_EQ(code_of([] { running_average({1, 2}, 4); }), ErrorCode::invalid_argument);
}

TEST(Scans, PhaseDiagram) {
  const auto rows = phase_diagram({62900, 158, 1000, 50, 3000});
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows.front().N, 50);
  EXPECT_TRUE(strictly_decreasing(rows));
  EXPECT_NEAR(rows[1].k_break, 1.62, 0.02);
  EXPECT_NEAR(rows.back().k_break, 0.5, 0.02);
  for (const auto& r : rows) EXPECT_NEAR(r.interference_at_break, 0.0, 1e-4);
}

TEST(Scans, CorrelationRidgeFollowsBohrSommerfeld) {
  std::vector<double> ks;
  for (int i = 0; i < 60; ++i) ks.push_back(0.03 * (i + 1));
  const auto scan = correlation_scan(158, ks, 0);
  EXPECT_EQ(scan.failures(), 0u);
  EXPECT_GE(scan.ridge.tracking_fraction, 0.95);
  EXPECT_TRUE(scan.ridge.bands_covered);
  EXPECT_GE(scan.ridge.fragmentation, 0.5);
}

// ----------------------------------------------------------------- spacing

TEST(Spacing, CombLabelsAreConsecutiveAndSorted) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ph(0.0, two_pi), in(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    Eigen::VectorXd phases(60), w(60);
    for (int i = 0; i < 60; ++i) phases(i) = ph(rng), w(i) = std::pow(in(rng), 4);
    w /= w.sum();
    const auto comb = select_comb(phases, w, 60, 0.7, 1e-4, 0.05, 1e9);
    const double bs = semiclassics::bohr_sommerfeld_phase(60, 0.7);
    for (std::size_t i = 0; i < comb.size(); ++i) {
      EXPECT_LE(std::abs(comb[i].phi - bs), pi + 1e-12);
      if (i) {
        EXPECT_GT(comb[i].phi, comb[i - 1].phi);
        EXPECT_EQ(comb[i].label, comb[i - 1].label + 1);
      }
    }
  }
}

TEST(Spacing, KHalfAtTwoDimensions) {
  const auto input = semiclassical_input(0.5, semiclassics::FixtureSet::builtin());
  EXPECT_TRUE(input.relevance.exact);
  const auto a = analyze_spacing(spectrum_slice(158, 0.5), input);
  const auto b = analyze_spacing(spectrum_slice(1026, 0.5), input);
  ASSERT_NE(semiclassics::find_label(a.semiclassical, 0), nullptr);
  EXPECT_EQ(semiclassics::find_label(a.semiclassical, 0)->n, 22);
  std::set<long> labels;
  for (const auto& c : a.comparison) labels.insert(c.label);
  EXPECT_EQ(labels, (std::set<long>{-3, -2, -1, 0, 1, 2}));
  EXPECT_LE(a.max_deviation, 5.0 / 158);
  EXPECT_LE(b.max_deviation / a.max_deviation, 1.0 / 2.8);
  for (const auto* s : {&a, &b}) {
    EXPECT_LE(std::abs(s->minimum_offset()), 0.5 * s->mean_spacing);
    for (const auto& sp : s->spacings) EXPECT_GT(sp.spacing, 0.0);
  }
}

TEST(Spacing, TooFewStates) {
  const auto input = semiclassical_input(0.5, semiclassics::FixtureSet::builtin());
  EXPECT_EQ(code_of([&] { analyze_spacing(spectrum_slice(158, 0.5), input, 0.2); }), ErrorCode::too_few_states);
}

// ----------------------------------------------------------------- gallery

TEST(Gallery, ResonanceStatesAtKHalf) {
  const auto g = husimi_gallery(158, 0.5, 6, 48, semiclassics::FixtureSet::builtin());
  ASSERT_EQ(g.entries.size(), 6u);
  const auto& top = g.entries.front();
  ASSERT_TRUE(top.label.has_value());
  EXPECT_EQ(*top.label, 0);
  auto torus_distance = [](double u) { return std::min(u, 1.0 - u); };
  EXPECT_LE(std::hypot(torus_distance(top.peak_q), torus_distance(top.peak_p)), 0.05);
  std::set<std::string> names;
  for (const auto& e : g.entries) {
    names.insert(e.name());
    ASSERT_TRUE(e.label.has_value());
    if (*e.label > 0) {
      EXPECT_GT(e.libration, 0.5) << e.name();
    } else if (*e.label < 0) {
      EXPECT_LT(e.libration, 0.5) << e.name();
    }
    EXPECT_NE(e.name().find("label"), std::string::npos);
    EXPECT_DOUBLE_EQ(e.husimi.values.maxCoeff(), 1.0);
  }
  EXPECT_EQ(names.size(), 6u);
}

TEST(Gallery, ConsecutiveQuantizationNumbersNearBreak) {
  const auto g = husimi_gallery(158, 1.447, 2, 16, semiclassics::FixtureSet::builtin());
  EXPECT_FALSE(g.input.relevance.exact);
  ASSERT_EQ(g.entries.size(), 2u);
  ASSERT_TRUE(g.entries[0].n && g.entries[1].n);
  EXPECT_EQ(std::set<long>({*g.entries[0].n, *g.entries[1].n}), (std::set<long>{37, 38}));
  for (const auto& e : g.entries) EXPECT_LE(std::abs(e.n_deviation), 0.1);
}

TEST(Gallery, ChaoticLayerStaysOnTorus) {
  const auto layer = chaotic_layer(0.5, 4, 2000);
  ASSERT_EQ(layer.size(), 8000u);
  for (const auto& z : layer) {
    EXPECT_GE(z.q, 0.0);
    EXPECT_LT(z.q, 1.0);
    EXPECT_GE(z.p, 0.0);
    EXPECT_LT(z.p, 1.0);
  }
}

TEST(Gallery, OverlayBreaksAtWraps) {
  const auto m = manifold_overlay(0.5, 3.0, 1e-7);
  ASSERT_EQ(m.unstable_lines.q.size(), m.unstable_lines.p.size());
  for (std::size_t i = 1; i < m.unstable_lines.q.size(); ++i) {
    const double dq = m.unstable_lines.q[i] - m.unstable_lines.q[i - 1];
    const double dp = m.unstable_lines.p[i] - m.unstable_lines.p[i - 1];
    if (std::isfinite(dq) && std::isfinite(dp)) {
      EXPECT_LE(std::max(std::abs(dq), std::abs(dp)), 0.5);
    }
  }
}

// ------------------------------------------------------------------ runner

TEST(Runner, ManifestListsEveryFileWithChecksum) {
  ScanConfig c = small("husimi", "husimi");
  c.top_m = 3;
  c.husimi_grid = 24;
  c.arc_length = 3.0;
  Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
  EXPECT_EQ(r.run(), 0);
  std::set<std::string> listed;
  for (const auto& f : r.manifest().files) {
    listed.insert(f.path);
    EXPECT_EQ(f.sha256, sha256_hex(slurp(r.root() / f.path))) << f.path;
  }
  std::set<std::string> on_disk;
  for (const auto& e : std::filesystem::recursive_directory_iterator(r.root()))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      on_disk.insert(std::filesystem::relative(e.path(), r.root()).string());
  EXPECT_EQ(listed, on_disk);
  int svgs = 0;
  for (const auto& p : listed)
    if (p.starts_with("husimi/r") && p.ends_with(".svg")) ++svgs;
  EXPECT_EQ(svgs, 3);
  const auto m = nlohmann::json::parse(slurp(r.root() / "manifest.json"));
  EXPECT_EQ(m["config"]["top_m"], "3");
  EXPECT_EQ(m["provenance"]["A"], "fixture");
  EXPECT_EQ(m["files"].size(), listed.size());
}

TEST(Runner, IdenticalConfigGivesIdenticalDatasets) {
  std::vector<std::string> digests;
  for (const char* dir : {"det-a", "det-b"}) {
    ScanConfig c = small("correlation-scan", dir);
    c.N_list = {64};
    c.k_steps = 10;
    c.threads = std::string(dir) == "det-a" ? 1 : 3;
    Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
    EXPECT_EQ(r.run(), 0);
    std::string d;
    for (const auto& f : r.manifest().files)
      if (f.path.ends_with(".csv")) d += f.path + f.sha256;
    digests.push_back(d);
  }
  EXPECT_FALSE(digests[0].empty());
  EXPECT_EQ(digests[0], digests[1]);
}

TEST(Runner, PartialFailureGivesExitTwo) {
  ScanConfig c = small("spacing", "partial");
  c.N_list = {158};
  c.intensity_floor = 0.2;
  Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
  EXPECT_EQ(r.run(), 2);
  ASSERT_EQ(r.manifest().tasks.size(), 1u);
  EXPECT_EQ(r.manifest().tasks[0].status, TaskStatus::failed);
  EXPECT_NE(r.manifest().tasks[0].message.find("too-few-states"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(r.root() / "manifest.json"));
}

TEST(Runner, FixtureFallbackIsRecorded) {
  ScanConfig c = small("homoclinic", "fallback");
  c.k_min = 0.5;
  c.k_max = 0.9;
  c.k_steps = 2;
  Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
  EXPECT_EQ(r.run(), 0);
  EXPECT_EQ(r.manifest().warnings.size(), 1u);
  EXPECT_EQ(r.manifest().provenance.at("A"), "fixture-fallback");
  const auto rec = nlohmann::json::parse(slurp(r.root() / "homoclinic_k0.5000.json"));
  EXPECT_EQ(rec["records"][0]["provenance"]["S"], "computed");
  EXPECT_EQ(rec["records"][0]["mu"], 0);
  EXPECT_EQ(rec["records"][1]["mu"], 1);
  EXPECT_TRUE(rec["records"][0]["L"].is_null());
  const std::string table = slurp(r.root() / "delta_s.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')), "k,S1,S2,dS_action,lobe_area,estimate,rel_dev");
}

TEST(Runner, ExportHeaders) {
  auto header = [](const std::filesystem::path& p) {
    const std::string t = slurp(p);
    return t.substr(0, t.find('\n'));
  };
  {
    ScanConfig c = small("spectrum", "spectrum");
    c.N_list = {40};
    Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
    EXPECT_EQ(r.run(), 0);
    EXPECT_EQ(header(r.root() / "spectrum_N40.csv"), "k,N,index,eigenphase,intensity");
    const auto side = nlohmann::json::parse(slurp(r.root() / "spectrum_N40_eigenvectors.bin.json"));
    EXPECT_EQ(side["shape"], nlohmann::json::array({40, 40, 2}));
    EXPECT_EQ(std::filesystem::file_size(r.root() / "spectrum_N40_eigenvectors.bin"), 40u * 40u * 2u * 8u);
  }
  {
    ScanConfig c = small("manifolds", "manifolds");
    c.arc_length = 2.0;
    Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
    EXPECT_EQ(r.run(), 0);
    EXPECT_EQ(header(r.root() / "manifolds.csv"), "branch,arc_param,q,p");
  }
  {
    ScanConfig c = small("special-functions", "special");
    c.x_min = -2.0;
    c.x_max = 2.0;
    c.x_step = 0.5;
    Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
    EXPECT_EQ(r.run(), 0);
    EXPECT_EQ(header(r.root() / "special_functions.csv"), "x,eta_interp,eta_oracle,ftilde_interp,ftilde_oracle");
  }
  {
    ScanConfig c = small("spacing", "spacing");
    c.N_list = {158};
    Runner r(c, semiclassics::FixtureSet::builtin(), "builtin");
    EXPECT_EQ(r.run(), 0);
    EXPECT_EQ(header(r.root() / "quantization_N158.csv"), "n,label,x,phi");
  }
}
