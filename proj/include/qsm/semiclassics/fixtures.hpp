#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsm/error.hpp"

namespace qsm::semiclassics {

// Relevances A_j (and optionally Lazutkin invariants L_j) of the two primary
// homoclinic orbits at one k.  These are inputs, not computed.
struct RelevanceFixture {
  double k = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  std::optional<double> L1, L2;
  std::string source = "builtin";

  double A() const { return 0.5 * (A1 + A2); }
  double dA() const { return A2 - A1; }
};

struct FixtureLookup {
  RelevanceFixture fixture;
  bool exact = true;
  std::string warning;
};

class FixtureSet {
 public:
  FixtureSet() = default;
  explicit FixtureSet(std::vector<RelevanceFixture> items) : items_(std::move(items)) {}

  // Published values at k = 0.5: A = 0.53998, dA = 5.8e-4; no L.
  static FixtureSet builtin() {
    RelevanceFixture f;
    f.k = 0.5;
    f.A1 = 0.53998 - 0.5 * 5.8e-4;
    f.A2 = 0.53998 + 0.5 * 5.8e-4;
    return FixtureSet({f});
  }

  // {"fixtures": [{"k": 0.5, "A1": .., "A2": .., "L1": .., "L2": ..}, ...]}
  // with "A" and "dA" accepted in place of A1/A2.
  static FixtureSet from_json(const nlohmann::json& j, const std::string& source = "json") {
    require(j.contains("fixtures") && j["fixtures"].is_array(), ErrorCode::config_error,
            "fixture file needs a 'fixtures' array");
    std::vector<RelevanceFixture> items;
    for (const auto& e : j["fixtures"]) {
      RelevanceFixture f;
      f.source = source;
      require(e.contains("k"), ErrorCode::config_error, "fixture without k");
      f.k = e["k"].get<double>();
      if (e.contains("A1") && e.contains("A2")) {
        f.A1 = e["A1"].get<double>();
        f.A2 = e["A2"].get<double>();
      } else if (e.contains("A")) {
        const double A = e["A"].get<double>();
        const double dA = e.value("dA", 0.0);
        f.A1 = A - 0.5 * dA;
        f.A2 = A + 0.5 * dA;
      } else {
        throw Error(ErrorCode::config_error, "fixture at k=" + std::to_string(f.k) + " has no relevance");
      }
      require(f.A1 > 0.0 && f.A2 > 0.0, ErrorCode::config_error, "relevances must be positive");
      if (e.contains("L1")) f.L1 = e["L1"].get<double>();
      if (e.contains("L2")) f.L2 = e["L2"].get<double>();
      items.push_back(f);
    }
    require(!items.empty(), ErrorCode::config_error, "fixture file is empty");
    return FixtureSet(std::move(items));
  }

  static FixtureSet load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::config_error, "cannot read fixture file " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::config_error, "fixture file " + path + ": " + e.what());
    }
    return from_json(j, path);
  }

  // Exact match within 1e-9 in k; otherwise the fixture closest to k = 0.5
  // (or the only one) with a warning.
  FixtureLookup lookup(double k) const {
    require(!items_.empty(), ErrorCode::missing_relevance, "no relevance fixtures available");
    for (const auto& f : items_)
      if (std::abs(f.k - k) <= 1e-9) return {f, true, ""};
    const RelevanceFixture* best = &items_.front();
    for (const auto& f : items_)
      if (std::abs(f.k - 0.5) < std::abs(best->k - 0.5)) best = &f;
    return {*best, false,
            "no relevance fixture for k=" + std::to_string(k) + "; using A(k=" + std::to_string(best->k) + ")"};
  }

  const std::vector<RelevanceFixture>& items() const { return items_; }

 private:
  std::vector<RelevanceFixture> items_;
};

}  // namespace qsm::semiclassics
