#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qsm/classical/homoclinic.hpp"
#include "qsm/experiments/scans.hpp"
#include "qsm/semiclassics/fixtures.hpp"
#include "qsm/semiclassics/quantization.hpp"

namespace qsm::experiments {

// Homoclinic input for the semiclassical side at one k: S from manifold
// geometry, relevances from fixtures.
struct SemiclassicalInput {
  double k = 0.0;
  double S1 = 0.0, S2 = 0.0;
  semiclassics::FixtureLookup relevance;

  double S() const { return 0.5 * (S1 + S2); }
  double dS() const { return S2 - S1; }
  semiclassics::HomoclinicInvariants mean() const { return {S(), 0.5, relevance.fixture.A(), std::nullopt}; }
};

// Primary homoclinic actions are cached per (k, tol): they cost a few seconds.
inline std::pair<double, double> primary_actions(double k, double tol = 1e-9) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>, std::pair<double, double>> cache;
  {
    const std::lock_guard lock(mutex);
    if (const auto it = cache.find({k, tol}); it != cache.end()) return it->second;
  }
  const auto pair = classical::find_primary_homoclinic(classical::MapParams(k), tol);
  const std::pair<double, double> S{pair.first.S, pair.second.S};
  const std::lock_guard lock(mutex);
  cache[{k, tol}] = S;
  return S;
}

inline SemiclassicalInput semiclassical_input(double k, const semiclassics::FixtureSet& fixtures, double tol = 1e-9) {
  const auto [S1, S2] = primary_actions(k, tol);
  return {k, S1, S2, fixtures.lookup(k)};
}

// A state of the resonance comb with its phase unwrapped next to phi_BS.
struct CombState {
  int index = 0;
  double phi = 0.0;  // phi_BS - pi < phi <= phi_BS + pi
  double intensity = 0.0;
  double x = 0.0;
  long label = 0;
};

// States above `floor`, unwrapped onto the Demkov structure centred at phi_BS
// (phases farther than pi belong to the neighbouring structure and move by
// 2 pi).  A state much weaker than its comb neighbours (intensity below
// `ratio` times their geometric mean) is an avoided-crossing partner or an
// intruder and is dropped, weakest first.  Labels count comb teeth from the
// tooth nearest phi_BS, growing with phi.
inline std::vector<CombState> select_comb(const Eigen::VectorXd& phases, const Eigen::VectorXd& intensities, int N,
                                          double k, double floor, double ratio, double x_window = 3.0) {
  const double bs = semiclassics::bohr_sommerfeld_phase(N, k);
  const double lambda = classical::stability_exponent(k);
  std::vector<CombState> s;
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    if (!(intensities(i) > floor)) continue;
    const double phi = unwrap_near(phases(i), bs);
    s.push_back({static_cast<int>(i), phi, intensities(i), (bs - phi) / lambda, 0});
  }
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.phi < b.phi; });
  while (s.size() > 2 && ratio > 0.0) {
    std::size_t worst = 0;
    double worst_ratio = INFINITY;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double ref;
      if (i == 0) ref = s[1].intensity;
      else if (i + 1 == s.size()) ref = s[i - 1].intensity;
      else ref = std::sqrt(s[i - 1].intensity * s[i + 1].intensity);
      const double r = s[i].intensity / ref;
      if (r < worst_ratio) {
        worst_ratio = r;
        worst = i;
      }
    }
    if (worst_ratio >= ratio) break;
    s.erase(s.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  std::erase_if(s, [&](const CombState& c) { return std::abs(c.x) > x_window; });
  if (s.empty()) return s;
  std::size_t centre = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::abs(s[i].phi - bs) < std::abs(s[centre].phi - bs)) centre = i;
  for (std::size_t i = 0; i < s.size(); ++i) s[i].label = static_cast<long>(i) - static_cast<long>(centre);
  return s;
}

struct SpacingPoint {
  double phi_mid = 0.0;
  double spacing = 0.0;
  long label_low = 0;
};

struct LabelComparison {
  long label = 0;
  long n = 0;
  double phi_semi = 0.0;
  double phi_quantum = 0.0;
  double deviation = 0.0;  // phi_semi - phi_quantum
};

struct SpacingAnalysis {
  int N = 0;
  double k = 0.0;
  double phi_bs = 0.0;
  double lambda = 0.0;
  double mean_spacing = 0.0;  // lambda / ln(A/hbar)
  double predicted_count = 0.0;
  std::vector<CombState> comb;
  std::vector<SpacingPoint> spacings;
  double minimum_phi = 0.0;
  double minimum_spacing = 0.0;
  std::vector<semiclassics::QuantizationSolution> semiclassical;
  std::vector<LabelComparison> comparison;  // labels -3..3 present on both sides
  double max_deviation = 0.0;
  int influenced_count = 0;  // comb states within sigma_phi of phi_BS
  SemiclassicalInput input;

  double minimum_offset() const { return minimum_phi - phi_bs; }
};

// Location of the smallest spacing, refined by the parabola through it and its
// neighbours (clamped to the neighbouring midpoints).
inline std::pair<double, double> spacing_minimum(const std::vector<SpacingPoint>& sp) {
  require(!sp.empty(), ErrorCode::too_few_states, "no spacings");
  std::size_t m = 0;
  for (std::size_t i = 1; i < sp.size(); ++i)
    if (sp[i].spacing < sp[m].spacing) m = i;
  if (m == 0 || m + 1 == sp.size()) return {sp[m].phi_mid, sp[m].spacing};
  const double x0 = sp[m - 1].phi_mid, x1 = sp[m].phi_mid, x2 = sp[m + 1].phi_mid;
  const double y0 = sp[m - 1].spacing, y1 = sp[m].spacing, y2 = sp[m + 1].spacing;
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a > 0.0)) return {x1, y1};
  const double b = d01 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  return {xv, y1 + d01 * (xv - x1) + a * (xv - x0) * (xv - x1)};
}

inline SpacingAnalysis analyze_spacing(const SpectrumSlice& slice, const SemiclassicalInput& input,
                                       double floor = 5e-6, double ratio = 0.05) {
  SpacingAnalysis a;
  a.N = slice.N;
  a.k = slice.k;
  a.input = input;
  a.phi_bs = semiclassics::bohr_sommerfeld_phase(a.N, a.k);
  a.lambda = classical::stability_exponent(a.k);
  const auto ms = semiclassics::mean_spacing_estimate(a.N, a.k, input.relevance.fixture.A());
  a.mean_spacing = ms.spacing;
  a.predicted_count = ms.count;

  a.comb = select_comb(slice.eigenphases, slice.intensities, a.N, a.k, floor, ratio);
  if (a.comb.size() < 5) {
    throw Error(ErrorCode::too_few_states, "only " + std::to_string(a.comb.size()) +
                                               " comb states above the intensity floor at N=" + std::to_string(a.N));
  }
  for (std::size_t i = 0; i + 1 < a.comb.size(); ++i) {
    a.spacings.push_back({0.5 * (a.comb[i].phi + a.comb[i + 1].phi), a.comb[i + 1].phi - a.comb[i].phi,
                          a.comb[i].label});
  }
  std::tie(a.minimum_phi, a.minimum_spacing) = spacing_minimum(a.spacings);

  const double sigma = semiclassics::phase_dispersion(a.k);
  for (const auto& c : a.comb)
    if (std::abs(c.phi - a.phi_bs) <= sigma) ++a.influenced_count;

  a.semiclassical = semiclassics::solve_quantization(a.N, a.k, input.mean());
  for (const auto& s : a.semiclassical) {
    if (std::abs(s.label) > 3) continue;
    const auto it = std::find_if(a.comb.begin(), a.comb.end(), [&](const CombState& c) { return c.label == s.label; });
    if (it == a.comb.end()) continue;
    const double phi_semi = unwrap_near(s.phi, a.phi_bs);
    a.comparison.push_back({s.label, s.n, phi_semi, it->phi, phi_semi - it->phi});
    a.max_deviation = std::max(a.max_deviation, std::abs(phi_semi - it->phi));
  }
  return a;
}

}  // namespace qsm::experiments
