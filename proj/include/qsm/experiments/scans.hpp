#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qsm/classical/lobe_estimate.hpp"
#include "qsm/experiments/config.hpp"
#include "qsm/experiments/parallel.hpp"
#include "qsm/quantum/spectral.hpp"
#include "qsm/semiclassics/quantization.hpp"

namespace qsm::experiments {

// Eigenphases and resonance intensities at one (N, k); eigenvectors dropped.
struct SpectrumSlice {
  int N = 0;
  double k = 0.0;
  Eigen::VectorXd eigenphases;
  Eigen::VectorXd intensities;
  double max_residual = 0.0;
};

inline SpectrumSlice spectrum_slice(int N, double k, double residual_tol = 1e-10) {
  const quantum::TorusHilbert space(N);
  quantum::EigensolverOptions opt;
  opt.residual_tol = residual_tol;
  quantum::SpectralDecomposition d = quantum::diagonalize_floquet(space, k, opt);
  quantum::spectral_decomposition(d, quantum::resonance_state(space, k));
  return {N, k, std::move(d.eigenphases), std::move(d.intensities), d.max_residual()};
}

// Centered running mean; the window shrinks symmetrically at the ends.
inline std::vector<double> running_average(const std::vector<double>& v, long window) {
  require(window >= 1 && window % 2 == 1, ErrorCode::invalid_argument, "window must be odd and >= 1");
  const long n = static_cast<long>(v.size()), h = window / 2;
  std::vector<double> out(v.size());
  for (long i = 0; i < n; ++i) {
    const long r = std::min({h, i, n - 1 - i});
    double s = 0.0;
    for (long j = i - r; j <= i + r; ++j) s += v[j];
    out[i] = s / static_cast<double>(2 * r + 1);
  }
  return out;
}

// ---------------------------------------------------------------- correlation

struct RidgeMetrics {
  double tracking_fraction = 0.0;  // k in [0.05, 1.4] whose strongest state sits within sigma_phi of phi_BS
  double ipr_low = 0.0;            // mean IPR over k in [0.4, 0.6]
  double ipr_high = 0.0;           // mean IPR over k in [1.4, 1.8]
  double top_low = 0.0;            // mean strongest intensity, same bands
  double top_high = 0.0;
  double fragmentation = 0.0;  // 1 - ipr_high / ipr_low
  bool bands_covered = false;
};

struct CorrelationScan {
  int N = 0;
  std::vector<double> ks;
  std::vector<TaskOutcome<SpectrumSlice>> slices;
  RidgeMetrics ridge;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(slices.begin(), slices.end(), [](const auto& s) { return !s.ok(); }));
  }
};

inline RidgeMetrics ridge_metrics(const CorrelationScan& scan) {
  RidgeMetrics m;
  int tracked = 0, tracked_total = 0, nl = 0, nh = 0;
  for (std::size_t i = 0; i < scan.ks.size(); ++i) {
    if (!scan.slices[i].ok()) continue;
    const auto& s = *scan.slices[i].value;
    const double k = scan.ks[i];
    Eigen::Index top = 0;
    const double top_val = s.intensities.maxCoeff(&top);
    if (k >= 0.05 && k <= 1.4) {
      const double bs = semiclassics::bohr_sommerfeld_phase(scan.N, k);
      ++tracked_total;
      if (std::abs(circular_difference(s.eigenphases(top), bs)) <= semiclassics::phase_dispersion(k)) ++tracked;
    }
    const double xi = quantum::ipr(s.intensities);
    if (k >= 0.4 && k <= 0.6) {
      m.ipr_low += xi;
      m.top_low += top_val;
      ++nl;
    } else if (k >= 1.4 && k <= 1.8) {
      m.ipr_high += xi;
      m.top_high += top_val;
      ++nh;
    }
  }
  m.tracking_fraction = tracked_total ? static_cast<double>(tracked) / tracked_total : 0.0;
  m.bands_covered = nl > 0 && nh > 0;
  if (nl) m.ipr_low /= nl, m.top_low /= nl;
  if (nh) m.ipr_high /= nh, m.top_high /= nh;
  m.fragmentation = m.bands_covered ? 1.0 - m.ipr_high / m.ipr_low : 0.0;
  return m;
}

inline CorrelationScan correlation_scan(int N, const std::vector<double>& ks, long threads, double residual_tol = 1e-10) {
  CorrelationScan scan;
  scan.N = N;
  scan.ks = ks;
  scan.slices = parallel_map(ks.size(), threads, [&](std::size_t i) { return spectrum_slice(N, ks[i], residual_tol); });
  scan.ridge = ridge_metrics(scan);
  return scan;
}

// ----------------------------------------------------------------------- IPR

struct IprCurve {
  int N = 0;
  double k_break = 0.0;
  double xi_ref = 0.0;
  std::vector<double> ratio;  // k / k_break
  std::vector<double> ks;
  std::vector<double> xi;           // NaN where the task failed
  std::vector<double> xi_avg;       // running average of xi
  std::vector<double> normalized;   // xi_avg / xi_ref
  std::vector<double> pr_over_N;    // running average of 1/xi, divided by N
  std::vector<double> lobe_over_lambda;  // 14 dS(k) / lambda(k)
  double plateau = 0.0;             // mean of `normalized` over ratio in [0.1, 0.2]
  std::optional<double> half_drop;  // first ratio > 0.2 where normalized < plateau / 2
  std::size_t failures = 0;
};

inline constexpr double kPrSlope = 14.0;

inline IprCurve finish_ipr_curve(IprCurve c, long window) {
  const std::size_t n = c.ks.size();
  // failed points are bridged by their neighbours so the running mean stays defined
  std::vector<double> xi = c.xi, pr(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(xi[i])) continue;
    double lo = NAN, hi = NAN;
    for (std::size_t j = i; j-- > 0;)
      if (std::isfinite(c.xi[j])) {
        lo = c.xi[j];
        break;
      }
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::isfinite(c.xi[j])) {
        hi = c.xi[j];
        break;
      }
    xi[i] = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : (std::isfinite(lo) ? lo : hi);
  }
  for (std::size_t i = 0; i < n; ++i) pr[i] = 1.0 / xi[i];
  c.xi_avg = running_average(xi, window);
  const auto pr_avg = running_average(pr, window);
  c.normalized.resize(n);
  c.pr_over_N.resize(n);
  c.lobe_over_lambda.resize(n);
  double plateau = 0.0;
  int np = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c.normalized[i] = c.xi_avg[i] / c.xi_ref;
    c.pr_over_N[i] = pr_avg[i] / c.N;
    c.lobe_over_lambda[i] = kPrSlope * classical::lobe_area_estimate(c.ks[i]) / classical::stability_exponent(c.ks[i]);
    if (c.ratio[i] >= 0.1 - 1e-12 && c.ratio[i] <= 0.2 + 1e-12) {
      plateau += c.normalized[i];
      ++np;
    }
  }
  c.plateau = np ? plateau / np : NAN;
  for (std::size_t i = 1; i < n && np; ++i) {
    if (c.ratio[i] <= 0.2) continue;
    const double half = 0.5 * c.plateau;
    if (c.normalized[i] < half) {
      const double t = (c.normalized[i - 1] - half) / (c.normalized[i - 1] - c.normalized[i]);
      c.half_drop = c.ratio[i - 1] + std::clamp(t, 0.0, 1.0) * (c.ratio[i] - c.ratio[i - 1]);
      break;
    }
  }
  return c;
}

// One curve per N on a grid of k/k_break (or absolute k when `relative` is false).
inline std::vector<IprCurve> ipr_scan(const std::vector<long>& Ns, const std::vector<double>& grid, bool relative,
                                      long window, long threads, double residual_tol = 1e-10) {
  std::vector<IprCurve> curves;
  struct Task {
    std::size_t curve, point;
  };
  std::vector<Task> tasks;
  for (long N : Ns) {
    IprCurve c;
    c.N = static_cast<int>(N);
    c.k_break = classical::k_break(static_cast<double>(N));
    c.xi_ref = quantum::ipr_reference(static_cast<double>(N));
    for (double g : grid) {
      c.ratio.push_back(relative ? g : g / c.k_break);
      c.ks.push_back(relative ? g * c.k_break : g);
    }
    c.xi.assign(grid.size(), NAN);
    for (std::size_t i = 0; i < grid.size(); ++i) tasks.push_back({curves.size(), i});
    curves.push_back(std::move(c));
  }
  const auto out = parallel_map(tasks.size(), threads, [&](std::size_t t) {
    const auto& c = curves[tasks[t].curve];
    return quantum::ipr(spectrum_slice(c.N, c.ks[tasks[t].point], residual_tol).intensities);
  });
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& c = curves[tasks[t].curve];
    if (out[t].ok()) {
      c.xi[tasks[t].point] = *out[t].value;
    } else {
      ++c.failures;
    }
  }
  for (auto& c : curves) c = finish_ipr_curve(std::move(c), window);
  return curves;
}

// ------------------------------------------------------------- phase diagram

struct PhaseDiagramRow {
  long N = 0;
  double k_break = 0.0;
  double interference_at_break = 0.0;
};

inline std::vector<PhaseDiagramRow> phase_diagram(const std::vector<long>& Ns) {
  std::vector<PhaseDiagramRow> rows;
  for (long N : Ns) {
    const double kb = classical::k_break(static_cast<double>(N));
    rows.push_back({N, kb, semiclassics::interference_factor(static_cast<double>(N), classical::lobe_area_estimate(kb))});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
  return rows;
}

inline bool strictly_decreasing(const std::vector<PhaseDiagramRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].k_break < rows[i - 1].k_break)) return false;
  return true;
}

}  // namespace qsm::experiments
