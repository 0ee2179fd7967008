#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qsm/classical/homoclinic.hpp"
#include "qsm/classical/lobe_estimate.hpp"
#include "qsm/experiments/config.hpp"
#include "qsm/experiments/gallery.hpp"
#include "qsm/experiments/io.hpp"
#include "qsm/experiments/manifest.hpp"
#include "qsm/experiments/scans.hpp"
#include "qsm/experiments/spacing.hpp"
#include "qsm/experiments/svg.hpp"
#include "qsm/quantum/propagator.hpp"
#include "qsm/semiclassics/oracle.hpp"
#include "qsm/semiclassics/special_functions.hpp"

namespace qsm::experiments {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"correlation-scan", "spectrum",  "spacing",
                                              "ipr-scan",         "phase-diagram", "husimi",
                                              "manifolds",        "homoclinic", "special-functions"};
  return names;
}

namespace detail {

inline std::string tag(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << x;
  return s.str();
}

// phi_BS(k) wrapped into [0, 2pi) with NaN breaks at the wraps.
inline std::pair<std::vector<double>, std::vector<double>> bs_line(int N, const std::vector<double>& ks) {
  std::vector<double> x, y;
  double prev = NAN;
  for (double k : ks) {
    const double phi = wrap_phase(semiclassics::bohr_sommerfeld_phase(N, k));
    if (std::isfinite(prev) && std::abs(phi - prev) > pi) {
      x.push_back(NAN);
      y.push_back(NAN);
    }
    x.push_back(k);
    y.push_back(phi);
    prev = phi;
  }
  return {x, y};
}

inline double centred(double u) { return u >= 0.5 ? u - 1.0 : u; }

// Keeps polyline vertices at least `step` apart (NaN breaks preserved).
inline TorusPolyline thin(const TorusPolyline& in, double step, bool centre) {
  TorusPolyline out;
  double lq = NAN, lp = NAN;
  for (std::size_t i = 0; i < in.q.size(); ++i) {
    double q = in.q[i], p = in.p[i];
    if (std::isfinite(q) && centre) q = centred(q), p = centred(p);
    const bool brk = !std::isfinite(q);
    if (!brk && std::isfinite(lq) && std::hypot(q - lq, p - lp) < step) continue;
    if (!brk && std::isfinite(lq) && (std::abs(q - lq) > 0.5 || std::abs(p - lp) > 0.5)) {
      out.q.push_back(NAN);
      out.p.push_back(NAN);
    }
    out.q.push_back(q);
    out.p.push_back(p);
    lq = q;
    lp = p;
  }
  return out;
}

inline nlohmann::ordered_json record_json(const classical::HomoclinicRecord& r,
                                          const semiclassics::FixtureLookup& relevance) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["seed_point"] = {r.seed_point.q, r.seed_point.p};
  j["lifted_intersection"] = {r.intersection.point.q, r.intersection.point.p};
  j["orbit_length"] = r.orbit.points.size();
  j["S"] = r.S;
  j["mu"] = r.mu;
  const double A = r.index == 1 ? relevance.fixture.A1 : relevance.fixture.A2;
  const auto L = r.index == 1 ? relevance.fixture.L1 : relevance.fixture.L2;
  j["A"] = A;
  j["L"] = L ? nlohmann::ordered_json(*L) : nlohmann::ordered_json(nullptr);
  j["provenance"] = {{"S", "computed"},
                     {"mu", std::string(to_string(r.mu_source))},
                     {"A", "fixture"},
                     {"L", L ? "fixture" : "absent"}};
  j["fixture_k"] = relevance.fixture.k;
  j["fixture_exact"] = relevance.exact;
  return j;
}

}  // namespace detail

class Runner {
 public:
  Runner(ScanConfig cfg, semiclassics::FixtureSet fixtures, std::string fixture_source, std::ostream* log = nullptr)
      : cfg_((cfg.validate(), std::move(cfg))),
        fixtures_(std::move(fixtures)),
        fixture_source_(std::move(fixture_source)),
        out_(cfg_.output_dir),
        log_(log) {
    auto& m = out_.manifest();
    m.experiment = cfg_.experiment;
    m.config = cfg_.echo();
    m.config["fixtures"] = fixture_source_;
  }

  // 0 when every task succeeded, 2 otherwise.
  int run() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string& e = cfg_.experiment;
    if (e == "correlation-scan") correlation();
    else if (e == "spectrum") spectrum();
    else if (e == "spacing") spacing();
    else if (e == "ipr-scan") ipr();
    else if (e == "phase-diagram") phase();
    else if (e == "husimi") husimi();
    else if (e == "manifolds") manifolds();
    else if (e == "homoclinic") homoclinic();
    else if (e == "special-functions") special_functions();
    else throw Error(ErrorCode::config_error, "unknown experiment '" + e + "'");
    auto& m = out_.manifest();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out_.finalize();
    return m.failures() ? 2 : 0;
  }

  const RunManifest& manifest() const { return out_.manifest(); }
  const std::filesystem::path& root() const { return out_.root(); }

 private:
  ScanConfig cfg_;
  semiclassics::FixtureSet fixtures_;
  std::string fixture_source_;
  OutputDir out_;
  std::ostream* log_;

  void say(const std::string& s) {
    if (log_) *log_ << s << std::endl;
  }

  nlohmann::ordered_json& summary() { return out_.manifest().summary; }

  void record(const std::string& name, TaskStatus status, double seconds, const std::string& msg = "") {
    out_.manifest().tasks.push_back({name, status, seconds, msg});
    if (status == TaskStatus::failed) say("  task " + name + " failed: " + msg);
  }

  // Runs f as one named task; exceptions mark the task failed.
  bool task(const std::string& name, const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      f();
    } catch (const std::exception& ex) {
      record(name, TaskStatus::failed, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
             ex.what());
      return false;
    }
    record(name, TaskStatus::ok, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return true;
  }

  void warn(const std::string& w) {
    auto& ws = out_.manifest().warnings;
    if (std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
    say("  warning: " + w);
  }

  // Relevance provenance for outputs that depend on A.
  std::string relevance_provenance(const semiclassics::FixtureLookup& f) {
    if (!f.exact) warn(f.warning);
    const std::string p = f.exact ? "fixture" : "fixture-fallback";
    out_.manifest().provenance["S"] = "computed";
    out_.manifest().provenance["mu"] = "configured";
    auto& a = out_.manifest().provenance["A"];
    if (a != "fixture-fallback") a = p;
    out_.manifest().provenance["L"] = f.fixture.L1 ? "fixture" : "absent";
    return p;
  }

  // ------------------------------------------------------------ scenarios

  void correlation() {
    const int N = static_cast<int>(cfg_.N_list.front());
    const auto ks = cfg_.k_grid();
    say("correlation-scan N=" + std::to_string(N) + " over " + std::to_string(ks.size()) + " k values");
    const auto scan = correlation_scan(N, ks, cfg_.threads, cfg_.residual_tol);
    CsvTable table({"k", "N", "index", "eigenphase", "intensity"});
    CsvTable ridge({"k", "phi_bs", "top_index", "top_phase", "top_intensity", "ipr", "count_above_threshold"});
    SvgPlot plot("Eigenphase correlation diagram, N=" + std::to_string(N), "k", "eigenphase");
    plot.y_range(0.0, two_pi);
    std::vector<double> gx, gy, bx[3], by[3];
    const double levels[3] = {cfg_.intensity_threshold, 0.05, 0.2};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto& o = scan.slices[i];
      record("k=" + format_double(ks[i]), o.ok() ? TaskStatus::ok : TaskStatus::failed, o.seconds, o.error);
      if (!o.ok()) continue;
      const auto& s = *o.value;
      Eigen::Index top = 0;
      s.intensities.maxCoeff(&top);
      long above = 0;
      for (Eigen::Index j = 0; j < s.eigenphases.size(); ++j) {
        table.add({ks[i], N, static_cast<long>(j), s.eigenphases(j), s.intensities(j)});
        gx.push_back(ks[i]);
        gy.push_back(s.eigenphases(j));
        if (s.intensities(j) > cfg_.intensity_threshold) ++above;
        for (int b = 2; b >= 0; --b) {
          if (s.intensities(j) > levels[b]) {
            bx[b].push_back(ks[i]);
            by[b].push_back(s.eigenphases(j));
            break;
          }
        }
      }
      ridge.add({ks[i], wrap_phase(semiclassics::bohr_sommerfeld_phase(N, ks[i])), static_cast<long>(top),
                 s.eigenphases(top), s.intensities(top), quantum::ipr(s.intensities), above});
    }
    const bool partial = scan.failures() > 0;
    out_.write_csv("correlation_N" + std::to_string(N) + ".csv", table, "computed", partial);
    out_.write_csv("ridge_N" + std::to_string(N) + ".csv", ridge, "computed", partial);
    plot.points(gx, gy, "#c8c8c8", 0.5, 1.0);
    const char* colours[3] = {"#4c72b0", "#dd8452", "#c44e52"};
    for (int b = 0; b < 3; ++b)
      plot.points(bx[b], by[b], colours[b], 1.2 + 0.4 * b, 1.0, "|c|^2 > " + format_double(levels[b]));
    const auto [lx, ly] = detail::bs_line(N, ks);
    plot.line(lx, ly, "#222222", 0.8, "phi_BS", true);
    out_.write("correlation_N" + std::to_string(N) + ".svg", plot.render(), "computed", partial);

    const auto& r = scan.ridge;
    summary()["N"] = N;
    summary()["tracking_fraction"] = r.tracking_fraction;
    summary()["ipr_band_low"] = r.ipr_low;
    summary()["ipr_band_high"] = r.ipr_high;
    summary()["top_intensity_band_low"] = r.top_low;
    summary()["top_intensity_band_high"] = r.top_high;
    summary()["fragmentation"] = r.fragmentation;
    summary()["bands_covered"] = r.bands_covered;
  }

  void spectrum() {
    for (long Nl : cfg_.N_list) {
      const int N = static_cast<int>(Nl);
      const double k = cfg_.k;
      task("spectrum N=" + std::to_string(N), [&] {
        say("spectrum N=" + std::to_string(N) + " k=" + format_double(k));
        const quantum::TorusHilbert space(N);
        quantum::EigensolverOptions opt;
        opt.residual_tol = cfg_.residual_tol;
        quantum::SpectralDecomposition d = quantum::diagonalize_floquet(space, k, opt);
        const auto z0 = quantum::resonance_state(space, k);
        quantum::spectral_decomposition(d, z0);
        const auto U = quantum::build_propagator(space, k);
        const std::string stem = "spectrum_N" + std::to_string(N);
        CsvTable table({"k", "N", "index", "eigenphase", "intensity"});
        for (Eigen::Index i = 0; i < N; ++i) table.add({k, N, static_cast<long>(i), d.eigenphases(i), d.intensities(i)});
        out_.write_csv(stem + ".csv", table);

        BinaryArray vec;
        vec.shape = {static_cast<std::size_t>(N), static_cast<std::size_t>(N), 2};
        vec.description = "Floquet eigenvectors: [position index j, eigenvector index i, (re, im)]; column i "
                          "belongs to eigenphase i of " + stem + ".csv";
        vec.data.reserve(2 * static_cast<std::size_t>(N) * N);
        for (Eigen::Index j = 0; j < N; ++j)
          for (Eigen::Index i = 0; i < N; ++i) {
            vec.data.push_back(d.eigenvectors(j, i).real());
            vec.data.push_back(d.eigenvectors(j, i).imag());
          }
        out_.write_binary(stem + "_eigenvectors.bin", vec);

        const auto mom = quantum::phase_moments(d, N, k);
        SvgPlot plot("Resonance intensities, N=" + std::to_string(N) + ", k=" + format_double(k), "eigenphase",
                     "|c|^2");
        std::vector<double> sx, sy;
        for (Eigen::Index i = 0; i < N; ++i) {
          sx.insert(sx.end(), {d.eigenphases(i), d.eigenphases(i), NAN});
          sy.insert(sy.end(), {0.0, d.intensities(i), NAN});
        }
        plot.x_range(0.0, two_pi);
        plot.line(sx, sy, "#4c72b0", 1.2, "intensity");
        plot.vline(wrap_phase(mom.phi_bs), "#c44e52", "phi_BS");
        out_.write(stem + ".svg", plot.render());

        auto& s = summary()["N=" + std::to_string(N)];
        s["k"] = k;
        s["unitarity_defect"] = quantum::unitarity_defect(U.entries);
        s["max_residual"] = d.max_residual();
        s["intensity_sum"] = d.intensities.sum();
        s["phi_bs"] = mom.phi_bs;
        s["mean_phase"] = mom.mean;
        s["dispersion"] = mom.dispersion;
        s["dispersion_estimate"] = mom.target_dispersion;
        s["autocorrelation"] = quantum::autocorrelation(U, z0);
        s["autocorrelation_estimate"] = semiclassics::autocorrelation_estimate(k);
        s["ipr"] = quantum::ipr(d.intensities);
        s["method"] = d.method;
      });
    }
  }

  void spacing() {
    const double k = cfg_.k;
    std::vector<double> deviations;
    std::vector<long> Ns;
    for (long Nl : cfg_.N_list) {
      const int N = static_cast<int>(Nl);
      task("spacing N=" + std::to_string(N), [&] {
        say("spacing N=" + std::to_string(N) + " k=" + format_double(k));
        const auto input = semiclassical_input(k, fixtures_, cfg_.classical_tol);
        const std::string prov = relevance_provenance(input.relevance);
        const auto slice = spectrum_slice(N, k, cfg_.residual_tol);
        const auto a = analyze_spacing(slice, input, cfg_.intensity_floor, cfg_.neighbor_ratio);
        const std::string stem = "spacing_N" + std::to_string(N);

        CsvTable comb({"label", "index", "phi", "intensity", "x"});
        for (const auto& c : a.comb) comb.add({c.label, c.index, c.phi, c.intensity, c.x});
        out_.write_csv(stem + "_comb.csv", comb);
        CsvTable sp({"phi_mid", "spacing", "label_low"});
        for (const auto& s : a.spacings) sp.add({s.phi_mid, s.spacing, s.label_low});
        out_.write_csv(stem + "_spacings.csv", sp);
        CsvTable q({"n", "label", "x", "phi"});
        for (const auto& s : a.semiclassical) q.add({s.n, s.label, s.x, s.phi});
        out_.write_csv("quantization_N" + std::to_string(N) + ".csv", q, prov);
        CsvTable cmp({"label", "n", "phi_semiclassical", "phi_quantum", "deviation"});
        for (const auto& c : a.comparison) cmp.add({c.label, c.n, c.phi_semi, c.phi_quantum, c.deviation});
        out_.write_csv(stem + "_comparison.csv", cmp, prov);

        SvgPlot plot("Unfolded spacings, N=" + std::to_string(N) + ", k=" + format_double(k), "phi",
                     "phi_{i+1} - phi_i");
        std::vector<double> mx, my, sx, sy;
        for (const auto& s : a.spacings) mx.push_back(s.phi_mid), my.push_back(s.spacing);
        std::vector<double> semi;
        for (const auto& s : a.semiclassical) semi.push_back(unwrap_near(s.phi, a.phi_bs));
        std::sort(semi.begin(), semi.end());
        for (std::size_t i = 0; i + 1 < semi.size(); ++i)
          sx.push_back(0.5 * (semi[i] + semi[i + 1])), sy.push_back(semi[i + 1] - semi[i]);
        plot.line(sx, sy, "#55a868", 1.2, "semiclassical", true);
        plot.line(mx, my, "#4c72b0", 1.5, "quantum");
        plot.points(mx, my, "#4c72b0", 2.5);
        plot.vline(a.phi_bs, "#c44e52", "phi_BS");
        out_.write(stem + ".svg", plot.render(), prov);

        const double hbar = semiclassics::planck(N);
        const double A = input.relevance.fixture.A();
        auto& s = summary()["N=" + std::to_string(N)];
        s["k"] = k;
        s["phi_bs"] = a.phi_bs;
        s["comb_states"] = a.comb.size();
        s["minimum_phi"] = a.minimum_phi;
        s["minimum_spacing"] = a.minimum_spacing;
        s["minimum_offset"] = a.minimum_offset();
        s["mean_spacing"] = a.mean_spacing;
        s["n0"] = semiclassics::find_label(a.semiclassical, 0) ? semiclassics::find_label(a.semiclassical, 0)->n : -1;
        s["compared_labels"] = a.comparison.size();
        s["max_deviation"] = a.max_deviation;
        s["S"] = input.S();
        s["dS"] = input.dS();
        s["A"] = A;
        s["log_A_over_hbar"] = std::log(A / hbar);
        s["closed_form_count"] = std::sqrt(2.0) * std::log(A / hbar);
        s["measured_count"] = 2.0 * semiclassics::phase_dispersion(k) / a.minimum_spacing;
        deviations.push_back(a.max_deviation);
        Ns.push_back(N);
      });
    }
    if (deviations.size() >= 2) summary()["deviation_ratio_last_over_first"] = deviations.back() / deviations.front();
  }

  void ipr() {
    std::vector<long> Ns;
    for (long N : cfg_.N_list) {
      if (N >= 3000 && !cfg_.include_long) {
        record("ipr N=" + std::to_string(N), TaskStatus::skipped, 0.0, "long-running; set include_long = true");
        continue;
      }
      Ns.push_back(N);
    }
    if (Ns.empty()) return;
    const bool relative = cfg_.k_scale == "break";
    say("ipr-scan over " + std::to_string(Ns.size()) + " dimensions, " + std::to_string(cfg_.k_steps) + " points each");
    const auto t0 = std::chrono::steady_clock::now();
    const auto curves = ipr_scan(Ns, cfg_.k_grid(), relative, cfg_.window, cfg_.threads, cfg_.residual_tol);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CsvTable table({"N", "k", "ratio", "xi", "xi_avg", "normalized", "pr_over_N", "lobe_over_lambda"});
    SvgPlot norm("Normalized running IPR", "k / k_break", "xi / xi_N");
    SvgPlot pr("Participation ratio", "k", "PR / N");
    const char* colours[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
    bool partial = false;
    for (std::size_t c = 0; c < curves.size(); ++c) {
      const auto& cu = curves[c];
      record("ipr N=" + std::to_string(cu.N), cu.failures ? TaskStatus::failed : TaskStatus::ok, secs,
             cu.failures ? std::to_string(cu.failures) + " k points failed" : "");
      partial = partial || cu.failures > 0;
      for (std::size_t i = 0; i < cu.ks.size(); ++i)
        table.add({cu.N, cu.ks[i], cu.ratio[i], cu.xi[i], cu.xi_avg[i], cu.normalized[i], cu.pr_over_N[i],
                   cu.lobe_over_lambda[i]});
      const std::string col = colours[c % 6];
      norm.line(cu.ratio, cu.normalized, col, 1.5, "N=" + std::to_string(cu.N));
      pr.line(cu.ks, cu.pr_over_N, col, 1.5, "N=" + std::to_string(cu.N));

      // PR/N against 14 dS/lambda where the lobe term dominates the small-k floor
      std::vector<double> ratios;
      for (std::size_t i = 0; i < cu.ks.size(); ++i)
        if (cu.ratio[i] <= 1.0 && cu.lobe_over_lambda[i] >= cu.pr_over_N.front())
          ratios.push_back(cu.pr_over_N[i] / cu.lobe_over_lambda[i]);
      auto& s = summary()["N=" + std::to_string(cu.N)];
      s["k_break"] = cu.k_break;
      s["xi_ref"] = cu.xi_ref;
      s["plateau"] = cu.plateau;
      s["half_drop_ratio"] = cu.half_drop ? nlohmann::ordered_json(*cu.half_drop) : nlohmann::ordered_json(nullptr);
      if (!ratios.empty()) {
        std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
        s["pr_over_lobe_median"] = ratios[ratios.size() / 2];
      }
      s["failures"] = cu.failures;
    }
    summary()["window"] = cfg_.window;
    norm.hline(1.0, "#888888");
    norm.vline(1.0, "#888888");
    // overlay on the k grid of the first curve
    pr.line(curves.front().ks, curves.front().lobe_over_lambda, "#222222", 1.0, "14 dS / lambda", true);
    pr.y_range(0.0, 1.0);
    out_.write_csv("ipr_scan.csv", table, "computed", partial);
    out_.write("ipr_normalized.svg", norm.render(), "computed", partial);
    out_.write("pr_over_N.svg", pr.render(), "computed", partial);
  }

  void phase() {
    task("phase-diagram", [&] {
      const auto rows = phase_diagram(cfg_.N_list);
      CsvTable t({"N", "k_break", "interference_at_break"});
      std::vector<double> x, y;
      for (const auto& r : rows) {
        t.add({r.N, r.k_break, r.interference_at_break});
        x.push_back(static_cast<double>(r.N));
        y.push_back(r.k_break);
      }
      out_.write_csv("phase_diagram.csv", t);
      SvgPlot plot("Break of the precursor, k_break(N)", "N", "k_break");
      plot.log_x();
      plot.line(x, y, "#4c72b0", 1.5, "k_break");
      plot.points(x, y, "#4c72b0", 3.0);
      out_.write("phase_diagram.svg", plot.render());
      summary()["strictly_decreasing"] = strictly_decreasing(rows);
      summary()["N_at_k_half"] = classical::break_dimension(0.5);
    });
  }

  void husimi() {
    const int N = static_cast<int>(cfg_.N_list.front());
    const double k = cfg_.k;
    task("husimi N=" + std::to_string(N), [&] {
      say("husimi gallery N=" + std::to_string(N) + " k=" + format_double(k));
      const auto g = husimi_gallery(N, k, static_cast<int>(cfg_.top_m), static_cast<int>(cfg_.husimi_grid), fixtures_,
                                    cfg_.intensity_floor, cfg_.neighbor_ratio, cfg_.classical_tol);
      const std::string prov = relevance_provenance(g.input.relevance);
      const auto overlay = manifold_overlay(k, cfg_.arc_length, cfg_.classical_tol);
      const auto unstable = detail::thin(overlay.unstable_lines, 2e-3, true);
      const auto stable = detail::thin(overlay.stable_lines, 2e-3, true);
      const auto layer = chaotic_layer(k);

      BinaryArray lb;
      lb.shape = {layer.size(), 2};
      lb.description = "chaotic layer: 20 orbits of 10000 steps seeded within 1e-3 of the unstable manifold, (q, p) on "
                       "the unit torus";
      for (const auto& z : layer) lb.data.push_back(z.q), lb.data.push_back(z.p);
      out_.write_binary("husimi/chaotic_layer.bin", lb);

      // occupied cells of a 200x200 grid, drawn once each
      constexpr int bins = 200;
      std::vector<char> seen(bins * bins, 0);
      std::vector<double> cx, cy;
      for (const auto& z : layer) {
        const int iq = std::min(bins - 1, static_cast<int>(z.q * bins));
        const int ip = std::min(bins - 1, static_cast<int>(z.p * bins));
        if (seen[iq * bins + ip]) continue;
        seen[iq * bins + ip] = 1;
        cx.push_back(detail::centred((iq + 0.5) / bins));
        cy.push_back(detail::centred((ip + 0.5) / bins));
      }

      CsvTable t({"rank", "name", "index", "label", "n", "phi", "intensity", "x", "peak_q", "peak_p",
                  "libration_fraction", "n_deviation"});
      const int G = static_cast<int>(cfg_.husimi_grid);
      for (const auto& e : g.entries) {
        t.add({e.rank, e.name(), e.index, e.label ? Cell(*e.label) : Cell(""), e.n ? Cell(*e.n) : Cell(""), e.phi,
               e.intensity, e.x, e.peak_q, e.peak_p, e.libration, e.n_deviation});
        BinaryArray hb;
        hb.shape = {static_cast<std::size_t>(G), static_cast<std::size_t>(G)};
        hb.description = "Husimi distribution normalized to max 1; [q index, p index], q = i/" + std::to_string(G) +
                         ", p = j/" + std::to_string(G);
        for (int iq = 0; iq < G; ++iq)
          for (int ip = 0; ip < G; ++ip) hb.data.push_back(e.husimi.values(iq, ip));
        out_.write_binary("husimi/" + e.name() + ".bin", hb, prov);

        // centred torus [-1/2, 1/2)^2
        std::vector<double> v(static_cast<std::size_t>(G) * G);
        for (int iq = 0; iq < G; ++iq)
          for (int ip = 0; ip < G; ++ip) v[iq * G + ip] = e.husimi.values((iq + G / 2) % G, (ip + G / 2) % G);
        SvgPlot plot("Husimi " + e.name() + ", N=" + std::to_string(N) + ", k=" + format_double(k), "q", "p", 560,
                     560);
        plot.x_range(-0.5, 0.5).y_range(-0.5, 0.5);
        plot.heatmap(v, G, G, -0.5 - 0.5 / G, 0.5 - 0.5 / G, -0.5 - 0.5 / G, 0.5 - 0.5 / G);
        plot.points(cx, cy, "#333333", 0.5, 0.35, "chaotic layer");
        plot.line(unstable.q, unstable.p, "#c44e52", 0.8, "unstable manifold");
        plot.line(stable.q, stable.p, "#4c72b0", 0.8, "stable manifold");
        out_.write("husimi/" + e.name() + ".svg", plot.render(), prov);
      }
      out_.write_csv("husimi/gallery.csv", t, prov);
      summary()["N"] = N;
      summary()["k"] = k;
      summary()["states"] = g.entries.size();
      summary()["layer_points"] = layer.size();
    });
  }

  void manifolds() {
    const double k = cfg_.k;
    task("manifolds k=" + format_double(k), [&] {
      const auto m = manifold_overlay(k, cfg_.arc_length, cfg_.classical_tol);
      CsvTable t({"branch", "arc_param", "q", "p"});
      for (const auto* c : {&m.unstable, &m.stable}) {
        const char* name = c == &m.unstable ? "unstable" : "stable";
        for (std::size_t i = 0; i < c->points.size(); ++i) t.add({name, c->arc[i], c->points[i].q, c->points[i].p});
      }
      out_.write_csv("manifolds.csv", t);
      SvgPlot plot("Separatrix branches of z0, k=" + format_double(k), "q", "p", 560, 560);
      plot.x_range(-0.5, 0.5).y_range(-0.5, 0.5);
      const auto u = detail::thin(m.unstable_lines, 1e-3, true);
      const auto s = detail::thin(m.stable_lines, 1e-3, true);
      plot.line(u.q, u.p, "#c44e52", 0.8, "unstable");
      plot.line(s.q, s.p, "#4c72b0", 0.8, "stable");
      out_.write("manifolds.svg", plot.render());
      summary()["unstable_points"] = m.unstable.size();
      summary()["stable_points"] = m.stable.size();
      summary()["unstable_length"] = m.unstable.length();
      summary()["stable_length"] = m.stable.length();
    });
  }

  void homoclinic() {
    const auto ks = cfg_.k_grid();
    say("homoclinic invariants at " + std::to_string(ks.size()) + " k values");
    struct Row {
      classical::PrimaryHomoclinicPair pair;
      double lobe = 0.0;
    };
    const auto rows = parallel_map(ks.size(), cfg_.threads, [&](std::size_t i) {
      const classical::MapParams params(ks[i]);
      Row r{classical::find_primary_homoclinic(params, cfg_.classical_tol), 0.0};
      r.lobe = classical::lobe_area(params, r.pair, cfg_.classical_tol);
      return r;
    });
    CsvTable table({"k", "S1", "S2", "dS_action", "lobe_area", "estimate", "rel_dev"});
    std::vector<double> x, ya, yl, ye;
    bool partial = false;
    double worst = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto& o = rows[i];
      record("homoclinic k=" + format_double(ks[i]), o.ok() ? TaskStatus::ok : TaskStatus::failed, o.seconds, o.error);
      if (!o.ok()) {
        partial = true;
        continue;
      }
      const auto& p = o.value->pair;
      const double dS = p.second.S - p.first.S, lobe = o.value->lobe;
      const double est = classical::lobe_area_estimate(ks[i]);
      const double dev = std::abs(est - lobe) / lobe;
      worst = std::max(worst, dev);
      table.add({ks[i], p.first.S, p.second.S, dS, lobe, est, dev});
      x.push_back(ks[i]);
      ya.push_back(std::log10(dS));
      yl.push_back(std::log10(lobe));
      ye.push_back(std::log10(est));

      const auto rel = fixtures_.lookup(ks[i]);
      const std::string prov = relevance_provenance(rel);
      nlohmann::ordered_json j;
      j["k"] = ks[i];
      j["tol"] = cfg_.classical_tol;
      j["records"] = {detail::record_json(p.first, rel), detail::record_json(p.second, rel)};
      j["S"] = 0.5 * (p.first.S + p.second.S);
      j["dS_action"] = dS;
      j["lobe_area"] = lobe;
      const std::string stem = "homoclinic_k" + detail::tag(ks[i]);
      out_.write_json(stem + ".json", j, prov);
      CsvTable orbit({"index", "step", "q", "p"});
      for (const auto* r : {&p.first, &p.second})
        for (std::size_t s = 0; s < r->orbit.points.size(); ++s)
          orbit.add({r->index, static_cast<long>(s) - static_cast<long>(r->orbit.seed_index), r->orbit.points[s].q,
                     r->orbit.points[s].p});
      out_.write_csv(stem + "_orbits.csv", orbit);
    }
    out_.write_csv("delta_s.csv", table, "computed", partial);
    SvgPlot plot("Lobe area against k", "k", "log10 area");
    plot.line(x, ya, "#4c72b0", 1.5, "S2 - S1");
    plot.points(x, yl, "#c44e52", 3.0, 1.0, "lobe area");
    plot.line(x, ye, "#222222", 1.0, "estimate", true);
    out_.write("delta_s.svg", plot.render(), "computed", partial);
    summary()["max_rel_dev_estimate"] = worst;
  }

  void special_functions() {
    task("special-functions", [&] {
      std::vector<double> xs;
      const long n = static_cast<long>(std::floor((cfg_.x_max - cfg_.x_min) / cfg_.x_step + 1e-9));
      for (long i = 0; i <= n; ++i) xs.push_back(cfg_.x_min + i * cfg_.x_step);
      const semiclassics::SpecialFunctionOracle oracle(std::max(20.0, std::max(std::abs(cfg_.x_min), std::abs(cfg_.x_max))));
      const auto eo = oracle.eta(xs);
      const auto po = oracle.varphi(xs);
      CsvTable t({"x", "eta_interp", "eta_oracle", "ftilde_interp", "ftilde_oracle"});
      double e_eta = 0.0, e_ft = 0.0, e_phi = 0.0;
      std::vector<double> ei, fi, fo;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double a = semiclassics::eta(xs[i]), b = semiclassics::ftilde(xs[i]), c = oracle.ftilde(xs[i]);
        t.add({xs[i], a, eo[i], b, c});
        e_eta = std::max(e_eta, std::abs(a - eo[i]));
        e_ft = std::max(e_ft, std::abs(b - c));
        e_phi = std::max(e_phi, std::abs(semiclassics::varphi(xs[i]) - po[i]));
        ei.push_back(a), fi.push_back(b), fo.push_back(c);
      }
      out_.write_csv("special_functions.csv", t);
      SvgPlot pe("eta", "x", "eta");
      pe.line(xs, ei, "#4c72b0", 1.5, "interpolation");
      pe.points(xs, eo, "#c44e52", 2.0, 1.0, "quadrature");
      out_.write("eta.svg", pe.render());
      SvgPlot pf("F~", "x", "F~");
      pf.line(xs, fi, "#4c72b0", 1.5, "interpolation");
      pf.points(xs, fo, "#c44e52", 2.0, 1.0, "quadrature");
      out_.write("ftilde.svg", pf.render());

      const auto fit = semiclassics::fit_small_x(oracle);
      const auto ec = semiclassics::eta_coefficients();
      const auto fc = semiclassics::ftilde_coefficients();
      auto& s = summary();
      s["eta0_interp"] = semiclassics::eta(0.0);
      s["eta0_oracle"] = oracle.eta(0.0);
      s["ftilde0_interp"] = semiclassics::ftilde(0.0);
      s["ftilde0_oracle"] = oracle.ftilde(0.0);
      s["max_error_eta"] = e_eta;
      s["max_error_varphi"] = e_phi;
      s["max_error_ftilde"] = e_ft;
      s["fit"] = {{"eta0", fit.eta0}, {"a", fit.a}, {"b", fit.b}};
      s["coefficients"] = {{"B", ec.B}, {"A", ec.A}, {"C", ec.C}, {"D", fc.D}, {"E", fc.E}};
    });
  }
};

}  // namespace qsm::experiments
