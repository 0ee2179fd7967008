#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "qsm/error.hpp"

namespace qsm::experiments {

// Minimal self-contained SVG chart: lines, markers, reference lines and a
// heat map on linear or log-x axes.  Polylines break at NaN entries.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel, int width = 760, int height = 500)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), w_(width), h_(height) {}

  SvgPlot& log_x(bool on = true) {
    log_x_ = on;
    return *this;
  }
  SvgPlot& x_range(double lo, double hi) {
    x_lo_ = lo;
    x_hi_ = hi;
    fixed_x_ = true;
    return *this;
  }
  SvgPlot& y_range(double lo, double hi) {
    y_lo_ = lo;
    y_hi_ = hi;
    fixed_y_ = true;
    return *this;
  }

  void line(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
            double width = 1.5, const std::string& label = "", bool dashed = false) {
    series_.push_back({Kind::line, xs, ys, color, width, 1.0, label, dashed});
  }

  void points(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
              double radius = 2.0, double opacity = 1.0, const std::string& label = "") {
    series_.push_back({Kind::points, xs, ys, color, radius, opacity, label, false});
  }

  void hline(double y, const std::string& color, const std::string& label = "") {
    refs_.push_back({false, y, color, label});
  }
  void vline(double x, const std::string& color, const std::string& label = "") {
    refs_.push_back({true, x, color, label});
  }

  // nx x ny cells covering [x0,x1] x [y0,y1]; cell (ix, iy) is v[ix * ny + iy].
  void heatmap(const std::vector<double>& v, int nx, int ny, double x0, double x1, double y0, double y1) {
    require(static_cast<int>(v.size()) == nx * ny, ErrorCode::invalid_argument, "heat map size mismatch");
    heat_ = {v, nx, ny, x0, x1, y0, y1};
    has_heat_ = true;
  }

  std::string render() const {
    double xl = x_lo_, xh = x_hi_, yl = y_lo_, yh = y_hi_;
    autoscale(xl, xh, yl, yh);
    const double L = 70, R = 20, T = 40, B = 55;
    const double pw = w_ - L - R, ph = h_ - T - B;
    auto tx = [&](double x) {
      const double u = log_x_ ? (std::log10(x) - std::log10(xl)) / (std::log10(xh) - std::log10(xl)) : (x - xl) / (xh - xl);
      return L + u * pw;
    };
    auto ty = [&](double y) { return T + (1.0 - (y - yl) / (yh - yl)) * ph; };

    std::string s;
    s += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\" "
             "font-family=\"sans-serif\" font-size=\"12\">\n",
             w_, h_, w_, h_);
    s += fmt("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", w_, h_);
    s += "<text x=\"" + num(w_ / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + esc(title_) + "</text>\n";
    s += "<defs><clipPath id=\"plot\"><rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\"/></clipPath></defs>\n";

    if (has_heat_) {
      s += "<g clip-path=\"url(#plot)\" shape-rendering=\"crispEdges\">\n";
      double vmax = 0.0;
      for (double v : heat_.v) vmax = std::max(vmax, v);
      const double dx = (heat_.x1 - heat_.x0) / heat_.nx, dy = (heat_.y1 - heat_.y0) / heat_.ny;
      for (int ix = 0; ix < heat_.nx; ++ix) {
        for (int iy = 0; iy < heat_.ny; ++iy) {
          const double v = vmax > 0 ? heat_.v[ix * heat_.ny + iy] / vmax : 0.0;
          if (v < 0.02) continue;
          const double x0 = tx(heat_.x0 + ix * dx), x1 = tx(heat_.x0 + (ix + 1) * dx);
          const double y0 = ty(heat_.y0 + (iy + 1) * dy), y1 = ty(heat_.y0 + iy * dy);
          s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0 + 0.3) + "\" height=\"" +
               num(y1 - y0 + 0.3) + "\" fill=\"" + colormap(v) + "\"/>\n";
        }
      }
      s += "</g>\n";
    }

    // axes and ticks
    s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ticks(xl, xh, log_x_)) {
      const double X = tx(t);
      s += "<line x1=\"" + num(X) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(X) + "\" y2=\"" + num(T + ph + 5) +
           "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(X) + "\" y=\"" + num(T + ph + 18) + "\" text-anchor=\"middle\">" + label(t) + "</text>\n";
    }
    for (double t : ticks(yl, yh, false)) {
      const double Y = ty(t);
      s += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(Y) + "\" x2=\"" + num(L) + "\" y2=\"" + num(Y) +
           "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(L - 8) + "\" y=\"" + num(Y + 4) + "\" text-anchor=\"end\">" + label(t) + "</text>\n";
    }
    s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(h_ - 12.0) + "\" text-anchor=\"middle\">" + esc(xlabel_) +
         "</text>\n";
    s += "<text x=\"16\" y=\"" + num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(T + ph / 2) + ")\">" + esc(ylabel_) + "</text>\n";

    s += "<g clip-path=\"url(#plot)\">\n";
    for (const auto& r : refs_) {
      if (r.vertical) {
        s += "<line x1=\"" + num(tx(r.at)) + "\" y1=\"" + num(T) + "\" x2=\"" + num(tx(r.at)) + "\" y2=\"" +
             num(T + ph) + "\" stroke=\"" + r.color + "\" stroke-dasharray=\"4 3\"/>\n";
      } else {
        s += "<line x1=\"" + num(L) + "\" y1=\"" + num(ty(r.at)) + "\" x2=\"" + num(L + pw) + "\" y2=\"" +
             num(ty(r.at)) + "\" stroke=\"" + r.color + "\" stroke-dasharray=\"4 3\"/>\n";
      }
    }
    for (const auto& se : series_) {
      if (se.kind == Kind::line) {
        std::string pts;
        auto flush = [&] {
          if (!pts.empty())
            s += "<polyline fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"" + num(se.size) + "\"" +
                 (se.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
          pts.clear();
        };
        for (std::size_t i = 0; i < se.xs.size(); ++i) {
          if (!std::isfinite(se.xs[i]) || !std::isfinite(se.ys[i]) || (log_x_ && se.xs[i] <= 0)) {
            flush();
            continue;
          }
          pts += num(tx(se.xs[i])) + "," + num(ty(se.ys[i])) + " ";
        }
        flush();
      } else {
        s += "<g fill=\"" + se.color + "\" fill-opacity=\"" + num(se.opacity) + "\">\n";
        for (std::size_t i = 0; i < se.xs.size(); ++i) {
          if (!std::isfinite(se.xs[i]) || !std::isfinite(se.ys[i])) continue;
          s += "<circle cx=\"" + num(tx(se.xs[i])) + "\" cy=\"" + num(ty(se.ys[i])) + "\" r=\"" + num(se.size) +
               "\"/>\n";
        }
        s += "</g>\n";
      }
    }
    s += "</g>\n";

    // legend
    double ly = T + 14;
    for (const auto& se : series_) {
      if (se.label.empty()) continue;
      s += "<rect x=\"" + num(L + pw - 150) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           se.color + "\"/>\n";
      s += "<text x=\"" + num(L + pw - 135) + "\" y=\"" + num(ly) + "\">" + esc(se.label) + "</text>\n";
      ly += 16;
    }
    for (const auto& r : refs_) {
      if (r.label.empty()) continue;
      s += "<rect x=\"" + num(L + pw - 150) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           r.color + "\"/>\n";
      s += "<text x=\"" + num(L + pw - 135) + "\" y=\"" + num(ly) + "\">" + esc(r.label) + "</text>\n";
      ly += 16;
    }
    s += "</svg>\n";
    return s;
  }

 private:
  enum class Kind { line, points };
  struct Series {
    Kind kind;
    std::vector<double> xs, ys;
    std::string color;
    double size, opacity;
    std::string label;
    bool dashed;
  };
  struct Ref {
    bool vertical;
    double at;
    std::string color, label;
  };
  struct Heat {
    std::vector<double> v;
    int nx = 0, ny = 0;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  };

  void autoscale(double& xl, double& xh, double& yl, double& yh) const {
    if (!fixed_x_ || !fixed_y_) {
      double axl = std::numeric_limits<double>::infinity(), axh = -axl, ayl = axl, ayh = -axl;
      for (const auto& se : series_) {
        for (std::size_t i = 0; i < se.xs.size(); ++i) {
          if (!std::isfinite(se.xs[i]) || !std::isfinite(se.ys[i]) || (log_x_ && se.xs[i] <= 0)) continue;
          axl = std::min(axl, se.xs[i]);
          axh = std::max(axh, se.xs[i]);
          ayl = std::min(ayl, se.ys[i]);
          ayh = std::max(ayh, se.ys[i]);
        }
      }
      if (has_heat_) {
        axl = std::min(axl, heat_.x0);
        axh = std::max(axh, heat_.x1);
        ayl = std::min(ayl, heat_.y0);
        ayh = std::max(ayh, heat_.y1);
      }
      if (!std::isfinite(axl)) axl = 0, axh = 1, ayl = 0, ayh = 1;
      if (!fixed_x_) {
        xl = axl;
        xh = axh > axl ? axh : axl + 1;
      }
      if (!fixed_y_) {
        const double pad = ayh > ayl ? 0.05 * (ayh - ayl) : 0.5;
        yl = ayl - pad;
        yh = ayh + pad;
      }
    }
  }

  static std::vector<double> ticks(double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
      for (double d = std::pow(10.0, std::floor(std::log10(lo))); d <= hi * 1.0001; d *= 10)
        if (d >= lo * 0.9999) out.push_back(d);
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
      out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    return out;
  }

  static std::string colormap(double v) {
    // white -> blue -> red
    const double r = v < 0.5 ? 1.0 - 1.6 * v : 0.2 + 1.6 * (v - 0.5);
    const double g = v < 0.5 ? 1.0 - 1.4 * v : 0.3 - 0.5 * (v - 0.5);
    const double b = v < 0.5 ? 1.0 - 0.2 * v : 0.9 - 1.6 * (v - 0.5);
    auto c = [](double x) { return static_cast<int>(std::lround(255 * std::clamp(x, 0.0, 1.0))); };
    return fmt("#%02x%02x%02x", c(r), c(g), c(b));
  }

  template <class... A>
  static std::string fmt(const char* f, A... a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
  }
  static std::string num(double x) { return fmt("%.2f", x); }
  static std::string label(double x) { return fmt("%g", x); }
  static std::string esc(const std::string& t) {
    std::string o;
    for (char c : t) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

  std::string title_, xlabel_, ylabel_;
  int w_, h_;
  bool log_x_ = false, fixed_x_ = false, fixed_y_ = false;
  double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;
  std::vector<Series> series_;
  std::vector<Ref> refs_;
  Heat heat_;
  bool has_heat_ = false;
};

}  // namespace qsm::experiments
