#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal deterministic SVG line charts: polylines, error bars, sized
// point markers, linear or log10 axes. No external renderer, so figure
// bytes depend only on the input numbers.

namespace npmle {

class LineChart {
 public:
  LineChart(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)) {}

  void set_log_x(bool v) { logx_ = v; }
  void set_log_y(bool v) { logy_ = v; }

  void add_line(const std::string& name, std::vector<double> x,
                std::vector<double> y, std::vector<double> err = {}) {
    if (x.size() != y.size() || (!err.empty() && err.size() != y.size()))
      throw std::invalid_argument("LineChart: series size mismatch");
    series_.push_back({name, std::move(x), std::move(y), std::move(err), {}, true});
  }

  // disconnected circles with per-point radius (pixels)
  void add_markers(const std::string& name, std::vector<double> x,
                   std::vector<double> y, std::vector<double> radius) {
    if (x.size() != y.size() || radius.size() != y.size())
      throw std::invalid_argument("LineChart: marker size mismatch");
    series_.push_back({name, std::move(x), std::move(y), {}, std::move(radius), false});
  }

  std::string render(int width = 720, int height = 480) const {
    const double ml = 72, mr = 18, mt = 42, mb = 58;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double tx = tf(s.x[i], logx_), ty = tf(s.y[i], logy_);
        if (std::isnan(tx) || std::isnan(ty)) continue;
        xlo = std::min(xlo, tx); xhi = std::max(xhi, tx);
        double lo = ty, hi = ty;
        if (!s.err.empty()) {
          const double tl = tf(s.y[i] - s.err[i], logy_);
          const double th = tf(s.y[i] + s.err[i], logy_);
          if (!std::isnan(tl)) lo = std::min(lo, tl);
          if (!std::isnan(th)) hi = std::max(hi, th);
        }
        ylo = std::min(ylo, lo); yhi = std::max(yhi, hi);
      }
    if (!(xlo <= xhi) || !(ylo <= yhi))
      throw std::invalid_argument("LineChart: no drawable data");
    if (xhi - xlo < 1e-300) { xlo -= 0.5; xhi += 0.5; }
    if (yhi - ylo < 1e-300) { ylo -= 0.5; yhi += 0.5; }
    const double xpad = 0.03 * (xhi - xlo), ypad = 0.06 * (yhi - ylo);
    xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

    auto px = [&](double v) { return ml + (tf(v, logx_) - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double v) { return mt + ph - (tf(v, logy_) - ylo) / (yhi - ylo) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" << esc(title_)
        << "</text>\n";

    // frame
    out << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\""
        << num(pw) << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    // ticks
    for (double t : ticks(xlo, xhi, logx_)) {
      const double gx = ml + (t - xlo) / (xhi - xlo) * pw;
      out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(mt) << "\" x2=\""
          << num(gx) << "\" y2=\"" << num(mt + ph)
          << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << num(gx) << "\" y=\"" << num(mt + ph + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">" << tick_label(t, logx_) << "</text>\n";
    }
    for (double t : ticks(ylo, yhi, logy_)) {
      const double gy = mt + ph - (t - ylo) / (yhi - ylo) * ph;
      out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(gy) << "\" x2=\""
          << num(ml + pw) << "\" y2=\"" << num(gy)
          << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(gy + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\">" << tick_label(t, logy_) << "</text>\n";
    }

    out << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(mt + ph + 42)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" << esc(xlabel_) << "</text>\n";
    out << "<text x=\"18\" y=\"" << num(mt + ph / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 " << num(mt + ph / 2)
        << ")\">" << esc(ylabel_) << "</text>\n";

    // series
    for (std::size_t si = 0; si < series_.size(); ++si) {
      const auto& s = series_[si];
      const char* color = kPalette[si % kPaletteSize];
      if (s.line) {
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\" points=\"";
        bool any = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (std::isnan(tf(s.x[i], logx_)) || std::isnan(tf(s.y[i], logy_)))
            continue;
          out << (any ? " " : "") << num(px(s.x[i])) << "," << num(py(s.y[i]));
          any = true;
        }
        out << "\"/>\n";
        if (!s.err.empty())
          for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double lo = s.y[i] - s.err[i], hi = s.y[i] + s.err[i];
            if (std::isnan(tf(s.x[i], logx_)) || std::isnan(tf(lo, logy_)) ||
                std::isnan(tf(hi, logy_)))
              continue;
            const double gx = px(s.x[i]);
            out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(py(lo))
                << "\" x2=\"" << num(gx) << "\" y2=\"" << num(py(hi))
                << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            for (double yv : {lo, hi})
              out << "<line x1=\"" << num(gx - 3) << "\" y1=\"" << num(py(yv))
                  << "\" x2=\"" << num(gx + 3) << "\" y2=\"" << num(py(yv))
                  << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
          }
      } else {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (std::isnan(tf(s.x[i], logx_)) || std::isnan(tf(s.y[i], logy_)))
            continue;
          out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\""
              << num(py(s.y[i])) << "\" r=\"" << num(s.radius[i])
              << "\" fill=\"" << color << "\" fill-opacity=\"0.55\"/>\n";
        }
      }
    }

    // legend
    double ly = mt + 14;
    for (std::size_t si = 0; si < series_.size(); ++si) {
      const auto& s = series_[si];
      if (s.name.empty()) continue;
      const char* color = kPalette[si % kPaletteSize];
      const double lx = ml + pw - 150;
      out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
          << num(lx + 22) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc(s.name)
          << "</text>\n";
      ly += 16;
    }

    out << "</svg>\n";
    return out.str();
  }

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y, err, radius;
    bool line = true;
  };

  static constexpr const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#8c564b"};
  static constexpr int kPaletteSize = 6;

  static double tf(double v, bool log) {
    if (!log) return v;
    return v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
  }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

  static std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out.push_back(c);
    }
    return out;
  }

  static std::string tick_label(double t, bool log) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", log ? std::pow(10.0, t) : t);
    return buf;
  }

  // tick positions in transformed coordinates
  static std::vector<double> ticks(double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
      const int klo = static_cast<int>(std::ceil(lo - 1e-9));
      const int khi = static_cast<int>(std::floor(hi + 1e-9));
      for (int p = klo; p <= khi; ++p) out.push_back(p);
      if (out.size() >= 2) return out;
      out.clear();  // < 1 decade: fall through to linear ticks on log values
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0})
      if (mag * mult >= raw) { step = mag * mult; break; }
    const double start = std::ceil(lo / step) * step;
    for (double t = start; t <= hi + 1e-9 * span; t += step)
      out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
  }

  std::string title_, xlabel_, ylabel_;
  bool logx_ = false, logy_ = false;
  std::vector<Series> series_;
};

}  // namespace npmle
