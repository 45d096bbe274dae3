#include "armswing/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace armswing::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};

const char* color(size_t i) { return kColors[i % (sizeof(kColors) / sizeof(kColors[0]))]; }

std::string num(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << v;
  return o.str();
}

std::string label(double v) {
  std::ostringstream o;
  o << std::setprecision(3) << v;
  return o.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-3, std::abs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

struct Frame {
  Range xr, yr;
  double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  double sx(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); }
  double sy(double y) const { return y0 + (y - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); }
};

void open(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" "
    << "font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
}

void axes(std::ostringstream& o, const Frame& f, const std::string& xl, const std::string& yl,
          bool x_ticks = true) {
  o << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(f.x1)
    << "\" y2=\"" << num(f.y0) << "\"/>\n"
    << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(f.x0)
    << "\" y2=\"" << num(f.y1) << "\"/>\n</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = f.yr.lo + (f.yr.hi - f.yr.lo) * i / 4.0;
    o << "<text x=\"" << num(f.x0 - 6) << "\" y=\"" << num(f.sy(yv) + 4)
      << "\" text-anchor=\"end\">" << label(yv) << "</text>\n";
    if (x_ticks) {
      const double xv = f.xr.lo + (f.xr.hi - f.xr.lo) * i / 4.0;
      o << "<text x=\"" << num(f.sx(xv)) << "\" y=\"" << num(f.y0 + 16)
        << "\" text-anchor=\"middle\">" << label(xv) << "</text>\n";
    }
  }
  o << "<text x=\"" << num((f.x0 + f.x1) / 2) << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
    << "<text transform=\"translate(16," << num((f.y0 + f.y1) / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void legend(std::ostringstream& o, const std::vector<std::string>& names) {
  for (size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << num(y - 9)
      << "\" width=\"12\" height=\"12\" fill=\"" << color(i) << "\"/>\n"
      << "<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << num(y + 1) << "\">"
      << escape(names[i]) << "</text>\n";
  }
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace

std::string render(const LinePlot& p) {
  Frame f;
  for (const auto& s : p.series) {
    for (double x : s.x) f.xr.add(x);
    for (double y : s.y) f.yr.add(y);
    for (double y : s.lower) f.yr.add(y);
    for (double y : s.upper) f.yr.add(y);
  }
  f.xr.finish();
  f.yr.finish();
  std::ostringstream o;
  open(o, p.title);
  axes(o, f, p.x_label, p.y_label);
  std::vector<std::string> names;
  for (size_t i = 0; i < p.series.size(); ++i) {
    const Series& s = p.series[i];
    names.push_back(s.name);
    const size_t n = std::min(s.x.size(), s.y.size());
    if (s.lower.size() == n && s.upper.size() == n && n > 0) {
      o << "<polygon fill=\"" << color(i) << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (size_t k = 0; k < n; ++k) o << num(f.sx(s.x[k])) << ',' << num(f.sy(s.upper[k])) << ' ';
      for (size_t k = n; k-- > 0;) o << num(f.sx(s.x[k])) << ',' << num(f.sy(s.lower[k])) << ' ';
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.6\" points=\"";
    for (size_t k = 0; k < n; ++k) {
      if (std::isfinite(s.y[k])) o << num(f.sx(s.x[k])) << ',' << num(f.sy(s.y[k])) << ' ';
    }
    o << "\"/>\n";
  }
  legend(o, names);
  o << "</svg>\n";
  return o.str();
}

std::string render(const ViolinPlot& p) {
  Frame f;
  f.xr.lo = 0.0;
  f.xr.hi = static_cast<double>(std::max<size_t>(1, p.groups.size()));
  for (const auto& g : p.groups) {
    for (double v : g.samples) f.yr.add(v);
  }
  f.yr.finish();
  std::ostringstream o;
  open(o, p.title);
  axes(o, f, "", p.y_label, false);
  const double slot = (f.x1 - f.x0) / f.xr.hi;
  for (size_t gi = 0; gi < p.groups.size(); ++gi) {
    const auto& g = p.groups[gi];
    const double cx = f.x0 + slot * (static_cast<double>(gi) + 0.5);
    o << "<text x=\"" << num(cx) << "\" y=\"" << num(f.y0 + 16) << "\" text-anchor=\"middle\">"
      << escape(g.name) << "</text>\n";
    std::vector<double> s;
    for (double v : g.samples) {
      if (std::isfinite(v)) s.push_back(v);
    }
    if (s.size() < 2) continue;
    // Gaussian kernel density with Silverman's bandwidth.
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size() - 1));
    const double bw = std::max(1e-9, 1.06 * sd * std::pow(static_cast<double>(s.size()), -0.2));
    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    const int steps = 60;
    std::vector<double> ys, dens;
    for (int k = 0; k <= steps; ++k) {
      const double y = lo + (hi - lo) * k / steps;
      double d = 0.0;
      for (double v : s) d += std::exp(-0.5 * ((y - v) / bw) * ((y - v) / bw));
      ys.push_back(y);
      dens.push_back(d);
    }
    const double peak = *std::max_element(dens.begin(), dens.end());
    const double half = 0.4 * slot;
    o << "<polygon fill=\"" << color(gi) << "\" fill-opacity=\"0.5\" stroke=\"" << color(gi)
      << "\" points=\"";
    for (size_t k = 0; k < ys.size(); ++k) {
      o << num(cx + half * dens[k] / peak) << ',' << num(f.sy(ys[k])) << ' ';
    }
    for (size_t k = ys.size(); k-- > 0;) {
      o << num(cx - half * dens[k] / peak) << ',' << num(f.sy(ys[k])) << ' ';
    }
    o << "\"/>\n";
    const double q1 = quantile(s, 0.25), q2 = quantile(s, 0.5), q3 = quantile(s, 0.75);
    o << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.sy(q1)) << "\" x2=\"" << num(cx)
      << "\" y2=\"" << num(f.sy(q3)) << "\" stroke=\"black\" stroke-width=\"4\"/>\n"
      << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(f.sy(q2))
      << "\" r=\"3\" fill=\"white\" stroke=\"black\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render(const RegionPlot& p) {
  std::ostringstream o;
  open(o, p.title);
  const size_t n = std::max<size_t>(1, p.panels.size());
  const double gap = 30.0;
  const double panel_w = std::min(kHeight - kTop - kBottom,
                                  (kWidth - kLeft - 20.0 - gap * static_cast<double>(n - 1)) /
                                      static_cast<double>(n));
  for (size_t pi = 0; pi < p.panels.size(); ++pi) {
    const RegionPanel& r = p.panels[pi];
    Frame f;
    f.x0 = kLeft + static_cast<double>(pi) * (panel_w + gap);
    f.x1 = f.x0 + panel_w;
    f.y0 = kTop + 10 + panel_w;
    f.y1 = kTop + 10;
    for (double x : r.x) f.xr.add(x);
    for (double y : r.y) f.yr.add(y);
    f.xr.finish();
    f.yr.finish();
    const double cw = panel_w / static_cast<double>(std::max<size_t>(1, r.x.size()));
    const double ch = panel_w / static_cast<double>(std::max<size_t>(1, r.y.size()));
    for (size_t iy = 0; iy < r.success.size() && iy < r.y.size(); ++iy) {
      for (size_t ix = 0; ix < r.success[iy].size() && ix < r.x.size(); ++ix) {
        o << "<rect x=\"" << num(f.x0 + cw * static_cast<double>(ix)) << "\" y=\""
          << num(f.y0 - ch * static_cast<double>(iy + 1)) << "\" width=\"" << num(cw)
          << "\" height=\"" << num(ch) << "\" fill=\""
          << (r.success[iy][ix] ? "#2ca02c" : "#eeeeee") << "\" stroke=\"white\"/>\n";
      }
    }
    o << "<rect x=\"" << num(f.x0) << "\" y=\"" << num(f.y1) << "\" width=\"" << num(panel_w)
      << "\" height=\"" << num(panel_w) << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << num((f.x0 + f.x1) / 2) << "\" y=\"" << num(f.y0 + 18)
      << "\" text-anchor=\"middle\">" << escape(r.name) << "</text>\n";
    if (!r.x.empty()) {
      o << "<text x=\"" << num(f.x0) << "\" y=\"" << num(f.y0 + 32) << "\">" << label(r.x.front())
        << "</text>\n<text x=\"" << num(f.x1) << "\" y=\"" << num(f.y0 + 32)
        << "\" text-anchor=\"end\">" << label(r.x.back()) << "</text>\n";
    }
    if (pi == 0 && !r.y.empty()) {
      o << "<text x=\"" << num(f.x0 - 6) << "\" y=\"" << num(f.y0) << "\" text-anchor=\"end\">"
        << label(r.y.front()) << "</text>\n<text x=\"" << num(f.x0 - 6) << "\" y=\""
        << num(f.y1 + 10) << "\" text-anchor=\"end\">" << label(r.y.back()) << "</text>\n";
    }
  }
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">"
    << escape(p.x_label) << "</text>\n"
    << "<text transform=\"translate(16," << kHeight / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(p.y_label) << "</text>\n</svg>\n";
  return o.str();
}

void write(const std::string& path, const std::string& document) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << document;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace armswing::svg
