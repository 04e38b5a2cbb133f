#include "aimlake/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "aimlake/error.hpp"

namespace aimlake {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

void write_svg_plot(const std::string& path, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (spec.logy && !(s.y[i] > 0)) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (ty(y) - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream svg;
  svg << std::setprecision(5);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    const double xp = left + k * (W - left - right) / 4, yp = H - bottom - k * (H - top - bottom) / 4;
    svg << "<text x=\"" << xp << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv
        << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << yp + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << (spec.logy ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape(spec.xlabel) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << H / 2 << ")\">" << escape(spec.ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& se = series[s];
    const char* color = kColors[s % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (se.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " points=\"";
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
      if (spec.logy && !(se.y[i] > 0)) continue;
      if (!std::isfinite(se.y[i])) continue;
      svg << px(se.x[i]) << ',' << py(se.y[i]) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << W - right - 4 << "\" y=\"" << top + 14 * (s + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
        << color << "\">" << escape(se.label) << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << svg.str();
}

}  // namespace aimlake
