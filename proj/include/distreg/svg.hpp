#pragma once

// Minimal static line charts.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace distreg::svg {

struct Series {
  std::string label;
  std::vector<double> y;
  bool dashed = false;
};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// One polyline per series over the shared x grid.
inline std::string line_chart(const std::vector<double>& x, const std::vector<Series>& series, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
  const double W = 720, H = 440, L = 70, R = 150, T = 40, Bm = 50;
  double x0 = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
  double x1 = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
  double y0 = 0, y1 = 0;
  for (auto& s : series)
    for (double v : s.y)
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - Bm - (v - y0) / (y1 - y0) * (H - T - Bm); };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - Bm + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << escape(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - Bm) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (T + H - Bm) / 2 << ")\">" << escape(ylabel) << "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const char* colour = series[s].dashed ? "black" : palette[s % 10];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"";
    if (series[s].dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    for (size_t i = 0; i < x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      os << px(x[i]) << ',' << py(series[s].y[i]) << ' ';
    }
    os << "\"><title>" << escape(series[s].label) << "</title></polyline>\n";
    double ly = T + 14 * static_cast<double>(s);
    if (ly < H - Bm) {
      os << "<text x=\"" << W - R + 10 << "\" y=\"" << ly + 4 << "\" font-size=\"11\" fill=\"" << colour << "\">"
         << escape(series[s].label) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace distreg::svg
