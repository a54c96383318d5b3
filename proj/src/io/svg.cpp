// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/io/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pedrisk/io/csv.hpp"

namespace pedrisk::io {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string edge_label(double v, bool log_scale) {
  if (log_scale) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", v);
    return buf;
  }
  return format_double(v);
}

}  // namespace

std::string histogram_svg(const Histogram& h, const std::string& title, const std::string& x_label) {
  const std::size_t bins = h.counts.size();
  const std::int64_t peak = bins ? *std::max_element(h.counts.begin(), h.counts.end()) : 0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double bar_w = bins ? plot_w / static_cast<double>(bins) : plot_w;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << escape(title) << "</text>\n";
  for (std::size_t i = 0; i < bins; ++i) {
    const double frac = peak > 0 ? static_cast<double>(h.counts[i]) / static_cast<double>(peak) : 0.0;
    const double bh = frac * plot_h;
    s << "<rect x=\"" << num(kLeft + bar_w * static_cast<double>(i)) << "\" y=\"" << num(kTop + plot_h - bh)
      << "\" width=\"" << num(std::max(bar_w - 1.0, 0.5)) << "\" height=\"" << num(bh)
      << "\" fill=\"#4a78b5\"><title>" << h.counts[i] << "</title></rect>\n";
  }
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  if (!h.edges.empty()) {
    s << "<text x=\"" << kLeft << "\" y=\"" << kTop + plot_h + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << edge_label(h.edges.front(), h.log_scale) << "</text>\n";
    s << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kTop + plot_h + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << edge_label(h.edges.back(), h.log_scale) << "</text>\n";
  }
  s << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << peak << "</text>\n";
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace pedrisk::io
