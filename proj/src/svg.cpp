#include <algorithm>
#include <cstdio>
#include <string>

#include "stereoforge/disparity.hpp"
#include "stereoforge/error.hpp"

namespace stereoforge {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 320.0;
constexpr double kLeft = 56.0;
constexpr double kRight = 16.0;
constexpr double kTop = 24.0;
constexpr double kBottom = 40.0;

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

}  // namespace

std::string emit_histogram_svg(const DispStats& stats) {
  const auto& fr = stats.histogram.fractions;
  if (fr.empty() || stats.count == 0)
    throw Error(ErrorCode::NoValidPixels, "histogram has no samples");
  const double peak = *std::max_element(fr.begin(), fr.end());
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double bar_w = plot_w / static_cast<double>(fr.size());
  const double base_y = kTop + plot_h;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"320\" "
         "viewBox=\"0 0 640 320\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"320\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"16\" text-anchor=\"middle\" font-size=\"12\">disparity distribution (n=" +
         std::to_string(stats.count) + ")</text>\n";
  svg += "<g fill=\"steelblue\">\n";
  for (std::size_t i = 0; i < fr.size(); ++i) {
    if (fr[i] <= 0.0) continue;
    const double h = plot_h * fr[i] / peak;
    svg += "<rect x=\"" + fmt("%.3f", kLeft + bar_w * static_cast<double>(i)) + "\" y=\"" +
           fmt("%.3f", base_y - h) + "\" width=\"" + fmt("%.3f", bar_w) + "\" height=\"" +
           fmt("%.3f", h) + "\"><title>" + fmt("%.6g", stats.histogram.edge(i)) + " px: " +
           fmt("%.4f", 100.0 * fr[i]) + "%</title></rect>\n";
  }
  svg += "</g>\n";
  svg += "<g stroke=\"black\" fill=\"none\">\n";
  svg += "<line x1=\"" + fmt("%.3f", kLeft) + "\" y1=\"" + fmt("%.3f", base_y) + "\" x2=\"" +
         fmt("%.3f", kLeft + plot_w) + "\" y2=\"" + fmt("%.3f", base_y) + "\"/>\n";
  svg += "<line x1=\"" + fmt("%.3f", kLeft) + "\" y1=\"" + fmt("%.3f", kTop) + "\" x2=\"" +
         fmt("%.3f", kLeft) + "\" y2=\"" + fmt("%.3f", base_y) + "\"/>\n";
  svg += "</g>\n";
  svg += "<g font-size=\"11\">\n";
  svg += "<text x=\"" + fmt("%.3f", kLeft) + "\" y=\"" + fmt("%.3f", base_y + 16) + "\">" +
         fmt("%.6g", stats.histogram.origin) + "</text>\n";
  svg += "<text x=\"" + fmt("%.3f", kLeft + plot_w) + "\" y=\"" + fmt("%.3f", base_y + 16) +
         "\" text-anchor=\"end\">" + fmt("%.6g", stats.histogram.edge(fr.size())) + "</text>\n";
  svg += "<text x=\"320\" y=\"" + fmt("%.3f", base_y + 32) +
         "\" text-anchor=\"middle\">disparity (px)</text>\n";
  svg += "<text x=\"" + fmt("%.3f", kLeft - 4) + "\" y=\"" + fmt("%.3f", kTop + 4) +
         "\" text-anchor=\"end\">" + fmt("%.2f", 100.0 * peak) + "%</text>\n";
  svg += "<text x=\"" + fmt("%.3f", kLeft - 4) + "\" y=\"" + fmt("%.3f", base_y) +
         "\" text-anchor=\"end\">0%</text>\n";
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace stereoforge
