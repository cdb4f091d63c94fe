#include "partmatch/overlay.h"

#include <algorithm>
#include <cstdio>
#include <string>

namespace partmatch {
namespace {

constexpr double kGap = 16.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void rect(std::string& out, const Box& b, double dx, const char* color, const std::string& label) {
  out += "  <rect x=\"" + num(b.x_min + dx) + "\" y=\"" + num(b.y_min) + "\" width=\"" +
         num(b.width()) + "\" height=\"" + num(b.height()) + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
  if (!label.empty()) {
    out += "  <text x=\"" + num(b.x_min + dx) + "\" y=\"" + num(b.y_min - 2) + "\" fill=\"" + color +
           "\" font-size=\"9\">" + escape(label) + "</text>\n";
  }
}

}  // namespace

std::string emit_overlay_svg(const GridMeta& left, const GridMeta& right,
                             std::span<const MatchPair> matches,
                             std::span<const OverlayBox> detections,
                             std::span<const OverlayBox> truths) {
  const double lw = std::max(left.width, 1), rw = std::max(right.width, 1);
  const double h = std::max({left.height, right.height, 1});
  const double dx = lw + kGap;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(dx + rw) + "\" height=\"" +
         num(h + 14) + "\" viewBox=\"0 0 " + num(dx + rw) + " " + num(h + 14) + "\">\n";
  out += "  <g class=\"panels\">\n";
  out += "    <rect x=\"0.00\" y=\"0.00\" width=\"" + num(lw) + "\" height=\"" + num(left.height) +
         "\" fill=\"#f4f4f4\" stroke=\"#888\"/>\n";
  out += "    <rect x=\"" + num(dx) + "\" y=\"0.00\" width=\"" + num(rw) + "\" height=\"" +
         num(right.height) + "\" fill=\"#f4f4f4\" stroke=\"#888\"/>\n";
  out += "    <text x=\"2.00\" y=\"" + num(h + 11) + "\" font-size=\"10\">" + escape(left.image_id) + "</text>\n";
  out += "    <text x=\"" + num(dx + 2) + "\" y=\"" + num(h + 11) + "\" font-size=\"10\">" +
         escape(right.image_id) + "</text>\n";
  out += "  </g>\n";
  for (const MatchPair& m : matches) {
    out += "  <line x1=\"" + num(m.src_px.x()) + "\" y1=\"" + num(m.src_px.y()) + "\" x2=\"" +
           num(m.dst_px.x() + dx) + "\" y2=\"" + num(m.dst_px.y()) +
           "\" stroke=\"#3366cc\" stroke-width=\"1\" stroke-opacity=\"0.6\"/>\n";
  }
  for (const OverlayBox& b : truths) rect(out, b.box, dx, "green", b.label);
  for (const OverlayBox& b : detections) rect(out, b.box, dx, "red", b.label);
  out += "</svg>\n";
  return out;
}

}  // namespace partmatch
