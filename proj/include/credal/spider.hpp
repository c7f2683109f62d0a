#pragma once

// Credal spider plots as standalone SVG 1.1. Axis k points at angle 2πk/K,
// clockwise from twelve o'clock; radius r on an axis is probability
// r·radial_max. Coordinates are printed with two decimals so the bytes only
// depend on the spec.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "credal/error.hpp"
#include "credal/io.hpp"
#include "credal/types.hpp"

namespace credal {

struct SpiderPlotSpec {
  std::vector<std::string> class_names;
  BoxCredalSet intervals;
  std::optional<ProbabilityVector> mle;
  std::optional<ProbabilityVector> gt;
  double radial_max = 1.0;
  int size_px = 640;

  void validate() const {
    const std::size_t kk = intervals.size();
    require(class_names.size() == kk, ErrorCode::LengthMismatch,
            std::to_string(class_names.size()) + " class names for " + std::to_string(kk) + " classes");
    require(!mle || mle->size() == kk, ErrorCode::LengthMismatch, "MLE overlay has the wrong length");
    require(!gt || gt->size() == kk, ErrorCode::LengthMismatch, "ground-truth overlay has the wrong length");
    require(std::isfinite(radial_max) && radial_max > 0.0, ErrorCode::InvalidConfig, "radial_max must be > 0");
    require(size_px > 0, ErrorCode::InvalidConfig, "size_px must be positive");
  }
};

namespace detail {

inline std::string fmt2(double v) {
  if (std::fabs(v) < 0.005) v = 0.0;  // no "-0.00"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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

struct SpiderGeometry {
  double center;
  double radius;
  double radial_max;
  std::size_t k;

  double angle(std::size_t axis) const {
    return 2.0 * std::numbers::pi * static_cast<double>(axis) / static_cast<double>(k);
  }
  double x(std::size_t axis, double p) const { return center + scaled(p) * std::sin(angle(axis)); }
  double y(std::size_t axis, double p) const { return center - scaled(p) * std::cos(angle(axis)); }
  double scaled(double p) const { return radius * std::clamp(p / radial_max, 0.0, 1.0); }
};

}  // namespace detail

inline std::string render_spider_svg(const SpiderPlotSpec& spec) {
  spec.validate();
  using detail::fmt2;
  const std::size_t kk = spec.intervals.size();
  const double size = spec.size_px;
  const detail::SpiderGeometry g{size / 2.0, size * 0.38, spec.radial_max, kk};
  const std::string sz = std::to_string(spec.size_px);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + sz + "\" height=\"" + sz +
       "\" viewBox=\"0 0 " + sz + " " + sz + "\">\n";
  s += "<rect width=\"" + sz + "\" height=\"" + sz + "\" fill=\"white\"/>\n";

  s += "<g id=\"grid\" fill=\"none\" stroke=\"#d0d0d0\" stroke-width=\"1\">\n";
  for (int ring = 1; ring <= 4; ++ring) {
    s += "<circle cx=\"" + fmt2(g.center) + "\" cy=\"" + fmt2(g.center) + "\" r=\"" + fmt2(g.radius * ring / 4.0) +
         "\"/>\n";
  }
  s += "</g>\n";

  s += "<g id=\"axes\" stroke=\"#808080\" stroke-width=\"1\">\n";
  for (std::size_t k = 0; k < kk; ++k) {
    s += "<line x1=\"" + fmt2(g.center) + "\" y1=\"" + fmt2(g.center) + "\" x2=\"" + fmt2(g.x(k, spec.radial_max)) +
         "\" y2=\"" + fmt2(g.y(k, spec.radial_max)) + "\"/>\n";
  }
  s += "</g>\n";

  s += "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#333333\" text-anchor=\"middle\">\n";
  for (std::size_t k = 0; k < kk; ++k) {
    const double lr = g.radius + 0.06 * size;
    const double lx = g.center + lr * std::sin(g.angle(k));
    const double ly = g.center - lr * std::cos(g.angle(k)) + 5.0;
    s += "<text x=\"" + fmt2(lx) + "\" y=\"" + fmt2(ly) + "\">" + detail::xml_escape(spec.class_names[k]) +
         "</text>\n";
  }
  s += "</g>\n";

  s += "<g id=\"intervals\" stroke=\"#1f77b4\" stroke-width=\"8\" stroke-linecap=\"round\" stroke-opacity=\"0.8\">\n";
  for (std::size_t k = 0; k < kk; ++k) {
    const auto& iv = spec.intervals[k];
    s += "<line x1=\"" + fmt2(g.x(k, iv.lower())) + "\" y1=\"" + fmt2(g.y(k, iv.lower())) + "\" x2=\"" +
         fmt2(g.x(k, iv.upper())) + "\" y2=\"" + fmt2(g.y(k, iv.upper())) + "\"/>\n";
  }
  s += "</g>\n";

  if (spec.mle) {
    s += "<polygon id=\"mle\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < kk; ++k) {
      if (k) s += ' ';
      s += fmt2(g.x(k, (*spec.mle)[k])) + "," + fmt2(g.y(k, (*spec.mle)[k]));
    }
    s += "\"/>\n";
  }

  // Classes with zero ground-truth mass get no dot.
  if (spec.gt) {
    s += "<g id=\"ground-truth\" fill=\"#2ca02c\">\n";
    for (std::size_t k = 0; k < kk; ++k) {
      const double p = (*spec.gt)[k];
      if (p <= 0.0) continue;
      s += "<circle cx=\"" + fmt2(g.x(k, p)) + "\" cy=\"" + fmt2(g.y(k, p)) + "\" r=\"5\"/>\n";
    }
    s += "</g>\n";
  }

  s += "</svg>\n";
  return s;
}

inline void emit_spider_svg(const SpiderPlotSpec& spec, const std::string& path) {
  io::write_text(path, render_spider_svg(spec));
}

}  // namespace credal
