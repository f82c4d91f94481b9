#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "neurotrack/classify/metrics.hpp"
#include "neurotrack/core/error.hpp"

namespace neurotrack::pipeline {

namespace detail {

using neurotrack::detail::require;

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

// Minimal deterministic SVG canvas: fixed-precision coordinates, no
// timestamps, no randomness, so identical inputs yield identical bytes.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const std::string& dash = "") {
    body_ << "<line x1=\"" << detail::fmt2(x1) << "\" y1=\"" << detail::fmt2(y1) << "\" x2=\""
          << detail::fmt2(x2) << "\" y2=\"" << detail::fmt2(y2) << "\" stroke=\"" << stroke
          << "\" stroke-width=\"" << detail::fmt2(width) << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
          << detail::fmt2(width) << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << detail::fmt2(x) << ',' << detail::fmt2(y) << ' ';
    body_ << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0) {
    body_ << "<circle cx=\"" << detail::fmt2(cx) << "\" cy=\"" << detail::fmt2(cy) << "\" r=\""
          << detail::fmt2(r) << "\" fill=\"" << fill << "\" fill-opacity=\""
          << detail::fmt2(opacity) << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0) {
    body_ << "<rect x=\"" << detail::fmt2(x) << "\" y=\"" << detail::fmt2(y) << "\" width=\""
          << detail::fmt2(w) << "\" height=\"" << detail::fmt2(h) << "\" fill=\"" << fill
          << "\" fill-opacity=\"" << detail::fmt2(opacity) << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start", double rotate_deg = 0.0,
            const std::string& fill = "#333333") {
    body_ << "<text x=\"" << detail::fmt2(x) << "\" y=\"" << detail::fmt2(y)
          << "\" font-family=\"sans-serif\" font-size=\"" << detail::fmt2(size)
          << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\"";
    if (rotate_deg != 0.0)
      body_ << " transform=\"rotate(" << detail::fmt2(rotate_deg) << ' ' << detail::fmt2(x) << ' '
            << detail::fmt2(y) << ")\"";
    body_ << '>' << s << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt2(width_)
        << "\" height=\"" << detail::fmt2(height_) << "\" viewBox=\"0 0 " << detail::fmt2(width_)
        << ' ' << detail::fmt2(height_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double width_, height_;
  std::ostringstream body_;
};

inline constexpr const char* kControlColor = "#3465a4";
inline constexpr const char* kPatientColor = "#cc4444";

struct Fig2Datum {
  std::string subject;
  std::string feature;
  bool patient = false;
  double accuracy = 0.0;
};

// Per-feature group accuracy distributions: one column of jittered points per
// feature, controls left, patients right, with group-mean ticks.
inline std::string render_fig2(const std::vector<std::string>& features,
                               const std::vector<Fig2Datum>& data) {
  detail::require(!features.empty() && !data.empty(), "render_fig2: empty input");
  const double w = 70.0 + 84.0 * static_cast<double>(features.size()), h = 420.0;
  const double left = 56.0, right = w - 12.0, top = 18.0, bottom = h - 96.0;
  double lo = 1.0, hi = 0.0;
  for (const auto& d : data) {
    lo = std::min(lo, d.accuracy);
    hi = std::max(hi, d.accuracy);
  }
  lo = std::max(0.0, lo - 0.05);
  hi = std::min(1.0, hi + 0.05);
  if (hi - lo < 0.1) hi = std::min(1.0, lo + 0.1);
  const auto ypix = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

  SvgCanvas svg(w, h);
  svg.line(left, top, left, bottom, "#333333");
  svg.line(left, bottom, right, bottom, "#333333");
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg.line(left - 4, ypix(v), left, ypix(v), "#333333");
    svg.text(left - 8, ypix(v) + 4, detail::fmt2(v), 11, "end");
  }
  svg.text(14, (top + bottom) / 2, "accuracy", 12, "middle", -90);

  const double slot = (right - left) / static_cast<double>(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double cx = left + slot * (static_cast<double>(f) + 0.5);
    svg.text(cx, bottom + 14, features[f], 11, "end", -35);
    std::size_t ci = 0, pi = 0;
    double csum = 0, cn = 0, psum = 0, pn = 0;
    for (const auto& d : data) {
      if (d.feature != features[f]) continue;
      // deterministic jitter from the point's index within its group
      if (d.patient) {
        const double x = cx + 8.0 + 14.0 * (static_cast<double>(pi % 5) / 5.0);
        svg.circle(x, ypix(d.accuracy), 2.6, kPatientColor, 0.65);
        psum += d.accuracy;
        pn += 1;
        ++pi;
      } else {
        const double x = cx - 8.0 - 14.0 * (static_cast<double>(ci % 5) / 5.0);
        svg.circle(x, ypix(d.accuracy), 2.6, kControlColor, 0.65);
        csum += d.accuracy;
        cn += 1;
        ++ci;
      }
    }
    if (cn > 0) svg.line(cx - 26, ypix(csum / cn), cx - 4, ypix(csum / cn), kControlColor, 2.0);
    if (pn > 0) svg.line(cx + 4, ypix(psum / pn), cx + 26, ypix(psum / pn), kPatientColor, 2.0);
  }
  svg.circle(left + 10, h - 20, 3.5, kControlColor);
  svg.text(left + 18, h - 16, "control", 11);
  svg.circle(left + 86, h - 20, 3.5, kPatientColor);
  svg.text(left + 94, h - 16, "patient", 11);
  return svg.str();
}

inline std::string render_roc(const std::vector<std::array<double, 3>>& points, double auc,
                              const classify::ClassMetrics& m) {
  detail::require(!points.empty(), "render_roc: empty curve");
  const double w = 420.0, h = 440.0;
  const double left = 56.0, right = w - 18.0, top = 40.0, bottom = h - 56.0;
  const auto xp = [&](double v) { return left + v * (right - left); };
  const auto yp = [&](double v) { return bottom - v * (bottom - top); };

  SvgCanvas svg(w, h);
  svg.line(left, top, left, bottom, "#333333");
  svg.line(left, bottom, right, bottom, "#333333");
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg.text(left - 8, yp(v) + 4, detail::fmt2(v), 11, "end");
    svg.text(xp(v), bottom + 16, detail::fmt2(v), 11, "middle");
  }
  svg.text(14, (top + bottom) / 2, "true positive rate", 12, "middle", -90);
  svg.text((left + right) / 2, h - 16, "false positive rate", 12, "middle");
  svg.line(xp(0), yp(0), xp(1), yp(1), "#999999", 1.0, "4,4");
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : points) pts.emplace_back(xp(p[0]), yp(p[1]));
  svg.polyline(pts, kPatientColor, 2.0);
  svg.text(left, 20, "AUC " + detail::fmt4(auc) + "  accuracy " + detail::fmt4(m.accuracy) +
                         "  sens " + detail::fmt4(m.sensitivity) + "  spec " +
                         detail::fmt4(m.specificity),
           12);
  return svg.str();
}

// Ranked mean |phi| bars, largest on top.
inline std::string render_shapley(const std::vector<std::pair<std::string, double>>& ranked) {
  detail::require(!ranked.empty(), "render_shapley: empty ranking");
  const double row_h = 24.0;
  const double w = 460.0, h = 48.0 + row_h * static_cast<double>(ranked.size());
  const double left = 140.0, right = w - 70.0, top = 30.0;
  double vmax = 0.0;
  for (const auto& [name, v] : ranked) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;

  SvgCanvas svg(w, h);
  svg.text(left, 18, "mean |SHAP value|", 12);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const double y = top + row_h * static_cast<double>(i);
    const double bw = (right - left) * ranked[i].second / vmax;
    svg.text(left - 6, y + row_h * 0.66, ranked[i].first, 11, "end");
    svg.rect(left, y + 4, bw, row_h - 8, kControlColor, 0.8);
    svg.text(left + bw + 4, y + row_h * 0.66, detail::fmt4(ranked[i].second), 10);
  }
  return svg.str();
}

// Accuracy and AUC versus recording length.
inline std::string render_sweep(const std::vector<std::array<double, 3>>& rows) {
  detail::require(!rows.empty(), "render_sweep: empty sweep");
  const double w = 480.0, h = 360.0;
  const double left = 56.0, right = w - 18.0, top = 34.0, bottom = h - 52.0;
  double lo = 1.0, hi = 0.0, kmax = 0.0;
  for (const auto& r : rows) {
    lo = std::min({lo, r[1], r[2]});
    hi = std::max({hi, r[1], r[2]});
    kmax = std::max(kmax, r[0]);
  }
  lo = std::max(0.0, lo - 0.05);
  hi = std::min(1.0, hi + 0.05);
  if (hi - lo < 0.1) hi = std::min(1.0, lo + 0.1);
  const auto xp = [&](double k) { return left + (k - 1.0) / std::max(1.0, kmax - 1.0) * (right - left); };
  const auto yp = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

  SvgCanvas svg(w, h);
  svg.line(left, top, left, bottom, "#333333");
  svg.line(left, bottom, right, bottom, "#333333");
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg.text(left - 8, yp(v) + 4, detail::fmt2(v), 11, "end");
  }
  for (const auto& r : rows)
    if (static_cast<int>(r[0]) % 5 == 0 || r[0] == 1.0)
      svg.text(xp(r[0]), bottom + 16, detail::fmt2(r[0]), 11, "middle");
  svg.text((left + right) / 2, h - 14, "recording length (min)", 12, "middle");

  std::vector<std::pair<double, double>> acc, auc;
  for (const auto& r : rows) {
    acc.emplace_back(xp(r[0]), yp(r[1]));
    auc.emplace_back(xp(r[0]), yp(r[2]));
  }
  svg.polyline(acc, kPatientColor, 2.0);
  svg.polyline(auc, kControlColor, 2.0);
  svg.text(left + 8, 22, "accuracy", 11, "start", 0, kPatientColor);
  svg.text(left + 88, 22, "AUC", 11, "start", 0, kControlColor);
  return svg.str();
}

}  // namespace neurotrack::pipeline
