#include "advgame/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "advgame/error.hpp"

namespace advgame {

VizStyle VizStyle::clevr() {
  VizStyle s;
  s.palette = {{"gray", "#575757"},  {"red", "#ad2323"},    {"blue", "#2a4bd7"},  {"green", "#1d6914"},
               {"brown", "#814a19"}, {"purple", "#8126c0"}, {"cyan", "#29d0d0"}, {"yellow", "#ffee1f"}};
  return s;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

}  // namespace

std::string render_topdown(const SceneGraph& scene, const VizStyle& style) {
  std::vector<std::string> missing;
  for (int i = 0; i < scene.size(); ++i) {
    const auto& c = scene.name_of(i, AttributeKind::kColor);
    if (!style.palette.count(c) && std::find(missing.begin(), missing.end(), c) == missing.end()) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string msg = "palette has no entry for:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }

  const double lo = -3.0;
  const double hi = 3.0;
  const double inner = style.canvas - 2.0 * style.margin;
  const double scale = inner / (hi - lo);
  auto px = [&](double x) { return style.margin + (x - lo) * scale; };
  auto py = [&](double y) { return style.margin + (hi - y) * scale; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(style.canvas) << "\" height=\""
      << num(style.canvas) << "\" viewBox=\"0 0 " << num(style.canvas) << ' ' << num(style.canvas) << "\">\n";
  out << "<rect class=\"table\" x=\"" << num(style.margin) << "\" y=\"" << num(style.margin) << "\" width=\""
      << num(inner) << "\" height=\"" << num(inner) << "\" fill=\"#f4f4f4\" stroke=\"#999999\"/>\n";
  for (int i = 0; i < scene.size(); ++i) {
    const auto& o = scene.objects[i];
    const bool small = scene.name_of(i, AttributeKind::kSize) == "small";
    const double r = (small ? style.large_radius * style.small_ratio : style.large_radius) * scale;
    const bool metal = scene.name_of(i, AttributeKind::kMaterial) == "metal";
    const std::string& fill = style.palette.at(scene.name_of(i, AttributeKind::kColor));
    const std::string& shape = scene.name_of(i, AttributeKind::kShape);
    const double cx = px(o.x);
    const double cy = py(o.y);
    const std::string common = " fill=\"" + fill + "\" stroke=\"#000000\" stroke-width=\"" +
                               num(metal ? style.metal_stroke : style.rubber_stroke) + "\" data-id=\"" +
                               std::to_string(i) + "\" data-shape=\"" + escape(shape) + "\"";
    if (shape == "sphere") {
      out << "<circle class=\"object\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << '"'
          << common << "/>\n";
    } else {
      const double rounding = shape == "cylinder" ? r * 0.5 : 0.0;
      out << "<rect class=\"object\" x=\"" << num(cx - r) << "\" y=\"" << num(cy - r) << "\" width=\""
          << num(2 * r) << "\" height=\"" << num(2 * r) << '"';
      if (rounding > 0.0) out << " rx=\"" << num(rounding) << "\" ry=\"" << num(rounding) << '"';
      out << common << "/>\n";
    }
  }
  // Camera eye, bottom right, looking towards +y.
  const double ex = style.canvas - style.margin * 0.5 - 14.0;
  const double ey = style.canvas - style.margin * 0.5 - 6.0;
  out << "<g class=\"eye\" transform=\"translate(" << num(ex) << ',' << num(ey) << ")\">"
      << "<ellipse cx=\"0.00\" cy=\"0.00\" rx=\"12.00\" ry=\"6.00\" fill=\"#ffffff\" stroke=\"#000000\"/>"
      << "<circle cx=\"0.00\" cy=\"0.00\" r=\"3.00\" fill=\"#000000\"/></g>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_chart(const std::vector<Series>& series, ChartKind kind, const std::string& title) {
  if (series.empty()) throw Error(ErrorClass::kInvalidArgument, "chart needs at least one series");
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = 0.0;
  double ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw Error(ErrorClass::kInvalidArgument, "series '" + s.label + "' has mismatched x and y lengths");
    }
    if (s.x.empty()) throw Error(ErrorClass::kInvalidArgument, "series '" + s.label + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw Error(ErrorClass::kInvalidArgument, "series '" + s.label + "' has a non-finite value");
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (kind == ChartKind::kHistogram) {
    // Bars are centered on x; pad by half the smallest spacing.
    double step = 1.0;
    for (const auto& s : series) {
      for (std::size_t i = 1; i < s.x.size(); ++i) step = std::min(step, std::abs(s.x[i] - s.x[i - 1]));
    }
    xmin -= step / 2;
    xmax += step / 2;
  }
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax == ymin) ymax = ymin + 1.0;

  const double w = 480.0;
  const double h = 320.0;
  const double l = 50.0;
  const double r = 20.0;
  const double t = 30.0;
  const double b = 40.0;
  auto X = [&](double x) { return l + (x - xmin) / (xmax - xmin) * (w - l - r); };
  auto Y = [&](double y) { return h - b - (y - ymin) / (ymax - ymin) * (h - t - b); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n";
  out << "<metadata><table>\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<row series=\"" << escape(s.label) << "\" x=\"" << s.x[i] << "\" y=\"" << s.y[i] << "\"/>\n";
    }
  }
  out << "</table></metadata>\n";
  if (!title.empty()) {
    out << "<text class=\"title\" x=\"" << num(w / 2) << "\" y=\"18.00\" text-anchor=\"middle\">" << escape(title)
        << "</text>\n";
  }
  out << "<line class=\"axis\" x1=\"" << num(l) << "\" y1=\"" << num(h - b) << "\" x2=\"" << num(w - r) << "\" y2=\""
      << num(h - b) << "\" stroke=\"#000000\"/>\n";
  out << "<line class=\"axis\" x1=\"" << num(l) << "\" y1=\"" << num(t) << "\" x2=\"" << num(l) << "\" y2=\""
      << num(h - b) << "\" stroke=\"#000000\"/>\n";
  out << "<text class=\"tick\" x=\"" << num(l - 4) << "\" y=\"" << num(Y(ymax)) << "\" text-anchor=\"end\">"
      << num(ymax) << "</text>\n";
  out << "<text class=\"tick\" x=\"" << num(l - 4) << "\" y=\"" << num(Y(ymin)) << "\" text-anchor=\"end\">"
      << num(ymin) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 6];
    if (kind == ChartKind::kLine) {
      if (s.x.size() > 1) {
        out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << c << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << (i ? " " : "") << num(X(s.x[i])) << ',' << num(Y(s.y[i]));
        out << "\"/>\n";
      }
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << "<circle class=\"marker\" cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i]))
            << "\" r=\"2.50\" fill=\"" << c << "\"/>\n";
      }
    } else {
      double step = 1.0;
      for (std::size_t i = 1; i < s.x.size(); ++i) step = std::min(step, std::abs(s.x[i] - s.x[i - 1]));
      const double bw = (X(xmin + step) - X(xmin)) * 0.9 / static_cast<double>(series.size());
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double x0 = X(s.x[i]) - bw * series.size() / 2.0 + bw * k;
        out << "<rect class=\"bar\" x=\"" << num(x0) << "\" y=\"" << num(Y(s.y[i])) << "\" width=\"" << num(bw)
            << "\" height=\"" << num(Y(ymin) - Y(s.y[i])) << "\" fill=\"" << c << "\"/>\n";
      }
    }
    out << "<text class=\"legend\" x=\"" << num(w - r) << "\" y=\"" << num(t + 14.0 * k) << "\" text-anchor=\"end\" fill=\""
        << c << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace advgame
