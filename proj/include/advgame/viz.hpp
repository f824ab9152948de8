#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "advgame/scene.hpp"

namespace advgame {

struct VizStyle {
  // Fill color per color name, as "#rrggbb".
  std::map<std::string, std::string> palette;
  double canvas = 400.0;  // square canvas side in px
  double margin = 20.0;
  double large_radius = 0.7;  // scene units
  double small_ratio = 0.4;
  double rubber_stroke = 1.0;
  double metal_stroke = 3.0;

  // The CLEVR colors.
  static VizStyle clevr();
};

// Top-down view with +y (behind) pointing up and a camera eye marker at the
// bottom right. Throws Error(kInvalidConfig) naming any color missing from
// the palette.
std::string render_topdown(const SceneGraph& scene, const VizStyle& style = VizStyle::clevr());

enum class ChartKind { kLine, kHistogram };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static chart; the plotted numbers are embedded in a <metadata> table.
std::string render_chart(const std::vector<Series>& series, ChartKind kind, const std::string& title = "");

}  // namespace advgame
