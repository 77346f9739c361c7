#pragma once

#include <string>

#include "condcov/band.hpp"

namespace condcov {

struct PlotOptions {
  int panel_width = 320;
  int panel_height = 240;
  int columns = 0;  // 0: near-square layout
  std::string x_label = "z";
  std::string y_label;  // empty: statistic name
  bool draw_band = true;
};

/// One panel per (k, l) entry: a solid estimate curve, a shaded band
/// polygon, and axis ticks. Gap points split the curve and the band into
/// separate segments. Output bytes are a pure function of the input.
std::string render_band_plot_svg(const BandCollection& bands, const PlotOptions& options = {});

void render_band_plot(const BandCollection& bands, const std::string& path,
                      const PlotOptions& options = {});

/// Curve-only panels for a field (no band shading).
std::string render_field_plot_svg(const CovarianceField& field, const PlotOptions& options = {});

}  // namespace condcov
