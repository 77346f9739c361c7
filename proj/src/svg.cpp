#include "condcov/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "condcov/csv.hpp"
#include "condcov/error.hpp"

namespace condcov {

namespace {

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

// 1-2-5 tick spacing.
std::vector<double> nice_ticks(double lo, double hi, int target) {
  const double span = hi - lo;
  const double raw = span / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

struct Margins {
  double left = 52, right = 12, top = 26, bottom = 38;
};

}  // namespace

std::string render_band_plot_svg(const BandCollection& bands, const PlotOptions& options) {
  if (bands.entries.empty()) {
    throw Error(Errc::invalid_argument, "band plot needs at least one entry");
  }
  validate_grid(bands.grid);
  for (const auto& entry : bands.entries) {
    if (entry.band.grid.size() != bands.grid.size() ||
        (entry.band.grid.points.array() != bands.grid.points.array()).any()) {
      throw Error(Errc::grid_mismatch, "band plot entries must share one grid");
    }
  }

  const int n_panels = static_cast<int>(bands.entries.size());
  const int columns = options.columns > 0
                          ? options.columns
                          : std::max(1, static_cast<int>(std::ceil(std::sqrt(n_panels))));
  const int rows = (n_panels + columns - 1) / columns;
  const Margins m;
  const double total_width = static_cast<double>(columns) * options.panel_width;
  const double total_height = static_cast<double>(rows) * options.panel_height;

  const std::string stat_name =
      bands.statistic == FieldKind::covariance ? "covariance" : "correlation";
  const std::string stat_short = bands.statistic == FieldKind::covariance ? "cov" : "corr";
  const std::string y_label = options.y_label.empty() ? stat_name : options.y_label;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_width << "\" height=\""
      << total_height << "\" viewBox=\"0 0 " << total_width << " " << total_height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << total_width << "\" height=\"" << total_height
      << "\" fill=\"white\"/>\n";

  double z_lo = bands.grid.points(0);
  double z_hi = bands.grid.points(bands.grid.size() - 1);
  if (z_lo == z_hi) {
    z_lo -= 1.0;
    z_hi += 1.0;
  }

  for (int panel = 0; panel < n_panels; ++panel) {
    const auto& entry = bands.entries[static_cast<std::size_t>(panel)];
    const ConfidenceBand& band = entry.band;
    const double ox = static_cast<double>(panel % columns) * options.panel_width;
    const double oy = static_cast<double>(panel / columns) * options.panel_height;
    const double plot_x = ox + m.left;
    const double plot_y = oy + m.top;
    const double plot_w = options.panel_width - m.left - m.right;
    const double plot_h = options.panel_height - m.top - m.bottom;

    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (Eigen::Index g = 0; g < bands.grid.size(); ++g) {
      if (!band.valid[static_cast<std::size_t>(g)]) continue;
      const double lo = options.draw_band ? band.lower(g) : band.estimate(g);
      const double hi = options.draw_band ? band.upper(g) : band.estimate(g);
      y_lo = std::min(y_lo, lo);
      y_hi = std::max(y_hi, hi);
    }
    if (!(y_lo <= y_hi)) {  // every point is a gap
      y_lo = -1.0;
      y_hi = 1.0;
    }
    if (y_lo == y_hi) {
      const double pad = std::max(1.0, std::abs(y_lo) * 0.1);
      y_lo -= pad;
      y_hi += pad;
    } else {
      const double pad = (y_hi - y_lo) * 0.05;
      y_lo -= pad;
      y_hi += pad;
    }

    const auto sx = [&](double z) { return plot_x + (z - z_lo) / (z_hi - z_lo) * plot_w; };
    const auto sy = [&](double v) { return plot_y + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h; };

    out << "<g>\n";
    out << "<rect x=\"" << px(plot_x) << "\" y=\"" << px(plot_y) << "\" width=\"" << px(plot_w)
        << "\" height=\"" << px(plot_h)
        << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

    const std::string title =
        stat_short + "(" + std::to_string(entry.k + 1) + "," + std::to_string(entry.l + 1) + ")";
    out << "<text x=\"" << px(plot_x + plot_w / 2) << "\" y=\"" << px(oy + 17)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(title) << "</text>\n";

    for (double t : nice_ticks(z_lo, z_hi, 5)) {
      const double x = sx(t);
      out << "<line x1=\"" << px(x) << "\" y1=\"" << px(plot_y + plot_h) << "\" x2=\"" << px(x)
          << "\" y2=\"" << px(plot_y + plot_h + 4)
          << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << px(x) << "\" y=\"" << px(plot_y + plot_h + 16)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << tick_label(t) << "</text>\n";
    }
    for (double t : nice_ticks(y_lo, y_hi, 4)) {
      const double y = sy(t);
      out << "<line x1=\"" << px(plot_x - 4) << "\" y1=\"" << px(y) << "\" x2=\"" << px(plot_x)
          << "\" y2=\"" << px(y) << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << px(plot_x - 6) << "\" y=\"" << px(y + 3)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << tick_label(t)
          << "</text>\n";
    }
    out << "<text x=\"" << px(plot_x + plot_w / 2) << "\" y=\""
        << px(plot_y + plot_h + 30)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << xml_escape(options.x_label) << "</text>\n";

    // Contiguous valid runs; gaps split the band and the curve.
    Eigen::Index g = 0;
    while (g < bands.grid.size()) {
      if (!band.valid[static_cast<std::size_t>(g)]) {
        ++g;
        continue;
      }
      Eigen::Index end = g;
      while (end < bands.grid.size() && band.valid[static_cast<std::size_t>(end)]) ++end;

      if (options.draw_band) {
        out << "<polygon points=\"";
        for (Eigen::Index i = g; i < end; ++i) {
          out << px(sx(bands.grid.points(i))) << ',' << px(sy(band.upper(i))) << ' ';
        }
        for (Eigen::Index i = end - 1; i >= g; --i) {
          out << px(sx(bands.grid.points(i))) << ',' << px(sy(band.lower(i)));
          if (i > g) out << ' ';
        }
        out << "\" fill=\"#7fb3d5\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
      }

      out << "<path d=\"";
      for (Eigen::Index i = g; i < end; ++i) {
        out << (i == g ? "M" : " L") << px(sx(bands.grid.points(i))) << ' '
            << px(sy(band.estimate(i)));
      }
      if (end - g == 1) {
        out << " L" << px(sx(bands.grid.points(g))) << ' ' << px(sy(band.estimate(g)));
      }
      out << "\" fill=\"none\" stroke=\"#111111\" stroke-width=\"1.5\"/>\n";

      g = end;
    }
    out << "</g>\n";
  }

  out << "<text x=\"4\" y=\"" << px(total_height / 2)
      << "\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 8 "
      << px(total_height / 2) << ")\">" << xml_escape(y_label) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

void render_band_plot(const BandCollection& bands, const std::string& path,
                      const PlotOptions& options) {
  csv::write_file(path, render_band_plot_svg(bands, options));
}

std::string render_field_plot_svg(const CovarianceField& field, const PlotOptions& options) {
  BandCollection bands;
  bands.grid = field.grid;
  bands.statistic = field.kind;
  const Eigen::Index p = field.channels();
  const Eigen::Index G = field.size();
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index l = k; l < p; ++l) {
      BandCollection::Entry entry;
      entry.k = k;
      entry.l = l;
      entry.band.grid = field.grid;
      entry.band.estimate.resize(G);
      for (Eigen::Index g = 0; g < G; ++g) {
        entry.band.estimate(g) = field.matrices[static_cast<std::size_t>(g)](k, l);
      }
      entry.band.boot_sd = Eigen::VectorXd::Zero(G);
      entry.band.lower = entry.band.estimate;
      entry.band.upper = entry.band.estimate;
      entry.band.valid.assign(static_cast<std::size_t>(G), true);
      bands.entries.push_back(std::move(entry));
    }
  }
  PlotOptions curve_options = options;
  curve_options.draw_band = false;
  return render_band_plot_svg(bands, curve_options);
}

}  // namespace condcov
