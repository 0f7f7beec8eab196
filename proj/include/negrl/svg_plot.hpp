#pragma once

#include <string>
#include <vector>

namespace negrl {

/// One polyline of a line chart.
struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

/// One bar of a bar chart; `error` draws a symmetric whisker.
struct PlotBar {
  std::string label;
  double value = 0.0;
  double error = 0.0;
};

/// Minimal deterministic SVG renderers: fixed palette, linear ticks,
/// identical byte output for identical input.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series, int width = 860,
                              int height = 480);

std::string render_bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<PlotBar>& bars, int width = 860,
                             int height = 480);

/// Splits simple (unquoted) CSV text into rows of fields; skips blank lines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Renders the standard artifacts: learning curves (return/agreement and
/// losses) from a metrics.csv, utility bars from a summary.csv. Inputs that
/// are empty strings are skipped; returns the list of files written.
std::vector<std::string> render_run_plots(const std::string& metrics_csv_path,
                                          const std::string& summary_csv_path,
                                          const std::string& out_dir);

}  // namespace negrl
