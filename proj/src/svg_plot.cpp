#include "negrl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "negrl/errors.hpp"

namespace negrl {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
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

std::string fmt(double value, const char* spec = "%.2f") {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), spec, value);
  return buffer;
}

struct Range {
  double lo = 0.0, hi = 1.0;

  void expand_degenerate() {
    if (hi <= lo) {
      const double pad = std::max(std::abs(lo), 1.0) * 0.05;
      lo -= pad;
      hi += pad;
    }
  }
  double clamp01(double v) const { return (v - lo) / (hi - lo); }
};

Range data_range(const std::vector<PlotSeries>& series, bool use_x) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) r = {0.0, 1.0};
  r.expand_degenerate();
  return r;
}

void append_axes(std::string& svg, double x0, double y0, double x1, double y1, const Range& xr,
                 const Range& yr, const std::string& x_label, const std::string& y_label) {
  // gridlines + tick labels, 6 ticks per axis
  for (int i = 0; i <= 5; ++i) {
    const double f = i / 5.0;
    const double gx = x0 + f * (x1 - x0);
    const double gy = y1 - f * (y1 - y0);
    svg += "<line x1='" + fmt(gx) + "' y1='" + fmt(y0) + "' x2='" + fmt(gx) + "' y2='" +
           fmt(y1) + "' stroke='#dddddd'/>\n";
    svg += "<line x1='" + fmt(x0) + "' y1='" + fmt(gy) + "' x2='" + fmt(x1) + "' y2='" +
           fmt(gy) + "' stroke='#dddddd'/>\n";
    svg += "<text x='" + fmt(gx) + "' y='" + fmt(y1 + 18) +
           "' font-size='11' text-anchor='middle'>" +
           escape_xml(fmt(xr.lo + f * (xr.hi - xr.lo), "%.4g")) + "</text>\n";
    svg += "<text x='" + fmt(x0 - 6) + "' y='" + fmt(gy + 4) +
           "' font-size='11' text-anchor='end'>" +
           escape_xml(fmt(yr.lo + f * (yr.hi - yr.lo), "%.4g")) + "</text>\n";
  }
  svg += "<rect x='" + fmt(x0) + "' y='" + fmt(y0) + "' width='" + fmt(x1 - x0) + "' height='" +
         fmt(y1 - y0) + "' fill='none' stroke='#333333'/>\n";
  svg += "<text x='" + fmt((x0 + x1) / 2) + "' y='" + fmt(y1 + 38) +
         "' font-size='13' text-anchor='middle'>" + escape_xml(x_label) + "</text>\n";
  svg += "<text x='" + fmt(x0 - 52) + "' y='" + fmt((y0 + y1) / 2) +
         "' font-size='13' text-anchor='middle' transform='rotate(-90 " + fmt(x0 - 52) + " " +
         fmt((y0 + y1) / 2) + ")'>" + escape_xml(y_label) + "</text>\n";
}

std::string svg_header(int width, int height, const std::string& title) {
  std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(width) +
                    "' height='" + std::to_string(height) + "' viewBox='0 0 " +
                    std::to_string(width) + " " + std::to_string(height) +
                    "' font-family='sans-serif'>\n";
  svg += "<rect width='100%' height='100%' fill='white'/>\n";
  svg += "<text x='" + fmt(width / 2.0) + "' y='22' font-size='15' text-anchor='middle'>" +
         escape_xml(title) + "</text>\n";
  return svg;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<PlotSeries>& series,
                              int width, int height) {
  if (series.empty()) throw InvalidInputError("line chart needs at least one series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw InvalidInputError("series x/y length mismatch: " + s.label);
    if (s.x.empty()) throw InvalidInputError("empty series: " + s.label);
  }
  const double x0 = 70, y0 = 40;
  const double x1 = width - 20.0, y1 = height - 50.0;
  Range xr = data_range(series, true);
  Range yr = data_range(series, false);

  std::string svg = svg_header(width, height, title);
  append_axes(svg, x0, y0, x1, y1, xr, yr, x_label, y_label);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = x0 + xr.clamp01(s.x[i]) * (x1 - x0);
      const double py = y1 - yr.clamp01(s.y[i]) * (y1 - y0);
      points += fmt(px) + "," + fmt(py) + " ";
    }
    svg += "<polyline fill='none' stroke='";
    svg += color;
    svg += "' stroke-width='1.5' points='" + points + "'/>\n";
    // legend entry
    const double ly = y0 + 16 + 18.0 * static_cast<double>(si);
    svg += "<line x1='" + fmt(x1 - 150) + "' y1='" + fmt(ly) + "' x2='" + fmt(x1 - 126) +
           "' y2='" + fmt(ly) + "' stroke='";
    svg += color;
    svg += "' stroke-width='2'/>\n";
    svg += "<text x='" + fmt(x1 - 120) + "' y='" + fmt(ly + 4) + "' font-size='12'>" +
           escape_xml(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<PlotBar>& bars, int width, int height) {
  if (bars.empty()) throw InvalidInputError("bar chart needs at least one bar");
  const double x0 = 70, y0 = 40;
  const double x1 = width - 20.0, y1 = height - 50.0;
  Range yr{0.0, 0.0};
  for (const auto& b : bars) {
    yr.lo = std::min(yr.lo, b.value - b.error);
    yr.hi = std::max(yr.hi, b.value + b.error);
  }
  yr.hi *= 1.1;
  yr.expand_degenerate();

  std::string svg = svg_header(width, height, title);
  append_axes(svg, x0, y0, x1, y1, Range{0, 1}, yr, "", y_label);
  const double slot = (x1 - x0) / static_cast<double>(bars.size());
  const double zero_y = y1 - yr.clamp01(0.0) * (y1 - y0);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const char* color = kPalette[i % kPaletteSize];
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.6;
    const double vy = y1 - yr.clamp01(b.value) * (y1 - y0);
    const double top = std::min(vy, zero_y);
    const double h = std::abs(zero_y - vy);
    svg += "<rect x='" + fmt(cx - bw / 2) + "' y='" + fmt(top) + "' width='" + fmt(bw) +
           "' height='" + fmt(h) + "' fill='";
    svg += color;
    svg += "' fill-opacity='0.75'/>\n";
    if (b.error > 0) {
      const double ey0 = y1 - yr.clamp01(b.value - b.error) * (y1 - y0);
      const double ey1 = y1 - yr.clamp01(b.value + b.error) * (y1 - y0);
      svg += "<line x1='" + fmt(cx) + "' y1='" + fmt(ey0) + "' x2='" + fmt(cx) + "' y2='" +
             fmt(ey1) + "' stroke='#333333'/>\n";
      svg += "<line x1='" + fmt(cx - 6) + "' y1='" + fmt(ey0) + "' x2='" + fmt(cx + 6) +
             "' y2='" + fmt(ey0) + "' stroke='#333333'/>\n";
      svg += "<line x1='" + fmt(cx - 6) + "' y1='" + fmt(ey1) + "' x2='" + fmt(cx + 6) +
             "' y2='" + fmt(ey1) + "' stroke='#333333'/>\n";
    }
    svg += "<text x='" + fmt(cx) + "' y='" + fmt(y1 + 18) +
           "' font-size='11' text-anchor='middle'>" + escape_xml(b.label) + "</text>\n";
    svg += "<text x='" + fmt(cx) + "' y='" + fmt(top - 4) +
           "' font-size='10' text-anchor='middle'>" + escape_xml(fmt(b.value, "%.3f")) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double parse_number(const std::string& field, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw IoError("non-numeric field '" + field + "' in " + where);
  }
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& where) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("missing column '" + name + "' in " + where);
}

std::vector<double> column(const std::vector<std::vector<std::string>>& rows, std::size_t index,
                           const std::string& where) {
  std::vector<double> values;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (index >= rows[r].size()) throw IoError("short row in " + where);
    values.push_back(parse_number(rows[r][index], where));
  }
  return values;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

std::vector<std::string> render_run_plots(const std::string& metrics_csv_path,
                                          const std::string& summary_csv_path,
                                          const std::string& out_dir) {
  if (metrics_csv_path.empty() && summary_csv_path.empty()) {
    throw InvalidInputError("nothing to plot: no metrics.csv or summary.csv given");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create plot directory: " + out_dir + ": " + ec.message());

  std::vector<std::string> written;
  if (!metrics_csv_path.empty()) {
    const auto rows = parse_csv(read_file(metrics_csv_path));
    if (rows.size() < 2) throw IoError("no metric rows in " + metrics_csv_path);
    const auto& header = rows[0];
    const auto steps = column(rows, column_index(header, "step", metrics_csv_path),
                              metrics_csv_path);
    auto series_of = [&](const std::string& name) {
      return PlotSeries{name, steps,
                        column(rows, column_index(header, name, metrics_csv_path),
                               metrics_csv_path)};
    };
    const std::string curve =
        render_line_chart("Training progress", "environment steps", "per-batch mean",
                          {series_of("episodic_return_mean"), series_of("agreement_rate")});
    const std::string curve_path = out_dir + "/learning_curve.svg";
    write_file(curve_path, curve);
    written.push_back(curve_path);

    const std::string losses =
        render_line_chart("Optimization diagnostics", "environment steps", "value",
                          {series_of("policy_loss"), series_of("value_loss"),
                           series_of("entropy"), series_of("clip_frac")});
    const std::string losses_path = out_dir + "/losses.svg";
    write_file(losses_path, losses);
    written.push_back(losses_path);
  }
  if (!summary_csv_path.empty()) {
    const auto rows = parse_csv(read_file(summary_csv_path));
    if (rows.size() < 2) throw IoError("no summary rows in " + summary_csv_path);
    const auto& header = rows[0];
    const auto opp_col = column_index(header, "opponent", summary_csv_path);
    const auto mean_self = column_index(header, "mean_self", summary_csv_path);
    const auto ci_self = column_index(header, "ci99_self", summary_csv_path);
    const auto mean_opp = column_index(header, "mean_opp", summary_csv_path);
    const auto ci_opp = column_index(header, "ci99_opp", summary_csv_path);
    std::vector<PlotBar> bars;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      bars.push_back(PlotBar{row[opp_col] + " self",
                             parse_number(row[mean_self], summary_csv_path),
                             parse_number(row[ci_self], summary_csv_path)});
      bars.push_back(PlotBar{row[opp_col] + " opp",
                             parse_number(row[mean_opp], summary_csv_path),
                             parse_number(row[ci_opp], summary_csv_path)});
    }
    const std::string chart = render_bar_chart("Tournament utilities (99% CI over seeds)",
                                               "mean utility", bars);
    const std::string bars_path = out_dir + "/utility_summary.svg";
    write_file(bars_path, chart);
    written.push_back(bars_path);
  }
  return written;
}

}  // namespace negrl
