#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/dataset.hpp"
#include "rhcnn/evaluator.hpp"

namespace rhcnn {

namespace detail {

inline std::string fmt_double(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// Plot-ready curve: one row per M.
inline void write_recall_curve_csv(const RecallCurve& curve, const std::string& path) {
  std::string csv = "M,mean_recall,n_users\n";
  for (std::size_t s = 0; s < curve.m_values.size(); ++s) {
    csv += std::to_string(curve.m_values[s]) + "," + detail::fmt_double(curve.mean_recall[s]) +
           "," + std::to_string(curve.n_users) + "\n";
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write curve: ", path);
  out << csv;
}

// Raw per-user recalls, kept for significance analysis.
inline void write_per_user_recall_csv(const RecallCurve& curve, const std::string& path) {
  std::string csv = "user";
  for (int m : curve.m_values) csv += ",recall_at_" + std::to_string(m);
  csv += "\n";
  for (std::size_t k = 0; k < curve.user_ids.size(); ++k) {
    csv += std::to_string(curve.user_ids[k]);
    for (double r : curve.per_user[k]) csv += "," + detail::fmt_double(r);
    csv += "\n";
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write per-user recalls: ", path);
  out << csv;
}

struct CurveSeries {
  std::string label;
  std::vector<int> m_values;
  std::vector<double> recall;
};

inline CurveSeries read_recall_curve_csv(const std::string& path, const std::string& label) {
  const auto rows = detail::parse_csv(detail::read_file(path), path);
  require(rows.size() >= 2 && rows[0].size() >= 2 && rows[0][0] == "M",
          "not a recall curve csv: ", path);
  CurveSeries s;
  s.label = label;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    s.m_values.push_back(std::stoi(rows[r][0]));
    s.recall.push_back(std::stod(rows[r][1]));
  }
  return s;
}

// Minimal self-contained recall-vs-M plot; axes fixed to [0, 1] recall.
inline std::string render_curves_svg(const std::vector<CurveSeries>& series) {
  const int w = 640, h = 440, ml = 60, mr = 20, mt = 20, mb = 50;
  const double pw = w - ml - mr, ph = h - mt - mb;
  int max_m = 1;
  for (const auto& s : series) {
    for (int m : s.m_values) max_m = std::max(max_m, m);
  }
  const auto xcoord = [&](double m) { return ml + pw * m / max_m; };
  const auto ycoord = [&](double r) { return mt + ph * (1.0 - r); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                    "\" height=\"" + std::to_string(h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int grid = 0; grid <= 10; ++grid) {
    const double y = ycoord(grid / 10.0);
    svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + detail::fmt_double(y, 1) +
           "\" x2=\"" + std::to_string(w - mr) + "\" y2=\"" + detail::fmt_double(y, 1) +
           "\" stroke=\"#dddddd\" stroke-dasharray=\"4 3\"/>\n";
    svg += "<text x=\"" + std::to_string(ml - 8) + "\" y=\"" + detail::fmt_double(y + 4, 1) +
           "\" text-anchor=\"end\" font-size=\"12\">" + detail::fmt_double(grid / 10.0, 1) +
           "</text>\n";
  }
  for (int m = 0; m <= max_m; m += std::max(1, max_m / 10)) {
    svg += "<text x=\"" + detail::fmt_double(xcoord(m), 1) + "\" y=\"" +
           std::to_string(h - mb + 18) + "\" text-anchor=\"middle\" font-size=\"12\">" +
           std::to_string(m) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(ml + static_cast<int>(pw) / 2) + "\" y=\"" +
         std::to_string(h - 10) + "\" text-anchor=\"middle\" font-size=\"13\">M</text>\n";
  svg += "<text x=\"16\" y=\"" + std::to_string(mt + static_cast<int>(ph) / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " +
         std::to_string(mt + static_cast<int>(ph) / 2) + ")\">recall</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % 8];
    std::string points;
    for (std::size_t i = 0; i < series[k].m_values.size(); ++i) {
      points += detail::fmt_double(xcoord(series[k].m_values[i]), 1) + "," +
                detail::fmt_double(ycoord(series[k].recall[i]), 1) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + std::to_string(ml + 10) + "\" y=\"" +
           std::to_string(mt + 18 + 16 * static_cast<int>(k)) + "\" font-size=\"12\" fill=\"" +
           color + "\">" + series[k].label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace rhcnn
