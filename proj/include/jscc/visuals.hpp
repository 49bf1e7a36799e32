#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "jscc/error.hpp"
#include "jscc/metrics.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

enum class PlotMetric { psnr, ssim, lpips };

inline PlotMetric parse_plot_metric(const std::string& s) {
  if (s == "psnr") return PlotMetric::psnr;
  if (s == "ssim") return PlotMetric::ssim;
  if (s == "lpips") return PlotMetric::lpips;
  throw ConfigError("unknown metric '" + s + "' (expected psnr, ssim or lpips)");
}

inline const char* metric_label(PlotMetric m) {
  switch (m) {
    case PlotMetric::psnr: return "PSNR (dB)";
    case PlotMetric::ssim: return "SSIM";
    case PlotMetric::lpips: return "LPIPS";
  }
  return "";
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (snr_test_db, value), sorted by x
};

/// One series per (method, snr_train_db), in first-appearance order. Rows
/// with a non-finite x or y are skipped.
inline std::vector<PlotSeries> collect_series(const std::vector<MetricsReport>& rows, PlotMetric metric) {
  std::vector<PlotSeries> series;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto& r : rows) {
    double y = 0.0;
    if (metric == PlotMetric::psnr) y = r.psnr_db;
    else if (metric == PlotMetric::ssim) y = r.ssim;
    else if (r.lpips) y = *r.lpips;
    else continue;
    if (!std::isfinite(r.snr_test_db) || !std::isfinite(y)) continue;
    const auto key = std::make_pair(r.method, r.snr_train_db);
    auto it = index.find(key);
    if (it == index.end()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s (train %g dB)", r.method.c_str(), r.snr_train_db);
      it = index.emplace(key, series.size()).first;
      series.push_back({buf, {}});
    }
    series[it->second].points.emplace_back(r.snr_test_db, y);
  }
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());
  return series;
}

namespace detail {
struct PlotFrame {
  double x0, x1, y0, y1;
  int width = 640, height = 420, left = 70, right = 200, top = 30, bottom = 50;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline PlotFrame frame_for(const std::vector<PlotSeries>& series) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x); x1 = std::max(x1, x);
      y0 = std::min(y0, y); y1 = std::max(y1, y);
    }
  if (x1 <= x0) { x0 -= 1; x1 += 1; }
  if (y1 <= y0) { y0 -= 1; y1 += 1; }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

inline const std::vector<std::tuple<int, int, int>>& palette() {
  static const std::vector<std::tuple<int, int, int>> p = {
      {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}, {140, 86, 75}, {227, 119, 194}};
  return p;
}
}  // namespace detail

/// Line chart of a metric versus test SNR as SVG text (deterministic for equal input).
inline std::string render_plot_svg(const std::vector<PlotSeries>& series, PlotMetric metric) {
  if (series.empty()) throw ContractError("nothing to plot");
  const auto f = detail::frame_for(series);
  std::ostringstream os;
  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n",
                f.left, f.top, f.width - f.left - f.right, f.height - f.top - f.bottom);
  os << buf;
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%d\" font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n",
                  f.px(xv), f.height - f.bottom + 16, xv);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                  f.left - 6, f.py(yv) + 4, yv);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\">SNR_test (dB)</text>\n",
                (f.left + f.width - f.right) / 2.0, f.height - 12);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                f.height / 2.0, f.height / 2.0, metric_label(metric));
  os << buf;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto [r, g, b] = detail::palette()[i % detail::palette().size()];
    std::snprintf(buf, sizeof buf, "rgb(%d,%d,%d)", r, g, b);
    const std::string color = buf;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", p ? " " : "", f.px(series[i].points[p].first),
                    f.py(series[i].points[p].second));
      os << buf;
    }
    os << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", f.px(x), f.py(y),
                    color.c_str());
      os << buf;
    }
    const int ly = f.top + 16 + static_cast<int>(i) * 18;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%d\" y=\"%d\" font-size=\"11\">",
                  f.width - f.right + 10, ly - 4, f.width - f.right + 30, ly - 4, color.c_str(),
                  f.width - f.right + 36, ly);
    os << buf << series[i].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Raster version of the same chart.
inline cv::Mat render_plot_png(const std::vector<PlotSeries>& series, PlotMetric metric) {
  if (series.empty()) throw ContractError("nothing to plot");
  const auto f = detail::frame_for(series);
  cv::Mat img(f.height, f.width, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::rectangle(img, cv::Point(f.left, f.top), cv::Point(f.width - f.right, f.height - f.bottom), cv::Scalar(0, 0, 0));
  char buf[64];
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", xv);
    cv::putText(img, buf, cv::Point(static_cast<int>(f.px(xv)) - 10, f.height - f.bottom + 18),
                cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0, 0, 0));
    std::snprintf(buf, sizeof buf, "%.4g", yv);
    cv::putText(img, buf, cv::Point(8, static_cast<int>(f.py(yv)) + 4), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(0, 0, 0));
  }
  cv::putText(img, std::string("SNR_test (dB) vs ") + metric_label(metric),
              cv::Point(f.left, f.height - 12), cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto [r, g, b] = detail::palette()[i % detail::palette().size()];
    const cv::Scalar color(b, g, r);
    for (std::size_t p = 0; p + 1 < series[i].points.size(); ++p)
      cv::line(img, cv::Point2d(f.px(series[i].points[p].first), f.py(series[i].points[p].second)),
               cv::Point2d(f.px(series[i].points[p + 1].first), f.py(series[i].points[p + 1].second)), color, 2,
               cv::LINE_AA);
    for (const auto& [x, y] : series[i].points) cv::circle(img, cv::Point2d(f.px(x), f.py(y)), 3, color, -1);
    const int ly = f.top + 16 + static_cast<int>(i) * 18;
    cv::line(img, cv::Point(f.width - f.right + 10, ly - 4), cv::Point(f.width - f.right + 30, ly - 4), color, 2);
    cv::putText(img, series[i].label, cv::Point(f.width - f.right + 36, ly), cv::FONT_HERSHEY_SIMPLEX, 0.38,
                cv::Scalar(0, 0, 0));
  }
  return img;
}

/// Stacks image rows (originals first, then one row per method) into one BGR mosaic.
inline cv::Mat image_grid(const std::vector<ImageBatch<float>>& rows, int pad = 2) {
  if (rows.empty()) throw ContractError("image grid needs at least one row");
  const Shape s = rows.front().shape();
  if (s.c != 3 && s.c != 1) throw ContractError("image grid supports 1 or 3 channels");
  const int cols = s.n;
  cv::Mat grid(static_cast<int>(rows.size()) * (s.h + pad) + pad, cols * (s.w + pad) + pad, CV_8UC3,
               cv::Scalar(255, 255, 255));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].shape() != s) throw ContractError("image grid rows must share a shape");
    const ImageBatch<float> px = rows[r].quantized();
    for (int n = 0; n < cols; ++n)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          auto& dst = grid.at<cv::Vec3b>(pad + static_cast<int>(r) * (s.h + pad) + y, pad + n * (s.w + pad) + x);
          for (int c = 0; c < 3; ++c) {
            const int src_c = s.c == 1 ? 0 : c;
            dst[2 - c] = static_cast<unsigned char>(px.data.at(n, src_c, y, x));
          }
        }
  }
  return grid;
}

/// Heatmap of a train-SNR x test-SNR metric matrix with the value printed in each cell.
inline cv::Mat render_heatmap_png(const std::vector<std::vector<MetricsReport>>& grid, PlotMetric metric) {
  if (grid.empty() || grid.front().empty()) throw ContractError("nothing to plot");
  auto value = [&](const MetricsReport& r) {
    if (metric == PlotMetric::psnr) return r.psnr_db;
    if (metric == PlotMetric::ssim) return r.ssim;
    return r.lpips.value_or(0.0);
  };
  double lo = 1e300, hi = -1e300;
  for (const auto& row : grid)
    for (const auto& r : row)
      if (std::isfinite(value(r))) {
        lo = std::min(lo, value(r));
        hi = std::max(hi, value(r));
      }
  if (!(hi > lo)) hi = lo + 1.0;
  const int cell = 70, left = 110, top = 40;
  const int rows = static_cast<int>(grid.size()), cols = static_cast<int>(grid.front().size());
  cv::Mat img(top + rows * cell + 30, left + cols * cell + 10, CV_8UC3, cv::Scalar(255, 255, 255));
  char buf[64];
  for (int i = 0; i < rows; ++i) {
    std::snprintf(buf, sizeof buf, "train %g", grid[i].front().snr_train_db);
    cv::putText(img, buf, cv::Point(6, top + i * cell + cell / 2 + 4), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(0, 0, 0));
    for (int j = 0; j < cols; ++j) {
      const double v = value(grid[i][j]);
      const double t = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
      const cv::Scalar color(255 * (1 - t), 80, 255 * t);
      cv::rectangle(img, cv::Rect(left + j * cell, top + i * cell, cell - 2, cell - 2), color, -1);
      std::snprintf(buf, sizeof buf, "%.3g", v);
      cv::putText(img, buf, cv::Point(left + j * cell + 8, top + i * cell + cell / 2 + 4), cv::FONT_HERSHEY_SIMPLEX,
                  0.45, cv::Scalar(255, 255, 255));
    }
  }
  for (int j = 0; j < cols; ++j) {
    std::snprintf(buf, sizeof buf, "test %g", grid.front()[j].snr_test_db);
    cv::putText(img, buf, cv::Point(left + j * cell + 4, top - 10), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(0, 0, 0));
  }
  cv::putText(img, metric_label(metric), cv::Point(left, top + rows * cell + 20), cv::FONT_HERSHEY_SIMPLEX, 0.45,
              cv::Scalar(0, 0, 0));
  return img;
}

inline void write_png(const std::filesystem::path& path, const cv::Mat& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace jscc
