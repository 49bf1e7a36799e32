#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "jscc/error.hpp"
#include "jscc/flops.hpp"
#include "jscc/metrics.hpp"
#include "jscc/trainer.hpp"

namespace jscc {

inline constexpr const char* kMetricsHeader =
    "run_id,method,dataset,bcr,snr_train_db,snr_test_db,psnr_db,ssim,lpips,n_images";

inline std::string metrics_row(const MetricsReport& r) {
  std::ostringstream os;
  os << r.run_id << "," << r.method << "," << r.dataset << "," << fmt_num(r.bcr) << "," << fmt_num(r.snr_train_db)
     << "," << fmt_num(r.snr_test_db) << "," << fmt_num(r.psnr_db) << "," << fmt_num(r.ssim) << ","
     << (r.lpips ? fmt_num(*r.lpips) : std::string()) << "," << r.n_images;
  return os.str();
}

inline void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << kMetricsHeader << "\n";
  for (const auto& r : rows) os << metrics_row(r) << "\n";
}

inline double parse_num(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

/// Parses metrics.csv; throws ContractError on header or field mismatches.
inline std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw ContractError(path.string() + ": header does not match the metrics schema");
  std::vector<MetricsReport> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw ContractError(path.string() + ":" + std::to_string(lineno) + ": expected 10 fields");
    try {
      MetricsReport r;
      r.run_id = f[0];
      r.method = f[1];
      r.dataset = f[2];
      r.bcr = parse_num(f[3]);
      r.snr_train_db = parse_num(f[4]);
      r.snr_test_db = parse_num(f[5]);
      r.psnr_db = parse_num(f[6]);
      r.ssim = parse_num(f[7]);
      if (!f[8].empty()) r.lpips = parse_num(f[8]);
      r.n_images = std::stoi(f[9]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": malformed numeric field");
    }
  }
  return rows;
}

/// flops.csv: one row per layer, then per-network and per-method totals.
inline void write_flops_csv(const std::filesystem::path& path, const std::vector<MethodFlops>& methods) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  os << "layer,M_h,M_w,F,K_in,K_out,flops\n";
  for (const auto& m : methods) {
    for (const auto& n : m.networks) {
      for (const auto& e : n.layers)
        os << to_string(m.method) << "/" << e.network << "/" << e.layer << "," << e.m_h << "," << e.m_w << ","
           << e.kernel << "," << e.k_in << "," << e.k_out << "," << e.flops << "\n";
      os << to_string(m.method) << "/" << n.network << "/total,,,,,," << n.total << "\n";
    }
    os << to_string(m.method) << "/total,,,,,," << m.total << "\n";
  }
}

}  // namespace jscc
