#include "condyn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "condyn/errors.hpp"
#include "condyn/metrics.hpp"

namespace condyn::run {

namespace fs = std::filesystem;

namespace {

// Trailing-mean smoothing over the last `window` rows where the metric is
// present; rows where the metric is absent stay absent.
std::vector<std::optional<double>> smooth_series(
    const std::vector<MetricsRow>& rows, std::size_t metric,
    std::size_t window) {
  std::vector<std::optional<double>> out(rows.size());
  std::vector<double> history;
  history.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = rows[i].values[metric];
    if (!v.has_value()) continue;
    history.push_back(*v);
    const std::size_t n = std::min(window, history.size());
    double sum = 0.0;
    for (std::size_t j = history.size() - n; j < history.size(); ++j) {
      sum += history[j];
    }
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace

void emit_report(const std::string& runs_dir, const std::string& out_path,
                 std::size_t window) {
  if (window == 0) {
    throw ConfigError("report smoothing window must be at least 1");
  }
  std::error_code ec;
  if (!fs::is_directory(runs_dir, ec)) {
    throw IoError("runs directory '" + runs_dir + "' does not exist");
  }

  // Collect run files: metrics.csv in each immediate subdirectory, sorted by
  // directory name; a lone metrics.csv directly in runs_dir counts as a
  // single run.
  std::vector<std::string> run_files;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& dir : subdirs) {
    fs::path candidate = dir / "metrics.csv";
    if (fs::is_regular_file(candidate, ec)) {
      run_files.push_back(candidate.string());
    }
  }
  if (run_files.empty()) {
    fs::path direct = fs::path(runs_dir) / "metrics.csv";
    if (fs::is_regular_file(direct, ec)) run_files.push_back(direct.string());
  }
  if (run_files.empty()) {
    throw ConfigError("no runs found in '" + runs_dir + "'");
  }

  // read_metrics rejects any file whose header differs from the canonical
  // one, so all loaded runs share a compatible layout.
  struct RunSeries {
    std::map<std::size_t, std::array<std::optional<double>, kNumMetrics>>
        by_update;
  };
  std::vector<RunSeries> runs;
  runs.reserve(run_files.size());
  for (const auto& file : run_files) {
    std::vector<MetricsRow> rows = read_metrics(file);
    RunSeries series;
    std::array<std::vector<std::optional<double>>, kNumMetrics> smoothed;
    for (std::size_t m = 0; m < kNumMetrics; ++m) {
      smoothed[m] = smooth_series(rows, m, window);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& slot = series.by_update[rows[i].update];
      for (std::size_t m = 0; m < kNumMetrics; ++m) {
        slot[m] = smoothed[m][i];
      }
    }
    runs.push_back(std::move(series));
  }

  // Inner join: keep update indices present in every run.
  std::vector<std::size_t> updates;
  for (const auto& [u, vals] : runs.front().by_update) {
    bool in_all = true;
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (!runs[r].by_update.count(u)) {
        in_all = false;
        break;
      }
    }
    if (in_all) updates.push_back(u);
  }

  fs::path out_fs(out_path);
  if (out_fs.has_parent_path()) {
    fs::create_directories(out_fs.parent_path(), ec);
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open report output file '" + out_path + "'");
  }
  out << "update";
  for (std::size_t m = 0; m < kNumMetrics; ++m) {
    out << ',' << kMetricNames[m] << "_mean," << kMetricNames[m] << "_std";
  }
  out << '\n';
  for (std::size_t u : updates) {
    out << u;
    for (std::size_t m = 0; m < kNumMetrics; ++m) {
      std::vector<double> vals;
      vals.reserve(runs.size());
      bool all_present = true;
      for (const auto& r : runs) {
        const auto& v = r.by_update.at(u)[m];
        if (v.has_value()) {
          vals.push_back(*v);
        } else {
          all_present = false;
          break;
        }
      }
      if (!all_present) {
        out << ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size());
      out << ',' << format_double(mean) << ','
          << format_double(std::sqrt(var));
    }
    out << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("failed while writing report to '" + out_path + "'");
  }
}

}  // namespace condyn::run
