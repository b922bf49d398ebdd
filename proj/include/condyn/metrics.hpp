#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace condyn::run {

// Column names after the leading "update", in file order.
inline constexpr std::array<const char*, 10> kMetricNames = {
    "avg_return",     "avg_discounted_return",
    "rl_loss",        "model_nll",
    "consistency_loss", "elbo",
    "imitation_loss", "imagination_ll",
    "collapse_monitor", "wallclock_s"};

inline constexpr std::size_t kNumMetrics = kMetricNames.size();

extern const std::string kCsvHeader;

struct MetricsRow {
  std::size_t update = 0;
  // Indexed like kMetricNames; absent means an empty CSV field.
  std::array<std::optional<double>, 10> values;

  std::optional<double>& field(const std::string& name);
  const std::optional<double>& field(const std::string& name) const;
};

// Round-trip-exact decimal rendering used for every numeric output file.
std::string format_double(double v);

// Streams rows to a CSV file, flushing after each row so partial runs stay
// readable. Throws IoError on open/write failures.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRow& row);

 private:
  std::ofstream out_;
  std::string path_;
};

// Reads a metrics CSV; the header must match kCsvHeader exactly.
std::vector<MetricsRow> read_metrics(const std::string& path);

}  // namespace condyn::run
