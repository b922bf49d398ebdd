#include "condyn/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "condyn/errors.hpp"

namespace condyn::run {

namespace {

std::string build_header() {
  std::string h = "update";
  for (const char* name : kMetricNames) {
    h += ",";
    h += name;
  }
  return h;
}

}  // namespace

const std::string kCsvHeader = build_header();

std::optional<double>& MetricsRow::field(const std::string& name) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (name == kMetricNames[i]) {
      return values[i];
    }
  }
  throw ConfigError("unknown metric name: " + name);
}

const std::optional<double>& MetricsRow::field(const std::string& name) const {
  return const_cast<MetricsRow*>(this)->field(name);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw IoError("cannot open metrics file for writing: " + path);
  }
  out_ << kCsvHeader << "\n";
  out_.flush();
  if (!out_) {
    throw IoError("write failed: " + path);
  }
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << row.update;
  for (const auto& v : row.values) {
    out_ << ",";
    if (v.has_value()) {
      out_ << format_double(*v);
    }
  }
  out_ << "\n";
  out_.flush();
  if (!out_) {
    throw IoError("write failed: " + path_);
  }
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read metrics file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("empty metrics file: " + path);
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != kCsvHeader) {
    throw ConfigError("metrics header mismatch in " + path + ": got '" + line +
                      "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    if (fields.size() != kMetricNames.size() + 1) {
      throw ConfigError("bad field count at " + path + ":" +
                        std::to_string(lineno));
    }
    MetricsRow row;
    try {
      row.update = std::stoull(fields[0]);
    } catch (const std::exception&) {
      throw ConfigError("bad update index at " + path + ":" +
                        std::to_string(lineno));
    }
    for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
      const std::string& f = fields[i + 1];
      if (f.empty()) {
        continue;
      }
      try {
        std::size_t used = 0;
        double v = std::stod(f, &used);
        if (used != f.size()) {
          throw std::invalid_argument(f);
        }
        row.values[i] = v;
      } catch (const std::exception&) {
        throw ConfigError("bad numeric field '" + f + "' at " + path + ":" +
                          std::to_string(lineno));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace condyn::run
