#pragma once

#include <cstdint>
#include <string>

namespace condyn::run {

// One training run, fully specified. Defaults that depend on the pathway
// (k, horizon, updates) are resolved at parse time, so every field is
// concrete afterwards.
struct RunConfig {
  std::string env = "pointmass2d";
  std::string pathway = "obs";  // "obs" | "ssm"
  double alpha = 0.5;
  bool consistency = true;  // false forces alpha = 0 (pure baseline)
  std::size_t k = 20;       // open-loop unroll length
  std::size_t horizon = 50; // episode cap (obs) or segment length T (ssm)
  double gamma = 0.99;
  std::uint64_t seed = 0;
  std::size_t updates = 1000;
  std::size_t batch = 8;  // episodes (obs) or segments (ssm) per update
  double lr_policy = 3e-4;
  double lr_model = 1e-3;
  double lr_encoder = 1e-3;
  std::string encoder_mode = "train";  // "train" | "frozen"
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  std::size_t eval_every = 50;
  std::string out_dir = "runs/out";
  std::string data_dir = "data";

  // Directory holding this run's metrics.csv and snapshot.condyn.
  std::string run_dir() const;
};

// Flat "key = value" text, one pair per line, '#' starts a comment. Unknown
// keys, missing '=' separators, and unparsable values are ConfigErrors that
// name the offending key/line. IoError if the file cannot be read.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace condyn::run
