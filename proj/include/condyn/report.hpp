#pragma once

#include <string>

namespace condyn::run {

// Aggregates the per-seed metrics.csv files found in the immediate
// subdirectories of runs_dir (or runs_dir itself) into one CSV with
// per-metric mean and population standard deviation across runs, joined on
// update indices present in every run. Each run's series is first smoothed
// with a trailing mean over the last `window` present values, mirroring
// curve averaging over recent batches; window=1 disables smoothing.
void emit_report(const std::string& runs_dir, const std::string& out_path,
                 std::size_t window);

}  // namespace condyn::run
