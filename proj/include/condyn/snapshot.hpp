#pragma once

#include <string>

#include "condyn/params.hpp"

namespace condyn::diff {

// Binary parameter snapshot. Layout: magic "CONDYN1", then per parameter in
// name order: name length (u32 LE), UTF-8 name, rank (u32 LE), dims (u32 LE
// each), values (f64 LE). Loading validates the magic, every count, and that
// the file ends exactly at a record boundary.
void save_snapshot(const std::string& path, const ParameterSet& ps);
ParameterSet load_snapshot(const std::string& path);

}  // namespace condyn::diff
