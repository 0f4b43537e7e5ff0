#pragma once

#include <string>

#include "clkcrec/model.hpp"

namespace clk {

// Binary parameter snapshot. Layout: magic "CLKC", format version, config
// digest, node count, then every named parameter as (name, rows, cols, doubles),
// all integers and doubles little-endian. Loading requires a model built
// from the same config (digest match) and graph shape; values restore
// bit-exactly.
void save_checkpoint(Model& m, const std::string& path);
void load_checkpoint(Model& m, const std::string& path);

}  // namespace clk
