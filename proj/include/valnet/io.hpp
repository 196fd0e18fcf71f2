#pragma once

#include <string>

#include "valnet/instance.hpp"

namespace valnet {

// Versioned native schema ("format": 1). Lossless round trip.
std::string write_native(const BilevelInstance& inst);
BilevelInstance read_native(const std::string& text);

// MPS (NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA, all variables binary) plus the
// companion AUX file:
//   N k    follower variable count
//   M k    follower (interaction) row count
//   LC j   0-based follower column index, one line per column
//   LR i   0-based follower row index, one line per row
//   LO v   follower objective coefficient, aligned with the LC order
//   OS s   follower objective sense, 1 = min, -1 = max
struct MpsAuxText {
    std::string mps;
    std::string aux;
};

BilevelInstance parse_mps_aux(const std::string& mps_text, const std::string& aux_text);
MpsAuxText write_mps_aux(const BilevelInstance& inst);

BilevelInstance load_instance_file(const std::string& path);  // .json or .mps (+ .aux)
void save_instance_file(const BilevelInstance& inst, const std::string& path);

}  // namespace valnet
