#pragma once

#include <string>

#include "seqcast/train.hpp"

namespace seqcast {

// Binary checkpoint layout (little-endian):
//   magic "SSMF", format version u32,
//   config block: length u64 + UTF-8 key=value text,
//   tensor count u64, then per tensor:
//     name length u64 + name bytes, rank u64, dims u64 each, payload f64.
// Parameters, Adam moments, the cost graph and bookkeeping scalars are all
// stored as named tensors; save/load round-trips bit-exactly.
void save_checkpoint(const TrainState& st, const TrainConfig& tc,
                     const std::string& path);

struct LoadedCheckpoint {
    TrainState state;
    TrainConfig train_config;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace seqcast
