#pragma once

#include <string>

#include "codemine/encdec.hpp"
#include "codemine/jsonl.hpp"

namespace codemine {

/// Binary layout: 8-byte magic, little-endian uint32 manifest length, JSON
/// manifest, then every tensor as little-endian float32 in row-major order,
/// in EncDecParams::tensors() order. A readable copy of the manifest goes to
/// `<path>.manifest.txt`.
void save_checkpoint(const std::string& path, const EncDecModel& model, const OutputMeta& meta);

struct LoadedCheckpoint {
  EncDecModel model;
  OutputMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Parameters rounded through float32, i.e. what a save/load round trip yields.
void round_to_float(EncDecParams& params);

}  // namespace codemine
