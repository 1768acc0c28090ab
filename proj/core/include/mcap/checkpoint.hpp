#pragma once

#include <string>

#include "mcap/model.hpp"

namespace mcap {

// Single-file checkpoint, version 1:
//   bytes 0..7   magic "MCAPCKP1"
//   u32          config text length, then that many bytes (key=value text,
//                model + data sections; enough to rebuild the model)
//   u32          parameter count
//   per param:   u16 name length, name bytes, u8 dtype (0 = f64),
//                u8 rank, u64 extents[rank]
//   payload      raw little-endian f64 buffers in manifest order
// All integers are little-endian fixed width.
void save_checkpoint(const MambaCapsuleModel& model, const std::string& path);

MambaCapsuleModel load_checkpoint(const std::string& path);

} // namespace mcap
