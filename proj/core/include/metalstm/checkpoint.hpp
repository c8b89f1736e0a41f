#pragma once

#include <string>

#include "metalstm/container.hpp"
#include "metalstm/metaopt.hpp"

namespace metalstm {

inline constexpr io::Magic kCheckpointMagic{'M', 'L', 'S', 'T', 'M', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws io::BadMagic, io::VersionMismatch, io::TruncatedFile or io::ShapeInconsistent.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace metalstm
