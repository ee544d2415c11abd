#pragma once

#include <filesystem>
#include <utility>

#include "core/unet.hpp"

namespace ts {

// Binary model snapshot. Layout, all integers little-endian uint32, values
// little-endian float32:
//   magic "UNSG" | version | tensor_count
//   in_channels | out_channels | depth | base_width | img_size
//   per tensor, sorted by name:
//     name_len | name bytes | rank | extents... | values...
inline constexpr char kCheckpointMagic[4] = {'U', 'N', 'S', 'G'};
inline constexpr uint32_t kCheckpointVersion = 1;

// Serializes to a temporary file in the target directory and renames it into
// place, so a crash never leaves a half-written checkpoint behind.
template <class T>
void save_checkpoint(const ParamStore<T>& params, const UNetConfig& config,
                     const std::filesystem::path& path);

std::pair<ParamStore<float>, UNetConfig> load_checkpoint(const std::filesystem::path& path);

extern template void save_checkpoint<float>(const ParamStore<float>&, const UNetConfig&, const std::filesystem::path&);
extern template void save_checkpoint<double>(const ParamStore<double>&, const UNetConfig&, const std::filesystem::path&);

}  // namespace ts
