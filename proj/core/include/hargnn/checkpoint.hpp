#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "hargnn/models.hpp"

namespace hargnn {

/// Binary checkpoint layout:
///   8 bytes   magic "HARGNN1\0"
///   8 bytes   header length N, little-endian u64
///   N bytes   UTF-8 JSON header: format_version, model_kind, config echo,
///             tensor table [{name, dtype, shape, byte_offset, byte_len}]
///   payload   little-endian float64 tensors, concatenated in table order;
///             byte_offset is relative to the payload start.
inline constexpr char kCheckpointMagic[8] = {'H', 'A', 'R', 'G', 'N', 'N', '1', '\0'};
inline constexpr int kCheckpointFormatVersion = 1;

/// Serialises the model. `extra` is stored under config.data (class names,
/// layout, window settings) and returned verbatim on load.
std::string encode_checkpoint(const Model& model, const nlohmann::ordered_json& extra = {});
void save_checkpoint(const std::filesystem::path& file, const Model& model, const nlohmann::ordered_json& extra = {});

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  nlohmann::ordered_json header;

  const nlohmann::ordered_json& data() const { return header.at("config").at("data"); }
};

/// Rebuilds the architecture from the config echo and validates every tensor
/// shape against it. When `expected` is given, the echo must equal it.
LoadedCheckpoint decode_checkpoint(const std::string& bytes, const ModelConfig* expected = nullptr);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& file, const ModelConfig* expected = nullptr);

}  // namespace hargnn
