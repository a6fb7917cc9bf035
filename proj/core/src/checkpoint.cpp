#include "hargnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hargnn/error.hpp"

namespace hargnn {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Model& model, const nlohmann::ordered_json& extra) {
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["model_kind"] = to_string(model.config().kind);
  header["config"] = {{"model", model.config().to_json()}, {"data", extra.is_null() ? nlohmann::ordered_json::object() : extra}};
  auto table = nlohmann::ordered_json::array();
  std::string payload;
  for (const auto& p : model.named_parameters()) {
    const std::size_t offset = payload.size();
    for (double v : p.value.data()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
    table.push_back({{"name", p.name},
                     {"dtype", "f64"},
                     {"shape", p.value.shape()},
                     {"byte_offset", offset},
                     {"byte_len", payload.size() - offset}});
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

void save_checkpoint(const std::filesystem::path& file, const Model& model, const nlohmann::ordered_json& extra) {
  const std::string bytes = encode_checkpoint(model, extra);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + file.string());
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes, const ModelConfig* expected) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw DataError("checkpoint: bad magic bytes");
  }
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) throw DataError("checkpoint: truncated header");
  LoadedCheckpoint out;
  try {
    out.header = nlohmann::ordered_json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  }
  const auto& h = out.header;
  if (!h.contains("format_version") || h["format_version"] != kCheckpointFormatVersion) {
    throw DataError("checkpoint: unsupported format_version");
  }
  const ModelConfig config = ModelConfig::from_json(h.at("config").at("model"));
  if (h.at("model_kind").get<std::string>() != to_string(config.kind)) {
    throw DataError("checkpoint: model_kind disagrees with the config echo");
  }
  if (expected && !(*expected == config)) {
    throw ConfigError("checkpoint architecture " + h.at("config").at("model").dump() + " does not match expected " +
                      expected->to_json().dump());
  }

  out.model = make_model(config, 0);
  auto& params = out.model->named_parameters();
  const auto& table = h.at("tensors");
  if (!table.is_array() || table.size() != params.size()) {
    throw DataError("checkpoint: tensor table has " + std::to_string(table.size()) + " entries, architecture needs " +
                    std::to_string(params.size()));
  }
  const std::size_t payload_start = 16 + header_len;
  const std::size_t payload_size = bytes.size() - payload_start;
  std::size_t expected_offset = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& entry = table[k];
    auto& param = params[k];
    const auto name = entry.at("name").get<std::string>();
    if (name != param.name) throw DataError("checkpoint: tensor '" + name + "' where '" + param.name + "' was expected");
    if (entry.at("dtype").get<std::string>() != "f64") throw DataError("checkpoint: tensor '" + name + "' is not f64");
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != param.value.shape()) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " + shape_to_string(shape) + ", architecture needs " +
                      shape_to_string(param.value.shape()));
    }
    const auto offset = entry.at("byte_offset").get<std::size_t>();
    const auto len = entry.at("byte_len").get<std::size_t>();
    if (offset != expected_offset || len != param.value.numel() * 8 || offset + len > payload_size) {
      throw DataError("checkpoint: tensor '" + name + "' has an inconsistent byte range");
    }
    auto values = param.value.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::bit_cast<double>(get_u64(bytes, payload_start + offset + 8 * i));
    }
    expected_offset = offset + len;
  }
  if (expected_offset != payload_size) throw DataError("checkpoint: trailing bytes after tensor payload");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& file, const ModelConfig* expected) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + file.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes, expected);
  } catch (const DataError& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

}  // namespace hargnn
