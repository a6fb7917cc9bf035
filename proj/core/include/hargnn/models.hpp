#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hargnn/graph.hpp"
#include "hargnn/layers.hpp"
#include "hargnn/tensor.hpp"

namespace hargnn {

enum class ModelKind { GcnAttention, Gcn, Ragnn };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);  // throws ConfigError

/// Architecture description. Everything needed to rebuild a model's
/// parameter shapes; echoed into checkpoints.
struct ModelConfig {
  ModelKind kind = ModelKind::GcnAttention;
  std::vector<std::size_t> sensor_widths;  // d_i per sensor
  std::size_t n_classes = 7;
  std::size_t nodes = 24;  // t, used by the RAGNN flatten
  std::size_t hidden = 16;
  std::size_t gcn_layers = 5;
  bool self_loops = true;
  std::size_t attention_repeats = 1;
  std::size_t lstm_hidden = 16;
  std::size_t gat_layers = 2;
  std::size_t gat_width = 16;
  double leaky_slope = 0.2;

  std::size_t total_channels() const;
  std::size_t sensor_count() const noexcept { return sensor_widths.size(); }
  void validate() const;  // throws ConfigError

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Optional by-products of a forward pass.
struct ForwardTrace {
  Tensor attention;  // gcn_attention: B×t×n×n from the last attention application
  Tensor features;   // penultimate representation fed to the output layer, B×F
};

class Model {
 public:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Logits B×C.
  virtual Tensor forward(const GraphBatch& batch, ForwardTrace* trace = nullptr) const = 0;

  const ModelConfig& config() const noexcept { return config_; }
  std::vector<NamedTensor>& named_parameters() noexcept { return params_; }
  const std::vector<NamedTensor>& named_parameters() const noexcept { return params_; }
  std::vector<Tensor> parameters() const;
  const Tensor& parameter(const std::string& name) const;
  Tensor& parameter(const std::string& name);

 protected:
  Tensor& add_parameter(std::string name, Tensor value);
  void check_batch(const GraphBatch& batch) const;

  ModelConfig config_;
  std::vector<NamedTensor> params_;
};

/// Per-sensor GCN stacks fused by inter-sensor self-attention, mean-pooled
/// over timestamps, then a linear output layer.
class GcnAttentionModel final : public Model {
 public:
  GcnAttentionModel(ModelConfig config, std::uint64_t seed);
  Tensor forward(const GraphBatch& batch, ForwardTrace* trace = nullptr) const override;

  /// Per-sensor encoder outputs, each B×t×d̂.
  std::vector<Tensor> encode(const GraphBatch& batch) const;
};

/// One GCN stack over all channels, mean-pooled, then linear.
class PlainGcnModel final : public Model {
 public:
  PlainGcnModel(ModelConfig config, std::uint64_t seed);
  Tensor forward(const GraphBatch& batch, ForwardTrace* trace = nullptr) const override;
};

/// Per-sensor LSTM followed by per-sensor GAT stacks; sensor outputs are
/// concatenated, flattened over all nodes, then linear.
class RagnnModel final : public Model {
 public:
  RagnnModel(ModelConfig config, std::uint64_t seed);
  Tensor forward(const GraphBatch& batch, ForwardTrace* trace = nullptr) const override;
};

/// Glorot-uniform weights, zero biases, drawn in parameter order from `seed`.
std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace hargnn
