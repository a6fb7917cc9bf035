#include "hargnn/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hargnn/error.hpp"
#include "hargnn/ops.hpp"

namespace hargnn {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GcnAttention: return "gcn_attention";
    case ModelKind::Gcn: return "gcn";
    case ModelKind::Ragnn: return "ragnn";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gcn_attention") return ModelKind::GcnAttention;
  if (name == "gcn") return ModelKind::Gcn;
  if (name == "ragnn") return ModelKind::Ragnn;
  throw ConfigError("unknown model kind '" + name + "' (expected gcn_attention, gcn or ragnn)");
}

std::size_t ModelConfig::total_channels() const {
  std::size_t d = 0;
  for (auto w : sensor_widths) d += w;
  return d;
}

void ModelConfig::validate() const {
  if (sensor_widths.empty()) throw ConfigError("model: at least one sensor is required");
  for (auto w : sensor_widths)
    if (w == 0) throw ConfigError("model: sensor width must be >= 1");
  if (n_classes < 1) throw ConfigError("model: n_classes must be >= 1");
  if (nodes < 1) throw ConfigError("model: node count must be >= 1");
  if (hidden < 1) throw ConfigError("model: hidden size must be >= 1");
  if (kind != ModelKind::Ragnn && gcn_layers < 1) throw ConfigError("model: gcn_layers must be >= 1");
  if (kind == ModelKind::GcnAttention && attention_repeats < 1) throw ConfigError("model: attention.repeats must be >= 1");
  if (kind == ModelKind::Ragnn && (lstm_hidden < 1 || (gat_layers > 0 && gat_width < 1))) {
    throw ConfigError("model: ragnn sizes must be >= 1");
  }
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["sensor_widths"] = sensor_widths;
  j["n_classes"] = n_classes;
  j["nodes"] = nodes;
  j["hidden"] = hidden;
  j["gcn_layers"] = gcn_layers;
  j["self_loops"] = self_loops;
  j["attention_repeats"] = attention_repeats;
  j["lstm_hidden"] = lstm_hidden;
  j["gat_layers"] = gat_layers;
  j["gat_width"] = gat_width;
  j["leaky_slope"] = leaky_slope;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.sensor_widths = j.at("sensor_widths").get<std::vector<std::size_t>>();
    c.n_classes = j.at("n_classes").get<std::size_t>();
    c.nodes = j.at("nodes").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.gcn_layers = j.at("gcn_layers").get<std::size_t>();
    c.self_loops = j.at("self_loops").get<bool>();
    c.attention_repeats = j.at("attention_repeats").get<std::size_t>();
    c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    c.gat_layers = j.at("gat_layers").get<std::size_t>();
    c.gat_width = j.at("gat_width").get<std::size_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

const Tensor& Model::parameter(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw Error("model has no parameter named '" + name + "'");
}

Tensor& Model::parameter(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const Model&>(*this).parameter(name));
}

Tensor& Model::add_parameter(std::string name, Tensor value) {
  value.set_requires_grad(true);
  params_.push_back({std::move(name), std::move(value)});
  return params_.back().value;
}

void Model::check_batch(const GraphBatch& batch) const {
  if (batch.sensor_features.size() != config_.sensor_count()) {
    throw ShapeError("model expects " + std::to_string(config_.sensor_count()) + " sensors, batch has " +
                     std::to_string(batch.sensor_features.size()));
  }
  for (std::size_t s = 0; s < config_.sensor_count(); ++s) {
    if (batch.sensor_features[s].dim(2) != config_.sensor_widths[s]) {
      throw ShapeError("sensor " + std::to_string(s) + " has width " + std::to_string(batch.sensor_features[s].dim(2)) +
                       ", model expects " + std::to_string(config_.sensor_widths[s]));
    }
  }
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor glorot(std::size_t fan_in, std::size_t fan_out, Shape shape) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> v(shape_numel(shape));
    for (auto& e : v) e = dist(rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  Tensor matrix(std::size_t rows, std::size_t cols) { return glorot(rows, cols, {rows, cols}); }

 private:
  std::mt19937_64 rng_;
};

Tensor gcn_stack(const Tensor& norm_adjacency, Tensor h, const std::vector<const Tensor*>& weights) {
  for (const Tensor* w : weights) h = layers::gcn_layer(norm_adjacency, h, *w);
  return h;
}

}  // namespace

GcnAttentionModel::GcnAttentionModel(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
  config_.validate();
  Initializer init(seed);
  const std::size_t d_hat = config_.hidden;
  for (std::size_t s = 0; s < config_.sensor_count(); ++s) {
    for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
      const std::size_t in = l == 0 ? config_.sensor_widths[s] : d_hat;
      add_parameter("gcn.s" + std::to_string(s) + ".w" + std::to_string(l), init.matrix(in, d_hat));
    }
  }
  add_parameter("attn.wq", init.matrix(d_hat, d_hat));
  add_parameter("attn.wk", init.matrix(d_hat, d_hat));
  add_parameter("attn.wv", init.matrix(d_hat, d_hat));
  const std::size_t flat = config_.sensor_count() * d_hat;
  add_parameter("head.w", init.matrix(flat, config_.n_classes));
  add_parameter("head.b", Tensor::zeros({config_.n_classes}));
}

std::vector<Tensor> GcnAttentionModel::encode(const GraphBatch& batch) const {
  check_batch(batch);
  std::vector<Tensor> out;
  for (std::size_t s = 0; s < config_.sensor_count(); ++s) {
    std::vector<const Tensor*> weights;
    for (std::size_t l = 0; l < config_.gcn_layers; ++l)
      weights.push_back(&parameter("gcn.s" + std::to_string(s) + ".w" + std::to_string(l)));
    out.push_back(gcn_stack(batch.norm_adjacency, batch.sensor_features[s], weights));
  }
  return out;
}

Tensor GcnAttentionModel::forward(const GraphBatch& batch, ForwardTrace* trace) const {
  Tensor h = layers::stack_sensors(encode(batch));
  layers::AttentionResult attended;
  for (std::size_t r = 0; r < config_.attention_repeats; ++r) {
    attended = layers::inter_sensor_attention(h, parameter("attn.wq"), parameter("attn.wk"), parameter("attn.wv"));
    h = attended.output;
  }
  const Tensor flat = layers::pool_and_flatten(h);
  if (trace) {
    trace->attention = attended.weights;
    trace->features = flat;
  }
  return layers::affine(flat, parameter("head.w"), parameter("head.b"));
}

PlainGcnModel::PlainGcnModel(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
  config_.validate();
  Initializer init(seed);
  for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
    const std::size_t in = l == 0 ? config_.total_channels() : config_.hidden;
    add_parameter("gcn.w" + std::to_string(l), init.matrix(in, config_.hidden));
  }
  add_parameter("head.w", init.matrix(config_.hidden, config_.n_classes));
  add_parameter("head.b", Tensor::zeros({config_.n_classes}));
}

Tensor PlainGcnModel::forward(const GraphBatch& batch, ForwardTrace* trace) const {
  check_batch(batch);
  std::vector<const Tensor*> weights;
  for (std::size_t l = 0; l < config_.gcn_layers; ++l) weights.push_back(&parameter("gcn.w" + std::to_string(l)));
  const Tensor h = gcn_stack(batch.norm_adjacency, batch.features, weights);
  const Tensor flat = ops::mean_axis(h, 1);  // B×d̂
  if (trace) trace->features = flat;
  return layers::affine(flat, parameter("head.w"), parameter("head.b"));
}

RagnnModel::RagnnModel(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
  config_.validate();
  Initializer init(seed);
  const std::size_t h = config_.lstm_hidden;
  for (std::size_t s = 0; s < config_.sensor_count(); ++s) {
    const std::string p = "lstm.s" + std::to_string(s);
    add_parameter(p + ".w_input", init.glorot(config_.sensor_widths[s], 4 * h, {config_.sensor_widths[s], 4 * h}));
    add_parameter(p + ".w_hidden", init.glorot(h, 4 * h, {h, 4 * h}));
    add_parameter(p + ".bias", Tensor::zeros({4 * h}));
    std::size_t in = h;
    for (std::size_t l = 0; l < config_.gat_layers; ++l) {
      const std::string g = "gat.s" + std::to_string(s) + ".l" + std::to_string(l);
      add_parameter(g + ".w", init.matrix(in, config_.gat_width));
      add_parameter(g + ".a", init.glorot(2 * config_.gat_width, 1, {2 * config_.gat_width}));
      in = config_.gat_width;
    }
  }
  const std::size_t per_node = config_.gat_layers > 0 ? config_.gat_width : h;
  const std::size_t flat = config_.nodes * per_node * config_.sensor_count();
  add_parameter("head.w", init.matrix(flat, config_.n_classes));
  add_parameter("head.b", Tensor::zeros({config_.n_classes}));
}

Tensor RagnnModel::forward(const GraphBatch& batch, ForwardTrace* trace) const {
  check_batch(batch);
  if (batch.nodes != config_.nodes) {
    throw ShapeError("ragnn model built for " + std::to_string(config_.nodes) + " nodes, batch has " +
                     std::to_string(batch.nodes));
  }
  std::vector<Tensor> per_sensor;
  for (std::size_t s = 0; s < config_.sensor_count(); ++s) {
    const std::string p = "lstm.s" + std::to_string(s);
    Tensor h = layers::lstm_forward(batch.sensor_features[s],
                                    {parameter(p + ".w_input"), parameter(p + ".w_hidden"), parameter(p + ".bias")});
    for (std::size_t l = 0; l < config_.gat_layers; ++l) {
      const std::string g = "gat.s" + std::to_string(s) + ".l" + std::to_string(l);
      h = layers::gat_layer(batch.neighbours, h, parameter(g + ".w"), parameter(g + ".a"), config_.leaky_slope);
    }
    per_sensor.push_back(h);
  }
  const Tensor joined = ops::concat_axis(per_sensor, 2);  // B×t×(n·w)
  const Tensor flat = ops::reshape(joined, {batch.batch, joined.numel() / batch.batch});
  if (trace) trace->features = flat;
  return layers::affine(flat, parameter("head.w"), parameter("head.b"));
}

std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed) {
  switch (config.kind) {
    case ModelKind::GcnAttention: return std::make_unique<GcnAttentionModel>(config, seed);
    case ModelKind::Gcn: return std::make_unique<PlainGcnModel>(config, seed);
    case ModelKind::Ragnn: return std::make_unique<RagnnModel>(config, seed);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace hargnn
