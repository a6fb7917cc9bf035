#include "hargnn/graph.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "hargnn/error.hpp"

namespace hargnn {

std::vector<std::uint8_t> path_adjacency(std::size_t nodes) {
  std::vector<std::uint8_t> a(nodes * nodes, 0);
  for (std::size_t j = 0; j + 1 < nodes; ++j) {
    a[j * nodes + j + 1] = 1;
    a[(j + 1) * nodes + j] = 1;
  }
  return a;
}

Tensor normalize_adjacency(std::span<const std::uint8_t> adjacency, std::size_t nodes, bool add_self_loops) {
  if (adjacency.size() != nodes * nodes) throw ShapeError("normalize_adjacency: adjacency is not t×t");
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto v = adjacency[i * nodes + j];
      if (v > 1) throw DataError("normalize_adjacency: adjacency must be binary");
      if (v != adjacency[j * nodes + i]) {
        throw DataError("normalize_adjacency: adjacency is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
      }
    }
  std::vector<double> a(nodes * nodes);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = adjacency[k];
  if (add_self_loops)
    for (std::size_t i = 0; i < nodes; ++i) a[i * nodes + i] = 1.0;
  std::vector<double> inv_sqrt_deg(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) deg += a[i * nodes + j];
    inv_sqrt_deg[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) a[i * nodes + j] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return Tensor({nodes, nodes}, std::move(a));
}

std::size_t ActivityGraph::degree(std::size_t node) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n_nodes; ++j) d += adjacency[node * n_nodes + j];
  return d;
}

std::size_t ActivityGraph::edge_count() const {
  std::size_t nnz = 0;
  for (auto v : adjacency) nnz += v;
  return nnz / 2;
}

namespace {

// Every segment of a given length has the same topology; share Â between batches.
Tensor shared_norm_adjacency(std::size_t nodes, bool self_loops) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, bool>, Tensor> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{nodes, self_loops}];
  if (!slot.defined()) slot = normalize_adjacency(path_adjacency(nodes), nodes, self_loops);
  return slot;
}

std::vector<std::uint8_t> neighbourhoods(std::size_t nodes) {
  auto a = path_adjacency(nodes);
  for (std::size_t i = 0; i < nodes; ++i) a[i * nodes + i] = 1;
  return a;
}

}  // namespace

ActivityGraph build_path_graph(std::span<const double> segment, std::size_t window_len, const ChannelLayout& layout,
                               int label, bool self_loops, SegmentProvenance provenance) {
  if (window_len < 2) throw ShapeError("build_path_graph: need at least 2 timestamps, got " + std::to_string(window_len));
  const std::size_t d = layout.size();
  if (segment.size() != d * window_len) {
    throw ShapeError("build_path_graph: segment has " + std::to_string(segment.size()) + " values, expected " +
                     std::to_string(d) + "x" + std::to_string(window_len));
  }
  ActivityGraph g;
  g.n_nodes = window_len;
  g.adjacency = path_adjacency(window_len);
  g.norm_adjacency = shared_norm_adjacency(window_len, self_loops);
  g.layout = layout;
  g.label = label;
  g.provenance = provenance;
  for (const auto& block : sensor_blocks(layout)) {
    std::vector<double> h(window_len * block.width);
    for (std::size_t t = 0; t < window_len; ++t)
      for (std::size_t c = 0; c < block.width; ++c) h[t * block.width + c] = segment[(block.offset + c) * window_len + t];
    g.sensor_features.emplace_back(Shape{window_len, block.width}, std::move(h));
  }
  return g;
}

namespace {

GraphBatch empty_batch(std::size_t batch, std::size_t nodes, bool self_loops) {
  GraphBatch out;
  out.batch = batch;
  out.nodes = nodes;
  out.norm_adjacency = shared_norm_adjacency(nodes, self_loops);
  out.neighbours = neighbourhoods(nodes);
  return out;
}

// Fills per-sensor and full feature tensors from a node-major accessor.
template <typename Value>
void fill_features(GraphBatch& out, const ChannelLayout& layout, Value value) {
  const std::size_t b_count = out.batch, t_count = out.nodes, d = layout.size();
  std::vector<double> full(b_count * t_count * d);
  for (std::size_t b = 0; b < b_count; ++b)
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t c = 0; c < d; ++c) full[(b * t_count + t) * d + c] = value(b, t, c);
  for (const auto& block : sensor_blocks(layout)) {
    std::vector<double> h(b_count * t_count * block.width);
    for (std::size_t r = 0; r < b_count * t_count; ++r)
      for (std::size_t c = 0; c < block.width; ++c) h[r * block.width + c] = full[r * d + block.offset + c];
    out.sensor_features.emplace_back(Shape{b_count, t_count, block.width}, std::move(h));
  }
  out.features = Tensor({b_count, t_count, d}, std::move(full));
}

}  // namespace

GraphBatch graph_batch(std::span<const ActivityGraph> graphs) {
  if (graphs.empty()) throw ShapeError("graph_batch: no graphs");
  const auto& first = graphs.front();
  for (const auto& g : graphs) {
    if (g.n_nodes != first.n_nodes || g.layout != first.layout ||
        g.sensor_features.size() != first.sensor_features.size()) {
      throw ShapeError("graph_batch: graphs have heterogeneous node counts or channel layouts");
    }
  }
  const bool self_loops = first.norm_adjacency.at({0, 0}) != 0.0;
  GraphBatch out = empty_batch(graphs.size(), first.n_nodes, self_loops);
  out.norm_adjacency = first.norm_adjacency;
  const auto blocks = sensor_blocks(first.layout);
  std::vector<std::size_t> sensor_of(first.layout.size()), column_of(first.layout.size());
  for (std::size_t s = 0; s < blocks.size(); ++s)
    for (std::size_t c = 0; c < blocks[s].width; ++c) {
      sensor_of[blocks[s].offset + c] = s;
      column_of[blocks[s].offset + c] = c;
    }
  fill_features(out, first.layout, [&](std::size_t b, std::size_t t, std::size_t c) {
    const auto& h = graphs[b].sensor_features[sensor_of[c]];
    return h.data()[t * h.dim(1) + column_of[c]];
  });
  for (const auto& g : graphs) out.labels.push_back(g.label);
  return out;
}

GraphBatch batch_from_segments(const SegmentSet& segments, std::span<const std::size_t> indices, bool self_loops) {
  const std::size_t t_count = segments.window_len;
  GraphBatch out = empty_batch(indices.size(), t_count, self_loops);
  fill_features(out, segments.layout, [&](std::size_t b, std::size_t t, std::size_t c) {
    return segments.segment(indices[b])[c * t_count + t];
  });
  for (auto i : indices) out.labels.push_back(segments.labels[i]);
  return out;
}

GraphBatch batch_from_windows(const std::vector<std::vector<double>>& windows, std::size_t window_len,
                              const ChannelLayout& layout, bool self_loops) {
  const std::size_t d = layout.size();
  for (const auto& w : windows) {
    if (w.size() != window_len * d) throw ShapeError("batch_from_windows: window size mismatch");
  }
  GraphBatch out = empty_batch(windows.size(), window_len, self_loops);
  fill_features(out, layout, [&](std::size_t b, std::size_t t, std::size_t c) { return windows[b][t * d + c]; });
  out.labels.assign(windows.size(), -1);
  return out;
}

nlohmann::ordered_json graph_to_json(const ActivityGraph& graph, const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["label"] = graph.label;
  if (graph.label >= 0 && static_cast<std::size_t>(graph.label) < class_names.size()) {
    j["class_name"] = class_names[static_cast<std::size_t>(graph.label)];
  }
  j["provenance"] = {{"subject_id", graph.provenance.subject_id},
                     {"run_id", graph.provenance.run_id},
                     {"start", graph.provenance.start}};
  std::vector<std::string> channels;
  for (const auto& ch : graph.layout) channels.push_back(ch.name);
  j["channels"] = channels;
  auto nodes = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < graph.n_nodes; ++t) {
    std::vector<double> features;
    for (const auto& h : graph.sensor_features)
      for (std::size_t c = 0; c < h.dim(1); ++c) features.push_back(h.data()[t * h.dim(1) + c]);
    nodes.push_back({{"id", t}, {"degree", graph.degree(t)}, {"features", features}});
  }
  j["nodes"] = nodes;
  auto edges = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < graph.n_nodes; ++i)
    for (std::size_t k = i + 1; k < graph.n_nodes; ++k)
      if (graph.adjacency[i * graph.n_nodes + k]) edges.push_back({i, k});
  j["edges"] = edges;
  return j;
}

}  // namespace hargnn
