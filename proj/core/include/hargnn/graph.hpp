#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hargnn/recording.hpp"
#include "hargnn/segmentation.hpp"
#include "hargnn/tensor.hpp"

namespace hargnn {

/// Binary t×t adjacency of the undirected path 0 - 1 - ... - (t-1).
std::vector<std::uint8_t> path_adjacency(std::size_t nodes);

/// D̃^{-1/2}(A + I)D̃^{-1/2} with self loops, D^{-1/2} A D^{-1/2} without.
/// Isolated nodes (no self loops) get zero rows. Throws DataError for an
/// asymmetric or non-binary A.
Tensor normalize_adjacency(std::span<const std::uint8_t> adjacency, std::size_t nodes, bool add_self_loops = true);

/// One segment as a graph: timestamps are nodes, consecutive timestamps are
/// joined by an undirected edge, and node features are split per sensor.
struct ActivityGraph {
  std::size_t n_nodes = 0;
  std::vector<std::uint8_t> adjacency;  // t×t
  Tensor norm_adjacency;                // t×t
  std::vector<Tensor> sensor_features;  // per sensor, t×d_i
  ChannelLayout layout;
  int label = -1;
  SegmentProvenance provenance;

  std::size_t degree(std::size_t node) const;
  std::size_t edge_count() const;
};

/// `segment` is D×T channel-major (as stored in SegmentSet). Requires T >= 2.
ActivityGraph build_path_graph(std::span<const double> segment, std::size_t window_len, const ChannelLayout& layout,
                               int label, bool self_loops = true, SegmentProvenance provenance = {});

/// A batch of graphs sharing one path topology: Â is stored once.
struct GraphBatch {
  std::size_t batch = 0;
  std::size_t nodes = 0;
  Tensor norm_adjacency;                 // t×t, shared
  std::vector<std::uint8_t> neighbours;  // t×t, A + I (attention neighbourhoods)
  std::vector<Tensor> sensor_features;   // per sensor, B×t×d_i
  Tensor features;                       // B×t×D, all channels
  std::vector<int> labels;
};

/// Stacks graphs of identical t and layout. Throws ShapeError otherwise.
GraphBatch graph_batch(std::span<const ActivityGraph> graphs);

/// Builds a batch straight from segments (no per-graph copies).
GraphBatch batch_from_segments(const SegmentSet& segments, std::span<const std::size_t> indices, bool self_loops);

/// Builds a batch from node-major windows: `windows[b]` is T×D row-major.
GraphBatch batch_from_windows(const std::vector<std::vector<double>>& windows, std::size_t window_len,
                              const ChannelLayout& layout, bool self_loops);

/// Node list, edge list and per-node feature vectors for plotting.
nlohmann::ordered_json graph_to_json(const ActivityGraph& graph, const std::vector<std::string>& class_names);

}  // namespace hargnn
