#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hargnn/models.hpp"
#include "hargnn/segmentation.hpp"

namespace hargnn {

/// Per-class mean inter-sensor attention: each map averages Â over
/// timestamps and over every segment whose true label is that class.
struct AttentionSummary {
  std::size_t n_sensors = 0;
  std::vector<std::vector<double>> class_maps;  // C maps of n×n, row-major
  std::vector<std::size_t> class_counts;        // segments per class

  /// Mean over classes with data of the share of column mass on `sensor`
  /// (column sum / n).
  double column_share(std::size_t sensor) const;
};

/// Requires a gcn_attention model (throws ConfigError otherwise).
AttentionSummary summarize_attention(const Model& model, const SegmentSet& segments, std::size_t batch_size = 256);

/// attention.csv (C blocks of n×n), attention_<class>.csv per class with
/// data, and attention.svg heatmaps.
void write_attention_exports(const std::filesystem::path& dir, const AttentionSummary& summary,
                             const std::vector<std::string>& class_names, const std::vector<std::string>& sensor_names);

/// Penultimate representations, N×F row-major.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

FeatureMatrix extract_features(const Model& model, const SegmentSet& segments, std::size_t batch_size = 256);

struct PcaResult {
  std::size_t rows = 0;
  std::size_t components = 0;
  std::vector<double> projection;          // rows × components
  std::vector<double> axes;                // components × cols
  std::vector<double> explained_variance;  // population variance per component
  std::vector<double> mean;                // cols
};

/// Covariance eigendecomposition PCA. Each axis is sign-fixed so that its
/// largest-magnitude coordinate is positive. Requires rows >= 2.
PcaResult pca(std::span<const double> values, std::size_t rows, std::size_t cols, std::size_t components = 2);

/// features.csv, projection.csv and projection.svg.
void write_feature_exports(const std::filesystem::path& dir, const FeatureMatrix& features, const PcaResult& projection,
                           const SegmentSet& segments);

/// One graph JSON per segment index into `dir/graphs`.
void write_graph_exports(const std::filesystem::path& dir, const SegmentSet& segments,
                         std::span<const std::size_t> indices, bool self_loops);

/// Filesystem-safe rendering of a class name.
std::string safe_file_stem(const std::string& name);

}  // namespace hargnn
