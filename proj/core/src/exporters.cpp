#include "hargnn/exporters.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hargnn/error.hpp"
#include "hargnn/graph.hpp"
#include "hargnn/parallel.hpp"
#include "hargnn/recording.hpp"
#include "hargnn/tape.hpp"

namespace hargnn {

namespace fs = std::filesystem;

double AttentionSummary::column_share(std::size_t sensor) const {
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < class_maps.size(); ++c) {
    if (class_counts[c] == 0) continue;
    double col = 0.0;
    for (std::size_t r = 0; r < n_sensors; ++r) col += class_maps[c][r * n_sensors + sensor];
    total += col / static_cast<double>(n_sensors);
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

AttentionSummary summarize_attention(const Model& model, const SegmentSet& segments, std::size_t batch_size) {
  if (model.config().kind != ModelKind::GcnAttention) {
    throw ConfigError("attention export needs a gcn_attention model, checkpoint holds " + to_string(model.config().kind));
  }
  const std::size_t n = model.config().sensor_count();
  const std::size_t classes = model.config().n_classes;
  AttentionSummary s;
  s.n_sensors = n;
  s.class_maps.assign(classes, std::vector<double>(n * n, 0.0));
  s.class_counts.assign(classes, 0);
  // per-segment timestamp means first, then class means over segments
  std::vector<double> per_segment(segments.size() * n * n, 0.0);
  const std::size_t chunks = (segments.size() + batch_size - 1) / batch_size;
  parallel_for(chunks, [&](std::size_t chunk) {
    NoGradGuard no_grad;
    const std::size_t begin = chunk * batch_size;
    const std::size_t end = std::min(segments.size(), begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    ForwardTrace trace;
    model.forward(batch_from_segments(segments, idx, model.config().self_loops), &trace);
    const auto a = trace.attention.data();  // B×t×n×n
    const std::size_t t = trace.attention.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      double* dst = per_segment.data() + (begin + b) * n * n;
      for (std::size_t j = 0; j < t; ++j)
        for (std::size_t k = 0; k < n * n; ++k) dst[k] += a[((b * t) + j) * n * n + k];
      for (std::size_t k = 0; k < n * n; ++k) dst[k] /= static_cast<double>(t);
    }
  });
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto c = static_cast<std::size_t>(segments.labels[i]);
    ++s.class_counts[c];
    for (std::size_t k = 0; k < n * n; ++k) s.class_maps[c][k] += per_segment[i * n * n + k];
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (s.class_counts[c])
      for (auto& v : s.class_maps[c]) v /= static_cast<double>(s.class_counts[c]);
  return s;
}

std::string safe_file_stem(const std::string& name) {
  std::string out;
  for (char ch : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
    out.push_back(ok ? ch : '_');
  }
  return out.empty() ? "_" : out;
}

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

// white (0) to dark blue (1)
std::string heat_colour(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 - 215 * v));
  const int g = static_cast<int>(std::lround(255 - 175 * v));
  const int b = static_cast<int>(std::lround(255 - 75 * v));
  std::ostringstream os;
  os << "rgb(" << r << ',' << g << ',' << b << ')';
  return os.str();
}

std::string category_colour(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[k % 10];
}

}  // namespace

void write_attention_exports(const fs::path& dir, const AttentionSummary& summary,
                             const std::vector<std::string>& class_names, const std::vector<std::string>& sensor_names) {
  fs::create_directories(dir);
  const std::size_t n = summary.n_sensors;
  auto header = [&](std::ostream& os, bool with_class) {
    if (with_class) os << "class,";
    os << "sensor";
    for (std::size_t k = 0; k < n; ++k) os << ',' << sensor_names[k];
    os << '\n';
  };
  auto block = [&](std::ostream& os, std::size_t c, bool with_class) {
    for (std::size_t r = 0; r < n; ++r) {
      if (with_class) os << class_names[c] << ',';
      os << sensor_names[r];
      for (std::size_t k = 0; k < n; ++k) os << ',' << format_double(summary.class_maps[c][r * n + k]);
      os << '\n';
    }
  };
  {
    auto all = open_out(dir / "attention.csv");
    header(all, true);
    for (std::size_t c = 0; c < summary.class_maps.size(); ++c) block(all, c, true);
  }
  for (std::size_t c = 0; c < summary.class_maps.size(); ++c) {
    if (!summary.class_counts[c]) continue;
    auto one = open_out(dir / ("attention_" + safe_file_stem(class_names[c]) + ".csv"));
    header(one, false);
    block(one, c, false);
  }

  // heatmap grid: one n×n panel per class
  const int cell = 48, pad = 40, title = 24;
  const int panel = static_cast<int>(n) * cell + pad;
  const int cols = 4;
  const int classes = static_cast<int>(summary.class_maps.size());
  const int rows = (classes + cols - 1) / cols;
  const int width = cols * panel + pad, height = rows * (panel + title) + pad;
  auto svg = open_out(dir / "attention.svg");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int c = 0; c < classes; ++c) {
    const int x0 = pad + (c % cols) * panel;
    const int y0 = pad + (c / cols) * (panel + title);
    svg << "<text x=\"" << x0 << "\" y=\"" << y0 - 6 << "\">" << xml_escape(class_names[static_cast<std::size_t>(c)])
        << " (n=" << summary.class_counts[static_cast<std::size_t>(c)] << ")</text>\n";
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k) {
        const double v = summary.class_maps[static_cast<std::size_t>(c)][r * n + k];
        const int x = x0 + static_cast<int>(k) * cell, y = y0 + static_cast<int>(r) * cell;
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
            << heat_colour(v) << "\" stroke=\"#999\"/>";
        svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
            << (v > 0.6 ? "white" : "black") << "\">" << fmt(v, 2) << "</text>\n";
      }
  }
  svg << "</svg>\n";
}

FeatureMatrix extract_features(const Model& model, const SegmentSet& segments, std::size_t batch_size) {
  FeatureMatrix out;
  out.rows = segments.size();
  std::vector<std::vector<double>> chunks((segments.size() + batch_size - 1) / batch_size);
  std::vector<std::size_t> widths(chunks.size(), 0);
  parallel_for(chunks.size(), [&](std::size_t chunk) {
    NoGradGuard no_grad;
    const std::size_t begin = chunk * batch_size;
    const std::size_t end = std::min(segments.size(), begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    ForwardTrace trace;
    model.forward(batch_from_segments(segments, idx, model.config().self_loops), &trace);
    const auto f = trace.features.data();
    chunks[chunk].assign(f.begin(), f.end());
    widths[chunk] = trace.features.dim(1);
  });
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    out.cols = widths[k];
    out.values.insert(out.values.end(), chunks[k].begin(), chunks[k].end());
  }
  return out;
}

PcaResult pca(std::span<const double> values, std::size_t rows, std::size_t cols, std::size_t components) {
  if (rows < 2) throw DataError("pca: need at least 2 rows, got " + std::to_string(rows));
  if (values.size() != rows * cols) throw ShapeError("pca: value count does not match rows×cols");
  components = std::min(components, cols);
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> x(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centred = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(rows);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");

  PcaResult out;
  out.rows = rows;
  out.components = components;
  out.mean.assign(mean.data(), mean.data() + cols);
  const auto k_total = static_cast<Eigen::Index>(cols);
  Eigen::MatrixXd axes(k_total, static_cast<Eigen::Index>(components));
  for (std::size_t k = 0; k < components; ++k) {
    // eigenvalues ascend; take from the top
    const Eigen::Index idx = k_total - 1 - static_cast<Eigen::Index>(k);
    Eigen::VectorXd v = eig.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    axes.col(static_cast<Eigen::Index>(k)) = v;
    out.explained_variance.push_back(std::max(0.0, eig.eigenvalues()(idx)));
    for (Eigen::Index c = 0; c < k_total; ++c) out.axes.push_back(v(c));
  }
  const Eigen::MatrixXd proj = centred * axes;
  out.projection.resize(rows * components);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < components; ++k)
      out.projection[r * components + k] = proj(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
  return out;
}

void write_feature_exports(const fs::path& dir, const FeatureMatrix& features, const PcaResult& projection,
                           const SegmentSet& segments) {
  fs::create_directories(dir);
  {
    auto csv = open_out(dir / "features.csv");
    csv << "index,subject_id,start,label";
    for (std::size_t c = 0; c < features.cols; ++c) csv << ",f" << c;
    csv << '\n';
    for (std::size_t r = 0; r < features.rows; ++r) {
      csv << r << ',' << segments.provenance[r].subject_id << ',' << segments.provenance[r].start << ','
          << segments.class_names[static_cast<std::size_t>(segments.labels[r])];
      for (std::size_t c = 0; c < features.cols; ++c) csv << ',' << format_double(features.values[r * features.cols + c]);
      csv << '\n';
    }
  }
  const std::size_t k = projection.components;
  {
    auto csv = open_out(dir / "projection.csv");
    csv << "index,label";
    for (std::size_t c = 0; c < k; ++c) csv << ",pc" << c + 1;
    csv << '\n';
    for (std::size_t r = 0; r < projection.rows; ++r) {
      csv << r << ',' << segments.class_names[static_cast<std::size_t>(segments.labels[r])];
      for (std::size_t c = 0; c < k; ++c) csv << ',' << format_double(projection.projection[r * k + c]);
      csv << '\n';
    }
  }
  // scatter of the first two components, coloured by class
  const double size = 480, margin = 40;
  double lo[2] = {0, 0}, hi[2] = {1, 1};
  for (std::size_t c = 0; c < std::min<std::size_t>(k, 2); ++c) {
    lo[c] = hi[c] = projection.rows ? projection.projection[c] : 0.0;
    for (std::size_t r = 0; r < projection.rows; ++r) {
      lo[c] = std::min(lo[c], projection.projection[r * k + c]);
      hi[c] = std::max(hi[c], projection.projection[r * k + c]);
    }
    if (hi[c] - lo[c] < 1e-12) hi[c] = lo[c] + 1.0;
  }
  auto svg = open_out(dir / "projection.svg");
  const double legend = 140;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + legend << "\" height=\""
      << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t r = 0; r < projection.rows; ++r) {
    const double px = margin + size * (projection.projection[r * k] - lo[0]) / (hi[0] - lo[0]);
    const double py = k > 1 ? margin + size * (1.0 - (projection.projection[r * k + 1] - lo[1]) / (hi[1] - lo[1]))
                            : margin + size / 2;
    svg << "<circle cx=\"" << fmt(px, 2) << "\" cy=\"" << fmt(py, 2) << "\" r=\"2.5\" fill=\""
        << category_colour(static_cast<std::size_t>(segments.labels[r])) << "\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t c = 0; c < segments.class_names.size(); ++c) {
    const double y = margin + 16.0 * static_cast<double>(c);
    svg << "<circle cx=\"" << size + margin + 20 << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << category_colour(c)
        << "\"/><text x=\"" << size + margin + 30 << "\" y=\"" << y + 4 << "\">" << xml_escape(segments.class_names[c])
        << "</text>\n";
  }
  svg << "</svg>\n";
}

void write_graph_exports(const fs::path& dir, const SegmentSet& segments, std::span<const std::size_t> indices,
                         bool self_loops) {
  const fs::path out_dir = dir / "graphs";
  fs::create_directories(out_dir);
  for (auto i : indices) {
    const auto g = build_path_graph(segments.segment(i), segments.window_len, segments.layout, segments.labels[i],
                                    self_loops, segments.provenance[i]);
    const auto& name = segments.class_names[static_cast<std::size_t>(segments.labels[i])];
    auto out = open_out(out_dir / ("graph_" + safe_file_stem(name) + "_" + std::to_string(i) + ".json"));
    out << graph_to_json(g, segments.class_names).dump(2) << '\n';
  }
}

}  // namespace hargnn
