#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hargnn/recording.hpp"
#include "hargnn/segmentation.hpp"
#include "hargnn/tensor.hpp"

namespace test_support {

inline hargnn::Tensor random_tensor(const hargnn::Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(hargnn::shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return hargnn::Tensor(shape, std::move(v), requires_grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "hargnn") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

inline hargnn::ChannelLayout layout_for(const std::vector<std::size_t>& widths) {
  static const char* axes[] = {"x", "y", "z", "a", "b", "c"};
  hargnn::ChannelLayout layout;
  for (std::size_t s = 0; s < widths.size(); ++s)
    for (std::size_t k = 0; k < widths[s]; ++k)
      layout.push_back({static_cast<int>(s + 1), "s" + std::to_string(s + 1) + "_" + axes[k]});
  return layout;
}

/// Random segments with uniform values and uniform labels.
inline hargnn::SegmentSet random_segments(std::size_t n, std::size_t window_len, const std::vector<std::size_t>& widths,
                                          std::size_t n_classes, std::mt19937_64& rng) {
  hargnn::SegmentSet set;
  set.window_len = window_len;
  set.stride = window_len;
  set.layout = layout_for(widths);
  for (std::size_t c = 0; c < n_classes; ++c) set.class_names.push_back("class_" + std::to_string(c));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(n_classes) - 1);
  set.segments.resize(n * set.layout.size() * window_len);
  for (auto& v : set.segments) v = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    set.labels.push_back(label(rng));
    set.provenance.push_back({1, 1, i * window_len});
  }
  return set;
}

}  // namespace test_support
