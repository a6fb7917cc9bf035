#include "hargnn/metrics.hpp"

#include <fstream>

#include "hargnn/error.hpp"

namespace hargnn {

std::string to_string(EvalMode mode) { return mode == EvalMode::SampleWise ? "sample_wise" : "segment_wise"; }

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "sample_wise") return EvalMode::SampleWise;
  if (name == "segment_wise") return EvalMode::SegmentWise;
  throw ConfigError("unknown evaluation mode '" + name + "' (expected sample_wise or segment_wise)");
}

EvalReport f1_scores(std::span<const int> predicted, std::span<const int> truth, std::size_t n_classes) {
  if (predicted.size() != truth.size()) {
    throw Error("f1_scores: " + std::to_string(predicted.size()) + " predictions for " + std::to_string(truth.size()) +
                " labels");
  }
  EvalReport r;
  r.n_samples = truth.size();
  r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
      throw Error("f1_scores: label out of range at position " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  double macro = 0.0, weighted = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t tp = r.confusion[c][c], row = 0, col = 0;
    for (std::size_t k = 0; k < n_classes; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    ClassMetrics m;
    m.support = row;
    m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    const double denom = m.precision + m.recall;
    m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
    if (row > 0) {
      macro += m.f1;
      weighted += m.f1 * static_cast<double>(row);
      ++present;
    }
    r.per_class.push_back(m);
  }
  r.macro_f1 = present ? macro / static_cast<double>(present) : 0.0;
  r.weighted_f1 = r.n_samples ? weighted / static_cast<double>(r.n_samples) : 0.0;
  return r;
}

nlohmann::ordered_json EvalReport::to_json(const std::vector<std::string>& class_names) const {
  nlohmann::ordered_json j;
  j["mode"] = to_string(mode);
  j["n_samples"] = n_samples;
  j["macro_f1"] = macro_f1;
  j["weighted_f1"] = weighted_f1;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    classes.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}});
  }
  j["per_class"] = classes;
  j["confusion_matrix"] = confusion;
  j["flags"] = flags;
  return j;
}

void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       const std::vector<std::string>& class_names) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "eval_report.json");
    if (!out) throw DataError("cannot write " + (dir / "eval_report.json").string());
    out << report.to_json(class_names).dump(2) << '\n';
  }
  std::ofstream csv(dir / "confusion.csv");
  if (!csv) throw DataError("cannot write " + (dir / "confusion.csv").string());
  csv << "truth\\predicted";
  for (const auto& name : class_names) csv << ',' << name;
  csv << '\n';
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    csv << (r < class_names.size() ? class_names[r] : std::to_string(r));
    for (auto v : report.confusion[r]) csv << ',' << v;
    csv << '\n';
  }
}

}  // namespace hargnn
