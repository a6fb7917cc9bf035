#pragma once

#include <cstddef>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace hargnn {

enum class EvalMode { SampleWise, SegmentWise };

std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);  // throws ConfigError

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double macro_f1 = 0.0;     // unweighted mean over classes present in the truth
  double weighted_f1 = 0.0;  // support-weighted
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // rows = truth, columns = prediction
  std::size_t n_samples = 0;
  EvalMode mode = EvalMode::SegmentWise;
  std::vector<std::string> flags;

  nlohmann::ordered_json to_json(const std::vector<std::string>& class_names) const;
};

/// F1 = 2PR / (P + R) per class, with 0/0 taken as 0.
EvalReport f1_scores(std::span<const int> predicted, std::span<const int> truth, std::size_t n_classes);

/// Writes eval_report.json and confusion.csv into `dir`.
void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       const std::vector<std::string>& class_names);

}  // namespace hargnn
