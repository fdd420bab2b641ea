#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/model/tensor.hpp"

namespace caer::train {

// Mean over rows of -log p[row, label]. Rows must be probability vectors
// (non-negative, summing to 1 within 1e-6), else Error(degenerate_input).
// p == 0 is clamped to 1e-12 with a logged warning.
double cross_entropy(const model::Mat& probabilities, std::span<const int> labels);

// counts[true][predicted]
using ConfusionMatrix = std::vector<std::vector<long>>;

ConfusionMatrix confusion_matrix(std::size_t classes, std::span<const int> truth, std::span<const int> predicted);

// How a class without test samples enters the mean.
//   strict  - counted with recall 0 (matches the paper's table arithmetic)
//   exclude - left out of the mean and reported
enum class ZeroSupport { strict, exclude };

std::string_view to_string(ZeroSupport z);
ZeroSupport parse_zero_support(std::string_view text);

struct UarResult {
  double uar = 0.0;
  std::vector<std::optional<double>> recalls;  // nullopt for zero support
  std::vector<std::size_t> empty_classes;
};

// Mean of per-class recalls diag / row sum. Error(undefined_metric) when
// every row is empty, Error(shape) for a non-square matrix.
UarResult uar(const ConfusionMatrix& counts, ZeroSupport mode = ZeroSupport::strict);

// Plain mean of given recalls.
double uar_from_recalls(std::span<const double> recalls);

struct Prediction {
  std::string clip_id;
  int truth = -1;
  int predicted = -1;
  std::vector<double> probabilities;

  bool operator==(const Prediction&) const = default;
};

struct EvalResult {
  std::vector<std::string> categories;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> recalls;
  std::vector<std::size_t> empty_classes;
  double uar = 0.0;
  double loss = 0.0;  // mean cross-entropy
  std::vector<Prediction> predictions;

  bool operator==(const EvalResult&) const = default;
};

// Builds the metrics from per-clip predictions.
EvalResult summarize(std::vector<std::string> categories, std::vector<Prediction> predictions,
                     ZeroSupport mode = ZeroSupport::strict);

void to_json(nlohmann::json& j, const Prediction& p);
void to_json(nlohmann::json& j, const EvalResult& r);

}  // namespace caer::train
