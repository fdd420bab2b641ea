#include "caer/train/metrics.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "caer/error.hpp"

namespace caer::train {

namespace {
constexpr double kProbFloor = 1e-12;
}

double cross_entropy(const model::Mat& p, std::span<const int> labels) {
  if (p.rows() == 0 || static_cast<long>(labels.size()) != p.rows()) {
    throw Error(ErrorCode::shape, fmt::format("cross_entropy: {} labels for {} rows", labels.size(), p.rows()));
  }
  double total = 0.0;
  for (long i = 0; i < p.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= p.cols()) throw Error(ErrorCode::shape, fmt::format("cross_entropy: label {} out of range", y));
    if ((p.row(i).array() < 0.0).any() || !p.row(i).allFinite() || std::abs(p.row(i).sum() - 1.0) > 1e-6) {
      throw Error(ErrorCode::degenerate_input, fmt::format("cross_entropy: row {} is not a probability vector", i));
    }
    double q = p(i, y);
    if (q < kProbFloor) {
      spdlog::warn("cross_entropy: p(true) = {} in row {} clamped to {}", q, i, kProbFloor);
      q = kProbFloor;
    }
    total -= std::log(q);
  }
  return total / static_cast<double>(p.rows());
}

ConfusionMatrix confusion_matrix(std::size_t classes, std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::shape, fmt::format("{} labels but {} predictions", truth.size(), predicted.size()));
  }
  ConfusionMatrix m(classes, std::vector<long>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw Error(ErrorCode::shape, fmt::format("class index out of range at position {}", i));
    }
    ++m[t][p];
  }
  return m;
}

std::string_view to_string(ZeroSupport z) { return z == ZeroSupport::strict ? "strict" : "exclude"; }

ZeroSupport parse_zero_support(std::string_view text) {
  if (text == "strict") return ZeroSupport::strict;
  if (text == "exclude") return ZeroSupport::exclude;
  throw Error(ErrorCode::config, fmt::format("unknown zero-support mode '{}' (strict, exclude)", text));
}

UarResult uar(const ConfusionMatrix& m, ZeroSupport mode) {
  UarResult r;
  const std::size_t k = m.size();
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (m[i].size() != k) throw Error(ErrorCode::shape, "confusion matrix is not square");
    long support = 0;
    for (long c : m[i]) {
      if (c < 0) throw Error(ErrorCode::shape, "negative count in confusion matrix");
      support += c;
    }
    if (support == 0) {
      r.recalls.emplace_back();
      r.empty_classes.push_back(i);
      if (mode == ZeroSupport::strict) ++counted;
      continue;
    }
    const double recall = static_cast<double>(m[i][i]) / static_cast<double>(support);
    r.recalls.emplace_back(recall);
    sum += recall;
    ++counted;
  }
  if (r.empty_classes.size() == k) throw Error(ErrorCode::undefined_metric, "UAR undefined: no class has samples");
  r.uar = sum / static_cast<double>(counted);
  return r;
}

double uar_from_recalls(std::span<const double> recalls) {
  if (recalls.empty()) throw Error(ErrorCode::undefined_metric, "UAR of zero classes");
  double s = 0.0;
  for (double v : recalls) s += v;
  return s / static_cast<double>(recalls.size());
}

EvalResult summarize(std::vector<std::string> categories, std::vector<Prediction> predictions, ZeroSupport mode) {
  if (predictions.empty()) throw Error(ErrorCode::undefined_metric, "no predictions to evaluate");
  EvalResult r;
  std::vector<int> t, p;
  double loss = 0.0;
  for (const auto& pr : predictions) {
    t.push_back(pr.truth);
    p.push_back(pr.predicted);
    loss -= std::log(std::max(pr.probabilities.at(pr.truth), kProbFloor));
  }
  r.confusion = confusion_matrix(categories.size(), t, p);
  auto u = uar(r.confusion, mode);
  r.uar = u.uar;
  r.recalls = std::move(u.recalls);
  r.empty_classes = std::move(u.empty_classes);
  r.loss = loss / static_cast<double>(predictions.size());
  r.categories = std::move(categories);
  r.predictions = std::move(predictions);
  return r;
}

void to_json(nlohmann::json& j, const Prediction& p) {
  j = {{"clip_id", p.clip_id}, {"truth", p.truth}, {"predicted", p.predicted}, {"probabilities", p.probabilities}};
}

void to_json(nlohmann::json& j, const EvalResult& r) {
  nlohmann::json recalls = nlohmann::json::array();
  for (const auto& v : r.recalls) recalls.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  nlohmann::json empty = nlohmann::json::array();
  for (auto k : r.empty_classes) empty.push_back(r.categories.at(k));
  j = {{"categories", r.categories}, {"confusion", r.confusion},  {"recalls", recalls},
       {"empty_classes", empty},     {"uar", r.uar},              {"loss", r.loss},
       {"predictions", r.predictions}};
}

}  // namespace caer::train
