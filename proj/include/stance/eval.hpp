#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "stance/corpus.hpp"
#include "stance/labels.hpp"
#include "stance/training.hpp"

namespace stance {

// counts[gold][predicted], classes in C, D, Q, S order.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t row_sum(std::size_t gold) const;
  std::size_t col_sum(std::size_t predicted) const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::array<double, kNumClasses> per_class_f1{};  // indexed by StanceLabel
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
};

// Throws Error{LengthMismatch | EmptyInput}.
ConfusionMatrix confusion_matrix(const std::vector<StanceLabel>& gold,
                                 const std::vector<StanceLabel>& predicted);

// Precision, recall and F1 use 0 whenever a denominator is 0.
// Throws Error{EmptyMatrix}.
MetricsReport metrics_from_confusion(const ConfusionMatrix& matrix);

inline constexpr std::size_t kDepthBuckets = 7;  // 0..5 exact, then 6+

struct DepthBucket {
  std::size_t posts = 0;
  std::array<std::size_t, kNumClasses> gold_counts{};
  ConfusionMatrix confusion;
  // Zeros for an empty bucket.
  MetricsReport metrics;
};

struct DepthBreakdown {
  std::array<DepthBucket, kDepthBuckets> buckets;

  static std::size_t bucket_of(std::size_t depth) {
    return depth < kDepthBuckets - 1 ? depth : kDepthBuckets - 1;
  }
  static std::string bucket_name(std::size_t bucket);
};

using LabelMap = std::unordered_map<std::string, StanceLabel>;

// Evaluates every post present in both maps. Throws Error{UnknownPost} when
// an evaluated post id is not in any thread.
DepthBreakdown per_depth_report(const std::vector<ConversationThread>& threads,
                                const LabelMap& gold, const LabelMap& predicted);

// Gold labels of every labeled post, keyed by post id. Throws
// Error{DuplicatePost} if a post id occurs in two threads.
LabelMap gold_labels(const std::vector<ConversationThread>& threads);
LabelMap predicted_labels(const std::vector<PostPrediction>& predictions);

struct EvaluationReport {
  MetricsReport overall;
  DepthBreakdown by_depth;
  std::size_t evaluated = 0;
  std::size_t missing_predictions = 0;  // gold posts with no prediction
};

// Throws Error{EmptyInput} when no gold post has a prediction.
EvaluationReport evaluate(const std::vector<ConversationThread>& threads,
                          const std::vector<PostPrediction>& predictions);

// Human-readable tables: overall metrics, confusion matrix, per-depth rows.
std::string format_report(const EvaluationReport& report);
nlohmann::json report_to_json(const EvaluationReport& report);

// Dev-set accuracy of a prediction set against the labels carried by
// `threads`; 0 if nothing is evaluated.
double accuracy_against(const std::vector<ConversationThread>& threads,
                        const std::vector<PostPrediction>& predictions);

}  // namespace stance
