#include "stance/eval.hpp"

#include <cstdio>

#include "stance/error.hpp"

namespace stance {

using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::size_t n = 0;
  for (std::size_t c : counts[gold]) n += c;
  return n;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[predicted];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    for (std::size_t p = 0; p < kNumClasses; ++p) counts[g][p] += other.counts[g][p];
  }
  return *this;
}

ConfusionMatrix confusion_matrix(const std::vector<StanceLabel>& gold,
                                 const std::vector<StanceLabel>& predicted) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(gold.size()) + " gold labels vs " +
                                               std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw Error(ErrorCode::EmptyInput, "no labels to compare");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.counts[index_of(gold[i])][index_of(predicted[i])];
  return m;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics_from_confusion(const ConfusionMatrix& matrix) {
  const std::size_t total = matrix.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no entries");
  MetricsReport r;
  r.confusion = matrix;
  std::size_t correct = 0;
  double f1_sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const std::size_t tp = matrix.counts[k][k];
    correct += tp;
    const double precision = ratio(tp, matrix.col_sum(k));
    const double recall = ratio(tp, matrix.row_sum(k));
    const double f1 = precision + recall == 0.0
                          ? 0.0
                          : 2.0 * precision * recall / (precision + recall);
    r.per_class_f1[k] = f1;
    f1_sum += f1;
  }
  r.accuracy = ratio(correct, total);
  r.macro_f1 = f1_sum / static_cast<double>(kNumClasses);
  return r;
}

std::string DepthBreakdown::bucket_name(std::size_t bucket) {
  return bucket + 1 < kDepthBuckets ? std::to_string(bucket)
                                    : std::to_string(kDepthBuckets - 1) + "+";
}

LabelMap gold_labels(const std::vector<ConversationThread>& threads) {
  LabelMap gold;
  std::unordered_map<std::string, const std::string*> owner;
  for (const auto& t : threads) {
    for (const Post& p : t.posts()) {
      auto [it, inserted] = owner.emplace(p.id, &t.thread_id());
      if (!inserted) {
        throw Error(ErrorCode::DuplicatePost, "post id '" + p.id + "' occurs in threads '" +
                                                  *it->second + "' and '" + t.thread_id() + "'");
      }
      if (p.label) gold.emplace(p.id, *p.label);
    }
  }
  return gold;
}

LabelMap predicted_labels(const std::vector<PostPrediction>& predictions) {
  LabelMap out;
  for (const auto& p : predictions) out.insert_or_assign(p.post_id, p.label);
  return out;
}

DepthBreakdown per_depth_report(const std::vector<ConversationThread>& threads,
                                const LabelMap& gold, const LabelMap& predicted) {
  std::unordered_map<std::string, std::size_t> depth;
  for (const auto& t : threads) {
    for (std::size_t i = 0; i < t.size(); ++i) depth.emplace(t.post(i).id, t.depth_at(i));
  }
  DepthBreakdown out;
  for (const auto& [id, g] : gold) {
    auto pred = predicted.find(id);
    if (pred == predicted.end()) continue;
    auto d = depth.find(id);
    if (d == depth.end()) throw Error(ErrorCode::UnknownPost, "post '" + id + "' is in no thread");
    DepthBucket& bucket = out.buckets[DepthBreakdown::bucket_of(d->second)];
    ++bucket.posts;
    ++bucket.gold_counts[index_of(g)];
    ++bucket.confusion.counts[index_of(g)][index_of(pred->second)];
  }
  for (auto& bucket : out.buckets) {
    if (bucket.posts > 0) bucket.metrics = metrics_from_confusion(bucket.confusion);
  }
  return out;
}

EvaluationReport evaluate(const std::vector<ConversationThread>& threads,
                          const std::vector<PostPrediction>& predictions) {
  const LabelMap gold = gold_labels(threads);
  const LabelMap predicted = predicted_labels(predictions);
  EvaluationReport report;
  report.by_depth = per_depth_report(threads, gold, predicted);
  ConfusionMatrix all;
  for (const auto& bucket : report.by_depth.buckets) all += bucket.confusion;
  report.evaluated = all.total();
  report.missing_predictions = gold.size() - report.evaluated;
  if (report.evaluated == 0) {
    throw Error(ErrorCode::EmptyInput, "no labeled post has a prediction");
  }
  report.overall = metrics_from_confusion(all);
  return report;
}

double accuracy_against(const std::vector<ConversationThread>& threads,
                        const std::vector<PostPrediction>& predictions) {
  const LabelMap gold = gold_labels(threads);
  std::size_t correct = 0, seen = 0;
  for (const auto& p : predictions) {
    auto it = gold.find(p.post_id);
    if (it == gold.end()) continue;
    ++seen;
    correct += it->second == p.label ? 1 : 0;
  }
  return seen == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(seen);
}

// --- output -----------------------------------------------------------------------

namespace {

// Report column order for per-class scores: S, D, Q, C.
constexpr std::array<StanceLabel, kNumClasses> kReportOrder = {
    StanceLabel::Support, StanceLabel::Deny, StanceLabel::Query, StanceLabel::Comment};

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const char* row_title(StanceLabel l) {
  switch (l) {
    case StanceLabel::Comment: return "Commenting";
    case StanceLabel::Deny: return "Denying";
    case StanceLabel::Query: return "Querying";
    case StanceLabel::Support: return "Supporting";
  }
  return "";
}

json metrics_json(const MetricsReport& m) {
  json f1;
  for (StanceLabel l : kAllLabels) f1[std::string(to_string(l))] = m.per_class_f1[index_of(l)];
  json rows = json::array();
  for (const auto& row : m.confusion.counts) rows.push_back(row);
  return json{{"accuracy", m.accuracy},
              {"macro_f1", m.macro_f1},
              {"per_class_f1", std::move(f1)},
              {"confusion", {{"class_order", {"comment", "deny", "query", "support"}},
                             {"rows_gold_columns_predicted", std::move(rows)}}}};
}

}  // namespace

std::string format_report(const EvaluationReport& report) {
  const MetricsReport& m = report.overall;
  std::string out;
  out += format("Evaluated posts: %zu", report.evaluated);
  if (report.missing_predictions > 0) {
    out += format(" (%zu labeled posts without prediction)", report.missing_predictions);
  }
  out += "\n\n";
  out += "Accuracy  Macro F  S      D      Q      C\n";
  out += format("%-8.3f  %-7.3f", m.accuracy, m.macro_f1);
  for (StanceLabel l : kReportOrder) out += format("  %-5.3f", m.per_class_f1[index_of(l)]);
  out += "\n\nConfusion matrix (rows: label, columns: prediction)\n";
  out += format("%-12s", "");
  for (StanceLabel l : kAllLabels) out += format("%6c", short_name(l));
  out += "\n";
  for (StanceLabel g : kAllLabels) {
    out += format("%-12s", row_title(g));
    for (StanceLabel p : kAllLabels) out += format("%6zu", m.confusion.counts[index_of(g)][index_of(p)]);
    out += "\n";
  }
  out += "\nPer depth\n";
  out += "Depth  #tweets  #S   #D   #Q   #C    Accuracy  MacroF  S      D      Q      C\n";
  for (std::size_t b = 0; b < kDepthBuckets; ++b) {
    const DepthBucket& bucket = report.by_depth.buckets[b];
    out += format("%-5s  %-7zu", DepthBreakdown::bucket_name(b).c_str(), bucket.posts);
    for (StanceLabel l : kReportOrder) out += format("  %-3zu", bucket.gold_counts[index_of(l)]);
    out += format("  %-8.3f  %-6.3f", bucket.metrics.accuracy, bucket.metrics.macro_f1);
    for (StanceLabel l : kReportOrder) out += format("  %-5.3f", bucket.metrics.per_class_f1[index_of(l)]);
    out += "\n";
  }
  return out;
}

json report_to_json(const EvaluationReport& report) {
  json depth = json::array();
  for (std::size_t b = 0; b < kDepthBuckets; ++b) {
    const DepthBucket& bucket = report.by_depth.buckets[b];
    json counts;
    for (StanceLabel l : kAllLabels) counts[std::string(to_string(l))] = bucket.gold_counts[index_of(l)];
    depth.push_back({{"depth", DepthBreakdown::bucket_name(b)},
                     {"posts", bucket.posts},
                     {"gold_counts", std::move(counts)},
                     {"metrics", metrics_json(bucket.metrics)}});
  }
  return json{{"evaluated_posts", report.evaluated},
              {"missing_predictions", report.missing_predictions},
              {"overall", metrics_json(report.overall)},
              {"by_depth", std::move(depth)}};
}

}  // namespace stance
