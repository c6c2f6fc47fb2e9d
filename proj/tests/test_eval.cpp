#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "stance/error.hpp"
#include "stance/eval.hpp"

using namespace stance;

namespace {

using L = StanceLabel;

bool near(double a, double b) { return std::abs(a - b) <= 0.0005; }

}  // namespace

TEST_CASE("confusion_matrix") {
  const auto one = confusion_matrix({L::Comment}, {L::Comment});
  CHECK(one.counts[0][0] == 1);
  CHECK(one.total() == 1);
  const auto swap = confusion_matrix({L::Comment, L::Deny}, {L::Deny, L::Comment});
  CHECK(swap.counts[0][0] + swap.counts[1][1] == 0);
  CHECK(swap.counts[0][1] == 1);
  CHECK_THROWS_AS(confusion_matrix({L::Comment}, {}), Error);
  CHECK_THROWS_AS(confusion_matrix({}, {}), Error);
}

TEST_CASE("published confusion matrix reproduces the published scores") {
  const auto m = metrics_from_confusion(fixtures::published_confusion());
  CHECK(near(m.accuracy, 0.784));
  CHECK(near(m.macro_f1, 0.434));
  CHECK(near(m.per_class_f1[index_of(L::Support)], 0.403));
  CHECK(near(m.per_class_f1[index_of(L::Deny)], 0.000));
  CHECK(near(m.per_class_f1[index_of(L::Query)], 0.462));
  CHECK(near(m.per_class_f1[index_of(L::Comment)], 0.873));
  // Independent arithmetic: 822 correct of 1049.
  CHECK(m.accuracy == doctest::Approx(822.0 / 1049.0));
  CHECK(m.per_class_f1[index_of(L::Comment)] == doctest::Approx(1520.0 / 1742.0));
}

TEST_CASE("metric conventions") {
  ConfusionMatrix diag;
  for (std::size_t k = 0; k < kNumClasses; ++k) diag.counts[k][k] = k + 1;
  const auto d = metrics_from_confusion(diag);
  CHECK(d.accuracy == 1.0);
  CHECK(d.macro_f1 == 1.0);

  ConfusionMatrix partial;
  partial.counts[0][0] = 5;
  const auto p = metrics_from_confusion(partial);
  CHECK(p.per_class_f1[1] == 0.0);
  CHECK(p.macro_f1 == 0.25);
  CHECK_THROWS_AS(metrics_from_confusion(ConfusionMatrix{}), Error);
}

TEST_CASE("relabeling classes permutes F1 and keeps accuracy and macro-F") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    ConfusionMatrix m;
    for (auto& row : m.counts) {
      for (auto& c : row) c = rng.index(20);
    }
    m.counts[0][0] += 1;
    std::array<std::size_t, kNumClasses> perm = {0, 1, 2, 3};
    rng.shuffle(perm);
    ConfusionMatrix pm;
    for (std::size_t g = 0; g < kNumClasses; ++g) {
      for (std::size_t q = 0; q < kNumClasses; ++q) pm.counts[perm[g]][perm[q]] = m.counts[g][q];
    }
    const auto a = metrics_from_confusion(m), b = metrics_from_confusion(pm);
    CHECK(a.accuracy == doctest::Approx(b.accuracy));
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1));
    for (std::size_t k = 0; k < kNumClasses; ++k) CHECK(a.per_class_f1[k] == doctest::Approx(b.per_class_f1[perm[k]]));
  }
}

TEST_CASE("per-depth report on the depth-table fixture") {
  const auto fx = fixtures::depth_table_fixture();
  const auto report = evaluate(fx.threads, fx.predictions);
  CHECK(report.overall.confusion == fixtures::published_confusion());
  const auto& b = report.by_depth.buckets;
  CHECK(b[0].posts == 28);
  CHECK(b[0].gold_counts[index_of(L::Support)] == 26);
  CHECK(b[0].gold_counts[index_of(L::Deny)] == 2);
  CHECK(b[1].posts == 704);
  CHECK(near(b[1].metrics.accuracy, 0.739));

  // Accuracy from the full matrix is the post-weighted mean over depths.
  double weighted = 0;
  for (const auto& bucket : b) weighted += bucket.metrics.accuracy * static_cast<double>(bucket.posts);
  CHECK(weighted / 1049.0 == doctest::Approx(report.overall.accuracy));
}

TEST_CASE("all posts at depth 0") {
  std::vector<ConversationThread> threads;
  std::vector<PostPrediction> preds;
  for (int i = 0; i < 5; ++i) {
    Post p;
    p.id = "s" + std::to_string(i);
    p.label = L::Support;
    threads.emplace_back("t" + std::to_string(i), std::vector<Post>{p});
    preds.push_back({"t" + std::to_string(i), p.id, L::Support, {}});
  }
  const auto r = evaluate(threads, preds);
  CHECK(r.by_depth.buckets[0].posts == 5);
  for (std::size_t k = 1; k < kDepthBuckets; ++k) CHECK(r.by_depth.buckets[k].posts == 0);
  CHECK(r.overall.accuracy == 1.0);
}

TEST_CASE("evaluation errors") {
  const auto fx = fixtures::depth_table_fixture();
  LabelMap gold = {{"ghost", L::Comment}};
  LabelMap pred = {{"ghost", L::Comment}};
  CHECK_THROWS_AS(per_depth_report(fx.threads, gold, pred), Error);
  CHECK_THROWS_AS(evaluate(fx.threads, {}), Error);
  std::vector<ConversationThread> dup = {fx.threads[0], fx.threads[0]};
  CHECK_THROWS_AS(gold_labels(dup), Error);
}

TEST_CASE("report formats") {
  const auto fx = fixtures::depth_table_fixture();
  const auto r = evaluate(fx.threads, fx.predictions);
  const std::string text = format_report(r);
  CHECK(text.find("0.784") != std::string::npos);
  CHECK(text.find("0.434") != std::string::npos);
  CHECK(text.find("Denying") != std::string::npos);
  const auto j = report_to_json(r);
  CHECK(j["overall"]["confusion"]["rows_gold_columns_predicted"][1] == nlohmann::json({68, 0, 1, 2}));
  CHECK(j["by_depth"][6]["depth"] == "6+");
  CHECK(j["by_depth"][6]["posts"] == 61);
}

TEST_CASE("accuracy_against") {
  const auto fx = fixtures::depth_table_fixture();
  CHECK(accuracy_against(fx.threads, fx.predictions) == doctest::Approx(822.0 / 1049.0));
  CHECK(accuracy_against(fx.threads, {}) == 0.0);
}
