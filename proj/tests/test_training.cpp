#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "stance/error.hpp"
#include "stance/features.hpp"
#include "stance/training.hpp"

using namespace stance;

namespace {

BranchExample example(const std::string& thread, std::vector<std::string> ids, std::vector<std::uint8_t> first,
                      std::size_t dim = 2) {
  BranchExample ex;
  ex.thread_id = thread;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ex.features.push_back(std::vector<double>(dim, static_cast<double>(i + 1)));
    ex.labels.push_back(static_cast<int>(i % kNumClasses));
  }
  ex.post_ids = std::move(ids);
  ex.first_occurrence = std::move(first);
  return ex;
}

TrainConfig small_config() {
  TrainConfig c;
  c.lstm_units = 100;
  c.relu_units = 100;
  c.epochs = 30;
  c.seed = 3;
  return c;
}

struct Demo {
  std::vector<ConversationThread> train, dev;
  EmbeddingTable table = EmbeddingTable::load(fixtures::demo_dir() / "embeddings.txt");
  LexiconSet lexicons = LexiconSet::default_negation_only();
  Demo()
      : train(load_threads(fixtures::demo_dir() / "train.json")),
        dev(load_threads(fixtures::demo_dir() / "dev.json")) {}
};

}  // namespace

TEST_CASE("pad_and_batch: lengths 2 and 3") {
  FeaturizedDataset data;
  data.feature_dim = 2;
  data.branches = {example("t", {"a", "b"}, {1, 1}), example("t", {"a", "c", "d"}, {0, 1, 1})};
  const auto batches = pad_and_batch(data, 2, 0);
  REQUIRE(batches.size() == 1);
  const PaddedBatch& b = batches[0];
  CHECK(b.max_len == 3);
  std::multiset<std::vector<std::uint8_t>> pads;
  for (std::size_t r = 0; r < 2; ++r) {
    pads.insert({b.pad_mask[b.cell(r, 0)], b.pad_mask[b.cell(r, 1)], b.pad_mask[b.cell(r, 2)]});
  }
  CHECK(pads == std::multiset<std::vector<std::uint8_t>>{{1, 1, 0}, {1, 1, 1}});
  // Padded cells carry zero inputs.
  for (std::size_t r = 0; r < 2; ++r) {
    if (b.pad_mask[b.cell(r, 2)] == 0) {
      for (double v : b.input(r, 2)) CHECK(v == 0.0);
    }
  }
  CHECK_THROWS_AS(pad_and_batch(FeaturizedDataset{}, 2, 0), Error);
}

TEST_CASE("loss masks follow dedup_mask after padding") {
  // Thread a; b<-a; c<-a; d<-b gives branches [a,b,d],[a,c].
  const auto t = parse_thread(std::string_view(R"({"thread_id":"t","posts":[
    {"id":"a","text":"x","label":"support"},{"id":"b","text":"x","parent_id":"a","label":"comment"},
    {"id":"c","text":"x","parent_id":"a","label":"query"},{"id":"d","text":"x","parent_id":"b","label":"deny"}]})"));
  EmbeddingTable table(2);
  const auto data = featurize_dataset({t}, table, LexiconSet::default_negation_only());
  REQUIRE(data.branches.size() == 2);
  std::vector<const BranchExample*> all = {&data.branches[0], &data.branches[1]};
  const PaddedBatch b = make_batch(all, data.feature_dim);
  CHECK(b.max_len == 3);
  const std::vector<std::uint8_t> row0(b.loss_mask.begin(), b.loss_mask.begin() + 3);
  const std::vector<std::uint8_t> row1(b.loss_mask.begin() + 3, b.loss_mask.end());
  CHECK(row0 == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(row1 == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(data.loss_positions() == 4);
}

TEST_CASE("unlabeled posts are excluded from the loss") {
  FeaturizedDataset data;
  data.feature_dim = 2;
  auto ex = example("t", {"a", "b"}, {1, 1});
  ex.labels[1] = -1;
  data.branches = {ex};
  const auto b = pad_and_batch(data, 32, 0);
  CHECK(b[0].loss_count() == 1);
}

TEST_CASE("batch count arithmetic: 3030 branches at 64") {
  FeaturizedDataset data;
  data.feature_dim = 1;
  for (int i = 0; i < 3030; ++i) data.branches.push_back(example("t" + std::to_string(i), {"p"}, {1}, 1));
  const auto batches = pad_and_batch(data, 64, 5);
  CHECK(batches.size() == 48);
  CHECK(batches.back().branches == 22);
}

TEST_CASE("epoch loss positions equal unique labeled posts") {
  Demo demo;
  const auto data = featurize_dataset(demo.train, demo.table, demo.lexicons);
  std::size_t labeled = 0;
  for (const auto& t : demo.train) {
    for (const auto& p : t.posts()) labeled += p.label.has_value();
  }
  for (std::size_t batch_size : {32, 64, 7}) {
    std::size_t counted = 0;
    for (const auto& b : pad_and_batch(data, batch_size, 11)) counted += b.loss_count();
    CHECK(counted == labeled);
  }
}

TEST_CASE("TrainConfig validation and serialization") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& x) { x.num_lstm_layers = 3; }, [](TrainConfig& x) { x.lstm_units = 150; },
           [](TrainConfig& x) { x.num_relu_layers = 0; }, [](TrainConfig& x) { x.relu_units = 600; },
           [](TrainConfig& x) { x.batch_size = 16; }, [](TrainConfig& x) { x.l2 = 0.5; },
           [](TrainConfig& x) { x.epochs = 10; }}) {
    TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), Error);
  }
  c.l2 = 3e-4;
  c.seed = 77;
  CHECK(train_config_from_json(to_json(c)) == c);
}

TEST_CASE("training is deterministic and checkpoints round-trip") {
  Demo demo;
  const auto data = featurize_dataset(demo.train, demo.table, demo.lexicons);
  const TrainConfig cfg = small_config();
  const TrainedModel a = train_model(data, cfg);
  const TrainedModel b = train_model(data, cfg);
  CHECK(a.training_history == b.training_history);
  CHECK(a.training_history.size() == 30);

  fixtures::TempDir dir("ckpt");
  save_checkpoint(dir.path() / "a.json", a);
  save_checkpoint(dir.path() / "b.json", b);
  CHECK(fixtures::read_file(dir.path() / "a.json") == fixtures::read_file(dir.path() / "b.json"));

  const TrainedModel back = load_checkpoint(dir.path() / "a.json");
  CHECK(back.config == a.config);
  CHECK(back.training_history == a.training_history);
  const auto pa = predict_dataset(a, demo.dev, demo.table, demo.lexicons);
  const auto pb = predict_dataset(back, demo.dev, demo.table, demo.lexicons);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].probs == pb[i].probs);

  // Every post gets exactly one prediction.
  std::size_t posts = 0;
  for (const auto& t : demo.dev) posts += t.size();
  CHECK(pa.size() == posts);
  std::set<std::string> ids;
  for (const auto& p : pa) ids.insert(p.post_id);
  CHECK(ids.size() == posts);

  CHECK_THROWS_AS(predict_dataset(a, demo.dev, EmbeddingTable(3), demo.lexicons), Error);
}

TEST_CASE("checkpoint loading rejects corrupt files") {
  fixtures::TempDir dir("bad");
  std::ofstream(dir.path() / "x.json") << R"({"format":"other","version":1})";
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "x.json"), Error);
  std::ofstream(dir.path() / "y.json") << "{";
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "y.json"), Error);

  const TrainedModel m{init_params(Architecture{4, {3}, {5}, 0.5}, 1), TrainConfig{}, 4, {1.0}};
  auto doc = params_to_json(m.params);
  doc["tensors"][0]["values"].erase(0);
  CHECK_THROWS_AS(params_from_json(doc), Error);
}

TEST_CASE("argmax tie order and multi-branch averaging") {
  CHECK(argmax_label({0.5, 0.5, 0.0, 0.0}) == StanceLabel::Comment);
  CHECK(argmax_label({0.0, 0.3, 0.3, 0.3}) == StanceLabel::Deny);
  CHECK(argmax_label({0.1, 0.2, 0.3, 0.4}) == StanceLabel::Support);

  // Post "a" sits in both branches; its prediction is the branch mean.
  const auto t = parse_thread(std::string_view(R"({"thread_id":"t","posts":[
    {"id":"a","text":"hello"},{"id":"b","text":"one","parent_id":"a"},{"id":"c","text":"two !","parent_id":"a"}]})"));
  EmbeddingTable table(2);
  const auto data = featurize_dataset({t}, table, LexiconSet::default_negation_only());
  const ModelParams params = init_params(Architecture{data.feature_dim, {3}, {4}, 0.5}, 2);
  const auto preds = predict_branches(params, data);
  REQUIRE(preds.size() == 3);
  // Infer-mode outputs at the source are identical across branches, so the
  // mean equals the single-branch output.
  std::vector<const BranchExample*> one = {&data.branches[0]};
  const auto fwd = forward_branch(make_batch(one, data.feature_dim), params, Mode::Infer, 0);
  const auto source = std::find_if(preds.begin(), preds.end(), [](const auto& p) { return p.post_id == "a"; });
  for (std::size_t k = 0; k < kNumClasses; ++k) CHECK(source->probs[k] == doctest::Approx(fwd.probs.at(0, 0)[k]));
}

TEST_CASE("predictions are independent of branch order") {
  Demo demo;
  const TrainedModel model = train_model(featurize_dataset(demo.train, demo.table, demo.lexicons), small_config());
  FeaturizedDataset dev = featurize_dataset(demo.dev, demo.table, demo.lexicons);
  const auto base = predict_branches(model.params, dev);
  Rng rng(4);
  rng.shuffle(dev.branches);
  auto perm = predict_branches(model.params, dev);
  std::map<std::string, StanceLabel> by_id;
  for (const auto& p : perm) by_id[p.post_id] = p.label;
  for (const auto& p : base) CHECK(by_id.at(p.post_id) == p.label);
}

TEST_CASE("predictions json round trip") {
  std::vector<PostPrediction> preds = {{"t", "a", StanceLabel::Query, {0.1, 0.2, 0.6, 0.1}}};
  const auto back = predictions_from_json(predictions_to_json(preds));
  REQUIRE(back.size() == 1);
  CHECK(back[0].label == StanceLabel::Query);
  CHECK(back[0].probs == preds[0].probs);
}

TEST_CASE("Trainer: empty dataset and non-finite loss") {
  CHECK_THROWS_AS(Trainer(FeaturizedDataset{}, small_config()), Error);
  FeaturizedDataset data = fixtures::separable_dataset(1, 4);
  data.branches[0].features[0][0] = std::nan("");
  try {
    train_model(data, small_config());
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }
}

TEST_CASE("first epoch lowers the training loss for almost every seed") {
  const FeaturizedDataset data = fixtures::separable_dataset(21);
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    Trainer trainer(data, cfg);
    const double before = trainer.evaluate_loss();
    trainer.run_epoch();
    improved += trainer.evaluate_loss() < before;
  }
  CHECK(improved >= 95);
}
