#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <unistd.h>

#ifndef STANCE_SOURCE_DIR
#define STANCE_SOURCE_DIR "."
#endif

namespace fixtures {

ConversationThread random_tree(Rng& rng, std::size_t max_nodes, const std::string& thread_id,
                               bool labeled) {
  const std::size_t n = 1 + rng.index(max_nodes);
  std::vector<Post> posts(n);
  for (std::size_t k = 0; k < n; ++k) {
    posts[k].id = thread_id + "_" + std::to_string(k);
    posts[k].text = "post " + std::to_string(k);
    if (k > 0) posts[k].parent_id = posts[rng.index(k)].id;
    if (labeled) posts[k].label = label_at(rng.index(kNumClasses));
  }
  rng.shuffle(posts);
  return ConversationThread(thread_id, std::move(posts));
}

std::vector<std::vector<std::string>> dfs_paths(const ConversationThread& thread) {
  std::map<std::string, std::vector<std::string>> kids;
  std::string root;
  for (const Post& p : thread.posts()) {
    if (p.parent_id) {
      kids[*p.parent_id].push_back(p.id);
    } else {
      root = p.id;
    }
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> path;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    path.push_back(id);
    auto it = kids.find(id);
    if (it == kids.end()) {
      out.push_back(path);
    } else {
      for (const auto& k : it->second) visit(k);
    }
    path.pop_back();
  };
  visit(root);
  return out;
}

std::vector<std::string> path_to(const ConversationThread& thread, const std::string& post_id) {
  std::map<std::string, std::string> parent;
  for (const Post& p : thread.posts()) {
    if (p.parent_id) parent[p.id] = *p.parent_id;
  }
  std::vector<std::string> chain{post_id};
  for (auto it = parent.find(post_id); it != parent.end(); it = parent.find(chain.back())) {
    chain.push_back(it->second);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

ConfusionMatrix published_confusion() {
  ConfusionMatrix m;
  m.counts = {{{760, 0, 12, 6}, {68, 0, 1, 2}, {69, 0, 36, 1}, {67, 0, 1, 26}}};
  return m;
}

namespace {

// Gold counts per depth in S, D, Q, C order; depths 6..13 share the 6+ row.
constexpr std::array<std::array<std::size_t, 4>, 7> kDepthGold = {{
    {26, 2, 0, 0},
    {61, 60, 81, 502},
    {3, 6, 7, 112},
    {2, 1, 5, 52},
    {0, 0, 3, 38},
    {1, 0, 1, 25},
    {1, 2, 9, 49},
}};
// Posts per exact depth 0..13 (the last eight add up to the 6+ row, 61).
constexpr std::array<std::size_t, 14> kPostsAtDepth = {28, 704, 128, 60, 41, 27, 20,
                                                       12, 10, 6,   5,  4,  2,  2};
// Posts with children per depth; total 277, so 1049 - 277 = 772 leaves.
constexpr std::array<std::size_t, 14> kInternalAtDepth = {28, 60, 60, 41, 27, 20, 12,
                                                          10, 6,  5,  4,  2,  2,  0};

StanceLabel from_sdqc(std::size_t k) {
  constexpr std::array<StanceLabel, 4> order = {StanceLabel::Support, StanceLabel::Deny,
                                                StanceLabel::Query, StanceLabel::Comment};
  return order[k];
}

// Prediction rule reproducing the published matrix: sources are all
// predicted S, depth-1 rows follow fixed splits, deeper posts are all C.
struct Depth1Split {
  StanceLabel gold;
  std::vector<std::pair<StanceLabel, std::size_t>> predicted;
};

}  // namespace

DepthTableFixture depth_table_fixture() {
  using L = StanceLabel;
  // Gold label sequence for every exact depth.
  std::vector<std::vector<L>> gold(kPostsAtDepth.size());
  for (std::size_t bucket = 0; bucket < 6; ++bucket) {
    for (std::size_t k = 0; k < 4; ++k) {
      gold[bucket].insert(gold[bucket].end(), kDepthGold[bucket][k], from_sdqc(k));
    }
  }
  std::vector<L> deep;
  for (std::size_t k = 0; k < 4; ++k) deep.insert(deep.end(), kDepthGold[6][k], from_sdqc(k));
  std::size_t cursor = 0;
  for (std::size_t d = 6; d < kPostsAtDepth.size(); ++d) {
    gold[d].assign(deep.begin() + static_cast<std::ptrdiff_t>(cursor),
                   deep.begin() + static_cast<std::ptrdiff_t>(cursor + kPostsAtDepth[d]));
    cursor += kPostsAtDepth[d];
  }

  const std::vector<Depth1Split> depth1 = {
      {L::Comment, {{L::Comment, 484}, {L::Query, 12}, {L::Support, 6}}},
      {L::Deny, {{L::Comment, 59}, {L::Query, 1}}},
      {L::Query, {{L::Comment, 44}, {L::Query, 36}, {L::Support, 1}}},
      {L::Support, {{L::Comment, 60}, {L::Query, 1}}},
  };
  std::map<L, std::vector<L>> depth1_queue;
  for (const auto& s : depth1) {
    for (const auto& [p, n] : s.predicted) depth1_queue[s.gold].insert(depth1_queue[s.gold].end(), n, p);
  }

  // Node (d, j): id "d<d>_<j>"; parent of (d+1, j) is (d, j mod internal[d]).
  std::vector<std::vector<Post>> thread_posts(kPostsAtDepth[0]);
  std::vector<std::vector<std::size_t>> thread_of(kPostsAtDepth.size());
  DepthTableFixture fx;
  for (std::size_t d = 0; d < kPostsAtDepth.size(); ++d) {
    thread_of[d].resize(kPostsAtDepth[d]);
    for (std::size_t j = 0; j < kPostsAtDepth[d]; ++j) {
      Post p;
      p.id = "d" + std::to_string(d) + "_" + std::to_string(j);
      p.text = "tweet";
      p.label = gold[d][j];
      std::size_t t = j;
      if (d > 0) {
        const std::size_t parent = j % kInternalAtDepth[d - 1];
        p.parent_id = "d" + std::to_string(d - 1) + "_" + std::to_string(parent);
        t = thread_of[d - 1][parent];
      }
      thread_of[d][j] = t;

      L predicted = L::Comment;
      if (d == 0) {
        predicted = L::Support;
      } else if (d == 1) {
        auto& q = depth1_queue[*p.label];
        predicted = q.back();
        q.pop_back();
      }
      fx.predictions.push_back({"t" + std::to_string(t), p.id, predicted, {}});
      fx.predictions.back().probs[index_of(predicted)] = 1.0;
      thread_posts[t].push_back(std::move(p));
    }
  }
  for (std::size_t t = 0; t < thread_posts.size(); ++t) {
    fx.threads.emplace_back("t" + std::to_string(t), std::move(thread_posts[t]));
  }
  return fx;
}

LstmState scalar_lstm_step(const std::vector<double>& x, const std::vector<double>& h,
                           const std::vector<double>& c, const LstmLayerParams& p) {
  const std::size_t H = h.size();
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto pre = [&](std::size_t gate, std::size_t u) {
    const std::size_t row = gate * H + u;
    double s = p.biases[row];
    for (std::size_t k = 0; k < x.size(); ++k) s += p.input_weights(row, k) * x[k];
    for (std::size_t k = 0; k < H; ++k) s += p.recurrent_weights(row, k) * h[k];
    return s;
  };
  LstmState out{std::vector<double>(H), std::vector<double>(H)};
  for (std::size_t u = 0; u < H; ++u) {
    const double i = sigmoid(pre(0, u));
    const double f = sigmoid(pre(1, u));
    const double g = std::tanh(pre(2, u));
    const double o = sigmoid(pre(3, u));
    out.c[u] = f * c[u] + i * g;
    out.h[u] = o * std::tanh(out.c[u]);
  }
  return out;
}

void jitter_dense_biases(ModelParams& params, Rng& rng, double scale) {
  for (auto& layer : params.relu_layers) {
    for (double& b : layer.biases) b = rng.uniform(-scale, scale);
  }
  for (double& b : params.output_layer.biases) b = rng.uniform(-scale, scale);
}

PaddedBatch random_batch(Rng& rng, std::size_t branches, std::size_t max_len,
                         std::size_t feature_dim) {
  PaddedBatch batch(branches, max_len, feature_dim);
  for (std::size_t b = 0; b < branches; ++b) {
    const std::size_t len = b == 0 ? max_len : 1 + rng.index(max_len);
    for (std::size_t t = 0; t < len; ++t) {
      for (double& v : batch.input(b, t)) v = rng.uniform(-1.0, 1.0);
      batch.pad_mask[batch.cell(b, t)] = 1;
      batch.loss_mask[batch.cell(b, t)] = 1;
      batch.labels[batch.cell(b, t)] = static_cast<int>(rng.index(kNumClasses));
    }
  }
  return batch;
}

FeaturizedDataset separable_dataset(std::uint64_t seed, std::size_t branches,
                                    std::size_t feature_dim) {
  Rng rng(seed);
  FeaturizedDataset data;
  data.feature_dim = feature_dim;
  for (std::size_t b = 0; b < branches; ++b) {
    BranchExample ex;
    ex.thread_id = "sep" + std::to_string(b);
    const std::size_t len = 1 + rng.index(4);
    for (std::size_t t = 0; t < len; ++t) {
      const auto label = static_cast<int>(rng.index(kNumClasses));
      std::vector<double> f(feature_dim);
      for (double& v : f) v = rng.uniform(-0.1, 0.1);
      f[static_cast<std::size_t>(label)] += 1.0;
      ex.post_ids.push_back(ex.thread_id + "_" + std::to_string(t));
      ex.features.push_back(std::move(f));
      ex.labels.push_back(label);
      ex.first_occurrence.push_back(1);
    }
    data.branches.push_back(std::move(ex));
  }
  return data;
}

double training_accuracy(const ModelParams& params, const FeaturizedDataset& data) {
  std::vector<const BranchExample*> all;
  for (const auto& b : data.branches) all.push_back(&b);
  const PaddedBatch batch = make_batch(all, data.feature_dim);
  const ForwardResult fwd = forward_branch(batch, params, Mode::Infer, 0);
  std::size_t correct = 0, counted = 0;
  for (std::size_t b = 0; b < batch.branches; ++b) {
    for (std::size_t t = 0; t < batch.max_len; ++t) {
      if (!batch.loss_mask[batch.cell(b, t)]) continue;
      const auto p = fwd.probs.at(b, t);
      std::array<double, kNumClasses> probs{};
      std::copy(p.begin(), p.end(), probs.begin());
      ++counted;
      correct += static_cast<int>(index_of(argmax_label(probs))) == batch.labels[batch.cell(b, t)];
    }
  }
  return counted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(counted);
}

TempDir::TempDir(const std::string& tag) {
  static std::size_t counter = 0;
  path_ = std::filesystem::temp_directory_path() /
          ("stance_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path demo_dir() { return std::filesystem::path(STANCE_SOURCE_DIR) / "data" / "demo"; }

}  // namespace fixtures
