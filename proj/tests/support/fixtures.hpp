#pragma once

// Shared test fixtures and independent oracles.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "stance/corpus.hpp"
#include "stance/eval.hpp"
#include "stance/neuralnet.hpp"
#include "stance/rng.hpp"
#include "stance/training.hpp"

namespace fixtures {

using namespace stance;

// Random reply tree with 1..max_nodes posts. Node k replies to a uniformly
// chosen earlier node; the serialized order is then shuffled.
ConversationThread random_tree(Rng& rng, std::size_t max_nodes, const std::string& thread_id,
                               bool labeled = true);

// Root-to-leaf paths by plain recursion over parent_id strings.
std::vector<std::vector<std::string>> dfs_paths(const ConversationThread& thread);

// Ancestor chain of a post (root first), by walking parent_id strings.
std::vector<std::string> path_to(const ConversationThread& thread, const std::string& post_id);

// 28 threads / 1049 posts / 772 leaves whose per-depth gold counts are
// those of the published depth table, plus predictions whose confusion
// matrix is the published one (and per-depth accuracies match too).
struct DepthTableFixture {
  std::vector<ConversationThread> threads;
  std::vector<PostPrediction> predictions;
};
DepthTableFixture depth_table_fixture();

// The published confusion matrix, rows gold C, D, Q, S, columns predicted.
ConfusionMatrix published_confusion();

// Direct transcription of the LSTM equations, one scalar at a time.
LstmState scalar_lstm_step(const std::vector<double>& x, const std::vector<double>& h,
                           const std::vector<double>& c, const LstmLayerParams& p);

// Zero-initialized ReLU biases put pre-activations of rows with an all-zero
// input exactly on the kink, where finite differences are meaningless.
// Moves every dense bias to a small random value.
void jitter_dense_biases(ModelParams& params, Rng& rng, double scale = 0.1);

// Random batch with branch lengths in [1, max_len]; every real cell is labeled
// and counted by the loss.
PaddedBatch random_batch(Rng& rng, std::size_t branches, std::size_t max_len,
                         std::size_t feature_dim);

// 20 linearly separable branches: each post carries a one-hot class code
// plus small noise; label = code.
FeaturizedDataset separable_dataset(std::uint64_t seed, std::size_t branches = 20,
                                    std::size_t feature_dim = 8);

// Fraction of labeled first-occurrence posts predicted correctly (infer mode).
double training_accuracy(const ModelParams& params, const FeaturizedDataset& data);

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// Demo corpus shipped in data/demo.
std::filesystem::path demo_dir();

}  // namespace fixtures
