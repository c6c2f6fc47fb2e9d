#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stance/corpus.hpp"
#include "stance/features.hpp"
#include "stance/neuralnet.hpp"

namespace stance {

// One point of the hyperparameter space. Defaults are the smallest network
// in the space.
struct TrainConfig {
  int num_lstm_layers = 1;   // {1, 2}
  int lstm_units = 100;      // {100, 200, 300}
  int num_relu_layers = 1;   // {1, 2, 3, 4}
  int relu_units = 100;      // {100, 200, 300, 400, 500}
  int batch_size = 32;       // {32, 64}
  double l2 = 0.0;           // {0, 1e-4, 3e-4, 1e-3}
  int epochs = 30;           // {30, 50, 70, 100}
  std::uint64_t seed = 0;

  // Throws Error{InvalidConfig} naming the first field outside its domain.
  void validate() const;
  Architecture architecture(std::size_t feature_dim) const;

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

// A branch with per-post features and first-occurrence flags, ready for batching.
struct BranchExample {
  std::string thread_id;
  std::vector<std::string> post_ids;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;                  // class index, -1 if unlabeled
  std::vector<std::uint8_t> first_occurrence;  // dedup_mask of the thread
};

struct FeaturizedDataset {
  std::size_t feature_dim = 0;
  std::vector<BranchExample> branches;  // grouped by thread, threads in input order

  // Posts counted by the loss: first occurrences that carry a label.
  std::size_t loss_positions() const;
};

// Threads are featurized independently (in parallel); output order follows input.
FeaturizedDataset featurize_dataset(const std::vector<ConversationThread>& threads,
                                    const EmbeddingTable& table, const LexiconSet& lexicons);

// Zero-padded batch over the given examples; loss_mask = pad_mask AND first
// occurrence AND labeled.
PaddedBatch make_batch(std::span<const BranchExample* const> examples, std::size_t feature_dim);

// Shuffles with `seed`, then cuts consecutive groups of at most batch_size.
// Throws Error{EmptyDataset}.
std::vector<PaddedBatch> pad_and_batch(const FeaturizedDataset& dataset, std::size_t batch_size,
                                       std::uint64_t seed);

struct TrainedModel {
  ModelParams params;
  TrainConfig config;
  std::size_t feature_dim = 0;
  std::vector<double> training_history;  // mean batch loss per epoch
};

// Epoch-at-a-time training loop; train_model() drives it for config.epochs.
class Trainer {
 public:
  Trainer(const FeaturizedDataset& dataset, const TrainConfig& config,
          const AdamConfig& optimizer = {});

  // Runs one epoch and returns its mean batch loss. Throws Error{NonFiniteLoss}.
  double run_epoch();

  std::size_t epochs_completed() const { return epoch_; }
  const ModelParams& params() const { return params_; }
  const std::vector<double>& history() const { return history_; }

  // Dropout-free loss over the whole dataset, one batch per configured size.
  double evaluate_loss() const;

  TrainedModel finish() &&;

 private:
  const FeaturizedDataset& dataset_;
  TrainConfig config_;
  AdamConfig optimizer_;
  ModelParams params_;
  AdamState state_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
  std::vector<double> history_;
};

// Throws Error{EmptyDataset | InvalidConfig | NonFiniteLoss}.
TrainedModel train_model(const FeaturizedDataset& dataset, const TrainConfig& config);

struct PostPrediction {
  std::string thread_id;
  std::string post_id;
  StanceLabel label = StanceLabel::Comment;
  std::array<double, kNumClasses> probs{};
};

// Label with the highest probability; ties go to the earlier class in C, D, Q, S order.
StanceLabel argmax_label(const std::array<double, kNumClasses>& probs);

// Infer-mode predictions for every post of the featurized threads. A post
// seen in several branches gets the mean of its branch probabilities.
std::vector<PostPrediction> predict_branches(const ModelParams& params,
                                             const FeaturizedDataset& dataset);

std::vector<PostPrediction> predict_dataset(const TrainedModel& model,
                                            const std::vector<ConversationThread>& threads,
                                            const EmbeddingTable& table,
                                            const LexiconSet& lexicons);

// --- persistence ------------------------------------------------------------------

nlohmann::json params_to_json(const ModelParams& params);
// Throws Error{MalformedDocument | ShapeMismatch}.
ModelParams params_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

nlohmann::json predictions_to_json(const std::vector<PostPrediction>& predictions);
std::vector<PostPrediction> predictions_from_json(const nlohmann::json& doc);

}  // namespace stance
