#include "stance/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "stance/error.hpp"
#include "stance/rng.hpp"

namespace stance {

namespace {

template <typename T>
bool one_of(T value, std::initializer_list<T> allowed) {
  return std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

[[noreturn]] void invalid(const std::string& field, const std::string& value) {
  throw Error(ErrorCode::InvalidConfig, field + " = " + value + " is outside the search space");
}

}  // namespace

void TrainConfig::validate() const {
  if (!one_of(num_lstm_layers, {1, 2})) invalid("num_lstm_layers", std::to_string(num_lstm_layers));
  if (!one_of(lstm_units, {100, 200, 300})) invalid("lstm_units", std::to_string(lstm_units));
  if (!one_of(num_relu_layers, {1, 2, 3, 4})) {
    invalid("num_relu_layers", std::to_string(num_relu_layers));
  }
  if (!one_of(relu_units, {100, 200, 300, 400, 500})) {
    invalid("relu_units", std::to_string(relu_units));
  }
  if (!one_of(batch_size, {32, 64})) invalid("batch_size", std::to_string(batch_size));
  if (!one_of(l2, {0.0, 1e-4, 3e-4, 1e-3})) invalid("l2", std::to_string(l2));
  if (!one_of(epochs, {30, 50, 70, 100})) invalid("epochs", std::to_string(epochs));
}

Architecture TrainConfig::architecture(std::size_t feature_dim) const {
  Architecture arch;
  arch.feature_dim = feature_dim;
  arch.lstm_units.assign(static_cast<std::size_t>(num_lstm_layers),
                         static_cast<std::size_t>(lstm_units));
  arch.relu_units.assign(static_cast<std::size_t>(num_relu_layers),
                         static_cast<std::size_t>(relu_units));
  arch.dropout_rate = 0.5;
  return arch;
}

// --- dataset ------------------------------------------------------------------------

std::size_t FeaturizedDataset::loss_positions() const {
  std::size_t n = 0;
  for (const auto& b : branches) {
    for (std::size_t t = 0; t < b.labels.size(); ++t) {
      n += (b.first_occurrence[t] && b.labels[t] >= 0) ? 1 : 0;
    }
  }
  return n;
}

FeaturizedDataset featurize_dataset(const std::vector<ConversationThread>& threads,
                                    const EmbeddingTable& table, const LexiconSet& lexicons) {
  std::vector<std::vector<BranchExample>> per_thread(threads.size());
  const auto n = static_cast<std::int64_t>(threads.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ti = 0; ti < n; ++ti) {
    const ConversationThread& thread = threads[static_cast<std::size_t>(ti)];
    const auto features = featurize_thread(thread, table, lexicons);
    const auto paths = branch_indices(thread);
    std::vector<bool> seen(thread.size(), false);
    auto& out = per_thread[static_cast<std::size_t>(ti)];
    out.reserve(paths.size());
    for (const auto& path : paths) {
      BranchExample ex;
      ex.thread_id = thread.thread_id();
      for (std::size_t idx : path) {
        const Post& post = thread.post(idx);
        ex.post_ids.push_back(post.id);
        ex.features.push_back(features[idx].values);
        ex.labels.push_back(post.label ? static_cast<int>(index_of(*post.label)) : -1);
        ex.first_occurrence.push_back(seen[idx] ? 0 : 1);
        seen[idx] = true;
      }
      out.push_back(std::move(ex));
    }
  }
  FeaturizedDataset dataset;
  dataset.feature_dim = feature_dimension(table);
  for (auto& group : per_thread) {
    for (auto& ex : group) dataset.branches.push_back(std::move(ex));
  }
  return dataset;
}

PaddedBatch make_batch(std::span<const BranchExample* const> examples, std::size_t feature_dim) {
  std::size_t max_len = 0;
  for (const auto* ex : examples) max_len = std::max(max_len, ex->post_ids.size());
  PaddedBatch batch(examples.size(), max_len, feature_dim);
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const BranchExample& ex = *examples[b];
    for (std::size_t t = 0; t < ex.post_ids.size(); ++t) {
      if (ex.features[t].size() != feature_dim) {
        throw Error(ErrorCode::ShapeMismatch, "post '" + ex.post_ids[t] + "' has " +
                                                  std::to_string(ex.features[t].size()) +
                                                  " features, expected " +
                                                  std::to_string(feature_dim));
      }
      const std::size_t cell = batch.cell(b, t);
      std::copy(ex.features[t].begin(), ex.features[t].end(), batch.input(b, t).begin());
      batch.labels[cell] = ex.labels[t];
      batch.pad_mask[cell] = 1;
      batch.loss_mask[cell] = (ex.first_occurrence[t] && ex.labels[t] >= 0) ? 1 : 0;
    }
  }
  return batch;
}

std::vector<PaddedBatch> pad_and_batch(const FeaturizedDataset& dataset, std::size_t batch_size,
                                       std::uint64_t seed) {
  if (dataset.branches.empty()) throw Error(ErrorCode::EmptyDataset, "no branches to batch");
  if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
  std::vector<const BranchExample*> order;
  order.reserve(dataset.branches.size());
  for (const auto& b : dataset.branches) order.push_back(&b);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<PaddedBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, order.size() - start);
    batches.push_back(make_batch(std::span(order).subspan(start, count), dataset.feature_dim));
  }
  return batches;
}

// --- training loop --------------------------------------------------------------------

Trainer::Trainer(const FeaturizedDataset& dataset, const TrainConfig& config,
                 const AdamConfig& optimizer)
    : dataset_(dataset), config_(config), optimizer_(optimizer) {
  if (dataset.branches.empty()) throw Error(ErrorCode::EmptyDataset, "training set has no branches");
  if (dataset.loss_positions() == 0) {
    throw Error(ErrorCode::EmptyDataset, "training set has no labeled posts");
  }
  params_ = init_params(config.architecture(dataset.feature_dim), config.seed);
  state_ = AdamState::for_params(params_);
}

double Trainer::run_epoch() {
  const auto batches = pad_and_batch(dataset_, static_cast<std::size_t>(config_.batch_size),
                                     config_.seed + epoch_);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const PaddedBatch& batch = batches[i];
    // A batch can hold only repeated or unlabeled posts; it carries no loss.
    if (batch.loss_count() == 0) continue;
    auto fwd = forward_branch(batch, params_, Mode::Train, mix_seed(config_.seed, epoch_, i));
    const double loss = masked_loss(fwd.probs, batch.labels, batch.loss_mask, params_, config_.l2);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss became " + std::to_string(loss) + " at epoch " +
                                                std::to_string(epoch_ + 1) + ", batch " +
                                                std::to_string(i));
    }
    const ModelParams grads = backward(fwd.cache, batch.labels, batch.loss_mask, params_, config_.l2);
    optimizer_step(params_, grads, state_, ++step_, optimizer_);
    total += loss;
    ++used;
  }
  ++epoch_;
  const double mean = used ? total / static_cast<double>(used) : 0.0;
  history_.push_back(mean);
  return mean;
}

double Trainer::evaluate_loss() const {
  std::vector<const BranchExample*> all;
  for (const auto& b : dataset_.branches) all.push_back(&b);
  const PaddedBatch batch = make_batch(all, dataset_.feature_dim);
  auto fwd = forward_branch(batch, params_, Mode::Infer, 0);
  return masked_loss(fwd.probs, batch.labels, batch.loss_mask, params_, config_.l2);
}

TrainedModel Trainer::finish() && {
  return TrainedModel{std::move(params_), config_, dataset_.feature_dim, std::move(history_)};
}

TrainedModel train_model(const FeaturizedDataset& dataset, const TrainConfig& config) {
  config.validate();
  Trainer trainer(dataset, config);
  for (int e = 0; e < config.epochs; ++e) trainer.run_epoch();
  return std::move(trainer).finish();
}

// --- prediction --------------------------------------------------------------------

StanceLabel argmax_label(const std::array<double, kNumClasses>& probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumClasses; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return label_at(best);
}

std::vector<PostPrediction> predict_branches(const ModelParams& params,
                                             const FeaturizedDataset& dataset) {
  // Group branches by thread, threads in order of first appearance.
  std::vector<std::string> thread_order;
  std::unordered_map<std::string, std::vector<const BranchExample*>> groups;
  for (const auto& b : dataset.branches) {
    auto [it, inserted] = groups.try_emplace(b.thread_id);
    if (inserted) thread_order.push_back(b.thread_id);
    it->second.push_back(&b);
  }

  std::vector<std::vector<PostPrediction>> per_thread(thread_order.size());
  const auto n = static_cast<std::int64_t>(thread_order.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ti = 0; ti < n; ++ti) {
    const auto& branches = groups.at(thread_order[static_cast<std::size_t>(ti)]);
    const PaddedBatch batch = make_batch(branches, dataset.feature_dim);
    const auto fwd = forward_branch(batch, params, Mode::Infer, 0);

    // Posts are reported in the order they are first met (root first).
    std::vector<std::string> post_order;
    std::unordered_map<std::string, std::pair<std::array<double, kNumClasses>, std::size_t>> sums;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      for (std::size_t t = 0; t < branches[b]->post_ids.size(); ++t) {
        const auto& id = branches[b]->post_ids[t];
        auto [it, inserted] = sums.try_emplace(id);
        if (inserted) post_order.push_back(id);
        const auto p = fwd.probs.at(b, t);
        for (std::size_t k = 0; k < kNumClasses; ++k) it->second.first[k] += p[k];
        ++it->second.second;
      }
    }
    auto& out = per_thread[static_cast<std::size_t>(ti)];
    for (const auto& id : post_order) {
      const auto& [sum, count] = sums.at(id);
      PostPrediction pred;
      pred.thread_id = thread_order[static_cast<std::size_t>(ti)];
      pred.post_id = id;
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        pred.probs[k] = sum[k] / static_cast<double>(count);
      }
      pred.label = argmax_label(pred.probs);
      out.push_back(std::move(pred));
    }
  }

  std::vector<PostPrediction> all;
  for (auto& group : per_thread) {
    for (auto& p : group) all.push_back(std::move(p));
  }
  return all;
}

std::vector<PostPrediction> predict_dataset(const TrainedModel& model,
                                            const std::vector<ConversationThread>& threads,
                                            const EmbeddingTable& table,
                                            const LexiconSet& lexicons) {
  if (feature_dimension(table) != model.feature_dim) {
    throw Error(ErrorCode::ShapeMismatch,
                "model expects " + std::to_string(model.feature_dim) +
                    " features but the embedding table yields " +
                    std::to_string(feature_dimension(table)));
  }
  return predict_branches(model.params, featurize_dataset(threads, table, lexicons));
}

}  // namespace stance
