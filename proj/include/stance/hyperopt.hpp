#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stance/rng.hpp"
#include "stance/training.hpp"

namespace stance {

// Categorical value sets, one per TrainConfig field. The default is the full
// space; tests narrow individual dimensions.
struct SearchSpace {
  std::vector<int> num_lstm_layers{1, 2};
  std::vector<int> lstm_units{100, 200, 300};
  std::vector<int> num_relu_layers{1, 2, 3, 4};
  std::vector<int> relu_units{100, 200, 300, 400, 500};
  std::vector<int> batch_size{32, 64};
  std::vector<double> l2{0.0, 1e-4, 3e-4, 1e-3};
  std::vector<int> epochs{30, 50, 70, 100};

  std::size_t size() const;
  // Throws Error{InvalidConfig} if a dimension is empty or leaves the full space.
  void validate() const;
  bool contains(const TrainConfig& config) const;
};

inline constexpr std::size_t kSearchDimensions = 7;

// Uniform independent draw per dimension; seed is left at 0.
TrainConfig sample_config(const SearchSpace& space, Rng& rng);

struct Trial {
  std::size_t index = 0;
  TrainConfig config;  // config.seed is the trial seed
  double dev_accuracy = 0.0;
  double duration_seconds = 0.0;
  std::string error;  // empty on success
};

enum class SearchStrategy { Random, Tpe };

struct SearchOptions {
  std::size_t n_trials = 100;
  SearchStrategy strategy = SearchStrategy::Random;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  // TPE: random trials before modeling starts, and candidates scored per suggestion.
  std::size_t tpe_warmup = 20;
  std::size_t tpe_candidates = 24;
};

struct SearchResult {
  std::size_t best_index = 0;
  std::vector<Trial> trials;

  const Trial& best() const { return trials[best_index]; }
};

// Scores a fully specified config (seed included); higher is better.
using Objective = std::function<double(const TrainConfig&)>;

// Trial i trains with seed master_seed + i. Exceptions from the objective
// are recorded on the trial, which then scores 0. Ties keep the earlier trial.
// Throws Error{InvalidConfig} when n_trials is 0.
SearchResult run_search(const SearchSpace& space, const Objective& objective,
                        const SearchOptions& options);

// TPE proposal from completed trials: median split into good/bad sets,
// add-one smoothed category frequencies, best good/bad ratio among
// `candidates` draws from the good-set model.
TrainConfig suggest_tpe(const SearchSpace& space, const std::vector<Trial>& history, Rng& rng,
                        std::size_t candidates);

// Trains on `train`, predicts `dev`, returns dev accuracy.
Objective dev_accuracy_objective(const FeaturizedDataset& train, const FeaturizedDataset& dev,
                                 const std::vector<ConversationThread>& dev_threads);

// One JSON object per trial. Wall-clock durations are left out so that the
// log is identical across reruns; see trial_timing_record.
nlohmann::json trial_record(const Trial& trial);
nlohmann::json trial_timing_record(const Trial& trial);

std::string to_string(SearchStrategy strategy);
SearchStrategy parse_strategy(const std::string& text);

}  // namespace stance
