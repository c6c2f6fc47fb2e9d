#include "stance/hyperopt.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>

#include <omp.h>

#include "stance/error.hpp"
#include "stance/eval.hpp"

namespace stance {

namespace {

using Choice = std::array<std::size_t, kSearchDimensions>;

std::array<std::size_t, kSearchDimensions> dimension_sizes(const SearchSpace& s) {
  return {s.num_lstm_layers.size(), s.lstm_units.size(), s.num_relu_layers.size(),
          s.relu_units.size(),      s.batch_size.size(), s.l2.size(),
          s.epochs.size()};
}

TrainConfig decode(const SearchSpace& s, const Choice& c) {
  TrainConfig cfg;
  cfg.num_lstm_layers = s.num_lstm_layers[c[0]];
  cfg.lstm_units = s.lstm_units[c[1]];
  cfg.num_relu_layers = s.num_relu_layers[c[2]];
  cfg.relu_units = s.relu_units[c[3]];
  cfg.batch_size = s.batch_size[c[4]];
  cfg.l2 = s.l2[c[5]];
  cfg.epochs = s.epochs[c[6]];
  return cfg;
}

template <typename T>
std::size_t position(const std::vector<T>& values, T v) {
  auto it = std::find(values.begin(), values.end(), v);
  return it == values.end() ? values.size() : static_cast<std::size_t>(it - values.begin());
}

Choice encode(const SearchSpace& s, const TrainConfig& cfg) {
  return {position(s.num_lstm_layers, cfg.num_lstm_layers), position(s.lstm_units, cfg.lstm_units),
          position(s.num_relu_layers, cfg.num_relu_layers), position(s.relu_units, cfg.relu_units),
          position(s.batch_size, cfg.batch_size),           position(s.l2, cfg.l2),
          position(s.epochs, cfg.epochs)};
}

template <typename T>
bool subset_of(const std::vector<T>& values, const std::vector<T>& full) {
  return !values.empty() && std::all_of(values.begin(), values.end(), [&](T v) {
    return std::find(full.begin(), full.end(), v) != full.end();
  });
}

std::size_t draw_categorical(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = rng.uniform01() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (x < weights[k]) return k;
    x -= weights[k];
  }
  return weights.size() - 1;
}

Trial run_trial(std::size_t index, const TrainConfig& config, const Objective& objective) {
  Trial trial;
  trial.index = index;
  trial.config = config;
  const auto start = std::chrono::steady_clock::now();
  try {
    trial.dev_accuracy = objective(config);
    if (!std::isfinite(trial.dev_accuracy)) {
      trial.error = "objective returned a non-finite score";
      trial.dev_accuracy = 0.0;
    }
  } catch (const std::exception& e) {
    trial.dev_accuracy = 0.0;
    trial.error = e.what();
    if (trial.error.empty()) trial.error = "trial failed";
  }
  trial.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trial;
}

// Runs the given trials on up to `workers` threads, storing each in its slot.
void run_round(std::vector<Trial>& trials, std::size_t first, const std::vector<TrainConfig>& configs,
               const Objective& objective, std::size_t workers) {
  trials.resize(first + configs.size());
  const auto n = static_cast<std::int64_t>(configs.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, workers));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    trials[first + i] = run_trial(first + i, configs[i], objective);
  }
}

}  // namespace

std::size_t SearchSpace::size() const {
  std::size_t n = 1;
  for (std::size_t d : dimension_sizes(*this)) n *= d;
  return n;
}

void SearchSpace::validate() const {
  const SearchSpace full;
  const bool ok = subset_of(num_lstm_layers, full.num_lstm_layers) &&
                  subset_of(lstm_units, full.lstm_units) &&
                  subset_of(num_relu_layers, full.num_relu_layers) &&
                  subset_of(relu_units, full.relu_units) &&
                  subset_of(batch_size, full.batch_size) && subset_of(l2, full.l2) &&
                  subset_of(epochs, full.epochs);
  if (!ok) {
    throw Error(ErrorCode::InvalidConfig,
                "search space dimensions must be nonempty subsets of the full space");
  }
}

bool SearchSpace::contains(const TrainConfig& cfg) const {
  const Choice c = encode(*this, cfg);
  const auto sizes = dimension_sizes(*this);
  for (std::size_t d = 0; d < kSearchDimensions; ++d) {
    if (c[d] >= sizes[d]) return false;
  }
  return true;
}

TrainConfig sample_config(const SearchSpace& space, Rng& rng) {
  Choice c{};
  const auto sizes = dimension_sizes(space);
  for (std::size_t d = 0; d < kSearchDimensions; ++d) c[d] = rng.index(sizes[d]);
  return decode(space, c);
}

TrainConfig suggest_tpe(const SearchSpace& space, const std::vector<Trial>& history, Rng& rng,
                        std::size_t candidates) {
  if (history.empty() || candidates == 0) return sample_config(space, rng);

  std::vector<const Trial*> ranked;
  for (const auto& t : history) ranked.push_back(&t);
  std::stable_sort(ranked.begin(), ranked.end(), [](const Trial* a, const Trial* b) {
    return a->dev_accuracy > b->dev_accuracy;
  });
  const std::size_t n_good = std::max<std::size_t>(1, ranked.size() / 2);

  const auto sizes = dimension_sizes(space);
  std::array<std::vector<double>, kSearchDimensions> good, bad;
  for (std::size_t d = 0; d < kSearchDimensions; ++d) {
    good[d].assign(sizes[d], 1.0);
    bad[d].assign(sizes[d], 1.0);
  }
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const Choice c = encode(space, ranked[r]->config);
    auto& counts = r < n_good ? good : bad;
    for (std::size_t d = 0; d < kSearchDimensions; ++d) {
      if (c[d] < sizes[d]) counts[d][c[d]] += 1.0;
    }
  }
  const double good_total = static_cast<double>(n_good);
  const double bad_total = static_cast<double>(ranked.size() - n_good);

  Choice best{};
  double best_score = -INFINITY;
  for (std::size_t k = 0; k < candidates; ++k) {
    Choice c{};
    double score = 0.0;
    for (std::size_t d = 0; d < kSearchDimensions; ++d) {
      c[d] = draw_categorical(good[d], rng);
      const double k_d = static_cast<double>(sizes[d]);
      score += std::log(good[d][c[d]] / (good_total + k_d)) -
               std::log(bad[d][c[d]] / (bad_total + k_d));
    }
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return decode(space, best);
}

SearchResult run_search(const SearchSpace& space, const Objective& objective,
                        const SearchOptions& options) {
  space.validate();
  if (options.n_trials == 0) throw Error(ErrorCode::InvalidConfig, "n_trials must be at least 1");
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  auto seeded = [&](TrainConfig cfg, std::size_t index) {
    cfg.seed = options.master_seed + index;
    return cfg;
  };

  SearchResult result;
  Rng rng(options.master_seed);
  const std::size_t warmup = options.strategy == SearchStrategy::Random
                                 ? options.n_trials
                                 : std::min(options.tpe_warmup, options.n_trials);
  std::vector<TrainConfig> configs;
  for (std::size_t i = 0; i < warmup; ++i) configs.push_back(seeded(sample_config(space, rng), i));
  run_round(result.trials, 0, configs, objective, workers);

  // Each round's suggestions only see trials completed in earlier rounds,
  // which keeps the sequence independent of thread timing.
  while (result.trials.size() < options.n_trials) {
    const std::size_t first = result.trials.size();
    const std::size_t count = std::min(workers, options.n_trials - first);
    configs.clear();
    for (std::size_t k = 0; k < count; ++k) {
      TrainConfig cfg = suggest_tpe(space, result.trials, rng, options.tpe_candidates);
      if (!space.contains(cfg)) {
        throw Error(ErrorCode::InvalidConfig, "TPE proposed a configuration outside the space");
      }
      configs.push_back(seeded(cfg, first + k));
    }
    run_round(result.trials, first, configs, objective, workers);
  }

  for (std::size_t i = 1; i < result.trials.size(); ++i) {
    if (result.trials[i].dev_accuracy > result.trials[result.best_index].dev_accuracy) {
      result.best_index = i;
    }
  }
  return result;
}

Objective dev_accuracy_objective(const FeaturizedDataset& train, const FeaturizedDataset& dev,
                                 const std::vector<ConversationThread>& dev_threads) {
  return [&train, &dev, &dev_threads](const TrainConfig& config) {
    const TrainedModel model = train_model(train, config);
    return accuracy_against(dev_threads, predict_branches(model.params, dev));
  };
}

nlohmann::json trial_record(const Trial& trial) {
  return nlohmann::json{{"trial", trial.index},
                        {"seed", trial.config.seed},
                        {"config", to_json(trial.config)},
                        {"dev_accuracy", trial.dev_accuracy},
                        {"error", trial.error.empty() ? nlohmann::json(nullptr)
                                                      : nlohmann::json(trial.error)}};
}

nlohmann::json trial_timing_record(const Trial& trial) {
  return nlohmann::json{{"trial", trial.index}, {"duration_seconds", trial.duration_seconds}};
}

std::string to_string(SearchStrategy strategy) {
  return strategy == SearchStrategy::Tpe ? "tpe" : "random";
}

SearchStrategy parse_strategy(const std::string& text) {
  if (text == "random") return SearchStrategy::Random;
  if (text == "tpe") return SearchStrategy::Tpe;
  throw Error(ErrorCode::InvalidConfig, "unknown search strategy '" + text + "'");
}

}  // namespace stance
