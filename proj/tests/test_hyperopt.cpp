#include <doctest.h>

#include <map>
#include <set>
#include <stdexcept>

#include "fixtures.hpp"
#include "stance/error.hpp"
#include "stance/hyperopt.hpp"

using namespace stance;

namespace {

// Cheap stand-in for training: a deterministic score per config.
double fake_score(const TrainConfig& c) {
  return 0.01 * c.num_lstm_layers + 0.001 * c.lstm_units / 100.0 + 0.002 * c.num_relu_layers +
         0.0001 * c.relu_units / 100.0 + (c.batch_size == 64 ? 0.003 : 0.0) - c.l2 + 0.00001 * c.epochs;
}

}  // namespace

TEST_CASE("search space") {
  const SearchSpace s;
  // Product of the per-dimension choice counts.
  CHECK(s.size() == std::size_t{4} * 2 * 2 * 5 * 3 * 4 * 4);
  CHECK(s.size() == 3840);
  CHECK_NOTHROW(s.validate());
  SearchSpace empty;
  empty.epochs.clear();
  CHECK_THROWS_AS(empty.validate(), Error);
  SearchSpace outside;
  outside.lstm_units = {128};
  CHECK_THROWS_AS(outside.validate(), Error);
}

TEST_CASE("sample_config covers every value and validates") {
  const SearchSpace s;
  Rng rng(1);
  std::set<int> ll, lu, rl, ru, bs, ep;
  std::set<double> l2;
  for (int i = 0; i < 10000; ++i) {
    const TrainConfig c = sample_config(s, rng);
    CHECK_NOTHROW(c.validate());
    ll.insert(c.num_lstm_layers);
    lu.insert(c.lstm_units);
    rl.insert(c.num_relu_layers);
    ru.insert(c.relu_units);
    bs.insert(c.batch_size);
    l2.insert(c.l2);
    ep.insert(c.epochs);
  }
  CHECK(ll.size() == 2);
  CHECK(lu.size() == 3);
  CHECK(rl.size() == 4);
  CHECK(ru.size() == 5);
  CHECK(bs.size() == 2);
  CHECK(l2.size() == 4);
  CHECK(ep.size() == 4);

  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) CHECK(sample_config(s, a) == sample_config(s, b));
}

TEST_CASE("run_search: single trial, seeds and ties") {
  SearchOptions opts;
  opts.n_trials = 1;
  opts.master_seed = 40;
  const auto r = run_search(SearchSpace{}, fake_score, opts);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.best_index == 0);
  CHECK(r.best().config.seed == 40);

  opts.n_trials = 5;
  const auto flat = run_search(SearchSpace{}, [](const TrainConfig&) { return 0.5; }, opts);
  CHECK(flat.best_index == 0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(flat.trials[i].config.seed == 40 + i);

  opts.n_trials = 0;
  CHECK_THROWS_AS(run_search(SearchSpace{}, fake_score, opts), Error);
}

TEST_CASE("run_search: failing trials score zero") {
  SearchOptions opts;
  opts.n_trials = 4;
  const auto r = run_search(
      SearchSpace{}, [](const TrainConfig&) -> double { throw std::runtime_error("boom"); }, opts);
  CHECK(r.best().dev_accuracy == 0.0);
  for (const auto& t : r.trials) CHECK(t.error == "boom");

  opts.n_trials = 6;
  int calls = 0;
  const auto mixed = run_search(
      SearchSpace{},
      [&](const TrainConfig& c) {
        if (++calls % 2 == 0) throw Error(ErrorCode::NonFiniteLoss, "nan");
        return fake_score(c);
      },
      opts);
  CHECK(mixed.trials.size() == 6);
  CHECK_FALSE(mixed.best().error.size());
}

TEST_CASE("run_search finds the exhaustive optimum of a reduced space") {
  SearchSpace s;
  s.num_lstm_layers = {1};
  s.lstm_units = {100};
  s.num_relu_layers = {1, 2, 3, 4};
  s.relu_units = {100};
  s.batch_size = {32};
  s.l2 = {0.0, 1e-4, 3e-4, 1e-3};
  s.epochs = {30};
  CHECK(s.size() == 16);

  // Exhaustive oracle.
  double best = -1;
  TrainConfig best_cfg;
  for (int rl : s.num_relu_layers) {
    for (double l2 : s.l2) {
      TrainConfig c;
      c.num_relu_layers = rl;
      c.l2 = l2;
      if (fake_score(c) > best) {
        best = fake_score(c);
        best_cfg = c;
      }
    }
  }
  for (SearchStrategy strategy : {SearchStrategy::Random, SearchStrategy::Tpe}) {
    SearchOptions opts;
    opts.n_trials = 80;
    opts.strategy = strategy;
    opts.tpe_warmup = 10;
    const auto r = run_search(s, fake_score, opts);
    TrainConfig got = r.best().config;
    got.seed = 0;
    CHECK(got == best_cfg);
    CHECK(r.best().dev_accuracy == best);
  }
}

TEST_CASE("best equals the max of the log; random search is reproducible") {
  SearchOptions opts;
  opts.n_trials = 30;
  opts.master_seed = 5;
  const auto a = run_search(SearchSpace{}, fake_score, opts);
  const auto b = run_search(SearchSpace{}, fake_score, opts);
  double mx = 0;
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    mx = std::max(mx, a.trials[i].dev_accuracy);
    CHECK(trial_record(a.trials[i]).dump() == trial_record(b.trials[i]).dump());
  }
  CHECK(a.best().dev_accuracy == mx);
}

TEST_CASE("parallel workers give the same trials as one worker") {
  for (SearchStrategy strategy : {SearchStrategy::Random, SearchStrategy::Tpe}) {
    SearchOptions opts;
    opts.n_trials = 30;
    opts.strategy = strategy;
    opts.tpe_warmup = 8;
    opts.workers = 3;
    const auto par = run_search(SearchSpace{}, fake_score, opts);
    const auto again = run_search(SearchSpace{}, fake_score, opts);
    for (std::size_t i = 0; i < par.trials.size(); ++i) {
      CHECK(par.trials[i].config == again.trials[i].config);
    }
    if (strategy == SearchStrategy::Random) {
      opts.workers = 1;
      const auto seq = run_search(SearchSpace{}, fake_score, opts);
      for (std::size_t i = 0; i < par.trials.size(); ++i) CHECK(par.trials[i].config == seq.trials[i].config);
    }
  }
}

TEST_CASE("TPE suggestions stay inside the space and favour good regions") {
  SearchSpace s;
  s.lstm_units = {100, 200};
  Rng rng(3);
  std::vector<Trial> history;
  for (std::size_t i = 0; i < 40; ++i) {
    Trial t;
    t.index = i;
    t.config = sample_config(s, rng);
    t.dev_accuracy = t.config.num_relu_layers == 4 ? 0.9 : 0.1;
    history.push_back(t);
  }
  int fours = 0;
  for (int k = 0; k < 200; ++k) {
    const TrainConfig c = suggest_tpe(s, history, rng, 24);
    CHECK(s.contains(c));
    fours += c.num_relu_layers == 4;
  }
  CHECK(fours > 150);
}

TEST_CASE("trial records") {
  Trial t;
  t.index = 3;
  t.config.seed = 9;
  t.dev_accuracy = 0.5;
  t.duration_seconds = 1.25;
  const auto rec = trial_record(t);
  CHECK(rec["trial"] == 3);
  CHECK(rec["seed"] == 9);
  CHECK(rec["error"].is_null());
  CHECK_FALSE(rec.contains("duration_seconds"));
  CHECK(trial_timing_record(t)["duration_seconds"] == 1.25);
  CHECK(parse_strategy("tpe") == SearchStrategy::Tpe);
  CHECK_THROWS_AS(parse_strategy("grid"), Error);
}
