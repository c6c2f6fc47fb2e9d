#pragma once

// Branch-level sequence classifier: stacked LSTM layers over a padded batch
// of branches, a dense ReLU head with dropout after its last layer, and a
// per-timestep softmax over the four stance classes. Gradients are exact
// (backpropagation through time); everything is double precision.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stance/labels.hpp"
#include "stance/matrix.hpp"

namespace stance {

// Gate blocks are packed in this order along the 4H axis of every LSTM
// weight matrix and bias vector.
inline constexpr const char* kGateOrder = "i,f,g,o";

struct LstmLayerParams {
  Matrix input_weights;      // 4H x I
  Matrix recurrent_weights;  // 4H x H
  std::vector<double> biases;  // 4H

  std::size_t input_size() const { return input_weights.cols(); }
  std::size_t hidden_size() const { return recurrent_weights.cols(); }
};

struct DenseLayerParams {
  Matrix weights;  // out x in
  std::vector<double> biases;

  std::size_t input_size() const { return weights.cols(); }
  std::size_t output_size() const { return weights.rows(); }
};

struct Architecture {
  std::size_t feature_dim = 0;
  std::vector<std::size_t> lstm_units;  // one entry per LSTM layer (1-2)
  std::vector<std::size_t> relu_units;  // one entry per ReLU layer (1-4)
  double dropout_rate = 0.5;

  bool operator==(const Architecture&) const = default;
};

struct ModelParams {
  std::vector<LstmLayerParams> lstm_layers;
  std::vector<DenseLayerParams> relu_layers;
  DenseLayerParams output_layer;  // kNumClasses outputs
  double dropout_rate = 0.5;

  Architecture architecture() const;
  // Throws Error{ShapeMismatch} if adjacent layers do not chain.
  void validate() const;
};

// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), forget-gate bias 1,
// other biases 0. Throws Error{InvalidConfig} on an empty architecture.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);
ModelParams zero_params(const Architecture& arch);
ModelParams zeros_like(const ModelParams& params);

struct TensorRef {
  std::string name;
  std::span<double> values;
  bool is_weight;  // false for bias vectors
};
struct ConstTensorRef {
  std::string name;
  std::span<const double> values;
  bool is_weight;
};

// Every parameter tensor in a fixed order: LSTM layers (input weights,
// recurrent weights, biases), ReLU layers (weights, biases), output layer.
std::vector<TensorRef> tensors(ModelParams& params);
std::vector<ConstTensorRef> tensors(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

// Sum of squared weight entries; biases excluded.
double l2_penalty(const ModelParams& params);

// --- batches -------------------------------------------------------------------

// Branch-major storage: element (b, t) sits at b * max_len + t.
struct PaddedBatch {
  std::size_t branches = 0;
  std::size_t max_len = 0;
  std::size_t feature_dim = 0;
  std::vector<double> inputs;        // branches x max_len x feature_dim
  std::vector<int> labels;           // class index, -1 where absent
  std::vector<std::uint8_t> pad_mask;
  std::vector<std::uint8_t> loss_mask;

  PaddedBatch() = default;
  PaddedBatch(std::size_t branches, std::size_t max_len, std::size_t feature_dim);

  std::size_t cell(std::size_t b, std::size_t t) const { return b * max_len + t; }
  std::span<double> input(std::size_t b, std::size_t t) {
    return {inputs.data() + cell(b, t) * feature_dim, feature_dim};
  }
  std::span<const double> input(std::size_t b, std::size_t t) const {
    return {inputs.data() + cell(b, t) * feature_dim, feature_dim};
  }
  std::size_t loss_count() const;

  // Throws Error{ShapeMismatch} unless storage sizes agree, every pad_mask
  // row is a prefix of ones, loss_mask <= pad_mask, and every loss position
  // carries a label.
  void validate() const;
};

// Branch-major class probabilities: (b, t) row at (b * max_len + t) * kNumClasses.
struct ClassProbs {
  std::size_t branches = 0;
  std::size_t max_len = 0;
  std::vector<double> values;

  std::span<const double> at(std::size_t b, std::size_t t) const {
    return {values.data() + (b * max_len + t) * kNumClasses, kNumClasses};
  }
};

enum class Mode { Train, Infer };

// --- single step -------------------------------------------------------------------

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

// One LSTM step for a single input vector. Throws Error{ShapeMismatch}.
LstmState lstm_cell_step(std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev, const LstmLayerParams& params);

// --- batched forward / backward -------------------------------------------------------

// Rows of every cached matrix are time-major: row t * branches + b.
struct LstmLayerCache {
  Matrix inputs;  // T*B x I
  Matrix gates;   // T*B x 4H, post-activation
  Matrix cell;    // T*B x H
  Matrix cell_tanh;
  Matrix hidden;
};

struct ForwardCache {
  std::size_t branches = 0;
  std::size_t max_len = 0;
  std::vector<LstmLayerCache> lstm;
  std::vector<Matrix> relu_outputs;  // post-ReLU, one per dense layer
  Matrix dropout_scale;              // 0 or 1/keep per unit; empty in infer mode
  Matrix head_input;                 // last ReLU output after dropout
  Matrix probs;                      // T*B x kNumClasses
};

struct ForwardResult {
  ClassProbs probs;
  ForwardCache cache;
};

// Throws Error{ShapeMismatch} when the batch does not fit the parameters.
ForwardResult forward_branch(const PaddedBatch& batch, const ModelParams& params, Mode mode,
                             std::uint64_t rng_seed);

// Mean cross entropy over loss positions plus l2 * l2_penalty(params).
// Throws Error{EmptyMask} when no position is counted.
double masked_loss(const ClassProbs& probs, std::span<const int> labels,
                   std::span<const std::uint8_t> loss_mask, const ModelParams& params,
                   double l2_strength);

// Exact gradient of masked_loss for the forward pass recorded in `cache`.
ModelParams backward(const ForwardCache& cache, std::span<const int> labels,
                     std::span<const std::uint8_t> loss_mask, const ModelParams& params,
                     double l2_strength);

// --- verification -----------------------------------------------------------------

struct GradCheckOptions {
  Mode mode = Mode::Train;
  std::uint64_t dropout_seed = 7;
  std::uint64_t sample_seed = 11;
  // Applied to the analytic gradient before comparison (checker self-tests).
  std::function<void(ModelParams&)> tamper;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_raw_relative_error = 0.0;  // same, without the round-off allowance
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// max(0, |a - n| - roundoff) / max(|a|, |n|); 0 when both are exactly zero.
// `roundoff` bounds the floating-point error of the numeric estimate, so a
// tiny gradient is not failed for disagreement at the noise level.
double relative_error(double analytic, double numeric, double roundoff = 0.0);

// Central differences on `samples` parameters drawn uniformly over all
// tensors, compared against backward().
GradCheckResult finite_difference_check(const ModelParams& params, const PaddedBatch& batch,
                                        double l2_strength, double epsilon, std::size_t samples,
                                        const GradCheckOptions& options = {});

// --- optimizer -------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;

  static AdamState for_params(const ModelParams& params);
};

// step_index counts from 1 and drives bias correction.
void optimizer_step(ModelParams& params, const ModelParams& gradients, AdamState& state,
                    std::size_t step_index, const AdamConfig& config = {});

}  // namespace stance
