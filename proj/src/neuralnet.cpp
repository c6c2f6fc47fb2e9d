#include "stance/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stance/error.hpp"
#include "stance/kernels.hpp"
#include "stance/rng.hpp"

namespace stance {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::ShapeMismatch, what);
}

DenseLayerParams zero_dense(std::size_t out, std::size_t in) {
  return DenseLayerParams{Matrix(out, in), std::vector<double>(out, 0.0)};
}

LstmLayerParams zero_lstm(std::size_t in, std::size_t hidden) {
  return LstmLayerParams{Matrix(4 * hidden, in), Matrix(4 * hidden, hidden),
                         std::vector<double>(4 * hidden, 0.0)};
}

void add_bias_rows(MatrixView m, std::span<const double> bias) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

void add_column_sums(ConstMatrixView m, std::vector<double>& out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  }
}

}  // namespace

// --- parameters -----------------------------------------------------------------

Architecture ModelParams::architecture() const {
  Architecture a;
  a.feature_dim = lstm_layers.empty() ? 0 : lstm_layers.front().input_size();
  for (const auto& l : lstm_layers) a.lstm_units.push_back(l.hidden_size());
  for (const auto& l : relu_layers) a.relu_units.push_back(l.output_size());
  a.dropout_rate = dropout_rate;
  return a;
}

void ModelParams::validate() const {
  if (lstm_layers.empty()) shape_error("model has no LSTM layer");
  if (relu_layers.empty()) shape_error("model has no ReLU layer");
  std::size_t width = lstm_layers.front().input_size();
  for (std::size_t l = 0; l < lstm_layers.size(); ++l) {
    const auto& p = lstm_layers[l];
    const std::size_t h = p.hidden_size();
    if (p.input_size() != width || p.input_weights.rows() != 4 * h ||
        p.recurrent_weights.rows() != 4 * h || p.biases.size() != 4 * h) {
      shape_error("LSTM layer " + std::to_string(l) + " does not chain");
    }
    width = h;
  }
  for (std::size_t l = 0; l < relu_layers.size(); ++l) {
    const auto& p = relu_layers[l];
    if (p.input_size() != width || p.biases.size() != p.output_size()) {
      shape_error("ReLU layer " + std::to_string(l) + " does not chain");
    }
    width = p.output_size();
  }
  if (output_layer.input_size() != width || output_layer.output_size() != kNumClasses ||
      output_layer.biases.size() != kNumClasses) {
    shape_error("output layer does not chain");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) shape_error("dropout rate outside [0, 1)");
}

ModelParams zero_params(const Architecture& arch) {
  if (arch.feature_dim == 0 || arch.lstm_units.empty() || arch.relu_units.empty()) {
    throw Error(ErrorCode::InvalidConfig,
                "architecture needs a feature dimension, an LSTM layer and a ReLU layer");
  }
  ModelParams p;
  std::size_t width = arch.feature_dim;
  for (std::size_t h : arch.lstm_units) {
    p.lstm_layers.push_back(zero_lstm(width, h));
    width = h;
  }
  for (std::size_t u : arch.relu_units) {
    p.relu_layers.push_back(zero_dense(u, width));
    width = u;
  }
  p.output_layer = zero_dense(kNumClasses, width);
  p.dropout_rate = arch.dropout_rate;
  return p;
}

ModelParams zeros_like(const ModelParams& params) { return zero_params(params.architecture()); }

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = zero_params(arch);
  Rng rng(seed);
  auto glorot = [&](Matrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& x : w.values()) x = rng.uniform(-limit, limit);
  };
  for (auto& layer : p.lstm_layers) {
    glorot(layer.input_weights);
    glorot(layer.recurrent_weights);
    const std::size_t h = layer.hidden_size();
    std::fill(layer.biases.begin() + h, layer.biases.begin() + 2 * h, 1.0);
  }
  for (auto& layer : p.relu_layers) glorot(layer.weights);
  glorot(p.output_layer.weights);
  return p;
}

namespace {

template <typename Params, typename Ref>
std::vector<Ref> collect_tensors(Params& params) {
  std::vector<Ref> out;
  for (std::size_t l = 0; l < params.lstm_layers.size(); ++l) {
    auto& layer = params.lstm_layers[l];
    const std::string prefix = "lstm" + std::to_string(l) + ".";
    out.push_back({prefix + "input_weights", layer.input_weights.values(), true});
    out.push_back({prefix + "recurrent_weights", layer.recurrent_weights.values(), true});
    out.push_back({prefix + "biases", layer.biases, false});
  }
  for (std::size_t l = 0; l < params.relu_layers.size(); ++l) {
    auto& layer = params.relu_layers[l];
    const std::string prefix = "relu" + std::to_string(l) + ".";
    out.push_back({prefix + "weights", layer.weights.values(), true});
    out.push_back({prefix + "biases", layer.biases, false});
  }
  out.push_back({"output.weights", params.output_layer.weights.values(), true});
  out.push_back({"output.biases", params.output_layer.biases, false});
  return out;
}

}  // namespace

std::vector<TensorRef> tensors(ModelParams& params) {
  return collect_tensors<ModelParams, TensorRef>(params);
}

std::vector<ConstTensorRef> tensors(const ModelParams& params) {
  return collect_tensors<const ModelParams, ConstTensorRef>(params);
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& t : tensors(params)) n += t.values.size();
  return n;
}

double l2_penalty(const ModelParams& params) {
  double sum = 0.0;
  for (const auto& t : tensors(params)) {
    if (!t.is_weight) continue;
    for (double w : t.values) sum += w * w;
  }
  return sum;
}

// --- batches ---------------------------------------------------------------------

PaddedBatch::PaddedBatch(std::size_t branches_, std::size_t max_len_, std::size_t feature_dim_)
    : branches(branches_),
      max_len(max_len_),
      feature_dim(feature_dim_),
      inputs(branches_ * max_len_ * feature_dim_, 0.0),
      labels(branches_ * max_len_, -1),
      pad_mask(branches_ * max_len_, 0),
      loss_mask(branches_ * max_len_, 0) {}

std::size_t PaddedBatch::loss_count() const {
  return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), 1));
}

void PaddedBatch::validate() const {
  const std::size_t cells = branches * max_len;
  if (inputs.size() != cells * feature_dim || labels.size() != cells ||
      pad_mask.size() != cells || loss_mask.size() != cells) {
    shape_error("batch storage does not match its declared shape");
  }
  for (std::size_t b = 0; b < branches; ++b) {
    bool padding = false;
    for (std::size_t t = 0; t < max_len; ++t) {
      const std::size_t i = cell(b, t);
      if (pad_mask[i] > 1 || loss_mask[i] > 1) shape_error("mask values must be 0 or 1");
      if (pad_mask[i] == 0) padding = true;
      else if (padding) shape_error("pad mask of branch " + std::to_string(b) + " is not a prefix");
      if (loss_mask[i] > pad_mask[i]) {
        shape_error("loss mask counts a padded position in branch " + std::to_string(b));
      }
      if (loss_mask[i] && (labels[i] < 0 || labels[i] >= static_cast<int>(kNumClasses))) {
        shape_error("loss position without a valid label in branch " + std::to_string(b));
      }
    }
  }
}

// --- single step -------------------------------------------------------------------

LstmState lstm_cell_step(std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev, const LstmLayerParams& params) {
  const std::size_t hidden = params.hidden_size();
  const std::size_t in = params.input_size();
  if (x.size() != in || h_prev.size() != hidden || c_prev.size() != hidden ||
      params.input_weights.rows() != 4 * hidden || params.biases.size() != 4 * hidden) {
    shape_error("lstm_cell_step operands do not match the layer");
  }
  std::vector<double> pre(params.biases);
  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < in; ++k) s += params.input_weights(r, k) * x[k];
    for (std::size_t k = 0; k < hidden; ++k) s += params.recurrent_weights(r, k) * h_prev[k];
    pre[r] += s;
  }
  LstmState out{std::vector<double>(hidden), std::vector<double>(hidden)};
  for (std::size_t j = 0; j < hidden; ++j) {
    const double i = sigmoid(pre[j]);
    const double f = sigmoid(pre[hidden + j]);
    const double g = std::tanh(pre[2 * hidden + j]);
    const double o = sigmoid(pre[3 * hidden + j]);
    out.c[j] = f * c_prev[j] + i * g;
    out.h[j] = o * std::tanh(out.c[j]);
  }
  return out;
}

// --- forward ---------------------------------------------------------------------

namespace {

void lstm_layer_forward(const LstmLayerParams& p, Matrix inputs, std::size_t branches,
                        std::size_t steps, LstmLayerCache& cache) {
  const std::size_t hidden = p.hidden_size();
  const std::size_t rows = branches * steps;
  cache.inputs = std::move(inputs);
  cache.gates = Matrix(rows, 4 * hidden);
  cache.cell = Matrix(rows, hidden);
  cache.cell_tanh = Matrix(rows, hidden);
  cache.hidden = Matrix(rows, hidden);

  // Input projections for every timestep at once; recurrent terms per step.
  kernels::gemm_nt(cache.inputs, p.input_weights, cache.gates);
  for (std::size_t t = 0; t < steps; ++t) {
    MatrixView g = cache.gates.rows_view(t * branches, branches);
    if (t > 0) {
      kernels::gemm_nt(cache.hidden.rows_view((t - 1) * branches, branches),
                       p.recurrent_weights, g);
    }
    for (std::size_t b = 0; b < branches; ++b) {
      const std::size_t r = t * branches + b;
      auto gate = cache.gates.row(r);
      for (std::size_t j = 0; j < hidden; ++j) {
        const double i = sigmoid(gate[j] + p.biases[j]);
        const double f = sigmoid(gate[hidden + j] + p.biases[hidden + j]);
        const double gg = std::tanh(gate[2 * hidden + j] + p.biases[2 * hidden + j]);
        const double o = sigmoid(gate[3 * hidden + j] + p.biases[3 * hidden + j]);
        const double c_prev = t > 0 ? cache.cell(r - branches, j) : 0.0;
        const double c = f * c_prev + i * gg;
        const double tc = std::tanh(c);
        gate[j] = i;
        gate[hidden + j] = f;
        gate[2 * hidden + j] = gg;
        gate[3 * hidden + j] = o;
        cache.cell(r, j) = c;
        cache.cell_tanh(r, j) = tc;
        cache.hidden(r, j) = o * tc;
      }
    }
  }
}

Matrix dense_forward(const DenseLayerParams& p, ConstMatrixView in) {
  Matrix out(in.rows, p.output_size());
  add_bias_rows(out, p.biases);
  kernels::gemm_nt(in, p.weights, out);
  return out;
}

}  // namespace

ForwardResult forward_branch(const PaddedBatch& batch, const ModelParams& params, Mode mode,
                             std::uint64_t rng_seed) {
  batch.validate();
  params.validate();
  if (batch.feature_dim != params.lstm_layers.front().input_size()) {
    shape_error("batch feature dimension " + std::to_string(batch.feature_dim) +
                " does not match model input size " +
                std::to_string(params.lstm_layers.front().input_size()));
  }
  const std::size_t B = batch.branches;
  const std::size_t T = batch.max_len;
  const std::size_t rows = B * T;

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.branches = B;
  cache.max_len = T;

  // Time-major copy of the inputs; padded cells stay zero whatever the batch holds.
  Matrix x(rows, batch.feature_dim);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      if (!batch.pad_mask[batch.cell(b, t)]) continue;
      auto src = batch.input(b, t);
      std::copy(src.begin(), src.end(), x.row(t * B + b).begin());
    }
  }

  cache.lstm.resize(params.lstm_layers.size());
  for (std::size_t l = 0; l < params.lstm_layers.size(); ++l) {
    Matrix in = l == 0 ? std::move(x) : cache.lstm[l - 1].hidden;
    lstm_layer_forward(params.lstm_layers[l], std::move(in), B, T, cache.lstm[l]);
  }

  ConstMatrixView activation = cache.lstm.back().hidden;
  // `activation` points into relu_outputs, so it must never reallocate.
  cache.relu_outputs.reserve(params.relu_layers.size());
  for (const auto& layer : params.relu_layers) {
    Matrix z = dense_forward(layer, activation);
    for (double& v : z.values()) v = std::max(v, 0.0);
    cache.relu_outputs.push_back(std::move(z));
    activation = cache.relu_outputs.back();
  }

  cache.head_input = cache.relu_outputs.back();
  if (mode == Mode::Train) {
    const double keep = 1.0 - params.dropout_rate;
    const double scale = 1.0 / keep;
    cache.dropout_scale = Matrix(rows, cache.head_input.cols());
    Rng rng(rng_seed);
    for (double& s : cache.dropout_scale.values()) s = rng.bernoulli(keep) ? scale : 0.0;
    auto h = cache.head_input.values();
    auto s = cache.dropout_scale.values();
    for (std::size_t k = 0; k < h.size(); ++k) h[k] *= s[k];
  }

  cache.probs = dense_forward(params.output_layer, cache.head_input);
  for (std::size_t r = 0; r < rows; ++r) {
    auto z = cache.probs.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : z) v /= total;
  }

  result.probs.branches = B;
  result.probs.max_len = T;
  result.probs.values.assign(rows * kNumClasses, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      auto src = cache.probs.row(t * B + b);
      std::copy(src.begin(), src.end(),
                result.probs.values.begin() + static_cast<std::ptrdiff_t>((b * T + t) * kNumClasses));
    }
  }
  return result;
}

// --- loss ------------------------------------------------------------------------

double masked_loss(const ClassProbs& probs, std::span<const int> labels,
                   std::span<const std::uint8_t> loss_mask, const ModelParams& params,
                   double l2_strength) {
  const std::size_t cells = probs.branches * probs.max_len;
  if (labels.size() != cells || loss_mask.size() != cells ||
      probs.values.size() != cells * kNumClasses) {
    shape_error("masked_loss operands disagree on the batch shape");
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t b = 0; b < probs.branches; ++b) {
    for (std::size_t t = 0; t < probs.max_len; ++t) {
      const std::size_t i = b * probs.max_len + t;
      if (!loss_mask[i]) continue;
      if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumClasses)) {
        shape_error("loss position without a valid label");
      }
      sum -= std::log(probs.at(b, t)[static_cast<std::size_t>(labels[i])]);
      ++counted;
    }
  }
  if (counted == 0) throw Error(ErrorCode::EmptyMask, "no position contributes to the loss");
  double loss = sum / static_cast<double>(counted);
  if (l2_strength != 0.0) loss += l2_strength * l2_penalty(params);
  return loss;
}

// --- backward --------------------------------------------------------------------

ModelParams backward(const ForwardCache& cache, std::span<const int> labels,
                     std::span<const std::uint8_t> loss_mask, const ModelParams& params,
                     double l2_strength) {
  const std::size_t B = cache.branches;
  const std::size_t T = cache.max_len;
  const std::size_t rows = B * T;
  if (labels.size() != rows || loss_mask.size() != rows || cache.probs.rows() != rows ||
      cache.lstm.size() != params.lstm_layers.size() ||
      cache.relu_outputs.size() != params.relu_layers.size()) {
    shape_error("backward called with a cache from a different batch or model");
  }
  const auto counted = static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), 1));
  if (counted == 0) throw Error(ErrorCode::EmptyMask, "no position contributes to the loss");

  ModelParams grads = zeros_like(params);

  // d(mean CE)/d(logits) = (p - onehot) / N on counted cells.
  Matrix dlogits(rows, kNumClasses);
  const double inv_n = 1.0 / static_cast<double>(counted);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t cell = b * T + t;
      if (!loss_mask[cell]) continue;
      const std::size_t r = t * B + b;
      auto p = cache.probs.row(r);
      auto d = dlogits.row(r);
      for (std::size_t k = 0; k < kNumClasses; ++k) d[k] = p[k] * inv_n;
      d[static_cast<std::size_t>(labels[cell])] -= inv_n;
    }
  }

  kernels::gemm_tn(dlogits, cache.head_input, grads.output_layer.weights);
  add_column_sums(dlogits, grads.output_layer.biases);
  Matrix upstream(rows, cache.head_input.cols());
  kernels::gemm_nn(dlogits, params.output_layer.weights, upstream);
  if (cache.dropout_scale.size() > 0) {
    auto u = upstream.values();
    auto s = cache.dropout_scale.values();
    for (std::size_t k = 0; k < u.size(); ++k) u[k] *= s[k];
  }

  for (std::size_t j = params.relu_layers.size(); j-- > 0;) {
    const Matrix& out = cache.relu_outputs[j];
    auto u = upstream.values();
    auto z = out.values();
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (z[k] <= 0.0) u[k] = 0.0;
    }
    const ConstMatrixView below = j > 0 ? ConstMatrixView(cache.relu_outputs[j - 1])
                                        : ConstMatrixView(cache.lstm.back().hidden);
    kernels::gemm_tn(upstream, below, grads.relu_layers[j].weights);
    add_column_sums(upstream, grads.relu_layers[j].biases);
    Matrix next(rows, below.cols);
    kernels::gemm_nn(upstream, params.relu_layers[j].weights, next);
    upstream = std::move(next);
  }

  for (std::size_t l = params.lstm_layers.size(); l-- > 0;) {
    const LstmLayerParams& p = params.lstm_layers[l];
    const LstmLayerCache& lc = cache.lstm[l];
    LstmLayerParams& g = grads.lstm_layers[l];
    const std::size_t H = p.hidden_size();

    Matrix dgates(rows, 4 * H);
    Matrix dh_next(B, H);
    Matrix dc_next(B, H);
    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t r = t * B + b;
        auto gate = lc.gates.row(r);
        auto dg = dgates.row(r);
        for (std::size_t j = 0; j < H; ++j) {
          const double i = gate[j];
          const double f = gate[H + j];
          const double gg = gate[2 * H + j];
          const double o = gate[3 * H + j];
          const double tc = lc.cell_tanh(r, j);
          const double c_prev = t > 0 ? lc.cell(r - B, j) : 0.0;
          const double dh = upstream(r, j) + dh_next(b, j);
          const double dc = dh * o * (1.0 - tc * tc) + dc_next(b, j);
          dc_next(b, j) = dc * f;
          dg[j] = dc * gg * i * (1.0 - i);
          dg[H + j] = dc * c_prev * f * (1.0 - f);
          dg[2 * H + j] = dc * i * (1.0 - gg * gg);
          dg[3 * H + j] = dh * tc * o * (1.0 - o);
        }
      }
      dh_next.fill(0.0);
      if (t > 0) kernels::gemm_nn(dgates.rows_view(t * B, B), p.recurrent_weights, dh_next);
    }

    kernels::gemm_tn(dgates, lc.inputs, g.input_weights);
    if (T > 1) {
      kernels::gemm_tn(dgates.rows_view(B, (T - 1) * B), lc.hidden.rows_view(0, (T - 1) * B),
                       g.recurrent_weights);
    }
    add_column_sums(dgates, g.biases);
    if (l > 0) {
      Matrix dx(rows, p.input_size());
      kernels::gemm_nn(dgates, p.input_weights, dx);
      upstream = std::move(dx);
    }
  }

  if (l2_strength != 0.0) {
    auto gt = tensors(grads);
    auto pt = tensors(params);
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (!gt[k].is_weight) continue;
      for (std::size_t e = 0; e < gt[k].values.size(); ++e) {
        gt[k].values[e] += 2.0 * l2_strength * pt[k].values[e];
      }
    }
  }
  return grads;
}

// --- gradient check -----------------------------------------------------------------

double relative_error(double analytic, double numeric, double roundoff) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::max(0.0, std::abs(analytic - numeric) - roundoff) / scale;
}

GradCheckResult finite_difference_check(const ModelParams& params, const PaddedBatch& batch,
                                        double l2_strength, double epsilon, std::size_t samples,
                                        const GradCheckOptions& options) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be positive");
  auto loss_at = [&](const ModelParams& p) {
    auto fwd = forward_branch(batch, p, options.mode, options.dropout_seed);
    return masked_loss(fwd.probs, batch.labels, batch.loss_mask, p, l2_strength);
  };

  auto fwd = forward_branch(batch, params, options.mode, options.dropout_seed);
  ModelParams analytic = backward(fwd.cache, batch.labels, batch.loss_mask, params, l2_strength);
  if (options.tamper) options.tamper(analytic);

  const auto analytic_tensors = tensors(std::as_const(analytic));
  const std::size_t total = parameter_count(params);
  ModelParams probe = params;
  auto probe_tensors = tensors(probe);

  GradCheckResult result;
  Rng rng(options.sample_seed);
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t flat = rng.index(total);
    std::size_t k = 0;
    while (flat >= probe_tensors[k].values.size()) flat -= probe_tensors[k++].values.size();

    double& slot = probe_tensors[k].values[flat];
    const double original = slot;
    slot = original + epsilon;
    const double up = loss_at(probe);
    slot = original - epsilon;
    const double down = loss_at(probe);
    slot = original;

    const double numeric = (up - down) / (2.0 * epsilon);
    // one rounding of each loss, carried through the difference quotient
    const double roundoff =
        std::numeric_limits<double>::epsilon() * (std::abs(up) + std::abs(down)) / (2.0 * epsilon);
    const double exact = analytic_tensors[k].values[flat];
    const double err = relative_error(exact, numeric, roundoff);
    result.max_raw_relative_error =
        std::max(result.max_raw_relative_error, relative_error(exact, numeric));
    if (err > result.max_relative_error || s == 0) {
      result.max_relative_error = std::max(err, result.max_relative_error);
      result.worst_tensor = probe_tensors[k].name;
      result.worst_index = flat;
      result.worst_analytic = exact;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

// --- optimizer ---------------------------------------------------------------------

AdamState AdamState::for_params(const ModelParams& params) {
  return AdamState{zeros_like(params), zeros_like(params)};
}

void optimizer_step(ModelParams& params, const ModelParams& gradients, AdamState& state,
                    std::size_t step_index, const AdamConfig& config) {
  if (step_index == 0) throw Error(ErrorCode::InvalidConfig, "optimizer steps count from 1");
  auto p = tensors(params);
  auto g = tensors(gradients);
  auto m = tensors(state.first_moment);
  auto v = tensors(state.second_moment);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    shape_error("optimizer operands have different layouts");
  }
  const double t = static_cast<double>(step_index);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].values.size() != p[k].values.size() || m[k].values.size() != p[k].values.size() ||
        v[k].values.size() != p[k].values.size()) {
      shape_error("optimizer operand '" + p[k].name + "' has the wrong size");
    }
    for (std::size_t e = 0; e < p[k].values.size(); ++e) {
      const double grad = g[k].values[e];
      double& m1 = m[k].values[e];
      double& m2 = v[k].values[e];
      m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad;
      m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad * grad;
      const double m_hat = m1 / correction1;
      const double v_hat = m2 / correction2;
      p[k].values[e] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace stance
