#include <fstream>
#include <sstream>

#include "stance/error.hpp"
#include "stance/training.hpp"

namespace stance {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "branch-lstm-checkpoint";
constexpr int kCheckpointVersion = 1;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedDocument, "checkpoint: " + what);
}

template <typename T>
T get_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) malformed(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

}  // namespace

json to_json(const TrainConfig& c) {
  return json{{"num_lstm_layers", c.num_lstm_layers}, {"lstm_units", c.lstm_units},
              {"num_relu_layers", c.num_relu_layers}, {"relu_units", c.relu_units},
              {"batch_size", c.batch_size},           {"l2", c.l2},
              {"epochs", c.epochs},                   {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig c;
  c.num_lstm_layers = get_field<int>(doc, "num_lstm_layers");
  c.lstm_units = get_field<int>(doc, "lstm_units");
  c.num_relu_layers = get_field<int>(doc, "num_relu_layers");
  c.relu_units = get_field<int>(doc, "relu_units");
  c.batch_size = get_field<int>(doc, "batch_size");
  c.l2 = get_field<double>(doc, "l2");
  c.epochs = get_field<int>(doc, "epochs");
  c.seed = get_field<std::uint64_t>(doc, "seed");
  return c;
}

json params_to_json(const ModelParams& params) {
  const Architecture arch = params.architecture();
  json out;
  out["gate_order"] = kGateOrder;
  out["feature_dim"] = arch.feature_dim;
  out["lstm_units"] = arch.lstm_units;
  out["relu_units"] = arch.relu_units;
  out["num_classes"] = kNumClasses;
  out["dropout_rate"] = arch.dropout_rate;
  json class_order = json::array();
  for (StanceLabel l : kAllLabels) class_order.push_back(std::string(to_string(l)));
  out["class_order"] = std::move(class_order);
  json list = json::array();
  for (const auto& t : tensors(params)) {
    list.push_back({{"name", t.name},
                    {"values", std::vector<double>(t.values.begin(), t.values.end())}});
  }
  out["tensors"] = std::move(list);
  return out;
}

ModelParams params_from_json(const json& doc) {
  if (get_field<std::string>(doc, "gate_order") != kGateOrder) {
    malformed("unsupported gate order '" + doc["gate_order"].get<std::string>() + "'");
  }
  if (get_field<std::size_t>(doc, "num_classes") != kNumClasses) malformed("expected 4 classes");
  Architecture arch;
  arch.feature_dim = get_field<std::size_t>(doc, "feature_dim");
  arch.lstm_units = get_field<std::vector<std::size_t>>(doc, "lstm_units");
  arch.relu_units = get_field<std::vector<std::size_t>>(doc, "relu_units");
  arch.dropout_rate = get_field<double>(doc, "dropout_rate");
  ModelParams params = zero_params(arch);

  const json list = get_field<json>(doc, "tensors");
  auto slots = tensors(params);
  if (!list.is_array() || list.size() != slots.size()) malformed("tensor list does not match layers");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (get_field<std::string>(list[k], "name") != slots[k].name) {
      malformed("expected tensor '" + slots[k].name + "' at position " + std::to_string(k));
    }
    const auto values = get_field<std::vector<double>>(list[k], "values");
    if (values.size() != slots[k].values.size()) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor '" + slots[k].name + "' has " +
                                                std::to_string(values.size()) + " values, expected " +
                                                std::to_string(slots[k].values.size()));
    }
    std::copy(values.begin(), values.end(), slots[k].values.begin());
  }
  params.validate();
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["config"] = to_json(model.config);
  doc["training_history"] = model.training_history;
  doc["model"] = params_to_json(model.params);
  write_json(path, doc);
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    if (get_field<std::string>(doc, "format") != kCheckpointFormat) malformed("unknown format tag");
    const int version = get_field<int>(doc, "version");
    if (version != kCheckpointVersion) malformed("unsupported version " + std::to_string(version));
    TrainedModel model;
    model.config = train_config_from_json(get_field<json>(doc, "config"));
    model.training_history = get_field<std::vector<double>>(doc, "training_history");
    model.params = params_from_json(get_field<json>(doc, "model"));
    model.feature_dim = model.params.lstm_layers.front().input_size();
    return model;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

json predictions_to_json(const std::vector<PostPrediction>& predictions) {
  json list = json::array();
  for (const auto& p : predictions) {
    json probs;
    for (StanceLabel l : kAllLabels) probs[std::string(to_string(l))] = p.probs[index_of(l)];
    list.push_back({{"thread_id", p.thread_id},
                    {"post_id", p.post_id},
                    {"label", std::string(to_string(p.label))},
                    {"probs", std::move(probs)}});
  }
  return list;
}

std::vector<PostPrediction> predictions_from_json(const json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorCode::MalformedDocument, "predictions must be a JSON array");
  }
  std::vector<PostPrediction> out;
  out.reserve(doc.size());
  for (const json& item : doc) {
    PostPrediction p;
    try {
      p.thread_id = item.value("thread_id", std::string());
      p.post_id = item.at("post_id").get<std::string>();
      const auto label = parse_label(item.at("label").get<std::string>());
      if (!label) {
        throw Error(ErrorCode::MalformedDocument,
                    "prediction for post '" + p.post_id + "' has an unknown label");
      }
      p.label = *label;
      if (auto it = item.find("probs"); it != item.end()) {
        for (StanceLabel l : kAllLabels) {
          p.probs[index_of(l)] = it->value(std::string(to_string(l)), 0.0);
        }
      } else {
        p.probs[index_of(p.label)] = 1.0;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedDocument, std::string("prediction record: ") + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace stance
