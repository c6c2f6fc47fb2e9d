#include "stance/rumoureval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "stance/error.hpp"

namespace stance {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
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

std::string id_of(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  return {};
}

bool nonempty_array(const json& object, const char* key) {
  auto it = object.find(key);
  return it != object.end() && it->is_array() && !it->empty();
}

struct RawTweet {
  Post post;
  std::string reply_to;
};

RawTweet read_tweet(const fs::path& path) {
  const json doc = read_json(path);
  RawTweet t;
  t.post.id = doc.contains("id_str") ? id_of(doc["id_str"]) : id_of(doc.value("id", json()));
  if (t.post.id.empty()) t.post.id = path.stem().string();
  t.post.text = doc.value("text", std::string());
  if (auto it = doc.find("in_reply_to_status_id_str"); it != doc.end()) t.reply_to = id_of(*it);
  if (t.reply_to.empty()) {
    if (auto it = doc.find("in_reply_to_status_id"); it != doc.end()) t.reply_to = id_of(*it);
  }
  if (auto it = doc.find("entities"); it != doc.end() && it->is_object()) {
    t.post.has_url = nonempty_array(*it, "urls");
    t.post.has_media = nonempty_array(*it, "media");
  }
  if (auto it = doc.find("extended_entities"); it != doc.end() && it->is_object()) {
    t.post.has_media = t.post.has_media || nonempty_array(*it, "media");
  }
  return t;
}

// structure.json nests replies as {id: {child: {...}, leaf: []}}.
void walk_structure(const json& node, const std::string& parent,
                    std::unordered_map<std::string, std::string>& parent_of) {
  if (!node.is_object()) return;
  for (const auto& [id, children] : node.items()) {
    if (!parent.empty()) parent_of.emplace(id, parent);
    walk_structure(children, id, parent_of);
  }
}

// Tweet ids are decimal; order numerically (shorter first, then lexicographic).
bool id_less(const std::string& a, const std::string& b) {
  return a.size() != b.size() ? a.size() < b.size() : a < b;
}

std::unordered_map<std::string, std::string> read_labels(const fs::path& path) {
  std::unordered_map<std::string, std::string> labels;
  if (path.empty()) return labels;
  const json doc = read_json(path);
  if (!doc.is_object()) {
    throw Error(ErrorCode::MalformedDocument, path.string() + ": expected an object of id -> label");
  }
  for (const auto& [id, label] : doc.items()) {
    if (!label.is_string()) {
      throw Error(ErrorCode::MalformedDocument, path.string() + ": label of '" + id + "' is not a string");
    }
    labels.emplace(id, label.get<std::string>());
  }
  return labels;
}

void find_thread_dirs(const fs::path& root, std::vector<fs::path>& out) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, "'" + root.string() + "' is not a directory");
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename() == "source-tweet") {
      out.push_back(entry.path().parent_path());
    }
  }
}

}  // namespace

ConversationThread import_thread_dir(const fs::path& dir,
                                     const std::unordered_map<std::string, std::string>& labels,
                                     std::size_t* reattached) {
  std::vector<RawTweet> sources;
  for (const auto& e : fs::directory_iterator(dir / "source-tweet")) {
    if (e.path().extension() == ".json") sources.push_back(read_tweet(e.path()));
  }
  if (sources.size() != 1) {
    throw Error(ErrorCode::MultipleSources, "'" + dir.string() + "' holds " +
                                                std::to_string(sources.size()) + " source tweets");
  }
  std::vector<RawTweet> replies;
  if (fs::is_directory(dir / "replies")) {
    for (const auto& e : fs::directory_iterator(dir / "replies")) {
      if (e.path().extension() == ".json") replies.push_back(read_tweet(e.path()));
    }
  }
  std::sort(replies.begin(), replies.end(),
            [](const RawTweet& a, const RawTweet& b) { return id_less(a.post.id, b.post.id); });

  std::unordered_map<std::string, std::string> parent_of;
  if (fs::exists(dir / "structure.json")) walk_structure(read_json(dir / "structure.json"), "", parent_of);

  const std::string source_id = sources.front().post.id;
  std::unordered_set<std::string> present{source_id};
  for (const auto& r : replies) present.insert(r.post.id);

  std::vector<Post> posts;
  posts.push_back(sources.front().post);
  for (auto& r : replies) {
    std::string parent = parent_of.count(r.post.id) ? parent_of[r.post.id] : r.reply_to;
    if (parent.empty() || !present.count(parent) || parent == r.post.id) {
      parent = source_id;
      if (reattached) ++*reattached;
    }
    r.post.parent_id = parent;
    posts.push_back(r.post);
  }
  for (auto& p : posts) {
    if (auto it = labels.find(p.id); it != labels.end()) {
      p.label = parse_label(it->second);
      if (!p.label) {
        throw Error(ErrorCode::MalformedDocument,
                    "tweet '" + p.id + "' has unknown label '" + it->second + "'");
      }
    }
  }
  return ConversationThread(dir.filename().string(), std::move(posts));
}

ImportResult import_rumoureval(const ImportOptions& options) {
  const auto train = read_labels(options.train_labels);
  const auto dev = read_labels(options.dev_labels);
  const auto test = read_labels(options.test_labels);
  std::unordered_map<std::string, std::string> all;
  for (const auto* m : {&train, &dev, &test}) all.insert(m->begin(), m->end());

  std::vector<fs::path> dirs;
  for (const auto& root : options.data_roots) find_thread_dirs(root, dirs);
  std::sort(dirs.begin(), dirs.end());

  ImportResult result;
  for (const auto& dir : dirs) {
    ConversationThread thread = import_thread_dir(dir, all, &result.reattached_replies);
    const std::string& source = thread.source().id;
    if (train.count(source)) {
      result.split.train.push_back(std::move(thread));
    } else if (dev.count(source)) {
      result.split.dev.push_back(std::move(thread));
    } else if (test.count(source)) {
      result.split.test.push_back(std::move(thread));
    } else {
      ++result.skipped_threads;
    }
  }
  validate_split(result.split);
  return result;
}

}  // namespace stance
