#include "stance/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "stance/error.hpp"

namespace stance {

using nlohmann::json;

ConversationThread::ConversationThread(std::string thread_id, std::vector<Post> posts)
    : thread_id_(std::move(thread_id)), posts_(std::move(posts)) {
  if (posts_.empty()) {
    throw Error(ErrorCode::MalformedDocument, "thread '" + thread_id_ + "' has no posts");
  }
  const std::size_t n = posts_.size();
  index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (posts_[i].id.empty()) {
      throw Error(ErrorCode::MalformedDocument,
                  "thread '" + thread_id_ + "' has a post with an empty id");
    }
    if (!index_.emplace(posts_[i].id, i).second) {
      throw Error(ErrorCode::DuplicatePost,
                  "post '" + posts_[i].id + "' repeated in thread '" + thread_id_ + "'");
    }
  }

  parent_.assign(n, std::nullopt);
  children_.assign(n, {});
  std::optional<std::size_t> source;
  for (std::size_t i = 0; i < n; ++i) {
    const Post& p = posts_[i];
    if (!p.parent_id) {
      if (source) {
        throw Error(ErrorCode::MultipleSources, "thread '" + thread_id_ + "' has sources '" +
                                                    posts_[*source].id + "' and '" + p.id + "'");
      }
      source = i;
      continue;
    }
    auto it = index_.find(*p.parent_id);
    if (it == index_.end()) {
      throw Error(ErrorCode::OrphanPost, "post '" + p.id + "' in thread '" + thread_id_ +
                                             "' replies to unknown post '" + *p.parent_id + "'");
    }
    parent_[i] = it->second;
    children_[it->second].push_back(i);
  }
  // With every non-source post attached to an existing parent, a missing
  // source or an unreachable post can only come from a parent cycle.
  if (!source) {
    throw Error(ErrorCode::CycleDetected, "thread '" + thread_id_ + "' has no source post");
  }
  source_ = *source;

  depth_.assign(n, 0);
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> queue{source_};
  seen[source_] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t at = queue[head];
    for (std::size_t child : children_[at]) {
      seen[child] = true;
      depth_[child] = depth_[at] + 1;
      queue.push_back(child);
    }
  }
  if (queue.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) {
        throw Error(ErrorCode::CycleDetected, "post '" + posts_[i].id + "' in thread '" +
                                                  thread_id_ + "' is not reachable from the source");
      }
    }
  }
}

std::optional<std::size_t> ConversationThread::parent_index(std::size_t index) const {
  return parent_[index];
}

std::optional<std::size_t> ConversationThread::find(std::string_view post_id) const {
  auto it = index_.find(std::string(post_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ConversationThread::index_of(std::string_view post_id) const {
  auto found = find(post_id);
  if (!found) {
    throw Error(ErrorCode::UnknownPost,
                "post '" + std::string(post_id) + "' not in thread '" + thread_id_ + "'");
  }
  return *found;
}

// --- documents ----------------------------------------------------------------

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::MalformedDocument, where + ": " + what);
}

const json& require(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) malformed(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& object, const char* key, const std::string& where) {
  const json& value = require(object, key, where);
  if (!value.is_string()) malformed(where, std::string("field '") + key + "' must be a string");
  return value.get<std::string>();
}

bool optional_bool(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return false;
  if (!it->is_boolean()) malformed(where, std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

Post parse_post(const json& doc, const std::string& where) {
  if (!doc.is_object()) malformed(where, "post must be an object");
  Post post;
  post.id = require_string(doc, "id", where);
  const std::string at = where + " post '" + post.id + "'";
  if (auto it = doc.find("text"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) malformed(at, "field 'text' must be a string");
    post.text = it->get<std::string>();
  }
  if (auto it = doc.find("parent_id"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) malformed(at, "field 'parent_id' must be a string or null");
    post.parent_id = it->get<std::string>();
  }
  post.has_url = optional_bool(doc, "has_url", at);
  post.has_media = optional_bool(doc, "has_media", at);
  if (auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) malformed(at, "field 'label' must be a string or null");
    post.label = parse_label(it->get<std::string>());
    if (!post.label) malformed(at, "unknown label '" + it->get<std::string>() + "'");
  }
  return post;
}

json parse_json_text(std::string_view text, const std::string& where) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    malformed(where, e.what());
  }
}

}  // namespace

ConversationThread parse_thread(const json& document) {
  if (!document.is_object()) malformed("thread", "document must be an object");
  const std::string thread_id = require_string(document, "thread_id", "thread");
  const std::string where = "thread '" + thread_id + "'";
  const json& posts_doc = require(document, "posts", where);
  if (!posts_doc.is_array()) malformed(where, "field 'posts' must be an array");
  std::vector<Post> posts;
  posts.reserve(posts_doc.size());
  for (const json& p : posts_doc) posts.push_back(parse_post(p, where));
  return ConversationThread(thread_id, std::move(posts));
}

ConversationThread parse_thread(std::string_view text) {
  return parse_thread(parse_json_text(text, "thread"));
}

json to_json(const ConversationThread& thread) {
  json posts = json::array();
  for (const Post& p : thread.posts()) {
    posts.push_back({
        {"id", p.id},
        {"text", p.text},
        {"parent_id", p.parent_id ? json(*p.parent_id) : json(nullptr)},
        {"has_url", p.has_url},
        {"has_media", p.has_media},
        {"label", p.label ? json(std::string(to_string(*p.label))) : json(nullptr)},
    });
  }
  return json{{"thread_id", thread.thread_id()}, {"posts", std::move(posts)}};
}

std::vector<ConversationThread> parse_thread_list(std::string_view text) {
  json doc = parse_json_text(text, "split");
  if (!doc.is_array()) malformed("split", "top level must be an array of threads");
  std::vector<ConversationThread> threads;
  threads.reserve(doc.size());
  std::unordered_set<std::string> ids;
  for (const json& t : doc) {
    threads.push_back(parse_thread(t));
    if (!ids.insert(threads.back().thread_id()).second) {
      throw Error(ErrorCode::DuplicatePost,
                  "thread id '" + threads.back().thread_id() + "' repeated in split");
    }
  }
  return threads;
}

std::vector<ConversationThread> load_threads(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_thread_list(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_threads(const std::filesystem::path& path,
                  const std::vector<ConversationThread>& threads) {
  json doc = json::array();
  for (const auto& t : threads) doc.push_back(to_json(t));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

void validate_split(const DatasetSplit& split) {
  std::unordered_map<std::string, const char*> owner;
  auto scan = [&](const std::vector<ConversationThread>& threads, const char* name) {
    std::unordered_set<std::string> local;
    for (const auto& t : threads) {
      if (!local.insert(t.thread_id()).second) {
        throw Error(ErrorCode::DuplicatePost,
                    "thread id '" + t.thread_id() + "' repeated in " + name + " split");
      }
      auto [it, inserted] = owner.emplace(t.thread_id(), name);
      if (!inserted) {
        throw Error(ErrorCode::MalformedDocument, "thread '" + t.thread_id() +
                                                      "' appears in both " + it->second +
                                                      " and " + name + " splits");
      }
    }
  };
  scan(split.train, "train");
  scan(split.dev, "dev");
  scan(split.test, "test");
}

// --- branches -------------------------------------------------------------------

std::vector<std::vector<std::size_t>> branch_indices(const ConversationThread& thread) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path;
  // Explicit stack of (node, next child position) keeps deep threads off the call stack.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{thread.source_index(), 0}};
  path.push_back(thread.source_index());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = thread.children(node);
    if (kids.empty()) {
      out.push_back(path);
    }
    if (next < kids.size()) {
      const std::size_t child = kids[next++];
      stack.emplace_back(child, 0);
      path.push_back(child);
    } else {
      stack.pop_back();
      path.pop_back();
    }
  }
  return out;
}

std::vector<Branch> decompose_branches(const ConversationThread& thread) {
  std::vector<Branch> branches;
  for (const auto& indices : branch_indices(thread)) {
    Branch b{thread.thread_id(), {}};
    b.post_ids.reserve(indices.size());
    for (std::size_t i : indices) b.post_ids.push_back(thread.post(i).id);
    branches.push_back(std::move(b));
  }
  return branches;
}

std::size_t post_depth(const ConversationThread& thread, std::string_view post_id) {
  return thread.depth_at(thread.index_of(post_id));
}

std::vector<std::vector<bool>> dedup_mask(const std::vector<Branch>& branches) {
  std::vector<std::vector<bool>> masks;
  masks.reserve(branches.size());
  std::unordered_set<std::string> seen;
  for (const Branch& b : branches) {
    if (b.thread_id != branches.front().thread_id) {
      throw Error(ErrorCode::MixedThreads, "branches from threads '" +
                                               branches.front().thread_id + "' and '" +
                                               b.thread_id + "'");
    }
    std::vector<bool> mask(b.post_ids.size());
    for (std::size_t i = 0; i < b.post_ids.size(); ++i) {
      mask[i] = seen.insert(b.post_ids[i]).second;
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

// --- stats ------------------------------------------------------------------------

SplitStats& SplitStats::operator+=(const SplitStats& other) {
  threads += other.threads;
  branches += other.branches;
  posts += other.posts;
  for (std::size_t k = 0; k < kNumClasses; ++k) label_counts[k] += other.label_counts[k];
  unlabeled += other.unlabeled;
  return *this;
}

SplitStats thread_stats(const std::vector<ConversationThread>& threads) {
  SplitStats s;
  s.threads = threads.size();
  for (const auto& t : threads) {
    s.branches += decompose_branches(t).size();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (const auto& label = t.post(i).label) {
        ++s.label_counts[index_of(*label)];
      } else {
        ++s.unlabeled;
      }
    }
    s.posts += t.size();
  }
  return s;
}

DatasetStats dataset_stats(const DatasetSplit& split) {
  DatasetStats stats;
  stats.train = thread_stats(split.train);
  stats.dev = thread_stats(split.dev);
  stats.test = thread_stats(split.test);
  stats.total += stats.train;
  stats.total += stats.dev;
  stats.total += stats.test;
  return stats;
}

}  // namespace stance
