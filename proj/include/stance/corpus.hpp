#pragma once

// Conversation threads, their root-to-leaf branches and the loss
// deduplication masks built over them.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "stance/labels.hpp"

namespace stance {

struct Post {
  std::string id;
  std::string text;
  std::optional<std::string> parent_id;  // absent iff source post
  bool has_url = false;
  bool has_media = false;
  std::optional<StanceLabel> label;

  bool is_source() const { return !parent_id.has_value(); }
};

// A validated reply tree. Construction checks every structural invariant,
// after which the object is immutable.
class ConversationThread {
 public:
  // Throws Error{OrphanPost | MultipleSources | CycleDetected | DuplicatePost |
  // MalformedDocument}.
  ConversationThread(std::string thread_id, std::vector<Post> posts);

  const std::string& thread_id() const { return thread_id_; }
  const std::vector<Post>& posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }

  std::size_t source_index() const { return source_; }
  const Post& source() const { return posts_[source_]; }
  const Post& post(std::size_t index) const { return posts_[index]; }

  // Children in serialized post order.
  const std::vector<std::size_t>& children(std::size_t index) const { return children_[index]; }
  std::optional<std::size_t> parent_index(std::size_t index) const;
  std::size_t depth_at(std::size_t index) const { return depth_[index]; }
  bool is_leaf(std::size_t index) const { return children_[index].empty(); }

  std::optional<std::size_t> find(std::string_view post_id) const;
  // Throws Error{UnknownPost}.
  std::size_t index_of(std::string_view post_id) const;

 private:
  std::string thread_id_;
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> depth_;
  std::size_t source_ = 0;
};

struct Branch {
  std::string thread_id;
  std::vector<std::string> post_ids;  // [0] = source, back() = leaf

  bool operator==(const Branch&) const = default;
};

struct DatasetSplit {
  std::vector<ConversationThread> train;
  std::vector<ConversationThread> dev;
  std::vector<ConversationThread> test;
};

// --- thread documents -------------------------------------------------------

// Throws Error{MalformedDocument} on schema violations, plus the structural
// errors of ConversationThread.
ConversationThread parse_thread(const nlohmann::json& document);
ConversationThread parse_thread(std::string_view text);
nlohmann::json to_json(const ConversationThread& thread);

// A split file holds a JSON array of thread objects.
std::vector<ConversationThread> parse_thread_list(std::string_view text);
std::vector<ConversationThread> load_threads(const std::filesystem::path& path);
void save_threads(const std::filesystem::path& path, const std::vector<ConversationThread>& threads);

// Throws Error{DuplicatePost} naming the thread when two threads of one
// split share a thread id, or Error{MalformedDocument} when ids cross splits.
void validate_split(const DatasetSplit& split);

// --- branch structure -------------------------------------------------------

// One branch per leaf, leaves visited depth-first in serialized child order.
std::vector<Branch> decompose_branches(const ConversationThread& thread);

// Index-based form of decompose_branches: each entry lists post indices root first.
std::vector<std::vector<std::size_t>> branch_indices(const ConversationThread& thread);

// Throws Error{UnknownPost}.
std::size_t post_depth(const ConversationThread& thread, std::string_view post_id);

// True at a position iff that post id has not appeared earlier (earlier
// branch, or earlier position of the same branch). Throws Error{MixedThreads}.
std::vector<std::vector<bool>> dedup_mask(const std::vector<Branch>& branches);

// --- statistics ---------------------------------------------------------------

struct SplitStats {
  std::size_t threads = 0;
  std::size_t branches = 0;
  std::size_t posts = 0;
  std::array<std::size_t, kNumClasses> label_counts{};  // indexed by StanceLabel
  std::size_t unlabeled = 0;

  SplitStats& operator+=(const SplitStats& other);
  bool operator==(const SplitStats&) const = default;
};

SplitStats thread_stats(const std::vector<ConversationThread>& threads);

struct DatasetStats {
  SplitStats train;
  SplitStats dev;
  SplitStats test;
  SplitStats total;
};

DatasetStats dataset_stats(const DatasetSplit& split);

}  // namespace stance
