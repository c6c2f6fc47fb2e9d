#pragma once

// Importer for the RumourEval folder layout:
//
//   <root>/<event>/<thread id>/source-tweet/<id>.json
//   <root>/<event>/<thread id>/replies/<id>.json
//   <root>/<event>/<thread id>/structure.json      (nested reply tree, optional)
//
// plus per-split annotation files mapping tweet id -> stance label.

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "stance/corpus.hpp"

namespace stance {

struct ImportOptions {
  std::vector<std::filesystem::path> data_roots;
  std::filesystem::path train_labels;
  std::filesystem::path dev_labels;
  std::filesystem::path test_labels;  // optional
};

struct ImportResult {
  DatasetSplit split;
  std::size_t skipped_threads = 0;    // source tweet in no annotation file
  std::size_t reattached_replies = 0;  // parent missing, attached to the source
};

// Reads one thread directory (the one holding source-tweet/). Labels are
// looked up in `labels`; posts without an entry stay unlabeled.
ConversationThread import_thread_dir(const std::filesystem::path& dir,
                                     const std::unordered_map<std::string, std::string>& labels,
                                     std::size_t* reattached = nullptr);

ImportResult import_rumoureval(const ImportOptions& options);

}  // namespace stance
