#pragma once

// Per-post feature vectors: mean word embedding followed by fourteen
// hand-crafted slots (see FeatureSlot).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stance/corpus.hpp"

namespace stance {

// Offsets of the extra slots, relative to the embedding dimension D.
enum class FeatureSlot : std::size_t {
  NegationCount = 0,
  SwearCount,
  HasPeriod,
  HasExclamation,
  HasQuestion,
  CapitalRatio,
  HasUrl,
  HasImage,
  SimilarityToSource,
  SimilarityToPreceding,
  SimilarityToThread,
  WordCount,
  CharCount,
  IsSource,
};

inline constexpr std::size_t kExtraFeatures = 14;

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  // Text format: one entry per line, token then `dimension` reals. A leading
  // "<count> <dimension>" header line (word2vec text export) is accepted.
  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable parse(std::string_view text);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  // Throws Error{DimensionMismatch}. Re-inserting a token overwrites it.
  void insert(std::string token, std::vector<double> vector);
  const std::vector<double>* find(std::string_view token) const;

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

struct LexiconSet {
  std::unordered_set<std::string> negation_terms;
  std::unordered_set<std::string> swear_terms;

  // Entries are normalized with preprocess(); entries that normalize to
  // anything other than a single token are dropped.
  static std::unordered_set<std::string> normalize_terms(const std::vector<std::string>& raw);
  static std::unordered_set<std::string> load_terms(const std::filesystem::path& path);
  static LexiconSet load(const std::filesystem::path& negation_path,
                         const std::filesystem::path& swear_path);
  // The built-in negation list, with an empty swear list.
  static LexiconSet default_negation_only();
};

// The negation word list the model was designed around.
const std::vector<std::string>& default_negation_terms();

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double slot(std::size_t dimension, FeatureSlot s) const {
    return values[dimension + static_cast<std::size_t>(s)];
  }
};

// Whitespace split, lowercase, strip non-alphabetic characters, drop empties.
std::vector<std::string> preprocess(std::string_view text);

// Mean of the in-vocabulary token vectors; zero vector when none are known.
std::vector<double> embed_average(std::span<const std::string> tokens, const EmbeddingTable& table);

struct LexiconCounts {
  std::size_t negations = 0;
  std::size_t swears = 0;
};
LexiconCounts lexicon_counts(std::span<const std::string> tokens, const LexiconSet& lexicons);

struct SurfaceFeatures {
  bool period = false;
  bool exclamation = false;
  bool question = false;
  double capital_ratio = 0.0;
  bool has_url_text = false;
  std::size_t word_count = 0;
  std::size_t char_count = 0;  // UTF-8 code points
};
SurfaceFeatures surface_features(std::string_view raw_text);

// UTF-8 code points; each byte of a malformed sequence counts as one.
std::size_t code_point_count(std::string_view text);

// Zero when either norm is zero; clamped to [-1, 1]. Throws Error{DimensionMismatch}.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct BranchContext {
  const Post* source = nullptr;
  const Post* preceding = nullptr;  // null iff the post is the source
};

// Single-post extraction. Recomputes the thread-average embedding on every
// call; use featurize_thread for whole threads.
FeatureVector extract_features(const Post& post, const BranchContext& context,
                               const ConversationThread& thread, const EmbeddingTable& table,
                               const LexiconSet& lexicons);

// Feature vectors for every post of a thread, indexed like thread.posts().
std::vector<FeatureVector> featurize_thread(const ConversationThread& thread,
                                            const EmbeddingTable& table,
                                            const LexiconSet& lexicons);

inline std::size_t feature_dimension(const EmbeddingTable& table) {
  return table.dimension() + kExtraFeatures;
}

}  // namespace stance
