#include "stance/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stance/error.hpp"

namespace stance {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  for_each_word(line, [&](std::string_view w) { fields.push_back(w); });
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

// --- embeddings -----------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw Error(ErrorCode::DimensionMismatch, "embedding dimension must be > 0");
}

void EmbeddingTable::insert(std::string token, std::vector<double> vector) {
  if (vector.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "token '" + token + "' has " + std::to_string(vector.size()) +
                    " components, table dimension is " + std::to_string(dimension_));
  }
  entries_.insert_or_assign(std::move(token), std::move(vector));
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  auto it = entries_.find(std::string(token));
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
  std::optional<EmbeddingTable> table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (!table && line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, dim = 0;
      auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), count);
      auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), dim);
      if (r1.ec == std::errc() && r2.ec == std::errc() && dim > 0) {
        table.emplace(dim);
        continue;
      }
    }
    if (fields.size() < 2) {
      throw Error(ErrorCode::MalformedDocument,
                  "embedding line " + std::to_string(line_no) + " has no vector");
    }
    if (!table) table.emplace(fields.size() - 1);
    std::vector<double> values(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (!parse_double(fields[k], values[k - 1])) {
        throw Error(ErrorCode::MalformedDocument, "embedding line " + std::to_string(line_no) +
                                                      ": bad number '" +
                                                      std::string(fields[k]) + "'");
      }
    }
    try {
      table->insert(std::string(fields[0]), std::move(values));
    } catch (const Error& e) {
      throw Error(ErrorCode::DimensionMismatch,
                  "embedding line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!table) throw Error(ErrorCode::MalformedDocument, "embedding file is empty");
  return std::move(*table);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// --- lexicons -------------------------------------------------------------------

const std::vector<std::string>& default_negation_terms() {
  static const std::vector<std::string> terms = {
      "not",    "no",       "nobody",  "nothing", "none",     "never",    "neither",
      "nor",    "nowhere",  "hardly",  "scarcely", "barely",  "don't",    "isn't",
      "wasn't", "shouldn't", "wouldn't", "couldn't", "doesn't",
  };
  return terms;
}

std::unordered_set<std::string> LexiconSet::normalize_terms(const std::vector<std::string>& raw) {
  std::unordered_set<std::string> out;
  for (const auto& term : raw) {
    auto tokens = preprocess(term);
    if (tokens.size() == 1) out.insert(std::move(tokens.front()));
  }
  return out;
}

std::unordered_set<std::string> LexiconSet::load_terms(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.front() == '#') continue;
    lines.push_back(line);
  }
  return normalize_terms(lines);
}

LexiconSet LexiconSet::load(const std::filesystem::path& negation_path,
                            const std::filesystem::path& swear_path) {
  return LexiconSet{load_terms(negation_path), load_terms(swear_path)};
}

LexiconSet LexiconSet::default_negation_only() {
  return LexiconSet{normalize_terms(default_negation_terms()), {}};
}

// --- per-post pieces --------------------------------------------------------------

std::vector<std::string> preprocess(std::string_view text) {
  std::vector<std::string> tokens;
  for_each_word(text, [&](std::string_view word) {
    std::string token;
    token.reserve(word.size());
    for (char c : word) {
      if (is_alpha(c)) token.push_back(to_lower(c));
    }
    if (!token.empty()) tokens.push_back(std::move(token));
  });
  return tokens;
}

std::vector<double> embed_average(std::span<const std::string> tokens,
                                  const EmbeddingTable& table) {
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t known = 0;
  for (const auto& token : tokens) {
    const auto* v = table.find(token);
    if (!v) continue;
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
    ++known;
  }
  if (known > 0) {
    for (double& x : sum) x /= static_cast<double>(known);
  }
  return sum;
}

LexiconCounts lexicon_counts(std::span<const std::string> tokens, const LexiconSet& lexicons) {
  LexiconCounts counts;
  for (const auto& token : tokens) {
    if (lexicons.negation_terms.contains(token)) ++counts.negations;
    if (lexicons.swear_terms.contains(token)) ++counts.swears;
  }
  return counts;
}

SurfaceFeatures surface_features(std::string_view raw_text) {
  SurfaceFeatures f;
  std::size_t capitals = 0;
  for (char c : raw_text) {
    f.period |= c == '.';
    f.exclamation |= c == '!';
    f.question |= c == '?';
    if (is_upper(c)) ++capitals;
  }
  f.char_count = code_point_count(raw_text);
  f.capital_ratio =
      f.char_count == 0 ? 0.0 : static_cast<double>(capitals) / static_cast<double>(f.char_count);
  f.has_url_text = raw_text.find("http") != std::string_view::npos;
  for_each_word(raw_text, [&](std::string_view) { ++f.word_count; });
  return f;
}

std::size_t code_point_count(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); ++n) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xC2 && lead <= 0xDF) {
      len = 2;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
      len = 3;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
      len = 4;
    }
    bool ok = i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    }
    i += ok ? len : 1;
  }
  return n;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with sizes " +
                                                  std::to_string(u.size()) + " and " +
                                                  std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    uu += u[k] * u[k];
    vv += v[k] * v[k];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

// --- assembly ---------------------------------------------------------------------

namespace {

std::vector<double> post_embedding(const Post& post, const EmbeddingTable& table) {
  return embed_average(preprocess(post.text), table);
}

// Summed in post-id order so the result does not depend on how the thread's
// posts happen to be serialized.
std::vector<double> thread_mean(const ConversationThread& thread,
                                const std::vector<std::vector<double>>& embeddings,
                                std::size_t dimension) {
  std::vector<std::size_t> order(thread.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return thread.post(a).id < thread.post(b).id;
  });
  std::vector<double> mean(dimension, 0.0);
  for (std::size_t i : order) {
    for (std::size_t k = 0; k < dimension; ++k) mean[k] += embeddings[i][k];
  }
  for (double& x : mean) x /= static_cast<double>(embeddings.size());
  return mean;
}

FeatureVector assemble(const Post& post, const std::vector<double>& embedding,
                       const std::vector<double>& source_embedding,
                       const std::vector<double>& preceding_embedding,
                       const std::vector<double>& thread_embedding, const LexiconSet& lexicons) {
  const std::size_t dim = embedding.size();
  FeatureVector fv;
  fv.values.assign(dim + kExtraFeatures, 0.0);
  std::copy(embedding.begin(), embedding.end(), fv.values.begin());

  auto set = [&](FeatureSlot s, double value) {
    fv.values[dim + static_cast<std::size_t>(s)] = value;
  };
  const auto tokens = preprocess(post.text);
  const auto lex = lexicon_counts(tokens, lexicons);
  const auto surface = surface_features(post.text);

  set(FeatureSlot::NegationCount, static_cast<double>(lex.negations));
  set(FeatureSlot::SwearCount, static_cast<double>(lex.swears));
  set(FeatureSlot::HasPeriod, surface.period ? 1.0 : 0.0);
  set(FeatureSlot::HasExclamation, surface.exclamation ? 1.0 : 0.0);
  set(FeatureSlot::HasQuestion, surface.question ? 1.0 : 0.0);
  set(FeatureSlot::CapitalRatio, surface.capital_ratio);
  set(FeatureSlot::HasUrl, (post.has_url || surface.has_url_text) ? 1.0 : 0.0);
  set(FeatureSlot::HasImage, post.has_media ? 1.0 : 0.0);
  set(FeatureSlot::SimilarityToSource, cosine_similarity(embedding, source_embedding));
  set(FeatureSlot::SimilarityToPreceding, cosine_similarity(embedding, preceding_embedding));
  set(FeatureSlot::SimilarityToThread, cosine_similarity(embedding, thread_embedding));
  set(FeatureSlot::WordCount, static_cast<double>(surface.word_count));
  set(FeatureSlot::CharCount, static_cast<double>(surface.char_count));
  set(FeatureSlot::IsSource, post.is_source() ? 1.0 : 0.0);
  return fv;
}

}  // namespace

FeatureVector extract_features(const Post& post, const BranchContext& context,
                               const ConversationThread& thread, const EmbeddingTable& table,
                               const LexiconSet& lexicons) {
  std::vector<std::vector<double>> all;
  all.reserve(thread.size());
  for (const Post& p : thread.posts()) all.push_back(post_embedding(p, table));
  const auto mean = thread_mean(thread, all, table.dimension());

  const auto own = post_embedding(post, table);
  // The source compares against itself in both context slots.
  const auto source = context.source && !post.is_source() ? post_embedding(*context.source, table)
                                                          : own;
  const auto preceding = context.preceding ? post_embedding(*context.preceding, table) : own;
  return assemble(post, own, source, preceding, mean, lexicons);
}

std::vector<FeatureVector> featurize_thread(const ConversationThread& thread,
                                            const EmbeddingTable& table,
                                            const LexiconSet& lexicons) {
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(thread.size());
  for (const Post& p : thread.posts()) embeddings.push_back(post_embedding(p, table));
  const auto mean = thread_mean(thread, embeddings, table.dimension());
  const auto& source = embeddings[thread.source_index()];

  std::vector<FeatureVector> out(thread.size());
  for (std::size_t i = 0; i < thread.size(); ++i) {
    const auto parent = thread.parent_index(i);
    const auto& preceding = parent ? embeddings[*parent] : embeddings[i];
    out[i] = assemble(thread.post(i), embeddings[i], source, preceding, mean, lexicons);
  }
  return out;
}

}  // namespace stance
