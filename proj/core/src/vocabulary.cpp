#include "spanie/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "spanie/errors.hpp"

namespace spanie {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  for (const char* special : {"[PAD]", "[UNK]", kNullTokenText}) add(special);
  for (const auto& w : words) add(w);
}

Vocabulary Vocabulary::build(const std::vector<const Document*>& docs, std::size_t min_count) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto* d : docs) {
    for (std::size_t i = 1; i < d->tokens.size(); ++i) {
      const auto& text = d->tokens[i].text;
      if (counts[text]++ == 0) order.push_back(text);
    }
  }
  Vocabulary v;
  for (const auto& w : order) {
    if (counts[w] >= min_count) v.add(w);
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  words_.push_back(word);
  index_.emplace(word, words_.size() - 1);
  return words_.size() - 1;
}

std::size_t Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

TokenSequence tokenize(const std::vector<RawWord>& raw_words, const Vocabulary& vocab,
                       std::size_t max_seq_len) {
  if (max_seq_len < 2) throw ConfigError("max_seq_len must be at least 2");
  TokenSequence seq;
  const std::size_t keep = std::min(raw_words.size(), max_seq_len - 1);
  seq.truncated = raw_words.size() - keep;
  seq.ids.reserve(keep + 1);
  seq.boxes.reserve(keep + 1);
  seq.ids.push_back(Vocabulary::kNull);
  seq.boxes.push_back(BoundingBox{});
  for (std::size_t i = 0; i < keep; ++i) {
    const auto id = vocab.id(raw_words[i].first);
    if (id == Vocabulary::kUnknown) ++seq.unknown;
    seq.ids.push_back(id);
    seq.boxes.push_back(raw_words[i].second);
  }
  return seq;
}

TokenSequence tokenize(const Document& doc, const Vocabulary& vocab, std::size_t max_seq_len) {
  std::vector<RawWord> words;
  words.reserve(doc.num_real_tokens());
  for (std::size_t i = 1; i < doc.tokens.size(); ++i) {
    words.emplace_back(doc.tokens[i].text, doc.tokens[i].box);
  }
  return tokenize(words, vocab, max_seq_len);
}

}  // namespace spanie
