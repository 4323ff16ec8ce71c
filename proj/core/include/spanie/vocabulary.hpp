#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spanie/document.hpp"

namespace spanie {

// Closed whole-word vocabulary. Ids 0-2 are reserved for padding, unknown
// words and the null token.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;
  static constexpr std::size_t kNull = 2;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& words);

  // Counts real-token texts and keeps those seen at least `min_count` times,
  // in order of first appearance.
  static Vocabulary build(const std::vector<const Document*>& docs, std::size_t min_count = 1);

  std::size_t add(const std::string& word);
  std::size_t id(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Model input for one document: position 0 is the null token.
struct TokenSequence {
  std::vector<std::size_t> ids;
  std::vector<BoundingBox> boxes;
  std::size_t truncated = 0;  // real words dropped to fit max_seq_len
  std::size_t unknown = 0;

  std::size_t length() const { return ids.size(); }
};

using RawWord = std::pair<std::string, BoundingBox>;

TokenSequence tokenize(const std::vector<RawWord>& raw_words, const Vocabulary& vocab,
                       std::size_t max_seq_len);
TokenSequence tokenize(const Document& doc, const Vocabulary& vocab, std::size_t max_seq_len);

}  // namespace spanie
