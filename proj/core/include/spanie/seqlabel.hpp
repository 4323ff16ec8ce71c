#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "spanie/document.hpp"
#include "spanie/graph.hpp"
#include "spanie/parameters.hpp"

namespace spanie {

// BIO label inventory: index 0 is O, then B-f, I-f for every field in order.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(const FieldSchema& schema);
  explicit TagSet(std::vector<std::string> field_ids);

  static constexpr std::size_t kOutside = 0;

  std::size_t size() const { return 2 * fields_.size() + 1; }
  const std::vector<std::string>& fields() const { return fields_; }
  std::size_t begin_tag(const std::string& field_id) const;
  std::size_t inside_tag(const std::string& field_id) const;
  std::string label(std::size_t tag) const;
  std::size_t index(const std::string& label) const;

 private:
  std::size_t field_index(const std::string& field_id) const;
  std::vector<std::string> fields_;
};

// Linear per-token classifier over encoder states.
class TagHead {
 public:
  static constexpr const char* kPrefix = "tag_head/";

  TagHead(ParameterStore& store, std::size_t hidden_size, std::size_t num_tags,
          std::mt19937_64& rng, double init_std = 0.02);
  TagHead(ParameterStore& store, std::size_t hidden_size, std::size_t num_tags);

  std::size_t num_tags() const { return num_tags_; }
  Var forward(Graph& g, Var hidden) const;
  Tensor forward(const Tensor& hidden) const;

 private:
  ParameterStore* store_;
  std::size_t hidden_size_;
  std::size_t num_tags_;
};

// Gold tag per sequence position (position 0, the null token, is O).
// `length` is the sequence length including the null token; entities past it
// are dropped. Throws AnnotationError on overlapping entities.
std::vector<std::size_t> bio_encode(const Document& doc, const TagSet& tags, std::size_t length);

// Loss mask: real tokens only (no null token, no padding).
std::vector<bool> tag_loss_mask(std::size_t sequence_length, std::size_t padded_length);

// Mean token-level cross entropy over masked-in rows; a fully masked input
// yields 0 and a warning.
Var tag_loss(Graph& g, Var logits, const std::vector<std::size_t>& gold_tags,
             const std::vector<bool>& mask);

// Entities from per-token labels of the real tokens (label i belongs to token
// i + 1). Lenient mode opens a new entity on an I-f that does not continue an
// f run; strict mode drops such tokens.
std::vector<Entity> bio_decode(const std::vector<std::string>& labels, bool lenient = true);
std::vector<Entity> bio_decode(const std::vector<std::size_t>& tags, const TagSet& tagset,
                               bool lenient = true);

}  // namespace spanie
