#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spanie/geometry.hpp"

namespace spanie {

inline constexpr const char* kNullTokenText = "[NULL]";

struct Token {
  std::string text;
  BoundingBox box;
  int line_id = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Inclusive token range, 1-based into the real tokens of a Document
// (index 0 is the reserved null token).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool is_null() const { return start == 0 && end == 0; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct EntityAnnotation {
  std::string field_id;
  std::vector<Span> spans;  // gold chain order

  friend bool operator==(const EntityAnnotation&, const EntityAnnotation&) = default;
};

// One extracted (or gold) entity, the unit of entity-level evaluation.
struct Entity {
  std::string field_id;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Entity&, const Entity&) = default;
  friend auto operator<=>(const Entity&, const Entity&) = default;
};

struct FieldSchema {
  std::string dataset_id;
  std::vector<std::string> field_ids;

  bool contains(const std::string& field_id) const;
  friend bool operator==(const FieldSchema&, const FieldSchema&) = default;
};

// Throws ConfigError on duplicate field ids.
void validate(const FieldSchema& schema);

struct Document {
  std::string doc_id;
  std::vector<Token> tokens;  // tokens[0] is the null token
  int page_width = 1000;
  int page_height = 1000;
  std::vector<EntityAnnotation> annotations;

  // Builds a document from real tokens, prepending the null token.
  static Document from_tokens(std::string doc_id, std::vector<Token> real_tokens, int page_width,
                              int page_height);

  std::size_t num_real_tokens() const { return tokens.empty() ? 0 : tokens.size() - 1; }
  const EntityAnnotation* find(const std::string& field_id) const;
  std::vector<Entity> entities() const;
  std::string span_text(const Span& span) const;

  friend bool operator==(const Document&, const Document&) = default;
};

Token null_token();

// Structural checks: null token present, boxes valid, texts non-empty, spans
// in range, spans non-overlapping within an annotation. Throws AnnotationError.
void validate(const Document& doc);

// Reorders spans top-to-bottom then left-to-right by their start token's
// (y0, x0); ties keep token-index order.
EntityAnnotation gold_chain_order(const EntityAnnotation& annotation, const Document& doc);

}  // namespace spanie
