#include "spanie/document.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "spanie/errors.hpp"

namespace spanie {

bool FieldSchema::contains(const std::string& field_id) const {
  return std::find(field_ids.begin(), field_ids.end(), field_id) != field_ids.end();
}

void validate(const FieldSchema& schema) {
  std::set<std::string> seen;
  for (const auto& f : schema.field_ids) {
    if (f.empty()) throw ConfigError("empty field id in schema " + schema.dataset_id);
    if (!seen.insert(f).second) {
      throw ConfigError("duplicate field id '" + f + "' in schema " + schema.dataset_id);
    }
  }
}

Token null_token() { return Token{kNullTokenText, BoundingBox{}, -1}; }

Document Document::from_tokens(std::string doc_id, std::vector<Token> real_tokens, int page_width,
                               int page_height) {
  Document d;
  d.doc_id = std::move(doc_id);
  d.page_width = page_width;
  d.page_height = page_height;
  d.tokens.reserve(real_tokens.size() + 1);
  d.tokens.push_back(null_token());
  for (auto& t : real_tokens) d.tokens.push_back(std::move(t));
  return d;
}

const EntityAnnotation* Document::find(const std::string& field_id) const {
  for (const auto& a : annotations) {
    if (a.field_id == field_id) return &a;
  }
  return nullptr;
}

std::vector<Entity> Document::entities() const {
  std::vector<Entity> out;
  for (const auto& a : annotations) {
    for (const auto& s : a.spans) out.push_back({a.field_id, s.start, s.end});
  }
  return out;
}

std::string Document::span_text(const Span& span) const {
  std::string out;
  for (std::size_t i = span.start; i <= span.end && i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

void validate(const Document& doc) {
  const std::string where = "document '" + doc.doc_id + "'";
  if (doc.tokens.empty() || doc.tokens[0].text != kNullTokenText) {
    throw AnnotationError(where + ": missing null token at position 0");
  }
  if (doc.page_width <= 0 || doc.page_height <= 0) {
    throw AnnotationError(where + ": page size must be positive");
  }
  for (std::size_t i = 1; i < doc.tokens.size(); ++i) {
    const auto& t = doc.tokens[i];
    if (t.text.empty()) throw AnnotationError(where + ": token " + std::to_string(i) + " is empty");
    if (!t.box.valid()) {
      throw AnnotationError(where + ": token " + std::to_string(i) + " has invalid box " +
                            to_string(t.box));
    }
  }
  std::set<std::string> fields;
  for (const auto& a : doc.annotations) {
    if (!fields.insert(a.field_id).second) {
      throw AnnotationError(where + ": duplicate annotation for field " + a.field_id);
    }
    std::vector<Span> sorted = a.spans;
    for (const auto& s : sorted) {
      if (s.start < 1 || s.start > s.end || s.end > doc.num_real_tokens()) {
        throw AnnotationError(where + ": span (" + std::to_string(s.start) + "," +
                              std::to_string(s.end) + ") of " + a.field_id + " out of range");
      }
    }
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].start <= sorted[i - 1].end) {
        throw AnnotationError(where + ": overlapping spans in " + a.field_id);
      }
    }
  }
}

EntityAnnotation gold_chain_order(const EntityAnnotation& annotation, const Document& doc) {
  EntityAnnotation out = annotation;
  auto key = [&doc](const Span& s) {
    const auto& box = doc.tokens.at(s.start).box;
    return std::tuple(box.y0, box.x0, s.start);
  };
  std::stable_sort(out.spans.begin(), out.spans.end(),
                   [&](const Span& a, const Span& b) { return key(a) < key(b); });
  return out;
}

}  // namespace spanie
