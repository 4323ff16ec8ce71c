#include "spanie/seqlabel.hpp"

#include <algorithm>

#include "spanie/errors.hpp"
#include "spanie/log.hpp"

namespace spanie {

TagSet::TagSet(const FieldSchema& schema) : TagSet(schema.field_ids) {}

TagSet::TagSet(std::vector<std::string> field_ids) : fields_(std::move(field_ids)) {
  validate(FieldSchema{"", fields_});
}

std::size_t TagSet::field_index(const std::string& field_id) const {
  auto it = std::find(fields_.begin(), fields_.end(), field_id);
  if (it == fields_.end()) throw IndexError("field '" + field_id + "' not in tag set");
  return static_cast<std::size_t>(it - fields_.begin());
}

std::size_t TagSet::begin_tag(const std::string& field_id) const {
  return 1 + 2 * field_index(field_id);
}

std::size_t TagSet::inside_tag(const std::string& field_id) const {
  return 2 + 2 * field_index(field_id);
}

std::string TagSet::label(std::size_t tag) const {
  if (tag >= size()) throw IndexError("tag " + std::to_string(tag) + " outside tag set");
  if (tag == kOutside) return "O";
  const auto& f = fields_[(tag - 1) / 2];
  return (tag % 2 == 1 ? "B-" : "I-") + f;
}

std::size_t TagSet::index(const std::string& label) const {
  if (label == "O") return kOutside;
  if (label.size() > 2 && label[1] == '-') {
    if (label[0] == 'B') return begin_tag(label.substr(2));
    if (label[0] == 'I') return inside_tag(label.substr(2));
  }
  throw IndexError("malformed BIO label '" + label + "'");
}

TagHead::TagHead(ParameterStore& store, std::size_t hidden_size, std::size_t num_tags,
                 std::mt19937_64& rng, double init_std)
    : store_(&store), hidden_size_(hidden_size), num_tags_(num_tags) {
  store.add_normal(std::string(kPrefix) + "weight", {hidden_size, num_tags}, init_std, rng);
  store.add_constant(std::string(kPrefix) + "bias", {num_tags}, 0.0);
}

TagHead::TagHead(ParameterStore& store, std::size_t hidden_size, std::size_t num_tags)
    : store_(&store), hidden_size_(hidden_size), num_tags_(num_tags) {
  const auto& w = store.get(std::string(kPrefix) + "weight");
  if (w.value.shape() != Shape{hidden_size, num_tags}) {
    throw ConfigError("tag head weight has shape " + shape_to_string(w.value.shape()));
  }
}

Var TagHead::forward(Graph& g, Var hidden) const {
  Var w = g.parameter(store_->get(std::string(kPrefix) + "weight"));
  Var b = g.parameter(store_->get(std::string(kPrefix) + "bias"));
  return g.add_bias(g.matmul(hidden, w), b);
}

Tensor TagHead::forward(const Tensor& hidden) const {
  Graph g;
  return g.value(forward(g, g.constant(hidden)));
}

std::vector<std::size_t> bio_encode(const Document& doc, const TagSet& tags, std::size_t length) {
  std::vector<std::size_t> out(length, TagSet::kOutside);
  std::vector<bool> used(length, false);
  for (const auto& a : doc.annotations) {
    const std::size_t b = tags.begin_tag(a.field_id);
    const std::size_t in = tags.inside_tag(a.field_id);
    for (const auto& s : a.spans) {
      if (s.start == 0 || s.end >= length) continue;
      for (std::size_t i = s.start; i <= s.end; ++i) {
        if (used[i]) {
          throw AnnotationError("document '" + doc.doc_id + "': overlapping entities at token " +
                                std::to_string(i));
        }
        used[i] = true;
        out[i] = i == s.start ? b : in;
      }
    }
  }
  return out;
}

std::vector<bool> tag_loss_mask(std::size_t sequence_length, std::size_t padded_length) {
  std::vector<bool> mask(padded_length, false);
  for (std::size_t i = 1; i < sequence_length && i < padded_length; ++i) mask[i] = true;
  return mask;
}

Var tag_loss(Graph& g, Var logits, const std::vector<std::size_t>& gold_tags,
             const std::vector<bool>& mask) {
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    warn("tag_loss: every position is masked; loss defined as 0");
  }
  return g.masked_row_cross_entropy(logits, gold_tags, mask);
}

std::vector<Entity> bio_decode(const std::vector<std::string>& labels, bool lenient) {
  std::vector<Entity> out;
  bool open = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& label = labels[i];
    const std::size_t pos = i + 1;
    if (label.size() > 2 && label[1] == '-' && (label[0] == 'B' || label[0] == 'I')) {
      const std::string field = label.substr(2);
      const bool continues = open && label[0] == 'I' && out.back().field_id == field;
      if (continues) {
        out.back().end = pos;
      } else if (label[0] == 'B' || lenient) {
        out.push_back({field, pos, pos});
        open = true;
      } else {
        open = false;
      }
    } else {
      open = false;
    }
  }
  return out;
}

std::vector<Entity> bio_decode(const std::vector<std::size_t>& tags, const TagSet& tagset,
                               bool lenient) {
  std::vector<std::string> labels;
  labels.reserve(tags.size());
  for (auto t : tags) labels.push_back(tagset.label(t));
  return bio_decode(labels, lenient);
}

}  // namespace spanie
