#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spanie/encoder.hpp"
#include "spanie/eval.hpp"
#include "spanie/recursive_decoder.hpp"
#include "spanie/seqlabel.hpp"
#include "spanie/span_head.hpp"
#include "spanie/vocabulary.hpp"

namespace spanie {

enum class ModelType { span, seqlabel };

std::string to_string(ModelType type);
ModelType parse_model_type(const std::string& name);

struct ModelConfig {
  ModelType type = ModelType::span;
  EncoderConfig encoder;
  ScorerKind scorer = ScorerKind::bilinear;
  DecodeOptions decode;
  bool lenient_bio = true;
};

struct FieldChain {
  std::string field_id;
  LinkChain chain;
};

// Encoder plus either the span head with its query registry or the BIO tag
// head, all sharing one parameter store.
class Model {
 public:
  // Fresh initialization. `fields` seeds the query registry (span) or fixes
  // the tag set (seqlabel).
  Model(ModelConfig config, Vocabulary vocab, const std::vector<std::string>& fields,
        std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ModelType type() const { return config_.type; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  ParameterStore& store() { return *store_; }
  const ParameterStore& store() const { return *store_; }
  const Encoder& encoder() const { return *encoder_; }
  QueryRegistry& registry();
  const QueryRegistry& registry() const;
  const SpanHead& span_head() const;
  const TagHead& tag_head() const;
  const TagSet& tagset() const { return tagset_; }
  std::mt19937_64& rng() { return rng_; }

  // Fields the model can extract.
  std::vector<std::string> fields() const;

  // Adds unseen words to the vocabulary and grows the token table.
  std::size_t extend_vocabulary(const std::vector<const Document*>& docs);

  TokenSequence tokenize(const Document& doc) const;

  // Graph-side forward for training; returns H for the (unpadded) sequence.
  Var hidden(Graph& g, const TokenSequence& seq) const;
  // Training loss of one document over `fields` (span: mean chain loss over
  // the fields; seqlabel: mean token cross entropy).
  Var document_loss(Graph& g, const Document& doc, const std::vector<std::string>& fields,
                    std::size_t* truncated_spans = nullptr);

  // Span model only: one chain per field.
  std::vector<FieldChain> decode(const Document& doc, const std::vector<std::string>& fields) const;
  // Entities for `fields`; an unknown field is an IndexError for both model types.
  std::vector<Entity> predict(const Document& doc, const std::vector<std::string>& fields) const;
  std::vector<DocumentEntities> predict(const std::vector<Document>& docs,
                                        const std::vector<std::string>& fields) const;

  // Checkpoint directory: params.bin (tensor archive) and manifest.json.
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;
  static std::unique_ptr<Model> load(const std::filesystem::path& dir);
  static nlohmann::json read_manifest(const std::filesystem::path& dir);

  // Copies every parameter of `source` whose name and shape exist here
  // (token rows are matched by word). Returns the number of tensors copied.
  std::size_t initialize_from(const Model& source);

 private:
  Model(ModelConfig config, Vocabulary vocab, std::unique_ptr<ParameterStore> store,
        std::vector<std::string> tag_fields);
  void bind_heads();

  ModelConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<ParameterStore> store_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<QueryRegistry> registry_;
  std::unique_ptr<SpanHead> span_head_;
  std::unique_ptr<TagHead> tag_head_;
  TagSet tagset_;
  std::mt19937_64 rng_;
};

inline constexpr const char* kCodeVersion = "spanie 0.3.0";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json encoder_config_to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig base = {});

}  // namespace spanie
