#include "spanie/model.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "spanie/archive.hpp"
#include "spanie/errors.hpp"

namespace spanie {

using nlohmann::json;

std::string to_string(ModelType type) { return type == ModelType::span ? "span" : "seqlabel"; }

ModelType parse_model_type(const std::string& name) {
  if (name == "span") return ModelType::span;
  if (name == "seqlabel") return ModelType::seqlabel;
  throw ConfigError("unknown model type '" + name + "' (expected span or seqlabel)");
}

json encoder_config_to_json(const EncoderConfig& c) {
  return {{"hidden_size", c.hidden_size},       {"num_layers", c.num_layers},
          {"num_heads", c.num_heads},           {"max_seq_len", c.max_seq_len},
          {"ff_multiplier", c.ff_multiplier},   {"coordinate_vocab", c.coordinate_vocab},
          {"dropout", c.dropout},               {"init_std", c.init_std},
          {"vocab_size", c.vocab_size},         {"sinusoidal_init", c.sinusoidal_init}};
}

EncoderConfig encoder_config_from_json(const json& j, EncoderConfig c) {
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.ff_multiplier = j.value("ff_multiplier", c.ff_multiplier);
  c.coordinate_vocab = j.value("coordinate_vocab", c.coordinate_vocab);
  c.dropout = j.value("dropout", c.dropout);
  c.init_std = j.value("init_std", c.init_std);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.sinusoidal_init = j.value("sinusoidal_init", c.sinusoidal_init);
  return c;
}

Model::Model(ModelConfig config, Vocabulary vocab, const std::vector<std::string>& fields,
             std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      store_(std::make_unique<ParameterStore>()),
      rng_(seed) {
  config_.encoder.vocab_size = vocab_.size();
  encoder_ = std::make_unique<Encoder>(config_.encoder, *store_, rng_);
  const std::size_t c = config_.encoder.hidden_size;
  const double sd = config_.encoder.init_std;
  if (config_.type == ModelType::span) {
    span_head_ = std::make_unique<SpanHead>(*store_, c, config_.scorer, rng_, sd);
    registry_ = std::make_unique<QueryRegistry>(*store_, c, sd);
    for (const auto& f : fields) {
      if (!registry_->contains(f)) registry_->add(f, rng_);
    }
  } else {
    tagset_ = TagSet(fields);
    tag_head_ = std::make_unique<TagHead>(*store_, c, tagset_.size(), rng_, sd);
  }
}

Model::Model(ModelConfig config, Vocabulary vocab, std::unique_ptr<ParameterStore> store,
             std::vector<std::string> tag_fields)
    : config_(std::move(config)), vocab_(std::move(vocab)), store_(std::move(store)) {
  config_.encoder.vocab_size = vocab_.size();
  if (config_.type == ModelType::seqlabel) tagset_ = TagSet(std::move(tag_fields));
  bind_heads();
}

void Model::bind_heads() {
  encoder_ = std::make_unique<Encoder>(config_.encoder, *store_);
  const std::size_t c = config_.encoder.hidden_size;
  if (config_.type == ModelType::span) {
    span_head_ = std::make_unique<SpanHead>(*store_, c, config_.scorer);
    registry_ = std::make_unique<QueryRegistry>(*store_, c, config_.encoder.init_std);
  } else {
    tag_head_ = std::make_unique<TagHead>(*store_, c, tagset_.size());
  }
}

QueryRegistry& Model::registry() {
  if (!registry_) throw ContractError("a seqlabel model has no query registry");
  return *registry_;
}

const QueryRegistry& Model::registry() const {
  if (!registry_) throw ContractError("a seqlabel model has no query registry");
  return *registry_;
}

const SpanHead& Model::span_head() const {
  if (!span_head_) throw ContractError("a seqlabel model has no span head");
  return *span_head_;
}

const TagHead& Model::tag_head() const {
  if (!tag_head_) throw ContractError("a span model has no tag head");
  return *tag_head_;
}

std::vector<std::string> Model::fields() const {
  return config_.type == ModelType::span ? registry_->field_ids() : tagset_.fields();
}

std::size_t Model::extend_vocabulary(const std::vector<const Document*>& docs) {
  const std::size_t before = vocab_.size();
  for (const auto* d : docs) {
    for (std::size_t i = 1; i < d->tokens.size(); ++i) vocab_.add(d->tokens[i].text);
  }
  if (vocab_.size() > before) {
    Encoder grown(config_.encoder, *store_);
    grown.grow_vocabulary(vocab_.size(), rng_);
    config_.encoder.vocab_size = vocab_.size();
    encoder_ = std::make_unique<Encoder>(config_.encoder, *store_);
  }
  return vocab_.size() - before;
}

TokenSequence Model::tokenize(const Document& doc) const {
  return spanie::tokenize(doc, vocab_, config_.encoder.max_seq_len);
}

Var Model::hidden(Graph& g, const TokenSequence& seq) const { return encoder_->forward(g, seq); }

Var Model::document_loss(Graph& g, const Document& doc, const std::vector<std::string>& fields,
                         std::size_t* truncated_spans) {
  const TokenSequence seq = tokenize(doc);
  const std::size_t n = seq.length();
  Var h = hidden(g, seq);
  if (config_.type == ModelType::seqlabel) {
    Var logits = tag_head_->forward(g, h);
    return tag_loss(g, logits, bio_encode(doc, tagset_, n), tag_loss_mask(n, n));
  }
  const std::vector<bool> mask(n, true);
  std::vector<Var> losses;
  for (const auto& f : fields) {
    std::vector<Span> gold;
    if (const auto* ann = doc.find(f)) {
      for (const auto& s : ann->spans) {
        if (s.end < n) {
          gold.push_back(s);
        } else if (truncated_spans) {
          ++*truncated_spans;
        }
      }
    }
    Var q = g.parameter(registry_->lookup(f));
    losses.push_back(chain_loss(g, gold, h, q, *span_head_, mask));
  }
  if (losses.empty()) throw ContractError("document_loss needs at least one field");
  return g.mean(losses);
}

std::vector<FieldChain> Model::decode(const Document& doc,
                                      const std::vector<std::string>& fields) const {
  if (config_.type != ModelType::span) throw ContractError("decode requires a span model");
  for (const auto& f : fields) registry_->lookup(f);
  const TokenSequence seq = tokenize(doc);
  const HiddenStates h = encoder_->hidden_states(seq, PadMode::sequence);
  const std::vector<bool> mask(seq.length(), true);
  std::vector<FieldChain> out;
  for (const auto& f : fields) {
    out.push_back({f, decode_chain(registry_->lookup(f).value, h, *span_head_, mask,
                                   config_.decode)});
  }
  return out;
}

std::vector<Entity> Model::predict(const Document& doc,
                                   const std::vector<std::string>& fields) const {
  std::vector<Entity> out;
  if (config_.type == ModelType::span) {
    for (const auto& fc : decode(doc, fields)) {
      for (const auto& s : fc.chain.spans) out.push_back({fc.field_id, s.start, s.end});
    }
    return out;
  }
  for (const auto& f : fields) tagset_.begin_tag(f);
  const TokenSequence seq = tokenize(doc);
  const Tensor logits = tag_head_->forward(encoder_->hidden_states(seq, PadMode::sequence));
  std::vector<std::size_t> tags;
  for (std::size_t i = 1; i < seq.length(); ++i) {
    const auto row = logits.row(i);
    tags.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  const std::set<std::string> wanted(fields.begin(), fields.end());
  for (auto& e : bio_decode(tags, tagset_, config_.lenient_bio)) {
    if (wanted.count(e.field_id)) out.push_back(std::move(e));
  }
  return out;
}

std::vector<DocumentEntities> Model::predict(const std::vector<Document>& docs,
                                             const std::vector<std::string>& fields) const {
  std::vector<DocumentEntities> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.doc_id, predict(d, fields)});
  return out;
}

void Model::save(const std::filesystem::path& dir, const json& extra) const {
  std::filesystem::create_directories(dir);
  write_archive(dir / "params.bin", snapshot(*store_));
  json params = json::object();
  for (const auto* p : static_cast<const ParameterStore&>(*store_).all()) {
    params[p->name] = p->value.shape();
  }
  json manifest = {{"format", "spanie-checkpoint"},
                   {"checkpoint_version", kCheckpointVersion},
                   {"code_version", kCodeVersion},
                   {"model_type", to_string(config_.type)},
                   {"encoder", encoder_config_to_json(config_.encoder)},
                   {"head",
                    {{"scorer", to_string(config_.scorer)},
                     {"max_span_len", config_.decode.max_span_len},
                     {"max_chain_len", config_.decode.max_chain_len},
                     {"lenient_bio", config_.lenient_bio}}},
                   {"fields", fields()},
                   {"vocabulary", vocab_.words()},
                   {"parameters", params}};
  if (!extra.is_null()) manifest["extra"] = extra;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

json Model::read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint manifest " + path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "spanie-checkpoint") {
    throw DataError(path.string() + " is not a checkpoint manifest");
  }
  if (manifest.value("checkpoint_version", 0) != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version");
  }
  return manifest;
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& dir) {
  const json manifest = read_manifest(dir);
  ModelConfig config;
  std::vector<std::string> fields;
  std::vector<std::string> words;
  try {
    config.type = parse_model_type(manifest.at("model_type").get<std::string>());
    config.encoder = encoder_config_from_json(manifest.at("encoder"));
    const auto& head = manifest.at("head");
    config.scorer = parse_scorer_kind(head.at("scorer").get<std::string>());
    config.decode.max_span_len = head.at("max_span_len").get<std::size_t>();
    config.decode.max_chain_len = head.at("max_chain_len").get<std::size_t>();
    config.lenient_bio = head.value("lenient_bio", true);
    fields = manifest.at("fields").get<std::vector<std::string>>();
    words = manifest.at("vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  Vocabulary vocab(words);
  if (vocab.size() != words.size()) {
    throw DataError((dir / "manifest.json").string() + ": vocabulary has duplicate entries");
  }
  auto store = std::make_unique<ParameterStore>();
  for (auto& [name, tensor] : read_archive(dir / "params.bin")) store->add(name, std::move(tensor));
  try {
    return std::unique_ptr<Model>(new Model(config, std::move(vocab), std::move(store), fields));
  } catch (const ConfigError& e) {
    throw DataError(dir.string() + ": checkpoint does not match its manifest (" + e.what() + ")");
  } catch (const IndexError& e) {
    throw DataError(dir.string() + ": checkpoint is missing parameters (" + e.what() + ")");
  }
}

std::size_t Model::initialize_from(const Model& source) {
  std::size_t copied = 0;
  const auto& src = static_cast<const ParameterStore&>(*source.store_);
  for (auto* p : store_->all()) {
    if (!src.contains(p->name)) continue;
    const auto& from = src.get(p->name).value;
    if (p->name == "encoder/token_embedding") {
      if (from.cols() != p->value.cols()) continue;
      const std::size_t c = from.cols();
      const auto& words = vocab_.words();
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (!source.vocab_.contains(words[i])) continue;
        const std::size_t j = source.vocab_.id(words[i]);
        std::copy_n(from.data().begin() + static_cast<std::ptrdiff_t>(j * c), c,
                    p->value.data().begin() + static_cast<std::ptrdiff_t>(i * c));
      }
      ++copied;
    } else if (from.shape() == p->value.shape()) {
      p->value = from;
      ++copied;
    }
  }
  return copied;
}

}  // namespace spanie
