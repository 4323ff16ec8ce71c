#include "spanie/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <random>

#include "spanie/errors.hpp"

namespace spanie {

using nlohmann::json;

namespace {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const std::vector<std::string>& nonsense_words() {
  static const std::vector<std::string> words = {
      "lumo", "veka", "dorin", "sapi",  "tevu", "milo", "rakan", "ziva", "pold", "nemu",
      "kesta", "wobi", "fenra", "gulo", "hamet", "ixo", "jurra", "qela", "bront", "soku"};
  return words;
}

const std::vector<std::string>& amounts() {
  static const std::vector<std::string> values = [] {
    std::vector<std::string> out;
    for (int i = 0; i < 40; ++i) {
      const int whole = (i * 37) % 97 + 1;
      const int cents = (i * 53) % 100;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%d.%02d", whole, cents);
      out.emplace_back(buf);
    }
    return out;
  }();
  return values;
}

const std::vector<std::string>& codes() {
  static const std::vector<std::string> values = [] {
    std::vector<std::string> out;
    const char* letters = "ABCDEFGHJK";
    for (int i = 0; i < 30; ++i) {
      out.push_back(std::string(1, letters[i % 10]) + std::to_string(10 + (i * 7) % 90));
    }
    return out;
  }();
  return values;
}

const std::vector<std::string>& syllables() {
  static const std::vector<std::string> values = {"ba", "ko", "ru", "mi", "te", "zo", "la",
                                                  "ne", "pu", "shi", "ga", "vo", "de", "fi"};
  return values;
}

// Deterministic nonsense key words for a field (one or two words ending in ':').
std::vector<std::string> key_words(const std::string& name) {
  const std::uint64_t h = stable_hash("key:" + name);
  const auto& syl = syllables();
  auto word = [&](std::uint64_t x) {
    std::string w = syl[x % syl.size()] + syl[(x / 17) % syl.size()] + syl[(x / 311) % syl.size()];
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
  };
  if ((h >> 40) % 2 == 0) return {word(h) + ":"};
  return {word(h), word(h >> 20) + ":"};
}

const std::vector<std::string>& value_pool(const std::string& name) {
  switch (stable_hash("kind:" + name) % 3) {
    case 0:
      return amounts();
    case 1:
      return codes();
    default:
      return nonsense_words();
  }
}

struct PlacedWord {
  std::string text;
  int row = 0;
  PixelBox box;
  int entity = -1;  // index into the entity list, -1 for unannotated words
};

struct PendingEntity {
  std::string field_id;
  std::vector<std::size_t> words;  // indices into the placed-word list
};

class PageBuilder {
 public:
  PageBuilder(const SynthConfig& cfg, std::mt19937_64& rng) : cfg_(cfg), rng_(rng) {
    cell_w_ = static_cast<double>(cfg.page_width) / cfg.grid_cols;
    row_h_ = static_cast<double>(cfg.page_height) / cfg.grid_rows;
    x_offset_ = uniform01(rng) * cell_w_ * 0.25;
  }

  int next_row() {
    if (row_ >= cfg_.grid_rows) {
      throw ConfigError("infeasible layout: document needs more than " +
                        std::to_string(cfg_.grid_rows) + " grid rows");
    }
    row_jitter_.push_back((uniform01(rng_) - 0.5) * row_h_ * 0.3);
    return row_++;
  }

  // Places `words` as one text line starting at column `col`, at most `span`
  // columns wide; returns the indices of the placed words.
  std::vector<std::size_t> place(int row, int col, int span, const std::vector<std::string>& words,
                                 int entity) {
    if (col + span > cfg_.grid_cols) {
      throw ConfigError("infeasible layout: row needs more than " + std::to_string(cfg_.grid_cols) +
                        " grid columns");
    }
    std::size_t chars = words.size() - 1;
    for (const auto& w : words) chars += text_length(w);
    const double char_w = cell_w_ * 0.12;
    const double left = col * cell_w_ + x_offset_ * (col == 0 ? 1.0 : 0.5);
    const double max_right = (col + span) * cell_w_ - 2.0;
    const double right = std::min(max_right, left + static_cast<double>(chars) * char_w);
    const double top = row * row_h_ + row_h_ * 0.2 + row_jitter_[static_cast<std::size_t>(row)];
    const double bottom = top + row_h_ * 0.6;
    const BoundingBox line =
        normalize_box({left, std::max(0.0, top), right, std::max(0.0, bottom)}, cfg_.page_width,
                      cfg_.page_height);
    const auto boxes = split_line_to_words(line, words);
    std::vector<std::size_t> placed;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto& b = boxes[i];
      // Keep the normalized geometry exact by mapping back to pixels 1:1000.
      PixelBox px{b.x0 * cfg_.page_width / 1000.0, b.y0 * cfg_.page_height / 1000.0,
                  b.x1 * cfg_.page_width / 1000.0, b.y1 * cfg_.page_height / 1000.0};
      words_.push_back({words[i], row, px, entity});
      placed.push_back(words_.size() - 1);
    }
    return placed;
  }

  std::vector<PlacedWord>& words() { return words_; }

 private:
  const SynthConfig& cfg_;
  std::mt19937_64& rng_;
  double cell_w_ = 0, row_h_ = 0, x_offset_ = 0;
  int row_ = 0;
  std::vector<double> row_jitter_;
  std::vector<PlacedWord> words_;
};

int sample_multiplicity(const SynthField& f, std::mt19937_64& rng) {
  double total = 0.0;
  for (const auto& [_, w] : f.multiplicity) total += w;
  double u = uniform01(rng) * total;
  for (const auto& [count, w] : f.multiplicity) {
    if (u < w) return count;
    u -= w;
  }
  return f.multiplicity.back().first;
}

std::vector<std::string> sample_value(const SynthField& f, std::mt19937_64& rng) {
  const auto& pool = value_pool(f.name);
  const int len = uniform_int(rng, f.min_value_tokens, f.max_value_tokens);
  std::vector<std::string> out;
  for (int i = 0; i < len; ++i) out.push_back(pool[uniform_index(rng, pool.size())]);
  return out;
}

std::vector<std::string> sample_distractor(std::mt19937_64& rng, int max_words) {
  const int n = uniform_int(rng, 1, max_words);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    const auto& pool = uniform01(rng) < 0.7 ? nonsense_words() : amounts();
    out.push_back(pool[uniform_index(rng, pool.size())]);
  }
  return out;
}

}  // namespace

std::string to_string(LayoutStyle style) {
  return style == LayoutStyle::table_columns ? "table_columns" : "key_value_rows";
}

LayoutStyle parse_layout_style(const std::string& name) {
  if (name == "table_columns") return LayoutStyle::table_columns;
  if (name == "key_value_rows") return LayoutStyle::key_value_rows;
  throw ConfigError("unknown layout '" + name + "' (expected table_columns or key_value_rows)");
}

int SynthField::max_multiplicity() const {
  int m = 0;
  for (const auto& [count, w] : multiplicity) {
    if (w > 0.0) m = std::max(m, count);
  }
  return m;
}

void SynthConfig::validate() const {
  if (dataset_id.empty() || dataset_id.find('/') != std::string::npos) {
    throw ConfigError("dataset_id must be non-empty and contain no '/'");
  }
  if (fields.empty()) throw ConfigError("synthetic config needs at least one field");
  if (page_width <= 0 || page_height <= 0) throw ConfigError("page size must be positive");
  if (grid_rows < 2 || grid_cols < 4) throw ConfigError("grid must be at least 2 rows × 4 columns");
  if (min_distractor_rows < 0 || max_distractor_rows < min_distractor_rows) {
    throw ConfigError("invalid distractor row range");
  }
  std::map<std::string, int> seen;
  for (const auto& f : fields) {
    if (f.name.empty()) throw ConfigError("field name must be non-empty");
    if (seen[f.name]++) throw ConfigError("duplicate synthetic field '" + f.name + "'");
    if (f.presence < 0.0 || f.presence > 1.0) {
      throw ConfigError("presence of '" + f.name + "' must lie in [0,1]");
    }
    if (f.multiplicity.empty()) throw ConfigError("multiplicity of '" + f.name + "' is empty");
    double total = 0.0;
    for (const auto& [count, w] : f.multiplicity) {
      if (count < 1 || w < 0.0) {
        throw ConfigError("multiplicity of '" + f.name + "' needs counts ≥ 1 and weights ≥ 0");
      }
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("multiplicity weights of '" + f.name + "' sum to 0");
    if (f.min_value_tokens < 1 || f.max_value_tokens < f.min_value_tokens) {
      throw ConfigError("invalid value length range for '" + f.name + "'");
    }
    if (f.max_train_documents < 0) throw ConfigError("max_train_documents must be ≥ 0");
  }
}

Dataset gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Dataset ds;
  ds.dataset_id = cfg.dataset_id;
  ds.split = cfg.split;
  ds.schema.dataset_id = cfg.dataset_id;
  for (const auto& f : cfg.fields) ds.schema.field_ids.push_back(cfg.dataset_id + "/" + f.name);

  std::vector<int> appearances(cfg.fields.size(), 0);
  for (std::size_t d = 0; d < cfg.num_docs; ++d) {
    // Field instances for this document.
    std::vector<std::size_t> kv_fields, table_fields;
    std::vector<int> counts(cfg.fields.size(), 0);
    for (std::size_t fi = 0; fi < cfg.fields.size(); ++fi) {
      const auto& f = cfg.fields[fi];
      const bool capped = cfg.split == Split::train && f.max_train_documents > 0 &&
                          appearances[fi] >= f.max_train_documents;
      const double draw = uniform01(rng);
      if (capped || draw >= f.presence) continue;
      counts[fi] = sample_multiplicity(f, rng);
      ++appearances[fi];
      if (f.max_multiplicity() > 1) {
        table_fields.push_back(fi);
      } else {
        kv_fields.push_back(fi);
      }
    }
    std::shuffle(kv_fields.begin(), kv_fields.end(), rng);

    PageBuilder page(cfg, rng);
    std::vector<PendingEntity> entities;
    auto add_entity = [&](std::size_t fi, int row, int col, int span) {
      entities.push_back({ds.schema.field_ids[fi], {}});
      entities.back().words = page.place(row, col, span, sample_value(cfg.fields[fi], rng),
                                         static_cast<int>(entities.size() - 1));
    };
    auto key_row = [&](std::size_t fi) {
      const int row = page.next_row();
      page.place(row, 0, 2, key_words(cfg.fields[fi].name), -1);
      if (cfg.layout == LayoutStyle::key_value_rows) {
        for (int v = 0; v < counts[fi]; ++v) add_entity(fi, row, 2 + 2 * v, 2);
      } else {
        add_entity(fi, row, 2, cfg.grid_cols - 2);
      }
    };
    auto distractor_row = [&] {
      const int row = page.next_row();
      const int col = uniform_int(rng, 0, cfg.grid_cols - 3);
      page.place(row, col, 3, sample_distractor(rng, 3), -1);
    };

    // Title line, then header key/value rows with interleaved distractors.
    distractor_row();
    const int distractors = uniform_int(rng, cfg.min_distractor_rows, cfg.max_distractor_rows);
    const std::size_t header_kv = kv_fields.size() / 2 + (kv_fields.size() % 2);
    int remaining_distractors = distractors;
    for (std::size_t i = 0; i < header_kv; ++i) {
      key_row(kv_fields[i]);
      if (remaining_distractors > 0 && uniform01(rng) < 0.5) {
        distractor_row();
        --remaining_distractors;
      }
    }

    if (!table_fields.empty()) {
      if (cfg.layout == LayoutStyle::table_columns) {
        const int m = static_cast<int>(table_fields.size());
        const int width = cfg.grid_cols / m;
        if (width < 1) {
          throw ConfigError("infeasible layout: " + std::to_string(m) + " table columns in " +
                            std::to_string(cfg.grid_cols) + " grid columns");
        }
        const int header = page.next_row();
        int depth = 0;
        for (int j = 0; j < m; ++j) {
          page.place(header, j * width, width, key_words(cfg.fields[table_fields[j]].name), -1);
          depth = std::max(depth, counts[table_fields[j]]);
        }
        for (int r = 0; r < depth; ++r) {
          const int row = page.next_row();
          for (int j = 0; j < m; ++j) {
            if (r < counts[table_fields[j]]) add_entity(table_fields[j], row, j * width, width);
          }
        }
      } else {
        for (auto fi : table_fields) key_row(fi);
      }
    }

    for (std::size_t i = header_kv; i < kv_fields.size(); ++i) key_row(kv_fields[i]);
    while (remaining_distractors-- > 0) distractor_row();

    // Reading order: by grid row, then left to right.
    auto& words = page.words();
    std::vector<std::size_t> order(words.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (words[a].row != words[b].row) return words[a].row < words[b].row;
      return words[a].box.x0 < words[b].box.x0;
    });
    std::vector<std::size_t> position(words.size());
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& w = words[order[i]];
      position[order[i]] = i + 1;
      tokens.push_back(
          {w.text, normalize_box(w.box, cfg.page_width, cfg.page_height), w.row});
    }
    char id[64];
    std::snprintf(id, sizeof(id), "-%s-%05zu", to_string(cfg.split).c_str(), d);
    Document doc = Document::from_tokens(cfg.dataset_id + id, std::move(tokens), cfg.page_width,
                                         cfg.page_height);

    std::map<std::string, EntityAnnotation> by_field;
    for (const auto& e : entities) {
      auto& ann = by_field[e.field_id];
      ann.field_id = e.field_id;
      std::size_t lo = position[e.words.front()], hi = lo;
      for (auto w : e.words) {
        lo = std::min(lo, position[w]);
        hi = std::max(hi, position[w]);
      }
      ann.spans.push_back({lo, hi});
    }
    for (const auto& fid : ds.schema.field_ids) {
      auto it = by_field.find(fid);
      if (it != by_field.end()) doc.annotations.push_back(gold_chain_order(it->second, doc));
    }
    validate(doc);
    ds.documents.push_back(std::move(doc));
  }
  return ds;
}

std::vector<Dataset> gen_synthetic_splits(SynthConfig config, std::size_t num_train,
                                          std::size_t num_dev, std::size_t num_test) {
  std::vector<Dataset> out;
  const std::uint64_t base = config.seed;
  const std::pair<Split, std::size_t> plan[] = {
      {Split::train, num_train}, {Split::dev, num_dev}, {Split::test, num_test}};
  for (const auto& [split, count] : plan) {
    config.split = split;
    config.num_docs = count;
    config.seed = base ^ stable_hash("split:" + to_string(split));
    out.push_back(gen_synthetic(config));
  }
  return out;
}

SynthSpec parse_synth_spec(const json& j) {
  SynthSpec spec;
  auto& c = spec.base;
  try {
    c.dataset_id = j.value("dataset_id", c.dataset_id);
    c.seed = j.value("seed", c.seed);
    c.layout = parse_layout_style(j.value("layout", to_string(c.layout)));
    if (j.contains("page")) {
      c.page_width = j["page"].value("width", c.page_width);
      c.page_height = j["page"].value("height", c.page_height);
    }
    if (j.contains("grid")) {
      c.grid_rows = j["grid"].value("rows", c.grid_rows);
      c.grid_cols = j["grid"].value("cols", c.grid_cols);
    }
    if (j.contains("distractor_rows")) {
      c.min_distractor_rows = j["distractor_rows"].at(0).get<int>();
      c.max_distractor_rows = j["distractor_rows"].at(1).get<int>();
    }
    if (j.contains("splits")) {
      spec.num_train = j["splits"].value("train", spec.num_train);
      spec.num_dev = j["splits"].value("dev", spec.num_dev);
      spec.num_test = j["splits"].value("test", spec.num_test);
    }
    for (const auto& f : j.at("fields")) {
      SynthField sf;
      sf.name = f.at("name").get<std::string>();
      sf.presence = f.value("presence", sf.presence);
      if (f.contains("multiplicity")) {
        sf.multiplicity.clear();
        for (const auto& m : f["multiplicity"]) {
          sf.multiplicity.emplace_back(m.at(0).get<int>(), m.at(1).get<double>());
        }
      }
      if (f.contains("value_tokens")) {
        sf.min_value_tokens = f["value_tokens"].at(0).get<int>();
        sf.max_value_tokens = f["value_tokens"].at(1).get<int>();
      }
      sf.max_train_documents = f.value("max_train_documents", 0);
      c.fields.push_back(std::move(sf));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return spec;
}

json synth_spec_to_json(const SynthSpec& spec) {
  const auto& c = spec.base;
  json fields = json::array();
  for (const auto& f : c.fields) {
    json mult = json::array();
    for (const auto& [count, w] : f.multiplicity) mult.push_back({count, w});
    fields.push_back({{"name", f.name},
                      {"presence", f.presence},
                      {"multiplicity", mult},
                      {"value_tokens", {f.min_value_tokens, f.max_value_tokens}},
                      {"max_train_documents", f.max_train_documents}});
  }
  return {{"dataset_id", c.dataset_id},
          {"seed", c.seed},
          {"layout", to_string(c.layout)},
          {"page", {{"width", c.page_width}, {"height", c.page_height}}},
          {"grid", {{"rows", c.grid_rows}, {"cols", c.grid_cols}}},
          {"distractor_rows", {c.min_distractor_rows, c.max_distractor_rows}},
          {"splits", {{"train", spec.num_train}, {"dev", spec.num_dev}, {"test", spec.num_test}}},
          {"fields", fields}};
}

}  // namespace spanie
