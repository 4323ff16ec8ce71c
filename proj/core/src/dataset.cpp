#include "spanie/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "spanie/errors.hpp"

namespace spanie {

using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "dev" || name == "valid" || name == "validation") return Split::dev;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + name + "' (expected train, dev or test)");
}

std::vector<const Document*> Dataset::document_ptrs() const {
  std::vector<const Document*> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(&d);
  return out;
}

void validate(const Dataset& dataset) {
  validate(dataset.schema);
  for (const auto& d : dataset.documents) {
    validate(d);
    for (const auto& a : d.annotations) {
      if (!dataset.schema.contains(a.field_id)) {
        throw AnnotationError("document '" + d.doc_id + "' annotates field '" + a.field_id +
                              "' missing from schema of " + dataset.dataset_id);
      }
    }
  }
}

namespace {

json document_to_json(const Document& d) {
  json tokens = json::array();
  for (std::size_t i = 1; i < d.tokens.size(); ++i) {
    const auto& t = d.tokens[i];
    tokens.push_back(
        {{"text", t.text}, {"box", {t.box.x0, t.box.y0, t.box.x1, t.box.y1}}, {"line_id", t.line_id}});
  }
  json annotations = json::array();
  for (const auto& a : d.annotations) {
    json spans = json::array();
    for (const auto& s : a.spans) spans.push_back({s.start, s.end});
    annotations.push_back({{"field_id", a.field_id}, {"spans", spans}});
  }
  return {{"doc_id", d.doc_id},
          {"page_width", d.page_width},
          {"page_height", d.page_height},
          {"tokens", tokens},
          {"annotations", annotations}};
}

Document document_from_json(const json& j) {
  std::vector<Token> tokens;
  for (const auto& t : j.at("tokens")) {
    const auto& b = t.at("box");
    if (!b.is_array() || b.size() != 4) throw AnnotationError("box must have 4 coordinates");
    tokens.push_back(Token{t.at("text").get<std::string>(),
                           BoundingBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(),
                                       b[3].get<int>()},
                           t.value("line_id", 0)});
  }
  Document d = Document::from_tokens(j.at("doc_id").get<std::string>(), std::move(tokens),
                                     j.at("page_width").get<int>(), j.at("page_height").get<int>());
  for (const auto& a : j.at("annotations")) {
    EntityAnnotation ann;
    ann.field_id = a.at("field_id").get<std::string>();
    for (const auto& s : a.at("spans")) {
      if (!s.is_array() || s.size() != 2) throw AnnotationError("span must be [start, end]");
      ann.spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
    }
    d.annotations.push_back(std::move(ann));
  }
  return d;
}

}  // namespace

std::string to_jsonl(const Dataset& dataset) {
  std::ostringstream out;
  json header = {{"format", "spanie-dataset"},
                 {"schema_version", kDatasetSchemaVersion},
                 {"dataset_id", dataset.dataset_id},
                 {"split", to_string(dataset.split)},
                 {"fields", dataset.schema.field_ids}};
  out << header.dump() << '\n';
  for (const auto& d : dataset.documents) out << document_to_json(d).dump() << '\n';
  return out.str();
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_jsonl(dataset);
  if (!out) throw DataError("failed writing " + path.string());
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  Dataset ds;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      throw DataError(where + ": truncated record (no trailing newline)");
    }
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    try {
      if (!have_header) {
        if (!j.is_object() || j.value("format", "") != "spanie-dataset") {
          throw DataError(where + ": missing dataset header");
        }
        const int version = j.at("schema_version").get<int>();
        if (version != kDatasetSchemaVersion) {
          throw DataError(where + ": schema version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kDatasetSchemaVersion) +
                          ")");
        }
        ds.dataset_id = j.at("dataset_id").get<std::string>();
        ds.split = parse_split(j.at("split").get<std::string>());
        ds.schema = {ds.dataset_id, j.at("fields").get<std::vector<std::string>>()};
        have_header = true;
        continue;
      }
      ds.documents.push_back(document_from_json(j));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DataError(where + ": " + e.what());
    } catch (const AnnotationError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty dataset file");
  try {
    validate(ds);
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace spanie
