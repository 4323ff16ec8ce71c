#include "spanie/cord.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "spanie/errors.hpp"
#include "spanie/log.hpp"

namespace spanie {

using nlohmann::json;

namespace {

double number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return std::stod(j.get<std::string>());
  throw DataError("expected a number, got " + j.dump());
}

std::pair<int, int> page_size(const json& root, const CordOptions& options) {
  if (options.force_page_size || !root.contains("meta")) {
    if (!options.page_width || !options.page_height) {
      throw DataError("receipt has no meta.image_size and no page size override was given");
    }
    return {*options.page_width, *options.page_height};
  }
  const auto& meta = root.at("meta");
  const json* size = nullptr;
  if (meta.contains("image_size")) size = &meta["image_size"];
  if (!size && meta.contains("imageSize")) size = &meta["imageSize"];
  if (!size) {
    if (options.page_width && options.page_height) return {*options.page_width, *options.page_height};
    throw DataError("receipt has no meta.image_size and no page size override was given");
  }
  return {static_cast<int>(number(size->at("width"))), static_cast<int>(number(size->at("height")))};
}

struct Line {
  std::string category;
  std::vector<std::pair<std::string, PixelBox>> words;
};

}  // namespace

std::size_t cord_expected_size(Split split) {
  switch (split) {
    case Split::train:
      return 800;
    case Split::dev:
    case Split::test:
      return 100;
  }
  return 0;
}

Document parse_cord_document(const std::string& doc_id, const std::string& json_text,
                             const CordOptions& options) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON (") + e.what() + ")");
  }
  try {
    const auto [width, height] = page_size(root, options);
    if (width <= 0 || height <= 0) throw DataError("non-positive image size");

    std::vector<Line> lines;
    for (const auto& vl : root.value("valid_line", json::array())) {
      Line line;
      line.category = vl.at("category").get<std::string>();
      for (const auto& w : vl.at("words")) {
        std::string text = w.at("text").get<std::string>();
        if (text.empty()) continue;
        const auto& q = w.at("quad");
        Quad quad;
        for (int i = 0; i < 4; ++i) {
          quad.x[i] = number(q.at("x" + std::to_string(i + 1)));
          quad.y[i] = number(q.at("y" + std::to_string(i + 1)));
        }
        line.words.emplace_back(std::move(text), quad_to_box(quad));
      }
      if (!line.words.empty()) lines.push_back(std::move(line));
    }
    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
      const auto& pa = a.words.front().second;
      const auto& pb = b.words.front().second;
      if (pa.y0 != pb.y0) return pa.y0 < pb.y0;
      return pa.x0 < pb.x0;
    });

    std::vector<Token> tokens;
    std::map<std::string, EntityAnnotation> by_field;
    std::vector<std::string> field_order;
    for (std::size_t li = 0; li < lines.size(); ++li) {
      const auto& line = lines[li];
      const std::size_t start = tokens.size() + 1;
      for (const auto& [text, box] : line.words) {
        BoundingBox b = normalize_box(box, width, height);
        if (b.x1 < b.x0) std::swap(b.x0, b.x1);
        if (b.y1 < b.y0) std::swap(b.y0, b.y1);
        tokens.push_back({text, b, static_cast<int>(li)});
      }
      const std::string field = std::string(kCordDatasetId) + "/" + line.category;
      auto [it, inserted] = by_field.try_emplace(field);
      if (inserted) {
        it->second.field_id = field;
        field_order.push_back(field);
      }
      it->second.spans.push_back({start, tokens.size()});
    }
    Document doc = Document::from_tokens(doc_id, std::move(tokens), width, height);
    std::sort(field_order.begin(), field_order.end());
    for (const auto& f : field_order) doc.annotations.push_back(gold_chain_order(by_field[f], doc));
    validate(doc);
    return doc;
  } catch (const json::exception& e) {
    throw DataError(e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("non-numeric coordinate");
  } catch (const AnnotationError& e) {
    throw DataError(e.what());
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
}

CordLoadResult load_cord(const std::filesystem::path& root, Split split,
                         const CordOptions& options) {
  namespace fs = std::filesystem;
  const std::string split_name = to_string(split);
  std::vector<fs::path> candidates = {root / split_name / "json", root / split_name};
  if (split == Split::dev) {
    candidates.insert(candidates.begin() + 1, root / "valid" / "json");
    candidates.push_back(root / "valid");
  }
  fs::path dir;
  for (const auto& c : candidates) {
    if (fs::is_directory(c)) {
      bool has_json = false;
      for (const auto& e : fs::directory_iterator(c)) has_json |= e.path().extension() == ".json";
      if (has_json) {
        dir = c;
        break;
      }
    }
  }
  if (dir.empty()) {
    throw DataError("no CORD json files for split '" + split_name + "' under " + root.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  CordLoadResult result;
  auto& ds = result.dataset;
  ds.dataset_id = kCordDatasetId;
  ds.split = split;
  ds.schema.dataset_id = kCordDatasetId;
  std::set<std::string> fields;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      result.errors.push_back(file.string() + ": cannot open");
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      Document doc = parse_cord_document(file.stem().string(), buf.str(), options);
      for (const auto& a : doc.annotations) fields.insert(a.field_id);
      ds.documents.push_back(std::move(doc));
    } catch (const Error& e) {
      result.errors.push_back(file.string() + ": " + e.what());
    }
  }
  ds.schema.field_ids.assign(fields.begin(), fields.end());
  for (const auto& e : result.errors) warn(e);
  const std::size_t expected = cord_expected_size(split);
  if (ds.documents.size() != expected) {
    result.warnings.push_back("CORD " + split_name + " split has " +
                              std::to_string(ds.documents.size()) + " documents, expected " +
                              std::to_string(expected));
    warn(result.warnings.back());
  }
  return result;
}

}  // namespace spanie
