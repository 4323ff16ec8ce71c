#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spanie/document.hpp"

namespace spanie {

enum class Split { train, dev, test };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct Dataset {
  std::string dataset_id;
  FieldSchema schema;
  Split split = Split::train;
  std::vector<Document> documents;

  std::vector<const Document*> document_ptrs() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Documents must validate and every annotation must name a schema field.
void validate(const Dataset& dataset);

// JSON-lines persistence. Line 1 is a header
//   {"format":"spanie-dataset","schema_version":1,"dataset_id":…,"split":…,"fields":[…]}
// and every following line is one document
//   {"doc_id":…,"page_width":…,"page_height":…,
//    "tokens":[{"text":…,"box":[x0,y0,x1,y1],"line_id":…},…],
//    "annotations":[{"field_id":…,"spans":[[start,end],…]},…]}
// Tokens exclude the null token; span indices are 1-based token positions.
inline constexpr int kDatasetSchemaVersion = 1;

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);
std::string to_jsonl(const Dataset& dataset);
Dataset load_jsonl(const std::filesystem::path& path);

}  // namespace spanie
