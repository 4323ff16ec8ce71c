#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spanie/dataset.hpp"

namespace spanie {

inline constexpr const char* kCordDatasetId = "cord";

struct CordOptions {
  // Used when a receipt lacks meta.image_size, or always when force_page_size is set.
  std::optional<int> page_width;
  std::optional<int> page_height;
  bool force_page_size = false;
};

struct CordLoadResult {
  Dataset dataset;
  std::vector<std::string> errors;  // one message per skipped file
  std::vector<std::string> warnings;
};

// Expected receipt counts of the official release.
std::size_t cord_expected_size(Split split);

// Reads every ground-truth JSON under <root>/<split>/json (or <root>/<split>)
// in filename order. Word quads become axis-aligned boxes on the 0-1000 grid;
// each OCR line is one span of the field "cord/<category>".
CordLoadResult load_cord(const std::filesystem::path& root, Split split,
                         const CordOptions& options = {});

// One receipt; throws DataError on malformed input.
Document parse_cord_document(const std::string& doc_id, const std::string& json_text,
                             const CordOptions& options = {});

}  // namespace spanie
