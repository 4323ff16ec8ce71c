#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <utility>
#include <vector>

#include "spanie/dataset.hpp"

namespace spanie {

enum class LayoutStyle { key_value_rows, table_columns };

std::string to_string(LayoutStyle style);
LayoutStyle parse_layout_style(const std::string& name);

struct SynthField {
  std::string name;  // field id becomes "<dataset_id>/<name>"
  double presence = 1.0;
  std::vector<std::pair<int, double>> multiplicity = {{1, 1.0}};  // (value count, weight)
  int min_value_tokens = 1;
  int max_value_tokens = 2;
  int max_train_documents = 0;  // > 0: field appears in at most this many train documents

  int max_multiplicity() const;
};

struct SynthConfig {
  std::string dataset_id = "synth";
  Split split = Split::train;
  std::size_t num_docs = 100;
  std::vector<SynthField> fields;
  int page_width = 800;
  int page_height = 1000;
  int grid_rows = 40;
  int grid_cols = 8;
  LayoutStyle layout = LayoutStyle::table_columns;
  int min_distractor_rows = 1;
  int max_distractor_rows = 3;
  std::uint64_t seed = 7;

  void validate() const;
};

// Generates documents laid out on a page grid. Single-valued fields become
// key/value rows; fields whose multiplicity can exceed one become table
// columns (values share the column's x0 and stack downward) or, in the
// key_value_rows style, runs of values to the right of their key.
// Output is a pure function of the config.
Dataset gen_synthetic(const SynthConfig& config);

// The three splits of one config, with split-specific seeds and document ids.
std::vector<Dataset> gen_synthetic_splits(SynthConfig config, std::size_t num_train,
                                          std::size_t num_dev, std::size_t num_test);

// JSON form used by `gen-data --config`.
struct SynthSpec {
  SynthConfig base;
  std::size_t num_train = 100;
  std::size_t num_dev = 20;
  std::size_t num_test = 20;
};

SynthSpec parse_synth_spec(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

}  // namespace spanie
