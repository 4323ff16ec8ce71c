#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spanie/model.hpp"
#include "spanie/trainer.hpp"

namespace spanie {

// Everything a pretrain/train/eval run needs. Read from a JSON file; relative
// data paths resolve against the file's directory.
struct RunConfig {
  ModelConfig model;
  std::uint64_t seed = 13;
  TrainOptions train;     // fine-tuning, 50 epochs by default
  TrainOptions pretrain;  // span pre-training, 100 epochs by default
  std::vector<std::filesystem::path> train_data;
  std::optional<std::filesystem::path> dev_data;
  std::optional<std::filesystem::path> test_data;
  std::vector<std::filesystem::path> pretrain_data;
  std::size_t vocab_min_count = 1;
  std::filesystem::path output_dir = "runs/default";
  std::optional<double> threshold_micro;
  std::optional<std::filesystem::path> init_from;

  RunConfig();
  void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

// Writes run.json: the resolved config, seed, command line and code version.
void write_run_manifest(const std::filesystem::path& dir, const RunConfig& config,
                        const std::string& command, const nlohmann::json& extra = {});

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spanie
