#pragma once

#include <optional>
#include <string>
#include <vector>

namespace spanie::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitThreshold = 4;

struct GenDataArgs {
  std::string config;
  std::string out;
  std::optional<unsigned long long> seed;
};

struct ImportCordArgs {
  std::string root;
  std::string split = "train";
  std::string out;
  std::optional<int> page_width;
  std::optional<int> page_height;
  bool force_page_size = false;
};

struct RunArgs {
  std::string config;
  std::optional<unsigned long long> seed;
  std::optional<std::string> out;
  std::optional<std::string> init_from;
  std::optional<std::string> model;
  std::optional<double> threshold_micro;
};

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::vector<std::string> names;
  std::string data;
  std::optional<std::string> split;
  std::optional<std::string> model;
  std::string out;
  std::optional<double> threshold_micro;
  bool gold = false;  // score the gold annotations against themselves
};

struct DecodeArgs {
  std::string checkpoint;
  std::string data;
  std::optional<std::string> split;
  std::string out;
};

struct VisualizeArgs {
  std::string checkpoint;
  std::string data;
  std::optional<std::string> split;
  std::optional<std::string> doc_id;
  std::size_t index = 0;
  std::string out;
};

int gen_data(const GenDataArgs& args);
int import_cord(const ImportCordArgs& args);
int pretrain(const RunArgs& args, const std::string& command_line);
int train(const RunArgs& args, const std::string& command_line);
int eval(const EvalArgs& args);
int decode(const DecodeArgs& args);
int visualize(const VisualizeArgs& args);

}  // namespace spanie::cli
