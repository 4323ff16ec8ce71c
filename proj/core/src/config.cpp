#include "spanie/config.hpp"

#include <algorithm>
#include <fstream>

#include "spanie/errors.hpp"

namespace spanie {

using nlohmann::json;
namespace fs = std::filesystem;

RunConfig::RunConfig() {
  train.epochs = 50;
  pretrain.epochs = 100;
}

void RunConfig::validate() const {
  EncoderConfig encoder = model.encoder;
  encoder.vocab_size = std::max<std::size_t>(encoder.vocab_size, 3);
  encoder.validate();
  if (model.decode.max_chain_len == 0) throw ConfigError("max_chain_len must be positive");
  if (model.decode.max_span_len == 0) throw ConfigError("max_span_len must be positive");
  for (const auto* t : {&train, &pretrain}) {
    if (!(t->adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (t->adam.beta1 < 0.0 || t->adam.beta1 >= 1.0 || t->adam.beta2 < 0.0 ||
        t->adam.beta2 >= 1.0) {
      throw ConfigError("Adam betas must lie in [0,1)");
    }
    if (!(t->adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (t->adam.clip_norm < 0.0) throw ConfigError("clip_norm must be ≥ 0");
    if (t->batch_size == 0) throw ConfigError("batch_size must be positive");
  }
  if (threshold_micro && (*threshold_micro < 0.0 || *threshold_micro > 1.0)) {
    throw ConfigError("threshold micro F1 must lie in [0,1]");
  }
  if (vocab_min_count == 0) throw ConfigError("vocab min_count must be ≥ 1");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

void parse_optimizer(const json& j, TrainOptions& t) {
  t.adam.learning_rate = j.value("lr", t.adam.learning_rate);
  t.adam.beta1 = j.value("beta1", t.adam.beta1);
  t.adam.beta2 = j.value("beta2", t.adam.beta2);
  t.adam.epsilon = j.value("eps", t.adam.epsilon);
  t.adam.clip_norm = j.value("clip_norm", t.adam.clip_norm);
  t.warmup_steps = j.value("warmup_steps", t.warmup_steps);
  t.batch_size = j.value("batch_size", t.batch_size);
}

void parse_schedule(const json& j, TrainOptions& t) {
  t.epochs = j.value("epochs", t.epochs);
  t.max_steps = j.value("max_steps", t.max_steps);
  t.target_dev_micro = j.value("target_dev_micro", t.target_dev_micro);
  if (j.contains("optimizer")) parse_optimizer(j["optimizer"], t);
}

json optimizer_json(const TrainOptions& t) {
  return {{"lr", t.adam.learning_rate}, {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},      {"eps", t.adam.epsilon},
          {"clip_norm", t.adam.clip_norm}, {"warmup_steps", t.warmup_steps},
          {"batch_size", t.batch_size}};
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    check_keys(j,
               {"model", "seed", "encoder", "head", "optimizer", "train", "pretrain", "data",
                "vocab", "output_dir", "thresholds", "init_from"},
               "run config");
    c.model.type = parse_model_type(j.value("model", std::string("span")));
    c.seed = j.value("seed", c.seed);
    if (j.contains("encoder")) c.model.encoder = encoder_config_from_json(j["encoder"], c.model.encoder);
    if (j.contains("head")) {
      const auto& h = j["head"];
      c.model.scorer = parse_scorer_kind(h.value("scorer", to_string(c.model.scorer)));
      c.model.decode.max_span_len = h.value("max_span_len", c.model.decode.max_span_len);
      c.model.decode.max_chain_len = h.value("max_chain_len", c.model.decode.max_chain_len);
      c.model.lenient_bio = h.value("lenient_bio", c.model.lenient_bio);
    }
    if (j.contains("optimizer")) {
      parse_optimizer(j["optimizer"], c.train);
      parse_optimizer(j["optimizer"], c.pretrain);
    }
    if (j.contains("train")) parse_schedule(j["train"], c.train);
    if (j.contains("pretrain")) parse_schedule(j["pretrain"], c.pretrain);
    if (j.contains("data")) {
      const auto& d = j["data"];
      check_keys(d, {"train", "dev", "test", "pretrain"}, "data");
      auto paths = [&](const json& v) {
        std::vector<fs::path> out;
        if (v.is_string()) {
          out.push_back(resolve(base_dir, v.get<std::string>()));
        } else {
          for (const auto& p : v) out.push_back(resolve(base_dir, p.get<std::string>()));
        }
        return out;
      };
      if (d.contains("train")) c.train_data = paths(d["train"]);
      if (d.contains("pretrain")) c.pretrain_data = paths(d["pretrain"]);
      if (d.contains("dev")) c.dev_data = resolve(base_dir, d["dev"].get<std::string>());
      if (d.contains("test")) c.test_data = resolve(base_dir, d["test"].get<std::string>());
    }
    if (j.contains("vocab")) c.vocab_min_count = j["vocab"].value("min_count", c.vocab_min_count);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("thresholds") && j["thresholds"].contains("micro_f1")) {
      c.threshold_micro = j["thresholds"]["micro_f1"].get<double>();
    }
    if (j.contains("init_from")) c.init_from = resolve(base_dir, j["init_from"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.train.seed = c.pretrain.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  auto strings = [](const std::vector<fs::path>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.string());
    return out;
  };
  json enc = encoder_config_to_json(c.model.encoder);
  enc.erase("vocab_size");
  json data = {{"train", strings(c.train_data)}, {"pretrain", strings(c.pretrain_data)}};
  if (c.dev_data) data["dev"] = c.dev_data->string();
  if (c.test_data) data["test"] = c.test_data->string();
  json j = {{"model", to_string(c.model.type)},
            {"seed", c.seed},
            {"encoder", enc},
            {"head",
             {{"scorer", to_string(c.model.scorer)},
              {"max_span_len", c.model.decode.max_span_len},
              {"max_chain_len", c.model.decode.max_chain_len},
              {"lenient_bio", c.model.lenient_bio}}},
            {"train",
             {{"epochs", c.train.epochs},
              {"max_steps", c.train.max_steps},
              {"target_dev_micro", c.train.target_dev_micro},
              {"optimizer", optimizer_json(c.train)}}},
            {"pretrain",
             {{"epochs", c.pretrain.epochs},
              {"max_steps", c.pretrain.max_steps},
              {"optimizer", optimizer_json(c.pretrain)}}},
            {"data", data},
            {"vocab", {{"min_count", c.vocab_min_count}}},
            {"output_dir", c.output_dir.string()}};
  if (c.threshold_micro) j["thresholds"] = {{"micro_f1", *c.threshold_micro}};
  if (c.init_from) j["init_from"] = c.init_from->string();
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_run_manifest(const fs::path& dir, const RunConfig& config, const std::string& command,
                        const json& extra) {
  json manifest = {{"code_version", kCodeVersion},
                   {"command", command},
                   {"seed", config.seed},
                   {"config", run_config_to_json(config)}};
  if (!extra.is_null()) manifest["extra"] = extra;
  write_text(dir / "run.json", manifest.dump(2) + "\n");
}

}  // namespace spanie
