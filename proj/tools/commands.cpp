#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>

#include "spanie/config.hpp"
#include "spanie/cord.hpp"
#include "spanie/dataset.hpp"
#include "spanie/errors.hpp"
#include "spanie/eval.hpp"
#include "spanie/log.hpp"
#include "spanie/model.hpp"
#include "spanie/svg.hpp"
#include "spanie/synthetic.hpp"
#include "spanie/trainer.hpp"

namespace spanie::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Dataset load_data(const std::string& path, const std::optional<std::string>& split,
                  const std::string& default_split) {
  fs::path p(path);
  if (fs::is_directory(p)) {
    const Split s = parse_split(split.value_or(default_split));
    p = p / (to_string(s) + ".jsonl");
  }
  if (!fs::exists(p)) throw DataError("dataset not found: " + p.string());
  Dataset ds = load_jsonl(p);
  if (split && parse_split(*split) != ds.split) {
    warn(p.string() + " holds the " + to_string(ds.split) + " split, not " + *split);
  }
  return ds;
}

std::vector<Dataset> load_all(const std::vector<fs::path>& paths) {
  std::vector<Dataset> out;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw DataError("dataset not found: " + p.string());
    out.push_back(load_jsonl(p));
  }
  return out;
}

std::vector<const Dataset*> pointers(const std::vector<Dataset>& sets) {
  std::vector<const Dataset*> out;
  for (const auto& d : sets) out.push_back(&d);
  return out;
}

std::vector<const Document*> all_documents(const std::vector<Dataset>& sets) {
  std::vector<const Document*> out;
  for (const auto& d : sets) {
    for (const auto* doc : d.document_ptrs()) out.push_back(doc);
  }
  return out;
}

RunConfig resolve_config(const RunArgs& args) {
  RunConfig c = load_run_config(args.config);
  if (args.seed) c.seed = c.train.seed = c.pretrain.seed = *args.seed;
  if (args.out) c.output_dir = *args.out;
  if (args.init_from) c.init_from = *args.init_from;
  if (args.model) c.model.type = parse_model_type(*args.model);
  if (args.threshold_micro) c.threshold_micro = *args.threshold_micro;
  c.validate();
  return c;
}

void print_epoch(const TrainResult& r, std::size_t num_sets) {
  const std::size_t n = r.losses.size();
  std::printf("epoch %zu  steps %zu", r.epochs_run, r.steps);
  for (std::size_t i = n - num_sets; i < n; ++i) {
    std::printf("  %s loss %.5f", r.losses[i].dataset_id.c_str(), r.losses[i].mean_loss);
  }
  if (!r.dev.empty() && r.dev.back().epoch == r.epochs_run) {
    std::printf("  dev micro %.4f macro %.4f", r.dev.back().micro_f1, r.dev.back().macro_f1);
  }
  std::printf("\n");
  std::fflush(stdout);
}

json train_summary(const TrainResult& r) {
  return {{"steps", r.steps},
          {"epochs_run", r.epochs_run},
          {"best_epoch", r.best_epoch},
          {"best_dev_micro", r.best_dev_micro},
          {"truncated_spans", r.truncated_spans}};
}

int check_threshold(const std::optional<double>& threshold, double micro, const std::string& what) {
  if (!threshold) return kExitOk;
  if (micro + 1e-12 < *threshold) {
    std::fprintf(stderr, "%s micro F1 %.4f is below the threshold %.4f\n", what.c_str(), micro,
                 *threshold);
    return kExitThreshold;
  }
  std::printf("%s micro F1 %.4f meets the threshold %.4f\n", what.c_str(), micro, *threshold);
  return kExitOk;
}

}  // namespace

int gen_data(const GenDataArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw ConfigError("cannot open config " + args.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(args.config + ": " + e.what());
  }
  SynthSpec spec = parse_synth_spec(j);
  if (args.seed) spec.base.seed = *args.seed;
  const auto splits =
      gen_synthetic_splits(spec.base, spec.num_train, spec.num_dev, spec.num_test);
  const fs::path out(args.out);
  for (const auto& ds : splits) {
    const auto path = out / (to_string(ds.split) + ".jsonl");
    save_jsonl(ds, path);
    std::printf("wrote %zu documents to %s\n", ds.documents.size(), path.string().c_str());
  }
  write_text(out / "synth.json", synth_spec_to_json(spec).dump(2) + "\n");
  return kExitOk;
}

int import_cord(const ImportCordArgs& args) {
  CordOptions options;
  options.page_width = args.page_width;
  options.page_height = args.page_height;
  options.force_page_size = args.force_page_size;
  if (args.force_page_size && (!args.page_width || !args.page_height)) {
    throw ConfigError("--force-page-size needs --page-width and --page-height");
  }
  const auto result = load_cord(args.root, parse_split(args.split), options);
  save_jsonl(result.dataset, args.out);
  std::printf("imported %zu documents (%zu fields) to %s; %zu files skipped\n",
              result.dataset.documents.size(), result.dataset.schema.field_ids.size(),
              args.out.c_str(), result.errors.size());
  return result.dataset.documents.empty() ? kExitData : kExitOk;
}

int pretrain(const RunArgs& args, const std::string& command_line) {
  RunConfig config = resolve_config(args);
  if (config.model.type != ModelType::span) {
    throw ConfigError("span pre-training needs model type 'span'");
  }
  const auto& paths = config.pretrain_data.empty() ? config.train_data : config.pretrain_data;
  if (paths.empty()) throw ConfigError("no pre-training datasets in config (data.pretrain)");
  const auto sets = load_all(paths);
  const auto ptrs = pointers(sets);
  check_namespaces(ptrs);

  std::unique_ptr<Model> model;
  Vocabulary vocab = Vocabulary::build(all_documents(sets), config.vocab_min_count);
  if (config.init_from) {
    auto source = Model::load(*config.init_from);
    for (const auto& w : source->vocabulary().words()) vocab.add(w);
    ModelConfig mc = source->config();
    auto fields = source->fields();
    for (const auto& f : schema_fields(ptrs)) fields.push_back(f);
    model = std::make_unique<Model>(mc, vocab, fields, config.seed);
    model->initialize_from(*source);
  } else {
    model = std::make_unique<Model>(config.model, vocab, schema_fields(ptrs), config.seed);
  }

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_run_manifest(out, config, command_line);
  const auto result = pretrain_spans(*model, ptrs, config.pretrain,
                                     [&](const TrainResult& r) { print_epoch(r, sets.size()); });
  write_text(out / "pretrain_loss.csv", loss_csv(result.losses));
  json datasets = json::array();
  for (const auto& d : sets) datasets.push_back(d.dataset_id);
  model->save(out / "checkpoint", {{"command", "pretrain"},
                                    {"datasets", datasets},
                                    {"seed", config.seed},
                                    {"training", train_summary(result)}});
  write_run_manifest(out, config, command_line, {{"training", train_summary(result)}});
  std::printf("registry holds %zu fields; checkpoint written to %s\n", model->registry().size(),
              (out / "checkpoint").string().c_str());
  return kExitOk;
}

int train(const RunArgs& args, const std::string& command_line) {
  RunConfig config = resolve_config(args);
  if (config.train_data.empty()) throw ConfigError("no training dataset in config (data.train)");
  const auto sets = load_all(config.train_data);
  const auto ptrs = pointers(sets);
  if (sets.size() > 1) check_namespaces(ptrs);
  std::optional<Dataset> dev, test;
  if (config.dev_data) dev = load_all({*config.dev_data}).front();
  if (config.test_data) test = load_all({*config.test_data}).front();

  const auto fields = schema_fields(ptrs);
  Vocabulary vocab = Vocabulary::build(all_documents(sets), config.vocab_min_count);
  std::unique_ptr<Model> model;
  if (config.init_from) {
    auto source = Model::load(*config.init_from);
    Vocabulary merged = source->vocabulary();
    for (const auto& w : vocab.words()) merged.add(w);
    ModelConfig mc = config.model;
    mc.encoder = source->config().encoder;
    mc.encoder.dropout = config.model.encoder.dropout;
    if (mc.type == ModelType::span) mc.scorer = source->config().scorer;
    std::vector<std::string> model_fields;
    if (mc.type == ModelType::span && source->type() == ModelType::span) {
      model_fields = source->fields();
    }
    model_fields.insert(model_fields.end(), fields.begin(), fields.end());
    model = std::make_unique<Model>(mc, std::move(merged), model_fields, config.seed);
    const auto copied = model->initialize_from(*source);
    std::printf("initialized %zu tensors from %s\n", copied, config.init_from->string().c_str());
  } else {
    model = std::make_unique<Model>(config.model, std::move(vocab), fields, config.seed);
  }

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_run_manifest(out, config, command_line);
  const auto result = train(*model, ptrs, dev ? &*dev : nullptr, config.train,
                            [&](const TrainResult& r) { print_epoch(r, sets.size()); });
  write_text(out / "train_loss.csv", loss_csv(result.losses));
  if (dev) write_text(out / "dev_metrics.csv", dev_csv(result.dev));
  model->save(out / "checkpoint", {{"command", "train"},
                                    {"seed", config.seed},
                                    {"training", train_summary(result)}});

  json summary = {{"training", train_summary(result)}};
  double final_micro = -1.0;
  std::string final_what;
  if (dev) {
    const auto report = evaluate(*model, *dev);
    write_text(out / "dev_report.csv", report_csv(report));
    std::printf("dev (best epoch %zu):\n%s", result.best_epoch, report_text(report).c_str());
    summary["dev_micro_f1"] = report.micro_f1;
    summary["dev_macro_f1"] = report.macro_f1;
    final_micro = report.micro_f1;
    final_what = "dev";
  }
  if (test) {
    const auto report = evaluate(*model, *test);
    write_text(out / "test_report.csv", report_csv(report));
    std::printf("test:\n%s", report_text(report).c_str());
    summary["test_micro_f1"] = report.micro_f1;
    summary["test_macro_f1"] = report.macro_f1;
    final_micro = report.micro_f1;
    final_what = "test";
  }
  write_run_manifest(out, config, command_line, summary);
  if (config.threshold_micro && final_micro < 0.0) {
    throw ConfigError("--threshold-micro needs a dev or test dataset");
  }
  return check_threshold(config.threshold_micro, final_micro, final_what);
}

int eval(const EvalArgs& args) {
  const Dataset ds = load_data(args.data, args.split, "test");
  const auto gold = gold_entities(ds.documents);
  std::vector<NamedReport> reports;
  if (args.gold) reports.push_back({"gold", entity_f1(gold, gold, &ds.schema)});
  for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
    auto model = Model::load(args.checkpoints[i]);
    if (args.model && parse_model_type(*args.model) != model->type()) {
      throw ConfigError("checkpoint " + args.checkpoints[i] + " holds a " +
                        to_string(model->type()) + " model, not " + *args.model);
    }
    const auto predicted = model->predict(ds.documents, ds.schema.field_ids);
    const std::string name = i < args.names.size() ? args.names[i] : to_string(model->type());
    reports.push_back({name, entity_f1(predicted, gold, &ds.schema)});
  }
  if (reports.empty()) throw ConfigError("eval needs --checkpoint or --gold");

  const fs::path out(args.out);
  for (const auto& r : reports) {
    write_text(out / (r.name + "_report.csv"), report_csv(r.report));
    std::printf("[%s]\n%s", r.name.c_str(), report_text(r.report).c_str());
  }
  const auto table = compare_report(reports);
  write_text(out / "compare.csv", table.csv);
  write_text(out / "compare.txt", table.text);
  std::printf("\n%s", table.text.c_str());
  int code = kExitOk;
  for (const auto& r : reports) {
    code = std::max(code, check_threshold(args.threshold_micro, r.report.micro_f1, r.name));
  }
  return code;
}

int decode(const DecodeArgs& args) {
  const Dataset ds = load_data(args.data, args.split, "test");
  auto model = Model::load(args.checkpoint);
  std::string lines;
  for (const auto& doc : ds.documents) {
    json fields = json::array();
    if (model->type() == ModelType::span) {
      for (const auto& fc : model->decode(doc, ds.schema.field_ids)) {
        json spans = json::array();
        for (const auto& s : fc.chain.spans) {
          spans.push_back({{"start", s.start},
                           {"end", s.end},
                           {"score", s.score},
                           {"text", doc.span_text(s.span())}});
        }
        fields.push_back({{"field_id", fc.field_id},
                          {"spans", spans},
                          {"termination", to_string(fc.chain.reason)}});
      }
    } else {
      std::map<std::string, json> by_field;
      for (const auto& e : model->predict(doc, ds.schema.field_ids)) {
        by_field[e.field_id].push_back(
            {{"start", e.start}, {"end", e.end}, {"text", doc.span_text({e.start, e.end})}});
      }
      for (auto& [f, spans] : by_field) fields.push_back({{"field_id", f}, {"spans", spans}});
    }
    lines += json{{"doc_id", doc.doc_id}, {"fields", fields}}.dump() + "\n";
  }
  write_text(args.out, lines);
  std::printf("decoded %zu documents to %s\n", ds.documents.size(), args.out.c_str());
  return kExitOk;
}

int visualize(const VisualizeArgs& args) {
  const Dataset ds = load_data(args.data, args.split, "test");
  const Document* doc = nullptr;
  if (args.doc_id) {
    for (const auto& d : ds.documents) {
      if (d.doc_id == *args.doc_id) doc = &d;
    }
    if (!doc) throw DataError("document '" + *args.doc_id + "' not in " + args.data);
  } else {
    if (args.index >= ds.documents.size()) {
      throw DataError("document index " + std::to_string(args.index) + " out of range");
    }
    doc = &ds.documents[args.index];
  }
  auto model = Model::load(args.checkpoint);
  std::vector<FieldChain> chains;
  if (model->type() == ModelType::span) {
    chains = model->decode(*doc, ds.schema.field_ids);
  } else {
    for (const auto& e : model->predict(*doc, ds.schema.field_ids)) {
      FieldChain fc{e.field_id, {}};
      fc.chain.spans.push_back({e.start, e.end, 0.0});
      chains.push_back(std::move(fc));
    }
  }
  write_text(args.out, render_svg(*doc, chains));
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

}  // namespace spanie::cli
