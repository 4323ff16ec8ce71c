#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "commands.hpp"
#include "spanie/errors.hpp"

namespace cli = spanie::cli;

int main(int argc, char** argv) {
  CLI::App app{"Span extraction for visually-rich documents"};
  app.require_subcommand(1);

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset (train/dev/test JSONL)");
  gen_cmd->add_option("--config", gen.config, "Synthetic generator config (JSON)")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Override the generator seed");

  cli::ImportCordArgs cord;
  auto* cord_cmd = app.add_subcommand("import-cord", "Convert CORD ground truth to JSONL");
  cord_cmd->add_option("--root", cord.root, "CORD root directory")->required();
  cord_cmd->add_option("--split", cord.split, "train, dev or test");
  cord_cmd->add_option("--out", cord.out, "Output JSONL file")->required();
  cord_cmd->add_option("--page-width", cord.page_width, "Page width when metadata lacks it");
  cord_cmd->add_option("--page-height", cord.page_height, "Page height when metadata lacks it");
  cord_cmd->add_flag("--force-page-size", cord.force_page_size,
                     "Use --page-width/--page-height for every receipt");

  cli::RunArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Span pre-training over several datasets");
  cli::RunArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a span or sequence-labeling model");
  for (auto [cmd, args] : {std::pair{pre_cmd, &pre}, std::pair{train_cmd, &tr}}) {
    cmd->add_option("--config", args->config, "Run config (JSON)")->required();
    cmd->add_option("--seed", args->seed, "Override the seed");
    cmd->add_option("--out", args->out, "Override the output directory");
    cmd->add_option("--init-from", args->init_from, "Checkpoint directory to start from");
    cmd->add_option("--model", args->model, "span or seqlabel")
        ->check(CLI::IsMember({"span", "seqlabel"}));
    cmd->add_option("--threshold-micro", args->threshold_micro,
                    "Exit with status 4 if the final micro F1 is lower");
  }

  cli::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score checkpoints on a dataset");
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint directory (repeatable)");
  eval_cmd->add_option("--name", ev.names, "Row name per checkpoint");
  eval_cmd->add_option("--data", ev.data, "Dataset JSONL file or directory")->required();
  eval_cmd->add_option("--split", ev.split, "Split file to pick from a dataset directory");
  eval_cmd->add_option("--model", ev.model, "Expected model type")
      ->check(CLI::IsMember({"span", "seqlabel"}));
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--threshold-micro", ev.threshold_micro,
                       "Exit with status 4 if any micro F1 is lower");
  eval_cmd->add_flag("--gold", ev.gold, "Add a gold-vs-gold row");

  cli::DecodeArgs dec;
  auto* dec_cmd = app.add_subcommand("decode", "Write predicted chains as JSONL");
  dec_cmd->add_option("--checkpoint", dec.checkpoint)->required();
  dec_cmd->add_option("--data", dec.data)->required();
  dec_cmd->add_option("--split", dec.split);
  dec_cmd->add_option("--out", dec.out, "Output JSONL file")->required();

  cli::VisualizeArgs vis;
  auto* vis_cmd = app.add_subcommand("visualize", "Render predictions of one document as SVG");
  vis_cmd->add_option("--checkpoint", vis.checkpoint)->required();
  vis_cmd->add_option("--data", vis.data)->required();
  vis_cmd->add_option("--split", vis.split);
  vis_cmd->add_option("--doc-id", vis.doc_id);
  vis_cmd->add_option("--index", vis.index, "Document index when --doc-id is absent");
  vis_cmd->add_option("--out", vis.out, "Output SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (*gen_cmd) return cli::gen_data(gen);
    if (*cord_cmd) return cli::import_cord(cord);
    if (*pre_cmd) return cli::pretrain(pre, command_line);
    if (*train_cmd) return cli::train(tr, command_line);
    if (*eval_cmd) return cli::eval(ev);
    if (*dec_cmd) return cli::decode(dec);
    if (*vis_cmd) return cli::visualize(vis);
  } catch (const spanie::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return cli::kExitData;
  } catch (const spanie::AnnotationError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return cli::kExitData;
  } catch (const spanie::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return cli::kExitNumeric;
  } catch (const spanie::DomainError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return cli::kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitConfig;
  }
  return cli::kExitConfig;
}
