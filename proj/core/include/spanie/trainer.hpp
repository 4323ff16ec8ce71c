#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spanie/dataset.hpp"
#include "spanie/eval.hpp"
#include "spanie/model.hpp"
#include "spanie/parameters.hpp"

namespace spanie {

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t max_steps = 0;   // 0: no cap on optimizer updates
  std::size_t batch_size = 8;  // documents per update
  std::size_t warmup_steps = 0;
  AdamConfig adam;
  std::uint64_t seed = 13;
  double target_dev_micro = 0.0;  // > 0: stop once dev micro F1 reaches it
};

struct LossRecord {
  std::size_t epoch = 0;
  std::string dataset_id;
  double mean_loss = 0.0;
  std::size_t examples = 0;
};

struct DevRecord {
  std::size_t epoch = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> losses;
  std::vector<DevRecord> dev;
  std::size_t steps = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 0 when no dev set was given
  double best_dev_micro = -1.0;
  std::size_t truncated_spans = 0;
};

using EpochCallback = std::function<void(const TrainResult&)>;

// Every field id must carry its dataset's "<dataset_id>/" prefix and no id may
// appear in two datasets; violations are ConfigErrors.
void check_namespaces(const std::vector<const Dataset*>& datasets);

std::vector<std::string> schema_fields(const std::vector<const Dataset*>& datasets);

// Registers missing queries for `fields` and freezes every other registry
// entry, so fine-tuning leaves earlier fields untouched.
void prepare_registry(Model& model, const std::vector<std::string>& fields);

// Documents of all datasets visited round-robin in proportion to dataset size,
// each dataset shuffled per epoch. Pure in (sizes, epoch, seed).
std::vector<std::pair<std::size_t, std::size_t>> interleave(const std::vector<std::size_t>& sizes,
                                                            std::size_t epoch, std::uint64_t seed);

// Trains on the union of `train_sets` (for a span model, the mean chain loss
// over every (document, field) pair). With a dev set the model is evaluated
// after each epoch and the parameters of the best dev micro F1 are restored
// at the end.
TrainResult train(Model& model, const std::vector<const Dataset*>& train_sets,
                  const Dataset* dev, const TrainOptions& options,
                  const EpochCallback& on_epoch = {});

// Span pre-training across several datasets: checks namespaces, grows the
// registry, then trains with no dev selection.
TrainResult pretrain_spans(Model& model, const std::vector<const Dataset*>& datasets,
                           const TrainOptions& options, const EpochCallback& on_epoch = {});

EvalReport evaluate(const Model& model, const Dataset& dataset);

std::string loss_csv(const std::vector<LossRecord>& records);
std::string dev_csv(const std::vector<DevRecord>& records);

}  // namespace spanie
