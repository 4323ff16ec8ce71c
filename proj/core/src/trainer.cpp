#include "spanie/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "spanie/archive.hpp"
#include "spanie/errors.hpp"
#include "spanie/log.hpp"

namespace spanie {

void check_namespaces(const std::vector<const Dataset*>& datasets) {
  std::map<std::string, std::string> owner;
  std::set<std::string> ids;
  for (const auto* ds : datasets) {
    if (!ids.insert(ds->dataset_id).second) {
      throw ConfigError("dataset id '" + ds->dataset_id + "' is used by two datasets");
    }
    const std::string prefix = ds->dataset_id + "/";
    for (const auto& f : ds->schema.field_ids) {
      if (f.compare(0, prefix.size(), prefix) != 0) {
        throw ConfigError("field '" + f + "' of dataset '" + ds->dataset_id +
                          "' is not namespaced with '" + prefix + "'");
      }
      auto [it, inserted] = owner.emplace(f, ds->dataset_id);
      if (!inserted) {
        throw ConfigError("field '" + f + "' appears in datasets '" + it->second + "' and '" +
                          ds->dataset_id + "'");
      }
    }
  }
}

std::vector<std::string> schema_fields(const std::vector<const Dataset*>& datasets) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto* ds : datasets) {
    for (const auto& f : ds->schema.field_ids) {
      if (seen.insert(f).second) out.push_back(f);
    }
  }
  return out;
}

void prepare_registry(Model& model, const std::vector<std::string>& fields) {
  if (model.type() != ModelType::span) return;
  auto& registry = model.registry();
  const std::set<std::string> active(fields.begin(), fields.end());
  for (const auto& f : fields) {
    if (!registry.contains(f)) registry.add(f, model.rng());
  }
  for (const auto& f : registry.field_ids()) registry.lookup(f).trainable = active.count(f) != 0;
}

std::vector<std::pair<std::size_t, std::size_t>> interleave(const std::vector<std::size_t>& sizes,
                                                            std::size_t epoch, std::uint64_t seed) {
  struct Slot {
    double key;
    std::size_t dataset, index;
  };
  std::vector<Slot> slots;
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    std::vector<std::size_t> order(sizes[d]);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * (epoch + 1) + 7919 * d);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t k = 0; k < order.size(); ++k) {
      slots.push_back({(static_cast<double>(k) + 0.5) / static_cast<double>(sizes[d]), d, order[k]});
    }
  }
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.dataset < b.dataset;
  });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.emplace_back(s.dataset, s.index);
  return out;
}

EvalReport evaluate(const Model& model, const Dataset& dataset) {
  const auto predicted = model.predict(dataset.documents, dataset.schema.field_ids);
  return entity_f1(predicted, gold_entities(dataset.documents), &dataset.schema);
}

TrainResult train(Model& model, const std::vector<const Dataset*>& train_sets,
                  const Dataset* dev, const TrainOptions& options, const EpochCallback& on_epoch) {
  if (train_sets.empty()) throw ConfigError("training needs at least one dataset");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> sizes;
  for (const auto* ds : train_sets) sizes.push_back(ds->documents.size());

  if (model.type() == ModelType::span) {
    prepare_registry(model, schema_fields(train_sets));
  } else {
    for (const auto& f : schema_fields(train_sets)) model.tagset().begin_tag(f);
  }

  TrainResult result;
  Adam adam(options.adam);
  auto& store = model.store();
  store.zero_grad();
  TensorMap best;
  const std::size_t batch = options.batch_size;
  bool stop = false;

  for (std::size_t epoch = 1; epoch <= options.epochs && !stop; ++epoch) {
    std::vector<double> loss_sum(train_sets.size(), 0.0);
    std::vector<std::size_t> loss_n(train_sets.size(), 0);
    const auto order = interleave(sizes, epoch, options.seed);
    std::size_t in_batch = 0;
    auto apply = [&] {
      double lr_scale = 1.0;
      if (options.warmup_steps > 0) {
        lr_scale = std::min(1.0, static_cast<double>(result.steps + 1) /
                                     static_cast<double>(options.warmup_steps));
      }
      adam.step(store, lr_scale);
      store.zero_grad();
      ++result.steps;
      in_batch = 0;
      if (options.max_steps > 0 && result.steps >= options.max_steps) stop = true;
    };
    for (std::size_t k = 0; k < order.size() && !stop; ++k) {
      const auto [d, i] = order[k];
      const Dataset& ds = *train_sets[d];
      Graph g(true, options.seed * 1000003ULL + result.steps * 131ULL + k);
      Var loss = model.document_loss(g, ds.documents[i], ds.schema.field_ids,
                                     &result.truncated_spans);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch) +
                           " on document '" + ds.documents[i].doc_id + "'");
      }
      loss_sum[d] += value;
      ++loss_n[d];
      const std::size_t remaining = order.size() - (k - in_batch);
      const std::size_t this_batch = std::min(batch, remaining);
      g.backward(g.scale(loss, 1.0 / static_cast<double>(this_batch)));
      if (++in_batch == this_batch) apply();
    }
    if (in_batch > 0) apply();

    for (std::size_t d = 0; d < train_sets.size(); ++d) {
      result.losses.push_back({epoch, train_sets[d]->dataset_id,
                               loss_n[d] ? loss_sum[d] / static_cast<double>(loss_n[d]) : 0.0,
                               loss_n[d]});
    }
    result.epochs_run = epoch;
    if (dev) {
      const EvalReport report = evaluate(model, *dev);
      result.dev.push_back({epoch, report.micro_f1, report.macro_f1});
      if (report.micro_f1 > result.best_dev_micro) {
        result.best_dev_micro = report.micro_f1;
        result.best_epoch = epoch;
        best = snapshot(store);
      }
      if (options.target_dev_micro > 0.0 && report.micro_f1 >= options.target_dev_micro) {
        stop = true;
      }
    }
    if (on_epoch) on_epoch(result);
  }

  if (!best.empty()) {
    for (auto& [name, value] : best) store.get(name).value = value;
  }
  if (result.truncated_spans > 0) {
    warn(std::to_string(result.truncated_spans) +
         " gold spans fell beyond max_seq_len and were dropped from training");
  }
  return result;
}

TrainResult pretrain_spans(Model& model, const std::vector<const Dataset*>& datasets,
                           const TrainOptions& options, const EpochCallback& on_epoch) {
  if (model.type() != ModelType::span) throw ConfigError("span pre-training needs a span model");
  check_namespaces(datasets);
  return train(model, datasets, nullptr, options, on_epoch);
}

std::string loss_csv(const std::vector<LossRecord>& records) {
  std::ostringstream out;
  out << "epoch,dataset,mean_loss\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.mean_loss);
    out << r.epoch << ',' << r.dataset_id << ',' << buf << '\n';
  }
  return out.str();
}

std::string dev_csv(const std::vector<DevRecord>& records) {
  std::ostringstream out;
  out << "epoch,dev_micro_f1,dev_macro_f1\n";
  char buf[96];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", r.epoch, r.micro_f1, r.macro_f1);
    out << buf;
  }
  return out.str();
}

}  // namespace spanie
