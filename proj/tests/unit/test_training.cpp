#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "spanie/archive.hpp"
#include "spanie/errors.hpp"
#include "spanie/model.hpp"
#include "spanie/synthetic.hpp"
#include "spanie/trainer.hpp"

using namespace spanie;
namespace fs = std::filesystem;

namespace {

Dataset tiny(const std::string& id, std::size_t docs, std::uint64_t seed,
             std::vector<std::string> names = {"code", "amount", "line"}) {
  SynthConfig c;
  c.dataset_id = id;
  c.num_docs = docs;
  c.seed = seed;
  c.grid_rows = 14;
  c.min_distractor_rows = 0;
  c.max_distractor_rows = 1;
  c.fields.push_back({names[0], 1.0, {{1, 1.0}}, 1, 1, 0});
  c.fields.push_back({names[1], 1.0, {{1, 1.0}}, 1, 2, 0});
  c.fields.push_back({names[2], 1.0, {{2, 0.5}, {3, 0.5}}, 1, 1, 0});
  return gen_synthetic(c);
}

ModelConfig small_config(ModelType type) {
  ModelConfig m;
  m.type = type;
  m.encoder.hidden_size = 16;
  m.encoder.num_layers = 1;
  m.encoder.num_heads = 2;
  m.encoder.max_seq_len = 64;
  return m;
}

std::unique_ptr<Model> make_model(ModelType type, const std::vector<const Dataset*>& sets) {
  std::vector<const Document*> docs;
  for (const auto* ds : sets) {
    for (const auto& d : ds->documents) docs.push_back(&d);
  }
  return std::make_unique<Model>(small_config(type), Vocabulary::build(docs), schema_fields(sets), 5);
}

TrainOptions quick(std::size_t epochs) {
  TrainOptions t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.adam.learning_rate = 3e-3;
  t.seed = 3;
  return t;
}

std::vector<double> epoch_losses(const TrainResult& r) {
  std::vector<double> out(r.epochs_run, 0.0);
  for (const auto& l : r.losses) out[l.epoch - 1] += l.mean_loss;
  return out;
}

}  // namespace

TEST_CASE("interleave is proportional, complete and deterministic") {
  const auto order = interleave({6, 2, 4}, 1, 9);
  CHECK(order.size() == 12);
  std::vector<std::vector<std::size_t>> seen(3);
  for (const auto& [ds, doc] : order) seen[ds].push_back(doc);
  for (std::size_t d = 0; d < 3; ++d) {
    std::sort(seen[d].begin(), seen[d].end());
    for (std::size_t i = 0; i < seen[d].size(); ++i) CHECK(seen[d][i] == i);
  }
  std::size_t first_half_big = 0;
  for (std::size_t i = 0; i < 6; ++i) first_half_big += order[i].first == 0;
  CHECK(first_half_big == 3);
  CHECK(interleave({6, 2, 4}, 1, 9) == order);
  CHECK(interleave({6, 2, 4}, 2, 9) != order);
}

TEST_CASE("namespace checks") {
  auto a = tiny("a", 2, 1);
  auto b = tiny("b", 2, 2);
  CHECK_NOTHROW(check_namespaces({&a, &b}));
  auto a2 = tiny("a", 2, 3);
  CHECK_THROWS_AS(check_namespaces({&a, &a2}), ConfigError);
  auto bad = a;
  bad.dataset_id = "c";
  bad.schema.dataset_id = "c";
  CHECK_THROWS_AS(check_namespaces({&bad}), ConfigError);
}

TEST_CASE("span pretraining shares the encoder and grows the registry") {
  auto a = tiny("a", 8, 1);
  auto b = tiny("b", 8, 2, {"ref", "sum", "row"});
  auto model = make_model(ModelType::span, {&a});
  CHECK(model->registry().size() == 3);
  const auto params_before = model->store().count();
  auto result = pretrain_spans(*model, {&a, &b}, quick(1));
  CHECK(model->registry().size() == 6);
  CHECK(model->store().count() == params_before + 3);
  CHECK(model->store().with_prefix("encoder/token_embedding").size() == 1);
  std::set<std::string> ids;
  for (const auto& l : result.losses) ids.insert(l.dataset_id);
  CHECK(ids == std::set<std::string>{"a", "b"});
}

TEST_CASE("pretraining loss decreases over the first 10 epochs") {
  auto a = tiny("a", 12, 4);
  auto b = tiny("b", 12, 5, {"ref", "sum", "row"});
  auto model = make_model(ModelType::span, {&a, &b});
  const auto losses = epoch_losses(pretrain_spans(*model, {&a, &b}, quick(10)));
  REQUIRE(losses.size() == 10);
  for (std::size_t e = 0; e + 3 < losses.size(); ++e) CHECK(losses[e + 3] < losses[e]);
}

TEST_CASE("fine-tuning a new dataset leaves earlier queries untouched") {
  auto a = tiny("a", 6, 1);
  auto c = tiny("c", 6, 7, {"ref", "sum", "row"});
  auto model = make_model(ModelType::span, {&a});
  pretrain_spans(*model, {&a}, quick(1));
  const auto before = snapshot(model->store());
  prepare_registry(*model, c.schema.field_ids);
  train(*model, {&c}, nullptr, quick(2));
  for (const auto& id : a.schema.field_ids) {
    CHECK(model->registry().lookup(id).value == before.at(std::string(QueryRegistry::kPrefix) + id));
  }
  CHECK(model->registry().lookup("c/ref").value.size() == 16);
  CHECK(model->store().get("encoder/position_embedding").value !=
        before.at("encoder/position_embedding"));
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto a = tiny("a", 6, 1);
  auto dev = tiny("a", 3, 99);
  auto run = [&] {
    auto m = make_model(ModelType::span, {&a});
    const auto r = train(*m, {&a}, &dev, quick(2));
    return std::make_pair(r.dev.back().micro_f1, snapshot(m->store()));
  };
  const auto x = run(), y = run();
  CHECK(x.first == y.first);
  CHECK(x.second == y.second);
}

TEST_CASE("best dev epoch is restored") {
  auto a = tiny("a", 6, 1);
  auto dev = tiny("a", 4, 98);
  auto m = make_model(ModelType::span, {&a});
  const auto r = train(*m, {&a}, &dev, quick(4));
  REQUIRE(r.dev.size() == 4);
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_dev_micro == r.dev[r.best_epoch - 1].micro_f1);
  CHECK(evaluate(*m, dev).micro_f1 == r.best_dev_micro);
  CHECK(loss_csv(r.losses).rfind("epoch,dataset,mean_loss\n", 0) == 0);
}

TEST_CASE("document losses at initialization") {
  auto a = tiny("a", 3, 1);
  auto span = make_model(ModelType::span, {&a});
  auto tag = make_model(ModelType::seqlabel, {&a});
  for (auto* m : {span.get(), tag.get()}) {
    for (auto* p : m->store().with_prefix(m->type() == ModelType::span ? "span_head/" : "tag_head/")) {
      p->value.fill(0.0);
    }
  }
  const auto& doc = a.documents[0];
  Graph g1;
  const double sl = g1.value(span->document_loss(g1, doc, a.schema.field_ids))[0];
  const double n = static_cast<double>(span->tokenize(doc).length());
  CHECK(std::abs(sl - 2.0 * std::log(n)) < 1e-9);
  Graph g2;
  const double tl = g2.value(tag->document_loss(g2, doc, a.schema.field_ids))[0];
  CHECK(std::abs(tl - std::log(7.0)) < 1e-9);
}

TEST_CASE("prediction rejects unknown fields") {
  auto a = tiny("a", 2, 1);
  auto span = make_model(ModelType::span, {&a});
  auto tag = make_model(ModelType::seqlabel, {&a});
  CHECK_THROWS_AS(span->predict(a.documents[0], {"a/nope"}), IndexError);
  CHECK_THROWS_AS(tag->predict(a.documents[0], {"a/nope"}), IndexError);
  const auto chains = span->decode(a.documents[0], a.schema.field_ids);
  CHECK(chains.size() == 3);
}

TEST_CASE("checkpoint round trip preserves parameters and predictions") {
  const auto dir = fs::temp_directory_path() / "spanie_test_ckpt";
  fs::remove_all(dir);
  auto a = tiny("a", 6, 1);
  for (auto type : {ModelType::span, ModelType::seqlabel}) {
    auto m = make_model(type, {&a});
    train(*m, {&a}, nullptr, quick(1));
    m->save(dir);
    const auto manifest = Model::read_manifest(dir);
    CHECK(manifest.at("checkpoint_version") == kCheckpointVersion);
    CHECK(manifest.at("model_type") == to_string(type));
    auto back = Model::load(dir);
    CHECK(snapshot(back->store()) == snapshot(m->store()));
    CHECK(back->vocabulary().words() == m->vocabulary().words());
    CHECK(back->config().encoder == m->config().encoder);
    CHECK(back->fields() == m->fields());
    for (const auto& doc : a.documents) {
      CHECK(back->predict(doc, a.schema.field_ids) == m->predict(doc, a.schema.field_ids));
    }
    fs::remove_all(dir);
  }
  CHECK_THROWS_AS(Model::load(dir), DataError);
}

TEST_CASE("initialize_from copies matching tensors") {
  auto a = tiny("a", 4, 1);
  auto b = tiny("b", 4, 2, {"ref", "sum", "row"});
  auto src = make_model(ModelType::span, {&a});
  auto dst = make_model(ModelType::span, {&b});
  const auto copied = dst->initialize_from(*src);
  CHECK(copied > 0);
  CHECK(dst->store().get("encoder/layer0/query_weight").value ==
        src->store().get("encoder/layer0/query_weight").value);
  const auto& sv = src->vocabulary();
  const auto& dv = dst->vocabulary();
  const auto& st = src->store().get("encoder/token_embedding").value;
  const auto& dt = dst->store().get("encoder/token_embedding").value;
  for (const auto& w : dv.words()) {
    if (!sv.contains(w)) continue;
    for (std::size_t j = 0; j < 16; ++j) CHECK(dt.at(dv.id(w), j) == st.at(sv.id(w), j));
  }
}
