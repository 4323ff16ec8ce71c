#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "spanie/cord.hpp"
#include "spanie/dataset.hpp"
#include "spanie/errors.hpp"
#include "spanie/synthetic.hpp"

using namespace spanie;
namespace fs = std::filesystem;

namespace {

SynthConfig invoice_config(std::size_t docs, LayoutStyle layout = LayoutStyle::table_columns) {
  SynthConfig c;
  c.grid_cols = 10;
  c.dataset_id = "inv";
  c.num_docs = docs;
  c.layout = layout;
  c.fields = {{"number", 1.0, {{1, 1.0}}, 1, 1, 0},
              {"date", 0.8, {{1, 1.0}}, 1, 2, 0},
              {"item", 1.0, {{3, 1.0}}, 1, 3, 0},
              {"price", 1.0, {{1, 0.5}, {4, 0.5}}, 1, 1, 0}};
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spanie_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json cord_word(const std::string& text, double x0, double y0, double x1, double y1) {
  return {{"text", text},
          {"quad", {{"x1", x0}, {"y1", y0}, {"x2", x1}, {"y2", y0}, {"x3", x1}, {"y3", y1},
                    {"x4", x0}, {"y4", y1}}}};
}

}  // namespace

TEST_CASE("synthetic generation is deterministic") {
  const auto a = to_jsonl(gen_synthetic(invoice_config(30)));
  const auto b = to_jsonl(gen_synthetic(invoice_config(30)));
  CHECK(a == b);
  auto other = invoice_config(30);
  other.seed = 8;
  CHECK(to_jsonl(gen_synthetic(other)) != a);
}

TEST_CASE("fixed multiplicity gives fixed chain length") {
  for (auto layout : {LayoutStyle::table_columns, LayoutStyle::key_value_rows}) {
    const auto ds = gen_synthetic(invoice_config(40, layout));
    CHECK_NOTHROW(validate(ds));
    for (const auto& doc : ds.documents) {
      const auto* item = doc.find("inv/item");
      REQUIRE(item != nullptr);
      CHECK(item->spans.size() == 3);
      const auto* price = doc.find("inv/price");
      REQUIRE(price != nullptr);
      CHECK((price->spans.size() == 1 || price->spans.size() == 4));
    }
  }
}

TEST_CASE("table columns share x0 and stack downward") {
  const auto ds = gen_synthetic(invoice_config(40));
  for (const auto& doc : ds.documents) {
    for (const char* f : {"inv/item", "inv/price"}) {
      const auto* a = doc.find(f);
      REQUIRE(a != nullptr);
      const auto& first = doc.tokens[a->spans[0].start].box;
      for (std::size_t i = 1; i < a->spans.size(); ++i) {
        const auto& b = doc.tokens[a->spans[i].start].box;
        CHECK(b.x0 == first.x0);
        CHECK(b.y0 > doc.tokens[a->spans[i - 1].start].box.y0);
      }
    }
  }
}

TEST_CASE("generated annotations are valid and in gold chain order") {
  const auto ds = gen_synthetic(invoice_config(50, LayoutStyle::key_value_rows));
  for (const auto& doc : ds.documents) {
    CHECK_NOTHROW(validate(doc));
    for (const auto& a : doc.annotations) {
      CHECK(gold_chain_order(a, doc) == a);
      for (const auto& s : a.spans) {
        CHECK(s.start >= 1);
        CHECK(s.end <= doc.num_real_tokens());
      }
    }
  }
}

TEST_CASE("rare fields respect the train cap and short entities stay short") {
  auto c = invoice_config(100);
  c.fields.push_back({"rare", 1.0, {{1, 1.0}}, 1, 2, 5});
  const auto ds = gen_synthetic(c);
  std::size_t with_rare = 0;
  for (const auto& doc : ds.documents) {
    if (const auto* a = doc.find("inv/rare")) {
      ++with_rare;
      for (const auto& s : a->spans) CHECK(s.end - s.start + 1 <= 2);
    }
  }
  CHECK(with_rare == 5);
  c.split = Split::test;
  std::size_t test_rare = 0;
  for (const auto& doc : gen_synthetic(c).documents) test_rare += doc.find("inv/rare") != nullptr;
  CHECK(test_rare == 100);
}

TEST_CASE("infeasible layouts are rejected") {
  auto c = invoice_config(5);
  c.grid_rows = 6;
  c.fields[2].multiplicity = {{30, 1.0}};
  CHECK_THROWS(gen_synthetic(c));
  auto bad = invoice_config(5);
  bad.fields[0].presence = 1.5;
  CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
}

TEST_CASE("train, dev and test splits are disjoint by document id") {
  const auto splits = gen_synthetic_splits(invoice_config(0), 60, 20, 20);
  REQUIRE(splits.size() == 3);
  std::set<std::string> ids;
  std::size_t total = 0;
  for (const auto& ds : splits) {
    for (const auto& doc : ds.documents) ids.insert(doc.doc_id);
    total += ds.documents.size();
  }
  CHECK(total == 100);
  CHECK(ids.size() == 100);
  CHECK(splits[0].split == Split::train);
  CHECK(splits[2].split == Split::test);
}

TEST_CASE("synth spec JSON round trip") {
  SynthSpec spec;
  spec.base = invoice_config(0);
  spec.num_train = 12;
  const auto back = parse_synth_spec(synth_spec_to_json(spec));
  CHECK(synth_spec_to_json(back) == synth_spec_to_json(spec));
  CHECK_THROWS_AS(parse_synth_spec(nlohmann::json{{"bogus", 1}}), ConfigError);
}

TEST_CASE("JSONL round trip is lossless and byte-stable") {
  const auto dir = scratch("jsonl");
  auto c = invoice_config(200);
  const auto ds = gen_synthetic(c);
  save_jsonl(ds, dir / "a.jsonl");
  const auto back = load_jsonl(dir / "a.jsonl");
  CHECK(back == ds);
  save_jsonl(back, dir / "b.jsonl");
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  fs::remove_all(dir);
}

TEST_CASE("JSONL load errors") {
  const auto dir = scratch("jsonl_bad");
  const auto ds = gen_synthetic(invoice_config(3));
  const std::string text = to_jsonl(ds);

  {
    std::ofstream out(dir / "trunc.jsonl", std::ios::binary);
    out << text.substr(0, text.size() - 20);
  }
  try {
    load_jsonl(dir / "trunc.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":4: truncated") != std::string::npos);
  }

  auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
  header["schema_version"] = 99;
  {
    std::ofstream out(dir / "version.jsonl", std::ios::binary);
    out << header.dump() << "\n" << text.substr(text.find('\n') + 1);
  }
  CHECK_THROWS_AS(load_jsonl(dir / "version.jsonl"), DataError);
  CHECK_THROWS_AS(load_jsonl(dir / "missing.jsonl"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("CORD receipt parsing") {
  nlohmann::json receipt = {
      {"meta", {{"image_size", {{"width", 800}, {"height", 600}}}}},
      {"valid_line",
       {{{"category", "menu.nm"},
         {"words", {cord_word("Iced", 100, 300, 180, 330), cord_word("Tea", 200, 300, 260, 330)}}},
        {{"category", "menu.price"}, {"words", {cord_word("4.00", 600, 300, 700, 330)}}},
        {{"category", "menu.nm"}, {"words", {cord_word("Bagel", 100, 150, 200, 180)}}},
        {{"category", "total.total_price"}, {"words", {cord_word("", 0, 0, 1, 1)}}}}}};
  const auto doc = parse_cord_document("r1", receipt.dump());
  CHECK(doc.page_width == 800);
  CHECK(doc.num_real_tokens() == 4);
  CHECK(doc.tokens[1].text == "Bagel");
  CHECK(doc.tokens[1].box == BoundingBox{125, 250, 250, 300});
  const auto* nm = doc.find("cord/menu.nm");
  REQUIRE(nm != nullptr);
  CHECK(nm->spans == std::vector<Span>{{1, 1}, {2, 3}});
  CHECK(doc.find("cord/total.total_price") == nullptr);
  CHECK_NOTHROW(validate(doc));

  nlohmann::json quad = {{"meta", {{"image_size", {{"width", 1000}, {"height", 1000}}}}},
                         {"valid_line",
                          {{{"category", "x"},
                            {"words",
                             {{{"text", "q"},
                               {"quad", {{"x1", 10}, {"y1", 5}, {"x2", 50}, {"y2", 6},
                                         {"x3", 52}, {"y3", 20}, {"x4", 9}, {"y4", 21}}}}}}}}}};
  const auto qd = parse_cord_document("q", quad.dump());
  CHECK(qd.tokens[1].box.x0 == 9);
  CHECK(qd.tokens[1].box.x1 == 52);

  nlohmann::json empty = {{"meta", {{"image_size", {{"width", 10}, {"height", 10}}}}},
                          {"valid_line", nlohmann::json::array()}};
  const auto ed = parse_cord_document("e", empty.dump());
  CHECK(ed.tokens.size() == 1);
  CHECK(ed.annotations.empty());

  nlohmann::json no_meta = {{"valid_line", nlohmann::json::array()}};
  CHECK_THROWS_AS(parse_cord_document("m", no_meta.dump()), DataError);
  CordOptions override_size;
  override_size.page_width = 500;
  override_size.page_height = 400;
  CHECK(parse_cord_document("m", no_meta.dump(), override_size).page_width == 500);
  CHECK_THROWS_AS(parse_cord_document("g", "{not json"), DataError);
}

TEST_CASE("CORD directory loading is order-stable and reports bad files") {
  const auto root = scratch("cord");
  fs::create_directories(root / "test" / "json");
  for (const char* name : {"b", "a", "c"}) {
    nlohmann::json r = {{"meta", {{"image_size", {{"width", 100}, {"height", 100}}}}},
                        {"valid_line",
                         {{{"category", "menu.nm"}, {"words", {cord_word(name, 10, 10, 20, 20)}}}}}};
    std::ofstream(root / "test" / "json" / (std::string(name) + ".json")) << r.dump();
  }
  std::ofstream(root / "test" / "json" / "broken.json") << "{";
  const auto res = load_cord(root, Split::test);
  REQUIRE(res.dataset.documents.size() == 3);
  CHECK(res.dataset.documents[0].tokens[1].text == "a");
  CHECK(res.dataset.documents[2].tokens[1].text == "c");
  CHECK(res.errors.size() == 1);
  CHECK_FALSE(res.warnings.empty());
  CHECK(load_cord(root, Split::test).dataset == res.dataset);
  CHECK(cord_expected_size(Split::train) == 800);
  CHECK(cord_expected_size(Split::dev) == 100);
  CHECK_THROWS_AS(load_cord(root, Split::train), DataError);
  fs::remove_all(root);
}
