#include "spanie/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "spanie/errors.hpp"

namespace spanie {

namespace {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

const FieldScore* EvalReport::find(const std::string& field_id) const {
  for (const auto& f : fields) {
    if (f.field_id == field_id) return &f;
  }
  return nullptr;
}

std::vector<DocumentEntities> gold_entities(const std::vector<Document>& docs) {
  std::vector<DocumentEntities> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.doc_id, d.entities()});
  return out;
}

EvalReport entity_f1(const std::vector<DocumentEntities>& predicted,
                     const std::vector<DocumentEntities>& gold, const FieldSchema* closed_schema) {
  std::map<std::string, std::vector<Entity>> pred_by_doc, gold_by_doc;
  for (const auto& d : predicted) {
    auto& v = pred_by_doc[d.doc_id];
    v.insert(v.end(), d.entities.begin(), d.entities.end());
  }
  for (const auto& d : gold) {
    auto& v = gold_by_doc[d.doc_id];
    v.insert(v.end(), d.entities.begin(), d.entities.end());
  }
  if (closed_schema) {
    for (const auto& [doc, ents] : pred_by_doc) {
      for (const auto& e : ents) {
        if (!closed_schema->contains(e.field_id)) {
          throw ConfigError("prediction in document '" + doc + "' references unknown field '" +
                            e.field_id + "'");
        }
      }
    }
  }

  std::set<std::string> doc_ids;
  for (const auto& [id, _] : pred_by_doc) doc_ids.insert(id);
  for (const auto& [id, _] : gold_by_doc) doc_ids.insert(id);

  EvalReport report;
  std::map<std::string, Counts> per_field;
  for (const auto& id : doc_ids) {
    std::vector<Entity> preds = pred_by_doc[id];
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    const auto& golds = gold_by_doc[id];
    std::vector<bool> matched(golds.size(), false);
    for (const auto& p : preds) {
      bool hit = false;
      for (std::size_t g = 0; g < golds.size(); ++g) {
        if (!matched[g] && golds[g] == p) {
          matched[g] = true;
          hit = true;
          break;
        }
      }
      auto& c = per_field[p.field_id];
      if (hit) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
    for (std::size_t g = 0; g < golds.size(); ++g) {
      if (!matched[g]) ++per_field[golds[g].field_id].fn;
    }
    report.num_gold_entities += golds.size();
    report.num_predicted_entities += preds.size();
  }
  report.num_documents = doc_ids.size();

  Counts total;
  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (const auto& [field, c] : per_field) {
    FieldScore fs;
    fs.field_id = field;
    fs.tp = c.tp;
    fs.fp = c.fp;
    fs.fn = c.fn;
    fs.precision = ratio(c.tp, c.tp + c.fp);
    fs.recall = ratio(c.tp, c.tp + c.fn);
    fs.f1 = f1_of(fs.precision, fs.recall);
    report.fields.push_back(fs);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
    if (c.tp + c.fp + c.fn > 0) {
      macro_sum += fs.f1;
      ++macro_n;
    }
  }
  if (total.tp + total.fp + total.fn == 0) {
    report.micro_precision = report.micro_recall = report.micro_f1 = 1.0;
    report.macro_f1 = 1.0;
    return report;
  }
  report.micro_precision = ratio(total.tp, total.tp + total.fp);
  report.micro_recall = ratio(total.tp, total.tp + total.fn);
  report.micro_f1 = f1_of(report.micro_precision, report.micro_recall);
  report.macro_f1 = macro_n ? macro_sum / static_cast<double>(macro_n) : 0.0;
  return report;
}

ComparisonTable compare_report(const std::vector<NamedReport>& reports) {
  std::set<std::string> field_set;
  for (const auto& r : reports) {
    for (const auto& f : r.report.fields) field_set.insert(f.field_id);
  }
  const std::vector<std::string> fields(field_set.begin(), field_set.end());

  std::vector<std::string> header = {"Method", "F1 (macro)", "F1 (micro)"};
  header.insert(header.end(), fields.begin(), fields.end());
  std::vector<std::vector<std::string>> text_rows{header};
  std::ostringstream csv;
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << csv_escape(header[i]);
  csv << '\n';

  for (const auto& r : reports) {
    std::vector<std::string> trow = {r.name, fixed(100.0 * r.report.macro_f1, 2),
                                     fixed(100.0 * r.report.micro_f1, 2)};
    csv << csv_escape(r.name) << ',' << fixed(r.report.macro_f1, 6) << ','
        << fixed(r.report.micro_f1, 6);
    for (const auto& f : fields) {
      const auto* fs = r.report.find(f);
      trow.push_back(fs ? fixed(100.0 * fs->f1, 2) : "");
      csv << ',' << (fs ? fixed(fs->f1, 6) : "");
    }
    csv << '\n';
    text_rows.push_back(std::move(trow));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : text_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream text;
  for (std::size_t r = 0; r < text_rows.size(); ++r) {
    const auto& row = text_rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto pad = std::string(widths[i] - row[i].size(), ' ');
      // Method names left-aligned, numbers right-aligned.
      text << (i ? "  " : "") << (i == 0 ? row[i] + pad : pad + row[i]);
    }
    text << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      text << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return {text.str(), csv.str()};
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "field,tp,fp,fn,precision,recall,f1\n";
  for (const auto& f : report.fields) {
    out << csv_escape(f.field_id) << ',' << f.tp << ',' << f.fp << ',' << f.fn << ','
        << fixed(f.precision, 6) << ',' << fixed(f.recall, 6) << ',' << fixed(f.f1, 6) << '\n';
  }
  out << "__micro__,,,," << fixed(report.micro_precision, 6) << ','
      << fixed(report.micro_recall, 6) << ',' << fixed(report.micro_f1, 6) << '\n';
  out << "__macro__,,,,,," << fixed(report.macro_f1, 6) << '\n';
  return out.str();
}

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "documents: " << report.num_documents << "  gold entities: " << report.num_gold_entities
      << "  predicted: " << report.num_predicted_entities << '\n';
  std::size_t width = 5;
  for (const auto& f : report.fields) width = std::max(width, f.field_id.size());
  for (const auto& f : report.fields) {
    out << f.field_id << std::string(width - f.field_id.size(), ' ') << "  P "
        << fixed(100 * f.precision, 2) << "  R " << fixed(100 * f.recall, 2) << "  F1 "
        << fixed(100 * f.f1, 2) << "  (tp " << f.tp << " fp " << f.fp << " fn " << f.fn << ")\n";
  }
  out << "micro F1 " << fixed(100 * report.micro_f1, 2) << "  macro F1 "
      << fixed(100 * report.macro_f1, 2) << '\n';
  return out.str();
}

}  // namespace spanie
