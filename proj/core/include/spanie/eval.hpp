#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spanie/document.hpp"

namespace spanie {

struct FieldScore {
  std::string field_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<FieldScore> fields;  // sorted by field id
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t num_documents = 0;
  std::size_t num_gold_entities = 0;
  std::size_t num_predicted_entities = 0;

  const FieldScore* find(const std::string& field_id) const;
};

struct DocumentEntities {
  std::string doc_id;
  std::vector<Entity> entities;
};

std::vector<DocumentEntities> gold_entities(const std::vector<Document>& docs);

// Entity-level scores with exact (field, start, end) matching inside each
// document; documents are paired by id. Duplicate predictions are collapsed.
//
// Micro pools tp/fp/fn over fields. Macro is the unweighted mean of per-field
// F1 over fields that have at least one gold or predicted entity. Ratios with
// a zero denominator are 0, except that an evaluation with no gold and no
// predicted entities at all scores 1 (perfect agreement).
//
// With `closed_schema`, a prediction for a field outside it is a ConfigError.
EvalReport entity_f1(const std::vector<DocumentEntities>& predicted,
                     const std::vector<DocumentEntities>& gold,
                     const FieldSchema* closed_schema = nullptr);

struct NamedReport {
  std::string name;
  EvalReport report;
};

struct ComparisonTable {
  std::string text;  // aligned, scores in percent
  std::string csv;   // scores as fractions
};

// One row per method: macro F1, micro F1, then per-field F1 over the union of
// fields (blank where a report lacks the field).
ComparisonTable compare_report(const std::vector<NamedReport>& reports);

std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);

}  // namespace spanie
