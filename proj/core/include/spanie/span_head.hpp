#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spanie/document.hpp"
#include "spanie/encoder.hpp"
#include "spanie/graph.hpp"
#include "spanie/parameters.hpp"

namespace spanie {

// Logit assigned to padded positions before any softmax.
inline constexpr double kMaskedLogit = -1e30;

enum class ScorerKind { bilinear, additive };

ScorerKind parse_scorer_kind(const std::string& name);
std::string to_string(ScorerKind kind);

struct SpanScores {
  Tensor start_logits;  // [n]
  Tensor end_logits;    // [n]

  std::size_t length() const { return start_logits.size(); }
};

struct SpanPrediction {
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;

  bool is_null() const { return start == 0 && end == 0; }
  Span span() const { return {start, end}; }
};

// Learnable per-field query vectors, stored as [1×c] parameters named
// "query/<field_id>" in the shared store, apart from the encoder weights.
class QueryRegistry {
 public:
  static constexpr const char* kPrefix = "query/";

  QueryRegistry(ParameterStore& store, std::size_t hidden_size, double init_std = 0.02);

  // Registers unknown ids only while auto-registration is on; otherwise an
  // unknown id is an IndexError.
  Parameter& resolve(const std::string& field_id, std::mt19937_64& rng);
  Parameter& lookup(const std::string& field_id);
  const Parameter& lookup(const std::string& field_id) const;
  Parameter& add(const std::string& field_id, std::mt19937_64& rng);

  bool contains(const std::string& field_id) const;
  std::vector<std::string> field_ids() const;
  std::size_t size() const { return field_ids().size(); }

  void set_auto_register(bool enabled) { auto_register_ = enabled; }
  bool auto_register() const { return auto_register_; }

 private:
  ParameterStore* store_;
  std::size_t hidden_size_;
  double init_std_;
  bool auto_register_ = false;
};

// The query/context scorer g(q, H). Bilinear form:
//   start_i = q · W_start · h_i,  end_i = q · W_end · h_i
// Additive form (variant): start_i = v_start · tanh(U_start h_i + Q_start q).
class SpanHead {
 public:
  static constexpr const char* kPrefix = "span_head/";

  SpanHead(ParameterStore& store, std::size_t hidden_size, ScorerKind kind, std::mt19937_64& rng,
           double init_std = 0.02);
  SpanHead(ParameterStore& store, std::size_t hidden_size, ScorerKind kind);

  ScorerKind kind() const { return kind_; }

  // q is [1×c], H is [n×c]; returns ([1×n] start, [1×n] end) logits with
  // positions where mask is false set to kMaskedLogit.
  std::pair<Var, Var> score(Graph& g, Var q, Var hidden, const std::vector<bool>& mask) const;
  SpanScores score(const Tensor& q, const HiddenStates& hidden,
                   const std::vector<bool>& mask) const;

 private:
  Var endpoint(Graph& g, const std::string& which, Var q, Var hidden) const;

  ParameterStore* store_;
  std::size_t hidden_size_;
  ScorerKind kind_;
};

SpanScores score_span(const Tensor& q, const HiddenStates& hidden, const SpanHead& head,
                      const std::vector<bool>& mask);

// CE over all positions for the start plus CE for the end.
Var span_loss(Graph& g, Var start_logits, Var end_logits, Span gold);
double span_loss(const SpanScores& scores, Span gold);

// Best pair among (0,0) and every 1 ≤ s ≤ e ≤ min(s + max_span_len, n − 1),
// scored by start_logits[s] + end_logits[e]; ties go to smaller s, then e.
SpanPrediction predict_span(const SpanScores& scores, std::size_t max_span_len);

}  // namespace spanie
