#include "spanie/span_head.hpp"

#include <algorithm>

#include "spanie/errors.hpp"

namespace spanie {

ScorerKind parse_scorer_kind(const std::string& name) {
  if (name == "bilinear") return ScorerKind::bilinear;
  if (name == "additive") return ScorerKind::additive;
  throw ConfigError("unknown scorer '" + name + "' (expected bilinear or additive)");
}

std::string to_string(ScorerKind kind) {
  return kind == ScorerKind::bilinear ? "bilinear" : "additive";
}

QueryRegistry::QueryRegistry(ParameterStore& store, std::size_t hidden_size, double init_std)
    : store_(&store), hidden_size_(hidden_size), init_std_(init_std) {}

Parameter& QueryRegistry::resolve(const std::string& field_id, std::mt19937_64& rng) {
  if (contains(field_id)) return lookup(field_id);
  if (!auto_register_) throw IndexError("unknown field '" + field_id + "' in query registry");
  return add(field_id, rng);
}

Parameter& QueryRegistry::lookup(const std::string& field_id) {
  if (!contains(field_id)) throw IndexError("unknown field '" + field_id + "' in query registry");
  return store_->get(kPrefix + field_id);
}

const Parameter& QueryRegistry::lookup(const std::string& field_id) const {
  if (!contains(field_id)) throw IndexError("unknown field '" + field_id + "' in query registry");
  return static_cast<const ParameterStore*>(store_)->get(kPrefix + field_id);
}

Parameter& QueryRegistry::add(const std::string& field_id, std::mt19937_64& rng) {
  if (field_id.empty()) throw ConfigError("empty field id");
  return store_->add_normal(kPrefix + field_id, {1, hidden_size_}, init_std_, rng);
}

bool QueryRegistry::contains(const std::string& field_id) const {
  return store_->contains(kPrefix + field_id);
}

std::vector<std::string> QueryRegistry::field_ids() const {
  std::vector<std::string> out;
  const std::string prefix = kPrefix;
  for (const auto* p : static_cast<const ParameterStore*>(store_)->all()) {
    if (p->name.compare(0, prefix.size(), prefix) == 0) out.push_back(p->name.substr(prefix.size()));
  }
  return out;
}

SpanHead::SpanHead(ParameterStore& store, std::size_t hidden_size, ScorerKind kind,
                   std::mt19937_64& rng, double init_std)
    : store_(&store), hidden_size_(hidden_size), kind_(kind) {
  const std::size_t c = hidden_size;
  const std::string p = kPrefix;
  for (const char* which : {"start", "end"}) {
    const std::string w = which;
    if (kind == ScorerKind::bilinear) {
      store.add_normal(p + w + "_weight", {c, c}, init_std, rng);
    } else {
      store.add_normal(p + w + "_query_weight", {c, c}, init_std, rng);
      store.add_normal(p + w + "_context_weight", {c, c}, init_std, rng);
      store.add_normal(p + w + "_vector", {1, c}, init_std, rng);
    }
  }
}

SpanHead::SpanHead(ParameterStore& store, std::size_t hidden_size, ScorerKind kind)
    : store_(&store), hidden_size_(hidden_size), kind_(kind) {
  const std::string name = std::string(kPrefix) +
                           (kind == ScorerKind::bilinear ? "start_weight" : "start_vector");
  store.get(name);
}

Var SpanHead::endpoint(Graph& g, const std::string& which, Var q, Var hidden) const {
  const std::string p = std::string(kPrefix) + which;
  if (kind_ == ScorerKind::bilinear) {
    Var u = g.matmul(q, g.parameter(store_->get(p + "_weight")));
    return g.matmul_nt(u, hidden);
  }
  Var ctx = g.matmul(hidden, g.parameter(store_->get(p + "_context_weight")));
  Var qry = g.matmul(q, g.parameter(store_->get(p + "_query_weight")));
  Var act = g.tanh(g.add_bias(ctx, qry));
  return g.matmul_nt(g.parameter(store_->get(p + "_vector")), act);
}

std::pair<Var, Var> SpanHead::score(Graph& g, Var q, Var hidden,
                                    const std::vector<bool>& mask) const {
  const auto& vq = g.value(q);
  const auto& vh = g.value(hidden);
  if (vq.size() != hidden_size_ || vh.cols() != hidden_size_) {
    throw DimensionError("score_span: query " + shape_to_string(vq.shape()) + " / context " +
                         shape_to_string(vh.shape()) + " do not match hidden size " +
                         std::to_string(hidden_size_));
  }
  if (mask.size() != vh.rows()) {
    throw DimensionError("score_span: mask length " + std::to_string(mask.size()) +
                         " differs from sequence length " + std::to_string(vh.rows()));
  }
  if (vq.rank() != 2) q = g.reshape(q, {1, hidden_size_});
  Var start = g.masked_fill(endpoint(g, "start", q, hidden), mask, kMaskedLogit);
  Var end = g.masked_fill(endpoint(g, "end", q, hidden), mask, kMaskedLogit);
  return {start, end};
}

SpanScores SpanHead::score(const Tensor& q, const HiddenStates& hidden,
                           const std::vector<bool>& mask) const {
  Graph g;
  auto [s, e] = score(g, g.constant(q), g.constant(hidden), mask);
  const std::size_t n = hidden.rows();
  return {g.value(s).reshaped({n}), g.value(e).reshaped({n})};
}

SpanScores score_span(const Tensor& q, const HiddenStates& hidden, const SpanHead& head,
                      const std::vector<bool>& mask) {
  return head.score(q, hidden, mask);
}

Var span_loss(Graph& g, Var start_logits, Var end_logits, Span gold) {
  const std::size_t n = g.value(start_logits).size();
  if (gold.start >= n || gold.end >= n) {
    throw IndexError("span_loss: gold (" + std::to_string(gold.start) + "," +
                     std::to_string(gold.end) + ") outside sequence of length " +
                     std::to_string(n));
  }
  Var terms[2] = {g.cross_entropy(start_logits, gold.start), g.cross_entropy(end_logits, gold.end)};
  return g.add(terms[0], terms[1]);
}

double span_loss(const SpanScores& scores, Span gold) {
  const std::size_t n = scores.length();
  if (gold.start >= n || gold.end >= n) {
    throw IndexError("span_loss: gold (" + std::to_string(gold.start) + "," +
                     std::to_string(gold.end) + ") outside sequence of length " +
                     std::to_string(n));
  }
  return cross_entropy(scores.start_logits, gold.start) +
         cross_entropy(scores.end_logits, gold.end);
}

SpanPrediction predict_span(const SpanScores& scores, std::size_t max_span_len) {
  const std::size_t n = scores.length();
  const auto& st = scores.start_logits;
  const auto& en = scores.end_logits;
  SpanPrediction best{0, 0, st[0] + en[0]};
  for (std::size_t s = 1; s < n; ++s) {
    const std::size_t last = std::min(s + max_span_len, n - 1);
    for (std::size_t e = s; e <= last; ++e) {
      const double v = st[s] + en[e];
      if (v > best.score) best = {s, e, v};
    }
  }
  return best;
}

}  // namespace spanie
