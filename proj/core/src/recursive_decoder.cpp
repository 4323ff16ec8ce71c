#include "spanie/recursive_decoder.hpp"

#include <algorithm>

#include "spanie/errors.hpp"

namespace spanie {

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::null_stop:
      return "null_stop";
    case TerminationReason::repeat_stop:
      return "repeat_stop";
    case TerminationReason::max_len_stop:
      return "max_len_stop";
  }
  return "unknown";
}

LinkChain decode_chain(const Tensor& query, const HiddenStates& hidden, const SpanHead& head,
                       const std::vector<bool>& mask, const DecodeOptions& options) {
  LinkChain chain;
  Tensor q = query;
  const std::size_t c = hidden.cols();
  while (true) {
    if (chain.spans.size() >= options.max_chain_len) {
      chain.reason = TerminationReason::max_len_stop;
      chain.terminated = false;
      return chain;
    }
    const SpanPrediction next = predict_span(head.score(q, hidden, mask), options.max_span_len);
    ++chain.steps;
    if (next.is_null()) {
      chain.reason = TerminationReason::null_stop;
      chain.terminated = true;
      return chain;
    }
    const bool repeat = std::any_of(chain.spans.begin(), chain.spans.end(), [&](const auto& s) {
      return s.start == next.start && s.end == next.end;
    });
    if (repeat) {
      chain.reason = TerminationReason::repeat_stop;
      chain.terminated = true;
      return chain;
    }
    chain.spans.push_back(next);
    auto row = hidden.row(next.start);
    q = Tensor({1, c}, std::vector<double>(row.begin(), row.end()));
  }
}

Var chain_loss(Graph& g, const std::vector<Span>& gold, Var hidden, Var query,
               const SpanHead& head, const std::vector<bool>& mask) {
  const std::size_t n = g.value(hidden).rows();
  for (const auto& s : gold) {
    if (s.start < 1 || s.start > s.end || s.end >= n) {
      throw IndexError("chain_loss: gold span (" + std::to_string(s.start) + "," +
                       std::to_string(s.end) + ") outside sequence of length " +
                       std::to_string(n));
    }
  }
  std::vector<Var> steps;
  steps.reserve(gold.size() + 1);
  Var q = query;
  for (std::size_t i = 0; i <= gold.size(); ++i) {
    const Span target = i < gold.size() ? gold[i] : Span{0, 0};
    auto [start, end] = head.score(g, q, hidden, mask);
    steps.push_back(span_loss(g, start, end, target));
    if (i < gold.size()) q = g.select_row(hidden, gold[i].start);
  }
  return g.mean(steps);
}

}  // namespace spanie
