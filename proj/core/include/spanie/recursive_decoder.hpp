#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spanie/span_head.hpp"

namespace spanie {

enum class TerminationReason { null_stop, repeat_stop, max_len_stop };

std::string to_string(TerminationReason reason);

// Ordered answers for one query. `terminated` is true when decoding stopped
// on its own (null or repeated span) rather than at the length cap.
struct LinkChain {
  std::vector<SpanPrediction> spans;
  bool terminated = false;
  TerminationReason reason = TerminationReason::null_stop;
  std::size_t steps = 0;  // scoring calls made
};

struct DecodeOptions {
  std::size_t max_chain_len = 32;
  std::size_t max_span_len = 30;
};

// Greedy recursive extraction: the first span is predicted from the field
// query, every following span from the hidden state of the previous span's
// start token. Stops on the null span, on a span already in the chain, or
// after max_chain_len accepted spans; the stopping span is not appended.
LinkChain decode_chain(const Tensor& query, const HiddenStates& hidden, const SpanHead& head,
                       const std::vector<bool>& mask, const DecodeOptions& options = {});

// Teacher-forced chain objective over gold spans g_1..g_k (chain order):
// step 0 scores from the query toward g_1, step i scores from h[g_i.start]
// toward g_{i+1}, and the last step targets (0,0). Returns the mean of the
// k + 1 span losses; an empty gold list gives a single step toward (0,0).
Var chain_loss(Graph& g, const std::vector<Span>& gold, Var hidden, Var query,
               const SpanHead& head, const std::vector<bool>& mask);

}  // namespace spanie
