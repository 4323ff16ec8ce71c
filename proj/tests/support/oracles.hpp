#pragma once

// Independent reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spanie/geometry.hpp"
#include "spanie/recursive_decoder.hpp"
#include "spanie/span_head.hpp"

namespace spanie::testing {

// ASCII words only: weights are byte counts.
inline std::vector<BoundingBox> split_oracle(const BoundingBox& line,
                                             const std::vector<std::string>& words) {
  long double total = static_cast<long double>(words.size()) - 1;
  for (const auto& w : words) total += static_cast<long double>(w.size());
  const long double width = line.x1 - line.x0;
  auto at = [&](long double cum) {
    return line.x0 + static_cast<int>(std::floor(cum * width / total + 0.5L));
  };
  std::vector<BoundingBox> out;
  long double cum = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) cum += 1;
    const int l = at(cum);
    cum += static_cast<long double>(words[i].size());
    out.push_back({l, line.y0, at(cum), line.y1});
  }
  return out;
}

inline SpanPrediction exhaustive_span(const SpanScores& s, std::size_t max_span_len) {
  const std::size_t n = s.length();
  SpanPrediction best{0, 0, s.start_logits[0] + s.end_logits[0]};
  for (std::size_t a = 1; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      if (b - a > max_span_len) continue;
      const double v = s.start_logits[a] + s.end_logits[b];
      if (v > best.score) best = {a, b, v};
    }
  }
  return best;
}

// q · W · h_i as a plain triple sum; masked rows get kMaskedLogit.
inline std::vector<double> bilinear_oracle(const std::vector<double>& q, const Tensor& w,
                                           const Tensor& h, const std::vector<bool>& mask) {
  const std::size_t c = w.rows();
  std::vector<double> out(h.rows(), kMaskedLogit);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    if (!mask[i]) continue;
    double v = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = 0; b < c; ++b) v += q[a] * w.at(a, b) * h.at(i, b);
    }
    out[i] = v;
  }
  return out;
}

struct RefChain {
  std::vector<Span> spans;
  TerminationReason reason = TerminationReason::null_stop;
  std::size_t steps = 0;
};

inline RefChain reference_decode(const Tensor& t, const Tensor& h, const Tensor& ws, const Tensor& we,
                                 const std::vector<bool>& mask, const DecodeOptions& opt) {
  auto best_pair = [&](const std::vector<double>& s, const std::vector<double>& e) {
    Span best{0, 0};
    double score = s[0] + e[0];
    for (std::size_t a = 1; a < s.size(); ++a) {
      for (std::size_t b = a; b < s.size() && b <= a + opt.max_span_len; ++b) {
        if (s[a] + e[b] > score) {
          score = s[a] + e[b];
          best = {a, b};
        }
      }
    }
    return best;
  };
  RefChain out;
  std::vector<double> q(t.data().begin(), t.data().end());
  while (true) {
    ++out.steps;
    const Span sp = best_pair(bilinear_oracle(q, ws, h, mask), bilinear_oracle(q, we, h, mask));
    if (sp.start == 0 && sp.end == 0) {
      out.reason = TerminationReason::null_stop;
      return out;
    }
    if (std::find(out.spans.begin(), out.spans.end(), sp) != out.spans.end()) {
      out.reason = TerminationReason::repeat_stop;
      return out;
    }
    out.spans.push_back(sp);
    if (out.spans.size() >= opt.max_chain_len) {
      out.reason = TerminationReason::max_len_stop;
      return out;
    }
    const auto row = h.row(sp.start);
    q.assign(row.begin(), row.end());
  }
}

}  // namespace spanie::testing
