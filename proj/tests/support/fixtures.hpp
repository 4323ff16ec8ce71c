#pragma once

#include <random>
#include <string>
#include <vector>

#include "spanie/document.hpp"
#include "spanie/encoder.hpp"
#include "spanie/parameters.hpp"
#include "spanie/tensor.hpp"
#include "spanie/vocabulary.hpp"

namespace spanie::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal_sample(rng, sd);
  return t;
}

// Replaces every parameter with a wider normal draw.
inline void rescale_parameters(ParameterStore& store, std::mt19937_64& rng, double sd) {
  for (auto* p : store.all()) {
    for (auto& v : p->value.data()) v = normal_sample(rng, sd);
  }
}

inline TokenSequence toy_sequence(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  TokenSequence seq;
  seq.ids.push_back(Vocabulary::kNull);
  seq.boxes.push_back({});
  for (std::size_t i = 1; i < n; ++i) {
    seq.ids.push_back(3 + rng() % (vocab - 3));
    const int x0 = static_cast<int>(rng() % 900), y0 = static_cast<int>(rng() % 900);
    seq.boxes.push_back({x0, y0, x0 + 1 + static_cast<int>(rng() % 99),
                         y0 + 1 + static_cast<int>(rng() % 99)});
  }
  return seq;
}

// n-1 single-word real tokens laid out in one row.
inline Document toy_document(const std::string& id, const std::vector<std::string>& words) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int x0 = static_cast<int>(i) * 40;
    tokens.push_back({words[i], {x0, 100, x0 + 30, 120}, 0});
  }
  return Document::from_tokens(id, std::move(tokens), 1000, 1000);
}

}  // namespace spanie::testing
