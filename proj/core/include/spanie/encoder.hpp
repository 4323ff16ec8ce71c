#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "spanie/graph.hpp"
#include "spanie/parameters.hpp"
#include "spanie/vocabulary.hpp"

namespace spanie {

struct EncoderConfig {
  std::size_t hidden_size = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t max_seq_len = 512;
  std::size_t vocab_size = 0;
  std::size_t ff_multiplier = 4;
  std::size_t coordinate_vocab = 1001;
  double dropout = 0.0;
  double init_std = 0.02;
  // > 0: position and coordinate tables start from sin/cos features of this
  // amplitude (random phase per table) on top of the normal draw.
  double sinusoidal_init = 0.0;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Row i of the encoder output is the contextual vector of token i.
using HiddenStates = Tensor;

// Padded rows never influence real rows, so inference may skip them.
enum class PadMode { max_seq_len, sequence };

// Layout-aware transformer encoder. Input row i is
//   tok(w_i) + pos(i) + x0(box_i.x0) + y0(box_i.y0) + x1(box_i.x1) + y1(box_i.y1)
// followed by `num_layers` pre-norm blocks (self-attention, GELU feed-forward).
// Parameters live in a shared ParameterStore under the "encoder/" prefix.
class Encoder {
 public:
  // Registers freshly initialized parameters in `store`.
  Encoder(EncoderConfig config, ParameterStore& store, std::mt19937_64& rng);
  // Binds to parameters already present in `store` (checkpoint load).
  Encoder(EncoderConfig config, ParameterStore& store);

  const EncoderConfig& config() const { return config_; }

  // Sequences are padded to `pad_to` rows (0 means no padding beyond the
  // sequence itself). Padding rows use the pad token and the zero box.
  Var embed(Graph& g, const TokenSequence& seq, std::size_t pad_to = 0) const;
  Var encode(Graph& g, Var x0, const std::vector<bool>& mask) const;
  Var forward(Graph& g, const TokenSequence& seq, std::size_t pad_to = 0) const;

  // Inference forward (no dropout).
  HiddenStates hidden_states(const TokenSequence& seq, PadMode mode = PadMode::max_seq_len) const;

  // Grows the token table to `new_size` rows; new rows are freshly sampled.
  void grow_vocabulary(std::size_t new_size, std::mt19937_64& rng);

  static std::vector<bool> attention_mask(const TokenSequence& seq, std::size_t padded_length);
  static std::string layer_prefix(std::size_t layer);

 private:
  void check_bound() const;

  EncoderConfig config_;
  ParameterStore* store_;
};

}  // namespace spanie
