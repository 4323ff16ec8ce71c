#include "spanie/encoder.hpp"

#include <array>
#include <cmath>

#include "spanie/errors.hpp"

namespace spanie {

namespace {

const char* const kCoordTables[4] = {"encoder/x0_embedding", "encoder/y0_embedding",
                                     "encoder/x1_embedding", "encoder/y1_embedding"};

void add_sinusoid(Tensor& table, double amplitude, std::mt19937_64& rng) {
  const std::size_t c = table.cols();
  for (std::size_t i = 0; i + 1 < c; i += 2) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(c));
    const double phase = 2.0 * M_PI * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    for (std::size_t v = 0; v < table.rows(); ++v) {
      const double a = freq * static_cast<double>(v) + phase;
      table.at(v, i) += amplitude * std::sin(a);
      table.at(v, i + 1) += amplitude * std::cos(a);
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (hidden_size == 0) throw ConfigError("hidden_size must be positive");
  if (num_heads == 0 || hidden_size % num_heads != 0) {
    throw ConfigError("num_heads (" + std::to_string(num_heads) + ") must divide hidden_size (" +
                      std::to_string(hidden_size) + ")");
  }
  if (max_seq_len < 2) throw ConfigError("max_seq_len must be at least 2");
  if (vocab_size < 3) throw ConfigError("vocab_size must cover the reserved tokens");
  if (coordinate_vocab != 1001) throw ConfigError("coordinate_vocab must be 1001");
  if (ff_multiplier == 0) throw ConfigError("ff_multiplier must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
  if (sinusoidal_init < 0.0) throw ConfigError("sinusoidal_init must be ≥ 0");
}

std::string Encoder::layer_prefix(std::size_t layer) {
  return "encoder/layer" + std::to_string(layer) + "/";
}

Encoder::Encoder(EncoderConfig config, ParameterStore& store, std::mt19937_64& rng)
    : config_(config), store_(&store) {
  config_.validate();
  const std::size_t c = config_.hidden_size;
  const std::size_t ff = c * config_.ff_multiplier;
  const double sd = config_.init_std;
  store.add_normal("encoder/token_embedding", {config_.vocab_size, c}, sd, rng);
  auto& pos = store.add_normal("encoder/position_embedding", {config_.max_seq_len, c}, sd, rng);
  if (config_.sinusoidal_init > 0.0) add_sinusoid(pos.value, config_.sinusoidal_init, rng);
  for (const char* name : kCoordTables) {
    auto& table = store.add_normal(name, {config_.coordinate_vocab, c}, sd, rng);
    if (config_.sinusoidal_init > 0.0) add_sinusoid(table.value, config_.sinusoidal_init, rng);
  }
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const auto p = layer_prefix(l);
    store.add_constant(p + "ln1_gain", {c}, 1.0);
    store.add_constant(p + "ln1_bias", {c}, 0.0);
    for (const char* proj : {"query", "key", "value", "output"}) {
      store.add_normal(p + proj + "_weight", {c, c}, sd, rng);
      if (std::string(proj) != "key") store.add_constant(p + proj + "_bias", {c}, 0.0);
    }
    store.add_constant(p + "ln2_gain", {c}, 1.0);
    store.add_constant(p + "ln2_bias", {c}, 0.0);
    store.add_normal(p + "ff_in_weight", {c, ff}, sd, rng);
    store.add_constant(p + "ff_in_bias", {ff}, 0.0);
    store.add_normal(p + "ff_out_weight", {ff, c}, sd, rng);
    store.add_constant(p + "ff_out_bias", {c}, 0.0);
  }
  if (config_.num_layers > 0) {
    store.add_constant("encoder/final_ln_gain", {c}, 1.0);
    store.add_constant("encoder/final_ln_bias", {c}, 0.0);
  }
}

Encoder::Encoder(EncoderConfig config, ParameterStore& store) : config_(config), store_(&store) {
  config_.validate();
  check_bound();
}

void Encoder::check_bound() const {
  const std::size_t c = config_.hidden_size;
  auto expect = [&](const std::string& name, Shape shape) {
    const auto& p = store_->get(name);
    if (p.value.shape() != shape) {
      throw ConfigError("parameter " + name + " has shape " + shape_to_string(p.value.shape()) +
                        ", expected " + shape_to_string(shape));
    }
  };
  expect("encoder/token_embedding", {config_.vocab_size, c});
  expect("encoder/position_embedding", {config_.max_seq_len, c});
  for (const char* name : kCoordTables) expect(name, {config_.coordinate_vocab, c});
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    expect(layer_prefix(l) + "ff_in_weight", {c, c * config_.ff_multiplier});
  }
}

std::vector<bool> Encoder::attention_mask(const TokenSequence& seq, std::size_t padded_length) {
  std::vector<bool> mask(padded_length, false);
  for (std::size_t i = 0; i < seq.length() && i < padded_length; ++i) mask[i] = true;
  return mask;
}

Var Encoder::embed(Graph& g, const TokenSequence& seq, std::size_t pad_to) const {
  const std::size_t len = seq.length();
  const std::size_t n = pad_to == 0 ? len : pad_to;
  if (len == 0) throw ContractError("embed: empty token sequence");
  if (n < len || n > config_.max_seq_len) {
    throw DimensionError("embed: cannot fit " + std::to_string(len) + " tokens into " +
                         std::to_string(n) + " rows (max_seq_len " +
                         std::to_string(config_.max_seq_len) + ")");
  }
  std::vector<std::size_t> ids(n, Vocabulary::kPad);
  std::vector<std::size_t> positions(n);
  std::array<std::vector<std::size_t>, 4> coords;
  for (auto& c : coords) c.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    positions[i] = i;
    if (i >= len) continue;
    if (seq.ids[i] >= config_.vocab_size) {
      throw IndexError("embed: token id " + std::to_string(seq.ids[i]) + " outside vocabulary");
    }
    ids[i] = seq.ids[i];
    const auto& b = seq.boxes[i];
    for (int v : {b.x0, b.y0, b.x1, b.y1}) {
      if (v < 0 || v > kGridMax) {
        throw DomainError("embed: coordinate " + std::to_string(v) + " of token " +
                          std::to_string(i) + " outside [0,1000]");
      }
    }
    coords[0][i] = static_cast<std::size_t>(b.x0);
    coords[1][i] = static_cast<std::size_t>(b.y0);
    coords[2][i] = static_cast<std::size_t>(b.x1);
    coords[3][i] = static_cast<std::size_t>(b.y1);
  }
  Var x = g.gather_rows(g.parameter(store_->get("encoder/token_embedding")), std::move(ids));
  x = g.add(x, g.gather_rows(g.parameter(store_->get("encoder/position_embedding")),
                             std::move(positions)));
  for (std::size_t t = 0; t < 4; ++t) {
    x = g.add(x, g.gather_rows(g.parameter(store_->get(kCoordTables[t])), std::move(coords[t])));
  }
  return x;
}

Var Encoder::encode(Graph& g, Var x0, const std::vector<bool>& mask) const {
  if (g.value(x0).cols() != config_.hidden_size) {
    throw DimensionError("encode: input width " + std::to_string(g.value(x0).cols()) +
                         " does not match hidden size " + std::to_string(config_.hidden_size));
  }
  if (config_.num_layers == 0) return x0;
  auto param = [&](const std::string& name) { return g.parameter(store_->get(name)); };
  auto linear = [&](Var in, const std::string& prefix) {
    return g.add_bias(g.matmul(in, param(prefix + "_weight")), param(prefix + "_bias"));
  };

  Var x = g.dropout(x0, config_.dropout);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const auto p = layer_prefix(l);
    Var a = g.layer_norm(x, param(p + "ln1_gain"), param(p + "ln1_bias"));
    Var att = g.self_attention(linear(a, p + "query"), g.matmul(a, param(p + "key_weight")),
                               linear(a, p + "value"), mask, config_.num_heads);
    x = g.add(x, g.dropout(linear(att, p + "output"), config_.dropout));

    Var b = g.layer_norm(x, param(p + "ln2_gain"), param(p + "ln2_bias"));
    Var f = linear(g.gelu(linear(b, p + "ff_in")), p + "ff_out");
    x = g.add(x, g.dropout(f, config_.dropout));
    if (!g.value(x).all_finite()) {
      throw NumericError("non-finite activation in encoder layer " + std::to_string(l));
    }
  }
  return g.layer_norm(x, param("encoder/final_ln_gain"), param("encoder/final_ln_bias"));
}

Var Encoder::forward(Graph& g, const TokenSequence& seq, std::size_t pad_to) const {
  Var x0 = embed(g, seq, pad_to);
  return encode(g, x0, attention_mask(seq, g.value(x0).rows()));
}

HiddenStates Encoder::hidden_states(const TokenSequence& seq, PadMode mode) const {
  Graph g;
  return g.value(forward(g, seq, mode == PadMode::max_seq_len ? config_.max_seq_len : 0));
}

void Encoder::grow_vocabulary(std::size_t new_size, std::mt19937_64& rng) {
  if (new_size <= config_.vocab_size) return;
  const std::size_t c = config_.hidden_size;
  const auto& old = store_->get("encoder/token_embedding").value;
  std::vector<double> data(old.data().begin(), old.data().end());
  data.reserve(new_size * c);
  for (std::size_t i = config_.vocab_size * c; i < new_size * c; ++i) {
    data.push_back(normal_sample(rng, config_.init_std));
  }
  store_->replace("encoder/token_embedding", Tensor({new_size, c}, std::move(data)));
  config_.vocab_size = new_size;
}

}  // namespace spanie
