#include <doctest.h>

#include "fixtures.hpp"
#include "spanie/encoder.hpp"
#include "spanie/grad_check.hpp"
#include "spanie/recursive_decoder.hpp"
#include "spanie/seqlabel.hpp"
#include "spanie/span_head.hpp"

using namespace spanie;
using spanie::testing::rescale_parameters;
using spanie::testing::toy_sequence;

namespace {

EncoderConfig toy_config(std::size_t heads = 1) {
  EncoderConfig c;
  c.hidden_size = 8;
  c.num_layers = 1;
  c.num_heads = heads;
  c.max_seq_len = 6;
  c.vocab_size = 10;
  return c;
}

}  // namespace

TEST_CASE("encoder gradient check, one layer, c=8, n=6") {
  for (std::size_t heads : {1, 2}) {
    ParameterStore store;
    std::mt19937_64 rng(3);
    Encoder enc(toy_config(heads), store, rng);
    rescale_parameters(store, rng, 0.5);
    const auto seq = toy_sequence(5, 10, rng);
    const Tensor probe = spanie::testing::random_tensor({6, 8}, rng);
    auto loss = [&](Graph& g) {
      Var h = enc.forward(g, seq, 6);
      return g.sum(g.mul(h, g.constant(probe)));
    };
    const auto r = grad_check(loss, store.all());
    CAPTURE(heads);
    CAPTURE(r.worst_parameter);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("span model chain loss gradient check") {
  for (auto kind : {ScorerKind::bilinear, ScorerKind::additive}) {
    ParameterStore store;
    std::mt19937_64 rng(5);
    Encoder enc(toy_config(), store, rng);
    SpanHead head(store, 8, kind, rng);
    QueryRegistry reg(store, 8);
    auto& q = reg.add("d/f", rng);
    rescale_parameters(store, rng, 0.5);
    const auto seq = toy_sequence(6, 10, rng);
    const std::vector<bool> mask(6, true);
    auto loss = [&](Graph& g) {
      Var h = enc.forward(g, seq);
      return chain_loss(g, {{1, 2}, {4, 5}}, h, g.parameter(q), head, mask);
    };
    const auto r = grad_check(loss, store.all());
    CAPTURE(r.worst_parameter);
    CHECK(r.max_relative_error < 1e-4);
  }
}
