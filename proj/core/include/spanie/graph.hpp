#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "spanie/parameters.hpp"
#include "spanie/tensor.hpp"

namespace spanie {

// Handle to a node of a Graph. Only meaningful together with its graph.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so the
// tape order is a topological order and backward() is a single reverse sweep.
//
// Parameter leaves alias their Parameter: no copy of the value is made and
// backward() accumulates straight into Parameter::grad. Call
// ParameterStore::zero_grad() between independent gradient computations.
class Graph {
 public:
  explicit Graph(bool training = false, std::uint64_t dropout_seed = 0);

  bool training() const { return training_; }

  Var parameter(Parameter& p);
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() w.r.t. a non-parameter node; zeros if the
  // node was not reached.
  Tensor grad(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // x [m×p] + bias broadcast over rows; bias has p elements.
  Var add_bias(Var x, Var bias);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sum(Var a);
  Var mean(std::span<const Var> scalars);
  Var reshape(Var a, Shape shape);
  Var gelu(Var a);
  Var tanh(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var gather_rows(Var table, std::vector<std::size_t> ids);
  Var select_row(Var x, std::size_t row);
  // Entries with keep[i] == false become `fill` and pass no gradient.
  Var masked_fill(Var x, std::vector<bool> keep, double fill);
  Var softmax(Var logits);
  Var cross_entropy(Var logits, std::size_t target);
  // Mean cross entropy over the rows of `logits` where mask is true. Zero when
  // no row is selected.
  Var masked_row_cross_entropy(Var logits, std::vector<std::size_t> targets,
                               std::vector<bool> mask);
  // Multi-head scaled dot-product self-attention over [n×c] projections.
  // Keys with key_mask == false receive exactly zero attention weight.
  Var self_attention(Var q, Var k, Var v, std::vector<bool> key_mask, std::size_t num_heads);
  // Inverted dropout; identity when not training or rate == 0.
  Var dropout(Var x, double rate);

  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    std::function<void(Graph&, const Tensor& upstream)> backward;
  };

  Var push(Tensor value, std::function<void(Graph&, const Tensor&)> backward);
  Tensor& grad_ref(std::size_t id);
  void check(Var v) const;

  std::vector<Node> nodes_;
  bool training_;
  std::mt19937_64 rng_;
};

}  // namespace spanie
