#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "spanie/tensor.hpp"

namespace spanie {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

// Named trainable tensors. Iteration order is the lexicographic name order,
// which makes every traversal (checkpointing, optimizer steps, gradient
// checks) deterministic. Parameter addresses are stable for the lifetime of
// the store.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& add_normal(const std::string& name, Shape shape, double stddev, std::mt19937_64& rng);
  Parameter& add_constant(const std::string& name, Shape shape, double value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  // Replaces the value of an existing parameter (shape may change); resets its gradient.
  void replace(const std::string& name, Tensor value);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  void zero_grad();
  std::size_t total_size() const;
  std::size_t count() const { return params_.size(); }

 private:
  std::map<std::string, Parameter> params_;
};

double normal_sample(std::mt19937_64& rng, double stddev);

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

// Adam over the trainable parameters of a store. Moment buffers are keyed
// by parameter name so parameters added after construction are picked up.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  // Applies one update using the gradients currently held by the store.
  // `lr_scale` multiplies the configured learning rate (schedules).
  void step(ParameterStore& store, double lr_scale = 1.0);
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::map<std::string, Moments> moments_;
  std::int64_t t_ = 0;
};

}  // namespace spanie
