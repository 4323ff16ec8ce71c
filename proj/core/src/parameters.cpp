#include "spanie/parameters.hpp"

#include <cmath>

#include "spanie/errors.hpp"

namespace spanie {

double normal_sample(std::mt19937_64& rng, double stddev) {
  // Box-Muller on raw 53-bit uniforms; std::normal_distribution is not
  // reproducible across standard library implementations.
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  const double u1 = uniform();
  const double u2 = uniform();
  return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.grad = Tensor::zeros(value.shape());
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::add_normal(const std::string& name, Shape shape, double stddev,
                                      std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal_sample(rng, stddev);
  return add(name, std::move(t));
}

Parameter& ParameterStore::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::filled(std::move(shape), value));
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw IndexError("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw IndexError("unknown parameter: " + name);
  return it->second;
}

void ParameterStore::replace(const std::string& name, Tensor value) {
  auto& p = get(name);
  p.grad = Tensor::zeros(value.shape());
  p.value = std::move(value);
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto it = params_.lower_bound(prefix); it != params_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(&it->second);
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.zero_grad();
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void Adam::step(ParameterStore& store, double lr_scale) {
  ++t_;
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto* p : store.all()) {
      if (!p->trainable) continue;
      for (double g : p->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate * lr_scale;
  for (auto* p : store.all()) {
    if (!p->trainable) continue;
    auto& mom = moments_[p->name];
    if (mom.m.shape() != p->value.shape()) {
      mom.m = Tensor::zeros(p->value.shape());
      mom.v = Tensor::zeros(p->value.shape());
    }
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto m = mom.m.data();
    auto v = mom.v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] * scale;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / correction1;
      const double vhat = v[i] / correction2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace spanie
