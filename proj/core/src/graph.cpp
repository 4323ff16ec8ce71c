#include "spanie/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "spanie/errors.hpp"

namespace spanie {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Graph::Graph(bool training, std::uint64_t dropout_seed)
    : training_(training), rng_(dropout_seed) {}

Var Graph::push(Tensor value, std::function<void(Graph&, const Tensor&)> backward) {
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Graph::check(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this graph");
}

Var Graph::parameter(Parameter& p) {
  Node n;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::constant(Tensor value) { return push(std::move(value), nullptr); }

const Tensor& Graph::value(Var v) const {
  check(v);
  const auto& n = nodes_[v.id];
  return n.param ? n.param->value : n.value;
}

Tensor Graph::grad(Var v) const {
  check(v);
  const auto& n = nodes_[v.id];
  if (n.param) return n.param->grad;
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

double Graph::scalar(Var v) const {
  const auto& t = value(v);
  if (t.size() != 1) throw ContractError("expected a scalar, got " + shape_to_string(t.shape()));
  return t[0];
}

Tensor& Graph::grad_ref(std::size_t id) {
  auto& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

Var Graph::matmul(Var a, Var b) {
  check(a);
  check(b);
  Tensor out = spanie::matmul(value(a), value(b));
  return push(std::move(out), [a, b](Graph& g, const Tensor& up) {
    // dA = up · Bᵀ, dB = Aᵀ · up
    add_into(g.grad_ref(a.id), spanie::matmul_nt(up, g.value(b)).reshaped(g.value(a).shape()));
    add_into(g.grad_ref(b.id), spanie::matmul_tn(g.value(a), up).reshaped(g.value(b).shape()));
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  check(a);
  check(b);
  Tensor out = spanie::matmul_nt(value(a), value(b));
  return push(std::move(out), [a, b](Graph& g, const Tensor& up) {
    // out = A·Bᵀ: dA = up · B, dB = upᵀ · A
    add_into(g.grad_ref(a.id), spanie::matmul(up, g.value(b)).reshaped(g.value(a).shape()));
    add_into(g.grad_ref(b.id), spanie::matmul_tn(up, g.value(a)).reshaped(g.value(b).shape()));
  });
}

Var Graph::add(Var a, Var b) {
  check(a);
  check(b);
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.size() != vb.size()) {
    throw DimensionError("add: shape mismatch " + shape_to_string(va.shape()) + " vs " +
                         shape_to_string(vb.shape()));
  }
  Tensor out = va;
  add_into(out, vb);
  return push(std::move(out), [a, b](Graph& g, const Tensor& up) {
    add_into(g.grad_ref(a.id), up);
    add_into(g.grad_ref(b.id), up);
  });
}

Var Graph::add_bias(Var x, Var bias) {
  check(x);
  check(bias);
  const auto& vx = value(x);
  const auto& vb = value(bias);
  const std::size_t m = vx.rows(), p = vx.cols();
  if (vb.size() != p) {
    throw DimensionError("add_bias: bias " + shape_to_string(vb.shape()) +
                         " does not match rows of " + shape_to_string(vx.shape()));
  }
  Tensor out = vx;
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < p; ++j) r[j] += vb[j];
  }
  return push(std::move(out), [x, bias, m, p](Graph& g, const Tensor& up) {
    add_into(g.grad_ref(x.id), up);
    auto& gb = g.grad_ref(bias.id);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) gb[j] += up[i * p + j];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  check(a);
  check(b);
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.size() != vb.size()) {
    throw DimensionError("mul: shape mismatch " + shape_to_string(va.shape()) + " vs " +
                         shape_to_string(vb.shape()));
  }
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return push(std::move(out), [a, b](Graph& g, const Tensor& up) {
    const auto& va = g.value(a);
    const auto& vb = g.value(b);
    {
      auto& ga = g.grad_ref(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * vb[i];
    }
    auto& gb = g.grad_ref(b.id);
    for (std::size_t i = 0; i < up.size(); ++i) gb[i] += up[i] * va[i];
  });
}

Var Graph::scale(Var a, double s) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data()) v *= s;
  return push(std::move(out), [a, s](Graph& g, const Tensor& up) {
    auto& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * s;
  });
}

Var Graph::sum(Var a) {
  check(a);
  double total = 0.0;
  for (double v : value(a).data()) total += v;
  return push(Tensor({1}, {total}), [a](Graph& g, const Tensor& up) {
    auto& ga = g.grad_ref(a.id);
    for (auto& v : ga.data()) v += up[0];
  });
}

Var Graph::mean(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("mean of zero terms");
  std::vector<Var> terms(scalars.begin(), scalars.end());
  double total = 0.0;
  for (auto v : terms) total += scalar(v);
  const double inv = 1.0 / static_cast<double>(terms.size());
  return push(Tensor({1}, {total * inv}), [terms, inv](Graph& g, const Tensor& up) {
    for (auto v : terms) g.grad_ref(v.id)[0] += up[0] * inv;
  });
}

Var Graph::reshape(Var a, Shape shape) {
  check(a);
  Tensor out = value(a).reshaped(std::move(shape));
  return push(std::move(out), [a](Graph& g, const Tensor& up) {
    auto& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
  });
}

Var Graph::gelu(Var a) {
  check(a);
  Tensor out = value(a);
  for (auto& x : out.data()) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  return push(std::move(out), [a](Graph& g, const Tensor& up) {
    const auto& va = g.value(a);
    auto& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double x = va[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga[i] += up[i] * (cdf + x * pdf);
    }
  });
}

Var Graph::tanh(Var a) {
  check(a);
  Tensor out = value(a);
  for (auto& x : out.data()) x = std::tanh(x);
  const std::size_t self = nodes_.size();
  return push(std::move(out), [a, self](Graph& g, const Tensor& up) {
    const auto& y = g.nodes_[self].value;
    auto& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * (1.0 - y[i] * y[i]);
  });
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  check(x);
  check(gain);
  check(bias);
  const auto& vx = value(x);
  const auto& vg = value(gain);
  const auto& vb = value(bias);
  const std::size_t m = vx.rows(), c = vx.cols();
  if (vg.size() != c || vb.size() != c) {
    throw DimensionError("layer_norm: gain/bias must have " + std::to_string(c) + " elements");
  }
  auto xhat = std::make_shared<Tensor>(vx.shape());
  auto inv_std = std::make_shared<std::vector<double>>(m);
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < m; ++i) {
    auto r = vx.row(i);
    double mu = 0.0;
    for (double v : r) mu += v;
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (double v : r) var += (v - mu) * (v - mu);
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    auto xr = xhat->row(i);
    auto orow = out.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      xr[j] = (r[j] - mu) * inv;
      orow[j] = xr[j] * vg[j] + vb[j];
    }
  }
  return push(std::move(out), [x, gain, bias, xhat, inv_std, m, c](Graph& g, const Tensor& up) {
    const auto& vg = g.value(gain);
    {
      auto& gg = g.grad_ref(gain.id);
      auto& gb = g.grad_ref(bias.id);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          gg[j] += up[i * c + j] * (*xhat)[i * c + j];
          gb[j] += up[i * c + j];
        }
      }
    }
    auto& gx = g.grad_ref(x.id);
    std::vector<double> dxhat(c);
    for (std::size_t i = 0; i < m; ++i) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        dxhat[j] = up[i * c + j] * vg[j];
        mean_d += dxhat[j];
        mean_dx += dxhat[j] * (*xhat)[i * c + j];
      }
      mean_d /= static_cast<double>(c);
      mean_dx /= static_cast<double>(c);
      const double inv = (*inv_std)[i];
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += inv * (dxhat[j] - mean_d - (*xhat)[i * c + j] * mean_dx);
      }
    }
  });
}

Var Graph::gather_rows(Var table, std::vector<std::size_t> ids) {
  check(table);
  const auto& vt = value(table);
  const std::size_t rows = vt.rows(), c = vt.cols();
  if (ids.empty()) throw DimensionError("gather_rows: no row indices");
  Tensor out({ids.size(), c});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw IndexError("gather_rows: row " + std::to_string(ids[i]) + " out of range for " +
                       shape_to_string(vt.shape()));
    }
    std::copy_n(vt.raw() + ids[i] * c, c, out.raw() + i * c);
  }
  return push(std::move(out), [table, ids = std::move(ids), c](Graph& g, const Tensor& up) {
    auto& gt = g.grad_ref(table.id);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = gt.raw() + ids[i] * c;
      const double* src = up.raw() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var Graph::select_row(Var x, std::size_t row) {
  check(x);
  const auto& vx = value(x);
  if (row >= vx.rows()) {
    throw IndexError("select_row: row " + std::to_string(row) + " out of range for " +
                     shape_to_string(vx.shape()));
  }
  const std::size_t c = vx.cols();
  auto r = vx.row(row);
  Tensor out({1, c}, std::vector<double>(r.begin(), r.end()));
  return push(std::move(out), [x, row, c](Graph& g, const Tensor& up) {
    auto& gx = g.grad_ref(x.id);
    for (std::size_t j = 0; j < c; ++j) gx[row * c + j] += up[j];
  });
}

Var Graph::masked_fill(Var x, std::vector<bool> keep, double fill) {
  check(x);
  Tensor out = value(x);
  if (keep.size() != out.size()) {
    throw DimensionError("masked_fill: mask of " + std::to_string(keep.size()) +
                         " entries for tensor " + shape_to_string(out.shape()));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!keep[i]) out[i] = fill;
  }
  return push(std::move(out), [x, keep = std::move(keep)](Graph& g, const Tensor& up) {
    auto& gx = g.grad_ref(x.id);
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (keep[i]) gx[i] += up[i];
    }
  });
}

Var Graph::softmax(Var logits) {
  check(logits);
  Tensor out = spanie::softmax(value(logits));
  const std::size_t self = nodes_.size();
  return push(std::move(out), [logits, self](Graph& g, const Tensor& up) {
    const auto& p = g.nodes_[self].value;
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += up[i] * p[i];
    auto& gl = g.grad_ref(logits.id);
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] += p[i] * (up[i] - dot);
  });
}

Var Graph::cross_entropy(Var logits, std::size_t target) {
  check(logits);
  const auto& vl = value(logits);
  const double loss = spanie::cross_entropy(vl, target);
  return push(Tensor({1}, {loss}), [logits, target](Graph& g, const Tensor& up) {
    Tensor p = spanie::softmax(g.value(logits));
    auto& gl = g.grad_ref(logits.id);
    for (std::size_t i = 0; i < p.size(); ++i) {
      gl[i] += up[0] * (p[i] - (i == target ? 1.0 : 0.0));
    }
  });
}

Var Graph::masked_row_cross_entropy(Var logits, std::vector<std::size_t> targets,
                                    std::vector<bool> mask) {
  check(logits);
  const auto& vl = value(logits);
  const std::size_t n = vl.rows(), k = vl.cols();
  if (targets.size() != n || mask.size() != n) {
    throw DimensionError("masked_row_cross_entropy: targets/mask length must equal " +
                         std::to_string(n) + " rows");
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (targets[i] >= k) {
      throw IndexError("masked_row_cross_entropy: target " + std::to_string(targets[i]) +
                       " out of range for " + std::to_string(k) + " classes");
    }
    total += log_sum_exp(vl.row(i)) - vl.at(i, targets[i]);
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  return push(Tensor({1}, {loss}), [logits, targets = std::move(targets), mask = std::move(mask),
                                    count, n, k](Graph& g, const Tensor& up) {
    if (count == 0) return;
    const auto& vl = g.value(logits);
    auto& gl = g.grad_ref(logits.id);
    const double w = up[0] / static_cast<double>(count);
    std::vector<double> p(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      auto r = vl.row(i);
      std::copy(r.begin(), r.end(), p.begin());
      softmax_inplace(p);
      for (std::size_t j = 0; j < k; ++j) {
        gl[i * k + j] += w * (p[j] - (j == targets[i] ? 1.0 : 0.0));
      }
    }
  });
}

Var Graph::self_attention(Var q, Var k, Var v, std::vector<bool> key_mask,
                          std::size_t num_heads) {
  check(q);
  check(k);
  check(v);
  const auto& vq = value(q);
  const auto& vk = value(k);
  const auto& vv = value(v);
  const std::size_t n = vq.rows(), c = vq.cols();
  if (vk.shape() != vq.shape() || vv.shape() != vq.shape()) {
    throw DimensionError("self_attention: q/k/v shapes differ");
  }
  if (num_heads == 0 || c % num_heads != 0) {
    throw DimensionError("self_attention: " + std::to_string(num_heads) +
                         " heads do not divide width " + std::to_string(c));
  }
  if (key_mask.size() != n) throw DimensionError("self_attention: key mask length mismatch");
  const std::size_t d = c / num_heads;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<std::size_t> keys;
  for (std::size_t j = 0; j < n; ++j) {
    if (key_mask[j]) keys.push_back(j);
  }
  if (keys.empty()) throw ContractError("self_attention: every key is masked");
  const std::size_t nk = keys.size();

  // probs[h][i][t] is the weight of query i on the t-th unmasked key in head h.
  auto probs = std::make_shared<std::vector<double>>(num_heads * n * nk);
  Tensor out({n, c});
  std::vector<double> scores(nk);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t off = h * d;
    for (std::size_t i = 0; i < n; ++i) {
      const double* qi = vq.raw() + i * c + off;
      for (std::size_t t = 0; t < nk; ++t) {
        const double* kj = vk.raw() + keys[t] * c + off;
        double acc = 0.0;
        for (std::size_t e = 0; e < d; ++e) acc += qi[e] * kj[e];
        scores[t] = acc * inv_sqrt_d;
      }
      softmax_inplace(scores);
      double* prow = probs->data() + (h * n + i) * nk;
      std::copy(scores.begin(), scores.end(), prow);
      double* oi = out.raw() + i * c + off;
      for (std::size_t t = 0; t < nk; ++t) {
        const double* vj = vv.raw() + keys[t] * c + off;
        const double w = prow[t];
        for (std::size_t e = 0; e < d; ++e) oi[e] += w * vj[e];
      }
    }
  }

  return push(std::move(out), [q, k, v, probs, keys = std::move(keys), n, c, d, nk, num_heads,
                               inv_sqrt_d](Graph& g, const Tensor& up) {
    const auto& vq = g.value(q);
    const auto& vk = g.value(k);
    const auto& vv = g.value(v);
    auto& gq = g.grad_ref(q.id);
    auto& gk = g.grad_ref(k.id);
    auto& gv = g.grad_ref(v.id);
    std::vector<double> dp(nk);
    for (std::size_t h = 0; h < num_heads; ++h) {
      const std::size_t off = h * d;
      for (std::size_t i = 0; i < n; ++i) {
        const double* prow = probs->data() + (h * n + i) * nk;
        const double* ui = up.raw() + i * c + off;
        // dP = dO · Vᵀ ; dV += Pᵀ · dO
        double dot = 0.0;
        for (std::size_t t = 0; t < nk; ++t) {
          const std::size_t j = keys[t];
          const double* vj = vv.raw() + j * c + off;
          double* gvj = gv.raw() + j * c + off;
          double acc = 0.0;
          for (std::size_t e = 0; e < d; ++e) {
            acc += ui[e] * vj[e];
            gvj[e] += prow[t] * ui[e];
          }
          dp[t] = acc;
          dot += acc * prow[t];
        }
        // dS = P ∘ (dP − ⟨dP, P⟩), then through the scaled dot product.
        const double* qi = vq.raw() + i * c + off;
        double* gqi = gq.raw() + i * c + off;
        for (std::size_t t = 0; t < nk; ++t) {
          const double ds = prow[t] * (dp[t] - dot) * inv_sqrt_d;
          if (ds == 0.0) continue;
          const std::size_t j = keys[t];
          const double* kj = vk.raw() + j * c + off;
          double* gkj = gk.raw() + j * c + off;
          for (std::size_t e = 0; e < d; ++e) {
            gqi[e] += ds * kj[e];
            gkj[e] += ds * qi[e];
          }
        }
      }
    }
  });
}

Var Graph::dropout(Var x, double rate) {
  check(x);
  if (!training_ || rate <= 0.0) return x;
  if (rate >= 1.0) throw DomainError("dropout rate must be below 1");
  const auto& vx = value(x);
  auto keep = std::make_shared<std::vector<double>>(vx.size());
  const double scale = 1.0 / (1.0 - rate);
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    (*keep)[i] = u < rate ? 0.0 : scale;
    out[i] *= (*keep)[i];
  }
  return push(std::move(out), [x, keep](Graph& g, const Tensor& up) {
    auto& gx = g.grad_ref(x.id);
    for (std::size_t i = 0; i < up.size(); ++i) gx[i] += up[i] * (*keep)[i];
  });
}

void Graph::backward(Var loss) {
  check(loss);
  if (value(loss).size() != 1) {
    throw ContractError("backward requires a scalar loss, got " +
                        shape_to_string(value(loss).shape()));
  }
  for (auto& n : nodes_) {
    if (!n.param) n.grad = Tensor();
  }
  grad_ref(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.param || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

}  // namespace spanie
