// Copyright 2026 The twsent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "twsent/autodiff.h"
#include "twsent/errors.h"

namespace twsent::ad {

namespace {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

Eigen::Map<const RowMatrix> as_matrix(const Real* p, std::size_t r, std::size_t c) {
  return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}
Eigen::Map<RowMatrix> as_matrix(Real* p, std::size_t r, std::size_t c) {
  return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}
Eigen::Map<const ColVector> as_vector(std::span<const Real> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}
Eigen::Map<ColVector> as_vector(std::span<Real> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

Graph& graph_of(Var v) {
  if (v.graph == nullptr) throw ContractError("Var is not bound to a graph");
  return *v.graph;
}

Graph& same_graph(Var a, Var b) {
  if (a.graph != b.graph) throw ContractError("Vars belong to different graphs");
  return graph_of(a);
}

void require_same_size(Var a, Var b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": size mismatch " +
                     shape_string(a.value().shape()) + " vs " +
                     shape_string(b.value().shape()));
  }
}

void require_rank(Var v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + shape_string(v.value().shape()));
  }
}

bool needs(Var v) { return v.graph->needs_grad(v.id); }

// Elementwise op whose derivative is a function of its output value.
template <typename Fwd, typename DerivFromOutput>
Var unary_from_output(Var a, Fwd fwd, DerivFromOutput deriv) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  const auto in = a.value().values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t ia = a.id;
  return g.add_node(std::move(out), needs(a),
                    [ia, deriv](Graph& g, std::size_t self, std::span<const Real> up) {
                      const auto y = g.value(self).values();
                      auto ga = g.grad(ia);
                      for (std::size_t i = 0; i < up.size(); ++i) {
                        ga[i] += up[i] * deriv(y[i]);
                      }
                    });
}

Var lookup_impl(Graph& g, const Parameter& table, Parameter* grad_target,
                std::size_t index) {
  if (table.value.rank() != 2) throw ShapeError("lookup: table must be a matrix");
  const std::size_t d = table.value.dim(0);
  const std::size_t vocab = table.value.dim(1);
  if (index >= vocab) {
    throw ShapeError("lookup: index " + std::to_string(index) +
                     " outside vocabulary of " + std::to_string(vocab));
  }
  Tensor out({d});
  for (std::size_t r = 0; r < d; ++r) out[r] = table.value.at(r, index);
  return g.add_node(std::move(out), grad_target != nullptr && index != 0,
                    [grad_target, index, d, vocab](Graph&, std::size_t,
                                                   std::span<const Real> up) {
                      Real* dst = grad_target->grad.data();
                      for (std::size_t r = 0; r < d; ++r) dst[r * vocab + index] += up[r];
                    });
}

Var embed_impl(Graph& g, const Parameter& table, Parameter* grad_target,
               std::span<const int> indices) {
  if (table.value.rank() != 2) throw ShapeError("embed: table must be a matrix");
  if (indices.empty()) throw ShapeError("embed: no indices");
  const std::size_t d = table.value.dim(0);
  const std::size_t vocab = table.value.dim(1);
  const std::size_t n = indices.size();
  std::vector<int> idx(indices.begin(), indices.end());
  Tensor out({d, n});
  for (std::size_t c = 0; c < n; ++c) {
    if (idx[c] < 0 || static_cast<std::size_t>(idx[c]) >= vocab) {
      throw ShapeError("embed: index " + std::to_string(idx[c]) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    for (std::size_t r = 0; r < d; ++r) out.at(r, c) = table.value.at(r, idx[c]);
  }
  return g.add_node(std::move(out), grad_target != nullptr,
                    [grad_target, idx = std::move(idx), d, vocab](
                        Graph&, std::size_t, std::span<const Real> up) {
                      const std::size_t n = idx.size();
                      Real* dst = grad_target->grad.data();
                      for (std::size_t c = 0; c < n; ++c) {
                        if (idx[c] == 0) continue;  // padding stays frozen
                        for (std::size_t r = 0; r < d; ++r) {
                          dst[r * vocab + idx[c]] += up[r * n + c];
                        }
                      }
                    });
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_size(a, b, "add");
  Tensor out(a.value().shape());
  as_vector(out.values()) = as_vector(a.value().values()) + as_vector(b.value().values());
  const std::size_t ia = a.id, ib = b.id;
  return g.add_node(std::move(out), needs(a) || needs(b),
                    [ia, ib](Graph& g, std::size_t, std::span<const Real> up) {
                      if (g.needs_grad(ia)) as_vector(g.grad(ia)) += as_vector(up);
                      if (g.needs_grad(ib)) as_vector(g.grad(ib)) += as_vector(up);
                    });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_size(a, b, "sub");
  Tensor out(a.value().shape());
  as_vector(out.values()) = as_vector(a.value().values()) - as_vector(b.value().values());
  const std::size_t ia = a.id, ib = b.id;
  return g.add_node(std::move(out), needs(a) || needs(b),
                    [ia, ib](Graph& g, std::size_t, std::span<const Real> up) {
                      if (g.needs_grad(ia)) as_vector(g.grad(ia)) += as_vector(up);
                      if (g.needs_grad(ib)) as_vector(g.grad(ib)) -= as_vector(up);
                    });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_size(a, b, "mul");
  Tensor out(a.value().shape());
  as_vector(out.values()) =
      as_vector(a.value().values()).cwiseProduct(as_vector(b.value().values()));
  const std::size_t ia = a.id, ib = b.id;
  return g.add_node(std::move(out), needs(a) || needs(b),
                    [ia, ib](Graph& g, std::size_t, std::span<const Real> up) {
                      const auto u = as_vector(up);
                      if (g.needs_grad(ia)) {
                        as_vector(g.grad(ia)) += u.cwiseProduct(as_vector(g.value(ib).values()));
                      }
                      if (g.needs_grad(ib)) {
                        as_vector(g.grad(ib)) += u.cwiseProduct(as_vector(g.value(ia).values()));
                      }
                    });
}

Var scale(Var a, Real k) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  as_vector(out.values()) = k * as_vector(a.value().values());
  const std::size_t ia = a.id;
  return g.add_node(std::move(out), needs(a),
                    [ia, k](Graph& g, std::size_t, std::span<const Real> up) {
                      as_vector(g.grad(ia)) += k * as_vector(up);
                    });
}

Var sigmoid(Var a) {
  return unary_from_output(
      a, [](Real x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](Real y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary_from_output(
      a, [](Real x) { return std::tanh(x); }, [](Real y) { return 1.0 - y * y; });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  Tensor out({1});
  out[0] = as_vector(a.value().values()).sum();
  const std::size_t ia = a.id;
  return g.add_node(std::move(out), needs(a),
                    [ia](Graph& g, std::size_t, std::span<const Real> up) {
                      as_vector(g.grad(ia)).array() += up[0];
                    });
}

Var matvec(Var w, Var x) {
  Graph& g = same_graph(w, x);
  require_rank(w, 2, "matvec");
  const std::size_t rows = w.value().dim(0), cols = w.value().dim(1);
  if (x.size() != cols) {
    throw ShapeError("matvec: " + shape_string(w.value().shape()) + " times " +
                     shape_string(x.value().shape()));
  }
  Tensor out({rows});
  as_vector(out.values()).noalias() =
      as_matrix(w.value().data(), rows, cols) * as_vector(x.value().values());
  const std::size_t iw = w.id, ix = x.id;
  return g.add_node(std::move(out), needs(w) || needs(x),
                    [iw, ix, rows, cols](Graph& g, std::size_t, std::span<const Real> up) {
                      const auto u = as_vector(up);
                      if (g.needs_grad(ix)) {
                        as_vector(g.grad(ix)).noalias() +=
                            as_matrix(g.value(iw).data(), rows, cols).transpose() * u;
                      }
                      if (g.needs_grad(iw)) {
                        as_matrix(g.grad(iw).data(), rows, cols).noalias() +=
                            u * as_vector(g.value(ix).values()).transpose();
                      }
                    });
}

Var affine(Var w, Var x, Var b) {
  Graph& g = same_graph(w, x);
  same_graph(w, b);
  require_rank(w, 2, "affine");
  const std::size_t rows = w.value().dim(0), cols = w.value().dim(1);
  if (x.size() != cols || b.size() != rows) {
    throw ShapeError("affine: " + shape_string(w.value().shape()) + " times " +
                     shape_string(x.value().shape()) + " plus " +
                     shape_string(b.value().shape()));
  }
  Tensor out({rows});
  as_vector(out.values()).noalias() =
      as_matrix(w.value().data(), rows, cols) * as_vector(x.value().values()) +
      as_vector(b.value().values());
  const std::size_t iw = w.id, ix = x.id, ib = b.id;
  return g.add_node(std::move(out), needs(w) || needs(x) || needs(b),
                    [iw, ix, ib, rows, cols](Graph& g, std::size_t,
                                             std::span<const Real> up) {
                      const auto u = as_vector(up);
                      if (g.needs_grad(ix)) {
                        as_vector(g.grad(ix)).noalias() +=
                            as_matrix(g.value(iw).data(), rows, cols).transpose() * u;
                      }
                      if (g.needs_grad(iw)) {
                        as_matrix(g.grad(iw).data(), rows, cols).noalias() +=
                            u * as_vector(g.value(ix).values()).transpose();
                      }
                      if (g.needs_grad(ib)) as_vector(g.grad(ib)) += u;
                    });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: nothing to concatenate");
  Graph& g = graph_of(parts[0]);
  std::vector<std::size_t> ids, offsets;
  std::size_t total = 0;
  bool any_grad = false;
  for (const Var& p : parts) {
    same_graph(parts[0], p);
    ids.push_back(p.id);
    offsets.push_back(total);
    total += p.size();
    any_grad = any_grad || needs(p);
  }
  Tensor out({total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].value().values();
    std::copy(v.begin(), v.end(), out.values().begin() + offsets[k]);
  }
  return g.add_node(std::move(out), any_grad,
                    [ids = std::move(ids), offsets = std::move(offsets)](
                        Graph& g, std::size_t, std::span<const Real> up) {
                      for (std::size_t k = 0; k < ids.size(); ++k) {
                        if (!g.needs_grad(ids[k])) continue;
                        auto dst = g.grad(ids[k]);
                        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += up[offsets[k] + i];
                      }
                    });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  Graph& g = graph_of(x);
  if (length == 0 || offset + length > x.size()) {
    throw ShapeError("slice [" + std::to_string(offset) + ", " +
                     std::to_string(offset + length) + ") of " +
                     shape_string(x.value().shape()));
  }
  const auto v = x.value().values();
  Tensor out(std::vector<std::size_t>{length},
             std::vector<Real>(v.begin() + offset, v.begin() + offset + length));
  const std::size_t ix = x.id;
  return g.add_node(std::move(out), needs(x),
                    [ix, offset](Graph& g, std::size_t, std::span<const Real> up) {
                      auto dst = g.grad(ix);
                      for (std::size_t i = 0; i < up.size(); ++i) dst[offset + i] += up[i];
                    });
}

Var columns(std::span<const Var> vectors) {
  if (vectors.empty()) throw ShapeError("columns: no vectors");
  Graph& g = graph_of(vectors[0]);
  const std::size_t d = vectors[0].size();
  const std::size_t n = vectors.size();
  std::vector<std::size_t> ids;
  bool any_grad = false;
  Tensor out({d, n});
  for (std::size_t c = 0; c < n; ++c) {
    same_graph(vectors[0], vectors[c]);
    if (vectors[c].size() != d) throw ShapeError("columns: unequal lengths");
    const auto v = vectors[c].value().values();
    for (std::size_t r = 0; r < d; ++r) out.at(r, c) = v[r];
    ids.push_back(vectors[c].id);
    any_grad = any_grad || needs(vectors[c]);
  }
  return g.add_node(std::move(out), any_grad,
                    [ids = std::move(ids), d](Graph& g, std::size_t,
                                              std::span<const Real> up) {
                      const std::size_t n = ids.size();
                      for (std::size_t c = 0; c < n; ++c) {
                        if (!g.needs_grad(ids[c])) continue;
                        auto dst = g.grad(ids[c]);
                        for (std::size_t r = 0; r < d; ++r) dst[r] += up[r * n + c];
                      }
                    });
}

Var lookup_column(Graph& g, Parameter& table, std::size_t index) {
  return lookup_impl(g, table, table.trainable ? &table : nullptr, index);
}

Var lookup_column(Graph& g, const Parameter& table, std::size_t index) {
  return lookup_impl(g, table, nullptr, index);
}

Var embed_columns(Graph& g, Parameter& table, std::span<const int> indices) {
  return embed_impl(g, table, table.trainable ? &table : nullptr, indices);
}

Var embed_columns(Graph& g, const Parameter& table, std::span<const int> indices) {
  return embed_impl(g, table, nullptr, indices);
}

Var wide_conv1d(Var seq, Var filters, Var bias) {
  Graph& g = same_graph(seq, filters);
  same_graph(seq, bias);
  require_rank(seq, 2, "wide_conv1d");
  require_rank(filters, 3, "wide_conv1d");
  const std::size_t d = seq.value().dim(0), s = seq.value().dim(1);
  const std::size_t k = filters.value().dim(0), m = filters.value().dim(2);
  if (filters.value().dim(1) != d) {
    throw ShapeError("wide_conv1d: sequence has " + std::to_string(d) +
                     " rows but filters expect " +
                     std::to_string(filters.value().dim(1)));
  }
  if (bias.size() != k) throw ShapeError("wide_conv1d: bias size != feature maps");
  if (s == 0 || m == 0) throw ShapeError("wide_conv1d: empty sequence or filter");

  const std::size_t width = s + m - 1;
  Tensor out({k, width});
  const Real* x = seq.value().data();
  const Real* f = filters.value().data();
  const Real* b = bias.value().data();
  for (std::size_t fm = 0; fm < k; ++fm) {
    for (std::size_t j = 0; j < width; ++j) {
      Real acc = b[fm];
      // Input position p = j - m + 1 + w must fall in [0, s).
      const std::size_t w_lo = j + 1 >= m ? 0 : m - 1 - j;
      const std::size_t w_hi = std::min(m, s + m - 1 - j);
      for (std::size_t r = 0; r < d; ++r) {
        const Real* frow = f + (fm * d + r) * m;
        const Real* xrow = x + r * s;
        for (std::size_t w = w_lo; w < w_hi; ++w) acc += frow[w] * xrow[j + w + 1 - m];
      }
      out.at(fm, j) = acc;
    }
  }
  const std::size_t ix = seq.id, iff = filters.id, ib = bias.id;
  return g.add_node(
      std::move(out), needs(seq) || needs(filters) || needs(bias),
      [ix, iff, ib, d, s, k, m, width](Graph& g, std::size_t, std::span<const Real> up) {
        const Real* x = g.value(ix).data();
        const Real* f = g.value(iff).data();
        Real* gx = g.needs_grad(ix) ? g.grad(ix).data() : nullptr;
        Real* gf = g.needs_grad(iff) ? g.grad(iff).data() : nullptr;
        Real* gb = g.needs_grad(ib) ? g.grad(ib).data() : nullptr;
        for (std::size_t fm = 0; fm < k; ++fm) {
          for (std::size_t j = 0; j < width; ++j) {
            const Real u = up[fm * width + j];
            if (u == 0) continue;
            if (gb) gb[fm] += u;
            const std::size_t w_lo = j + 1 >= m ? 0 : m - 1 - j;
            const std::size_t w_hi = std::min(m, s + m - 1 - j);
            for (std::size_t r = 0; r < d; ++r) {
              const std::size_t frow = (fm * d + r) * m;
              const std::size_t xrow = r * s;
              for (std::size_t w = w_lo; w < w_hi; ++w) {
                const std::size_t p = j + w + 1 - m;
                if (gf) gf[frow + w] += u * x[xrow + p];
                if (gx) gx[xrow + p] += u * f[frow + w];
              }
            }
          }
        }
      });
}

Var max_pool_time(Var feature_maps) {
  Graph& g = graph_of(feature_maps);
  require_rank(feature_maps, 2, "max_pool_time");
  const std::size_t k = feature_maps.value().dim(0), t = feature_maps.value().dim(1);
  if (t == 0) throw ShapeError("max_pool_time: empty time axis");
  Tensor out({k});
  std::vector<std::size_t> argmax(k);
  const Tensor& in = feature_maps.value();
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < t; ++c) {
      if (in.at(r, c) > in.at(r, best)) best = c;  // strict: first index wins ties
    }
    argmax[r] = best;
    out[r] = in.at(r, best);
  }
  const std::size_t ix = feature_maps.id;
  return g.add_node(std::move(out), needs(feature_maps),
                    [ix, t, argmax = std::move(argmax)](Graph& g, std::size_t,
                                                        std::span<const Real> up) {
                      auto dst = g.grad(ix);
                      for (std::size_t r = 0; r < argmax.size(); ++r) {
                        dst[r * t + argmax[r]] += up[r];
                      }
                    });
}

Var apply_mask(Var x, Tensor mask) {
  Graph& g = graph_of(x);
  if (mask.size() != x.size()) throw ShapeError("apply_mask: size mismatch");
  Tensor out(x.value().shape());
  as_vector(out.values()) =
      as_vector(x.value().values()).cwiseProduct(as_vector(mask.values()));
  const std::size_t ix = x.id;
  return g.add_node(std::move(out), needs(x),
                    [ix, mask = std::move(mask)](Graph& g, std::size_t,
                                                 std::span<const Real> up) {
                      as_vector(g.grad(ix)) +=
                          as_vector(up).cwiseProduct(as_vector(mask.values()));
                    });
}

Var dropout(Var x, Real p, Rng& rng) {
  if (!(p >= 0 && p < 1)) throw ContractError("dropout rate must be in [0, 1)");
  if (p == 0) return x;
  Tensor mask({x.size()});
  const Real keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  }
  return apply_mask(x, std::move(mask));
}

std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> probs(logits.size());
  if (logits.empty()) return probs;
  const Real mx = *std::max_element(logits.begin(), logits.end());
  Real z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    z += probs[i];
  }
  for (auto& p : probs) p /= z;
  return probs;
}

SoftmaxXent softmax_xent(Var logits, std::size_t target) {
  Graph& g = graph_of(logits);
  const auto z = logits.value().values();
  if (z.size() < 2) throw ShapeError("softmax_xent: need at least two classes");
  if (target >= z.size()) throw ContractError("softmax_xent: target out of range");
  const Real mx = *std::max_element(z.begin(), z.end());
  Real sum_exp = 0;
  for (const Real v : z) sum_exp += std::exp(v - mx);
  const Real log_z = mx + std::log(sum_exp);

  std::vector<Real> probs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) probs[i] = std::exp(z[i] - log_z);
  Tensor loss({1});
  loss[0] = log_z - z[target];

  const std::size_t il = logits.id;
  SoftmaxXent out;
  out.probs = Tensor::vector(probs);
  out.loss = g.add_node(std::move(loss), needs(logits),
                        [il, target, probs = std::move(probs)](
                            Graph& g, std::size_t, std::span<const Real> up) {
                          auto dst = g.grad(il);
                          for (std::size_t i = 0; i < probs.size(); ++i) {
                            dst[i] += up[0] * (probs[i] - (i == target ? 1.0 : 0.0));
                          }
                        });
  return out;
}

GradCheckReport grad_check(const GraphFn& f, std::span<Parameter* const> params,
                           Real eps) {
  if (!(eps > 0)) throw ContractError("grad_check: eps must be positive");
  auto evaluate = [&f]() {
    Graph g;
    const Var out = f(g);
    if (out.size() != 1) {
      throw ContractError("grad_check: function is not scalar-valued (shape " +
                          shape_string(out.value().shape()) + ")");
    }
    return out.value()[0];
  };

  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    const Var out = f(g);
    if (out.size() != 1) {
      throw ContractError("grad_check: function is not scalar-valued (shape " +
                          shape_string(out.value().shape()) + ")");
    }
    g.backward(out);
  }

  GradCheckReport report;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const Real original = p->value[i];
      p->value[i] = original + eps;
      const Real plus = evaluate();
      p->value[i] = original - eps;
      const Real minus = evaluate();
      p->value[i] = original;

      const Real numeric = (plus - minus) / (2 * eps);
      const Real analytic = p->grad[i];
      const Real err = std::abs(analytic - numeric) /
                       std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++report.entries_checked;
      if (err > report.max_relative_error || report.worst_parameter.empty()) {
        if (err >= report.max_relative_error) {
          report.max_relative_error = err;
          report.worst_parameter = p->name;
          report.worst_index = i;
        }
      }
    }
  }
  return report;
}

}  // namespace twsent::ad
