// SPDX-License-Identifier: Apache-2.0
#include "wakavt/numerics/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "wakavt/numerics/kernels.hpp"

namespace wakavt::numerics {

namespace {

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void require_same(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    shape_fail(op, "shape mismatch " + shape_to_string(a.shape()) + " vs " +
                       shape_to_string(b.shape()));
  }
}

void require_rank2(const char* op, const Var& a) {
  if (a.value().rank() != 2) shape_fail(op, "expected a matrix, got " + shape_to_string(a.shape()));
}

// Applies f elementwise and g(x, y) as the local derivative.
template <typename F, typename G>
Var unary(const Var& x, F f, G dfdx) {
  Tensor out(x.shape());
  const auto& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(std::move(out), {x}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    Tensor& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
    }
  });
}

void accumulate(Node& p, const Tensor& g) {
  Tensor& buf = p.grad_buffer();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    shape_fail("matmul", "inner extents differ: " + shape_to_string(a.shape()) + " @ " +
                             shape_to_string(b.shape()));
  }
  Tensor out({m, n});
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, n);
  return make_result(std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      kernels::matmul_nt(self.grad.data(), pb.value.data(), pa.grad_buffer().data(), m, n, k, true);
    }
    if (pb.requires_grad) {
      kernels::matmul_tn(pa.value.data(), self.grad.data(), pb.grad_buffer().data(), m, k, n, true);
    }
  });
}

namespace {
Var linear_impl(const Var& x, const Var& w, const Var* b) {
  require_rank2("linear", w);
  const std::size_t din = w.shape()[0], dout = w.shape()[1];
  if (x.shape().back() != din) {
    shape_fail("linear", "trailing extent of x " + shape_to_string(x.shape()) +
                             " does not match weight " + shape_to_string(w.shape()));
  }
  if (b && (b->value().rank() != 1 || b->shape()[0] != dout)) {
    shape_fail("linear", "bias " + shape_to_string(b->shape()) + " does not match weight " +
                             shape_to_string(w.shape()));
  }
  const std::size_t m = x.value().size() / din;
  Shape out_shape = x.shape();
  out_shape.back() = dout;
  Tensor out(out_shape);
  kernels::matmul(x.value().data(), w.value().data(), out.data(), m, din, dout);
  if (b) {
    const double* bv = b->value().data();
    for (std::size_t r = 0; r < m; ++r) {
      double* row = out.data() + r * dout;
      for (std::size_t j = 0; j < dout; ++j) row[j] += bv[j];
    }
  }
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(*b);
  return make_result(std::move(out), std::move(inputs), [m, din, dout](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    if (px.requires_grad) {
      kernels::matmul_nt(self.grad.data(), pw.value.data(), px.grad_buffer().data(), m, dout, din,
                         true);
    }
    if (pw.requires_grad) {
      kernels::matmul_tn(px.value.data(), self.grad.data(), pw.grad_buffer().data(), m, din, dout,
                         true);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      double* gb = self.parents[2]->grad_buffer().data();
      for (std::size_t r = 0; r < m; ++r) {
        const double* g = self.grad.data() + r * dout;
        for (std::size_t j = 0; j < dout; ++j) gb[j] += g[j];
      }
    }
  });
}
}  // namespace

Var linear(const Var& x, const Var& w, const Var& b) { return linear_impl(x, w, &b); }
Var linear(const Var& x, const Var& w) { return linear_impl(x, w, nullptr); }

Var transpose(const Var& a) {
  require_rank2("transpose", a);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.value().at(i, j);
  return make_result(std::move(out), {a}, [m, n](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) += self.grad.at(j, i);
  });
}

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) accumulate(*p, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Tensor& g = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return make_result(std::move(out), {a}, [s](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  return make_result(std::move(out), {a}, [](Node& self) {
    accumulate(*self.parents[0], self.grad);
  });
}

Var add_row(const Var& x, const Var& v) {
  if (v.value().rank() != 1 || v.shape()[0] != x.cols()) {
    shape_fail("add_row", shape_to_string(x.shape()) + " + " + shape_to_string(v.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += v.value()[j];
  return make_result(std::move(out), {x, v}, [m, n](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Tensor& g = self.parents[1]->grad_buffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
    }
  });
}

Var add_constant(const Var& x, const Tensor& c) {
  if (x.shape() != c.shape()) {
    shape_fail("add_constant", shape_to_string(x.shape()) + " + " + shape_to_string(c.shape()));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return make_result(std::move(out), {x}, [](Node& self) {
    accumulate(*self.parents[0], self.grad);
  });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var square(const Var& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softmax(const Var& x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    shape_fail("softmax", "axis " + std::to_string(axis) + " out of range for " +
                              shape_to_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  Tensor out = x.value();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in)
      kernels::softmax_strided(out.data() + o * len * inner + in, len, inner);
  return make_result(std::move(out), {x}, [outer, inner, len](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    const Tensor& y = self.value;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += self.grad[base + i * inner] * y[base + i * inner];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t k = base + i * inner;
          g[k] += y[k] * (self.grad[k] - s);
        }
      }
    }
  });
}

Var log_softmax(const Var& x) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  for (std::size_t r = 0; r < m; ++r) kernels::log_softmax(out.row(r));
  return make_result(std::move(out), {x}, [m, n](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += self.grad[r * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = r * n + j;
        g[k] += self.grad[k] - std::exp(self.value[k]) * s;
      }
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const std::size_t d = x.cols();
  if (gamma.value().rank() != 1 || gamma.shape()[0] != d || beta.shape() != gamma.shape()) {
    shape_fail("layer_norm", "gain/bias " + shape_to_string(gamma.shape()) + "/" +
                                 shape_to_string(beta.shape()) + " do not match input " +
                                 shape_to_string(x.shape()));
  }
  if (!(eps > 0.0)) shape_fail("layer_norm", "eps must be positive");
  const std::size_t m = x.rows();
  Tensor out(x.shape());
  Tensor xhat(x.shape());
  std::vector<double> rstd(m);
  const Tensor ones({d}, 1.0);
  const Tensor zeros({d}, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    rstd[r] = kernels::layer_norm_row(x.value().row(r), ones.values(), zeros.values(), eps,
                                      xhat.row(r));
    for (std::size_t j = 0; j < d; ++j) {
      out.at(r, j) = xhat.at(r, j) * gamma.value()[j] + beta.value()[j];
    }
  }
  return make_result(std::move(out), {x, gamma, beta},
                     [m, d, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pg = *self.parents[1];
                       Node& pb = *self.parents[2];
                       const Tensor& gam = pg.value;
                       std::vector<double> dxhat(d);
                       for (std::size_t r = 0; r < m; ++r) {
                         const double* g = self.grad.data() + r * d;
                         const double* xh = xhat.data() + r * d;
                         if (pg.requires_grad) {
                           Tensor& gg = pg.grad_buffer();
                           for (std::size_t j = 0; j < d; ++j) gg[j] += g[j] * xh[j];
                         }
                         if (pb.requires_grad) {
                           Tensor& gb = pb.grad_buffer();
                           for (std::size_t j = 0; j < d; ++j) gb[j] += g[j];
                         }
                         if (px.requires_grad) {
                           double mean_dx = 0.0, mean_dxx = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             dxhat[j] = g[j] * gam[j];
                             mean_dx += dxhat[j];
                             mean_dxx += dxhat[j] * xh[j];
                           }
                           mean_dx /= static_cast<double>(d);
                           mean_dxx /= static_cast<double>(d);
                           double* gx = px.grad_buffer().data() + r * d;
                           for (std::size_t j = 0; j < d; ++j) {
                             gx[j] += rstd[r] * (dxhat[j] - mean_dx - xh[j] * mean_dxx);
                           }
                         }
                       }
                     });
}

Var dropout_with_mask(const Var& x, double rate, std::span<const bool> keep) {
  if (keep.size() != x.value().size()) shape_fail("dropout", "mask size mismatch");
  if (!(rate >= 0.0 && rate < 1.0)) shape_fail("dropout", "rate must lie in [0, 1)");
  const double s = 1.0 / (1.0 - rate);
  Tensor factor(x.shape());
  for (std::size_t i = 0; i < factor.size(); ++i) factor[i] = keep[i] ? s : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  return make_result(std::move(out), {x}, [factor = std::move(factor)](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor[i];
  });
}

Var dropout(const Var& x, double rate, Mode mode, Rng* rng) {
  if (!(rate >= 0.0 && rate < 1.0)) shape_fail("dropout", "rate must lie in [0, 1)");
  if (mode == Mode::Infer || rate == 0.0) return x;
  if (!rng) shape_fail("dropout", "training-mode dropout needs a noise source");
  std::unique_ptr<bool[]> keep(new bool[x.value().size()]);
  for (std::size_t i = 0; i < x.value().size(); ++i) keep[i] = rng->uniform() >= rate;
  return dropout_with_mask(x, rate, std::span<const bool>(keep.get(), x.value().size()));
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  require_rank2("slice_rows", x);
  if (begin >= end || end > x.rows()) shape_fail("slice_rows", "bad row range");
  const std::size_t n = x.cols();
  Tensor out({end - begin, n});
  std::memcpy(out.data(), x.value().data() + begin * n, (end - begin) * n * sizeof(double));
  return make_result(std::move(out), {x}, [begin, n](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require_rank2("slice_cols", x);
  if (begin >= end || end > x.cols()) shape_fail("slice_cols", "bad column range");
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  Tensor out({m, w});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < w; ++j) out.at(r, j) = x.value().at(r, begin + j);
  return make_result(std::move(out), {x}, [m, n, w, begin](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < w; ++j) g[r * n + begin + j] += self.grad[r * w + j];
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) shape_fail("concat_rows", "no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_rank2("concat_rows", p);
    if (p.cols() != n) shape_fail("concat_rows", "column extents differ");
    m += p.rows();
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::memcpy(out.data() + off, p.value().data(), p.value().size() * sizeof(double));
    off += p.value().size();
  }
  return make_result(std::move(out), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t sz = p->value.size();
      if (p->requires_grad) {
        Tensor& g = p->grad_buffer();
        for (std::size_t i = 0; i < sz; ++i) g[i] += self.grad[off + i];
      }
      off += sz;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) shape_fail("concat_cols", "no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank2("concat_cols", p);
    if (p.rows() != m) shape_fail("concat_cols", "row extents differ");
    n += p.cols();
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r)
      std::memcpy(out.data() + r * n + off, p.value().data() + r * w, w * sizeof(double));
    off += w;
  }
  return make_result(std::move(out), parts, [m, n](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t w = p->value.cols();
      if (p->requires_grad) {
        Tensor& g = p->grad_buffer();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < w; ++j) g[r * w + j] += self.grad[r * n + off + j];
      }
      off += w;
    }
  });
}

Var embedding(const Var& table, std::span<const int> ids) {
  require_rank2("embedding", table);
  if (ids.empty()) shape_fail("embedding", "no ids");
  const std::size_t v = table.rows(), d = table.cols();
  Tensor out({ids.size(), d});
  std::vector<int> idv(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      shape_fail("embedding", "id " + std::to_string(ids[i]) + " outside table of " +
                                  std::to_string(v) + " rows");
    }
    std::memcpy(out.data() + i * d, table.value().data() + ids[i] * d, d * sizeof(double));
  }
  return make_result(std::move(out), {table}, [d, idv = std::move(idv)](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      double* row = g.data() + static_cast<std::size_t>(idv[i]) * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
    }
  });
}

Var pick(const Var& x, std::span<const std::pair<std::size_t, std::size_t>> coords) {
  require_rank2("pick", x);
  if (coords.empty()) shape_fail("pick", "no coordinates");
  const std::size_t n = x.cols();
  std::vector<std::size_t> flat(coords.size());
  Tensor out({coords.size()});
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].first >= x.rows() || coords[i].second >= n) {
      shape_fail("pick", "coordinate out of range");
    }
    flat[i] = coords[i].first * n + coords[i].second;
    out[i] = x.value()[flat[i]];
  }
  return make_result(std::move(out), {x}, [flat = std::move(flat)](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < flat.size(); ++i) g[flat[i]] += self.grad[i];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_result(Tensor::scalar(s), {x}, [](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    const double gv = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gv;
  });
}

Var mean(const Var& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

}  // namespace wakavt::numerics
