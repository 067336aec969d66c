#include "swe/graph.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "swe/error.hpp"

namespace swe::ad {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_bwd(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

double sigmoid_fwd(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.same_shape(b), std::string(op) + ": shape mismatch " +
                               shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_same_graph(Var a, Var b, const char* op) {
  require(a.graph != nullptr && a.graph == b.graph,
          std::string(op) + ": operands belong to different graphs");
}

}  // namespace

const Tensor& Var::value() const { return graph->value(*this); }
const Tensor& Var::grad() const { return graph->grad(*this); }

void Graph::check(Var v) const {
  require(v.graph == this && v.id >= 0 &&
              v.id < static_cast<int>(nodes_.size()),
          "variable does not belong to this graph");
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::emplace(Tensor value, std::vector<int> parents,
                   std::function<void(Graph&, int)> backprop) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (int p : n.parents) {
    if (nodes_[static_cast<std::size_t>(p)].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_alloc = true;
  }
  return n.grad;
}

const Tensor& Graph::value(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Graph::grad(Var v) const {
  check(v);
  require(nodes_[static_cast<std::size_t>(v.id)].grad_alloc,
          "no gradient stored for this variable; call backward first");
  return nodes_[static_cast<std::size_t>(v.id)].grad;
}

bool Graph::has_grad(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].grad_alloc;
}

bool Graph::requires_grad(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
}

void Graph::backward(Var loss) {
  check(loss);
  require(!backward_done_,
          "backward already ran on this graph; build a new graph per pass");
  require(nodes_[static_cast<std::size_t>(loss.id)].value.size() == 1,
          "backward expects a scalar loss, got shape " +
              shape_str(nodes_[static_cast<std::size_t>(loss.id)].value.shape()));
  backward_done_ = true;

  // Every node that wants a gradient gets one, zero-initialized, so
  // disconnected leaves report zeros rather than "missing".
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) grad_buffer(static_cast<int>(i));
  }
  if (!nodes_[static_cast<std::size_t>(loss.id)].requires_grad) return;
  grad_buffer(loss.id)[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.requires_grad && n.backprop) n.backprop(*this, id);
  }
}

// ---- operations ----

Var matmul(Var a, Var b) {
  check_same_graph(a, b, "matmul");
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.rank() == 2 && bv.rank() == 2,
          "matmul: expects rank-2 tensors, got " + shape_str(av.shape()) +
              " and " + shape_str(bv.shape()));
  require(av.dim(1) == bv.dim(0),
          "matmul: inner dimensions differ, " + shape_str(av.shape()) +
              " vs " + shape_str(bv.shape()));
  int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      double aik = av.at(i, kk);
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) out.at(i, j) += aik * bv.at(kk, j);
    }
  }
  return g.emplace(std::move(out), {a.id, b.id}, [m, k, n](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    int pa = gr.parents_of(self)[0];
    int pb = gr.parents_of(self)[1];
    if (gr.wants_grad(pa)) {
      const Tensor& bv2 = gr.value_of(pb);
      Tensor& da = gr.grad_buffer(pa);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double d = dc.at(i, j);
          if (d == 0.0) continue;
          for (int kk = 0; kk < k; ++kk) da.at(i, kk) += d * bv2.at(kk, j);
        }
    }
    if (gr.wants_grad(pb)) {
      const Tensor& av2 = gr.value_of(pa);
      Tensor& db = gr.grad_buffer(pb);
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          double aik = av2.at(i, kk);
          if (aik == 0.0) continue;
          for (int j = 0; j < n; ++j) db.at(kk, j) += aik * dc.at(i, j);
        }
    }
  });
}

Var transpose(Var a) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  require(av.rank() == 2, "transpose: expects rank-2 tensor, got " +
                              shape_str(av.shape()));
  int r = av.dim(0), c = av.dim(1);
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
  return g.emplace(std::move(out), {a.id}, [r, c](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) da.at(i, j) += dc.at(j, i);
  });
}

namespace {

template <typename Fwd>
Var binary_elementwise(Var a, Var b, const char* name, Fwd fwd,
                       std::function<void(Graph&, int)> bwd) {
  check_same_graph(a, b, name);
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  check_same_shape(av, bv, name);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return g.emplace(std::move(out), {a.id, b.id}, std::move(bwd));
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Graph& gr, int self) {
        const Tensor& dc = gr.grad_of(self);
        for (int side = 0; side < 2; ++side) {
          int p = gr.parents_of(self)[static_cast<std::size_t>(side)];
          if (!gr.wants_grad(p)) continue;
          Tensor& dp = gr.grad_buffer(p);
          for (std::size_t i = 0; i < dc.size(); ++i) dp[i] += dc[i];
        }
      });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Graph& gr, int self) {
        const Tensor& dc = gr.grad_of(self);
        int pa = gr.parents_of(self)[0];
        int pb = gr.parents_of(self)[1];
        if (gr.wants_grad(pa)) {
          Tensor& da = gr.grad_buffer(pa);
          for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i];
        }
        if (gr.wants_grad(pb)) {
          Tensor& db = gr.grad_buffer(pb);
          for (std::size_t i = 0; i < dc.size(); ++i) db[i] -= dc[i];
        }
      });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Graph& gr, int self) {
        const Tensor& dc = gr.grad_of(self);
        int pa = gr.parents_of(self)[0];
        int pb = gr.parents_of(self)[1];
        if (gr.wants_grad(pa)) {
          Tensor& da = gr.grad_buffer(pa);
          const Tensor& bv = gr.value_of(pb);
          for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * bv[i];
        }
        if (gr.wants_grad(pb)) {
          Tensor& db = gr.grad_buffer(pb);
          const Tensor& av = gr.value_of(pa);
          for (std::size_t i = 0; i < dc.size(); ++i) db[i] += dc[i] * av[i];
        }
      });
}

Var scale(Var a, double c) {
  Graph& g = *a.graph;
  require(std::isfinite(c), "scale: factor must be finite");
  const Tensor& av = g.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return g.emplace(std::move(out), {a.id}, [c](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * c;
  });
}

namespace {

Var unary_elementwise(Var a, double (*fwd)(double),
                      double (*deriv)(double, double)) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return g.emplace(std::move(out), {a.id}, [deriv](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    int p = gr.parents_of(self)[0];
    const Tensor& x = gr.value_of(p);
    const Tensor& y = gr.value_of(self);
    Tensor& da = gr.grad_buffer(p);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var gelu(Var a) {
  return unary_elementwise(a, gelu_fwd,
                           [](double x, double) { return gelu_bwd(x); });
}

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh_op(Var a) {
  return unary_elementwise(a, [](double x) { return std::tanh(x); },
                           [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_elementwise(a, sigmoid_fwd,
                           [](double, double y) { return y * (1.0 - y); });
}

Var softmax_lastdim(Var a) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  int ld = av.last_dim();
  std::size_t rows = av.size() / static_cast<std::size_t>(ld);
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * static_cast<std::size_t>(ld);
    double* y = out.data() + r * static_cast<std::size_t>(ld);
    double mx = x[0];
    for (int j = 1; j < ld; ++j) mx = std::max(mx, x[j]);
    double denom = 0.0;
    for (int j = 0; j < ld; ++j) {
      y[j] = std::exp(x[j] - mx);
      denom += y[j];
    }
    for (int j = 0; j < ld; ++j) y[j] /= denom;
  }
  return g.emplace(std::move(out), {a.id}, [ld, rows](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    const Tensor& y = gr.value_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t off = r * static_cast<std::size_t>(ld);
      double dot = 0.0;
      for (int j = 0; j < ld; ++j) dot += dc[off + j] * y[off + j];
      for (int j = 0; j < ld; ++j)
        da[off + j] += y[off + j] * (dc[off + j] - dot);
    }
  });
}

Var layer_norm_lastdim(Var a, double eps) {
  Graph& g = *a.graph;
  require(eps > 0.0, "layer_norm: eps must be positive");
  const Tensor& av = g.value(a);
  int ld = av.last_dim();
  std::size_t rows = av.size() / static_cast<std::size_t>(ld);
  Tensor out(av.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * static_cast<std::size_t>(ld);
    double* y = out.data() + r * static_cast<std::size_t>(ld);
    double mean = 0.0;
    for (int j = 0; j < ld; ++j) mean += x[j];
    mean /= ld;
    double var = 0.0;
    for (int j = 0; j < ld; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= ld;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < ld; ++j) y[j] = (x[j] - mean) * inv_std[r];
  }
  return g.emplace(
      std::move(out), {a.id},
      [ld, rows, inv_std = std::move(inv_std)](Graph& gr, int self) {
        const Tensor& dc = gr.grad_of(self);
        const Tensor& y = gr.value_of(self);
        Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          std::size_t off = r * static_cast<std::size_t>(ld);
          double mean_d = 0.0, mean_dy = 0.0;
          for (int j = 0; j < ld; ++j) {
            mean_d += dc[off + j];
            mean_dy += dc[off + j] * y[off + j];
          }
          mean_d /= ld;
          mean_dy /= ld;
          for (int j = 0; j < ld; ++j)
            da[off + j] +=
                inv_std[r] * (dc[off + j] - mean_d - y[off + j] * mean_dy);
        }
      });
}

Var add_rowvec(Var a, Var b) {
  check_same_graph(a, b, "add_rowvec");
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.rank() == 2 && bv.rank() == 1 && bv.dim(0) == av.dim(1),
          "add_rowvec: need [m x n] and [n], got " + shape_str(av.shape()) +
              " and " + shape_str(bv.shape()));
  int m = av.dim(0), n = av.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) + bv[static_cast<std::size_t>(j)];
  return g.emplace(std::move(out), {a.id, b.id}, [m, n](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    int pa = gr.parents_of(self)[0];
    int pb = gr.parents_of(self)[1];
    if (gr.wants_grad(pa)) {
      Tensor& da = gr.grad_buffer(pa);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i];
    }
    if (gr.wants_grad(pb)) {
      Tensor& db = gr.grad_buffer(pb);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) db[static_cast<std::size_t>(j)] += dc.at(i, j);
    }
  });
}

Var mul_rowvec(Var a, Var b) {
  check_same_graph(a, b, "mul_rowvec");
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.rank() == 2 && bv.rank() == 1 && bv.dim(0) == av.dim(1),
          "mul_rowvec: need [m x n] and [n], got " + shape_str(av.shape()) +
              " and " + shape_str(bv.shape()));
  int m = av.dim(0), n = av.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) * bv[static_cast<std::size_t>(j)];
  return g.emplace(std::move(out), {a.id, b.id}, [m, n](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    int pa = gr.parents_of(self)[0];
    int pb = gr.parents_of(self)[1];
    const Tensor& av2 = gr.value_of(pa);
    const Tensor& bv2 = gr.value_of(pb);
    if (gr.wants_grad(pa)) {
      Tensor& da = gr.grad_buffer(pa);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) da.at(i, j) += dc.at(i, j) * bv2[static_cast<std::size_t>(j)];
    }
    if (gr.wants_grad(pb)) {
      Tensor& db = gr.grad_buffer(pb);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) db[static_cast<std::size_t>(j)] += dc.at(i, j) * av2.at(i, j);
    }
  });
}

Var concat_cols(Var a, Var b) {
  check_same_graph(a, b, "concat_cols");
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.rank() == 2 && bv.rank() == 2 && av.dim(0) == bv.dim(0),
          "concat_cols: row counts differ, " + shape_str(av.shape()) + " vs " +
              shape_str(bv.shape()));
  int m = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
  Tensor out({m, ca + cb});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = bv.at(i, j);
  }
  return g.emplace(std::move(out), {a.id, b.id}, [m, ca, cb](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    int pa = gr.parents_of(self)[0];
    int pb = gr.parents_of(self)[1];
    if (gr.wants_grad(pa)) {
      Tensor& da = gr.grad_buffer(pa);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < ca; ++j) da.at(i, j) += dc.at(i, j);
    }
    if (gr.wants_grad(pb)) {
      Tensor& db = gr.grad_buffer(pb);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < cb; ++j) db.at(i, j) += dc.at(i, ca + j);
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: needs at least one part");
  Graph& g = *parts[0].graph;
  int cols = g.value(parts[0]).dim(1);
  int total_rows = 0;
  std::vector<int> ids;
  std::vector<int> row_counts;
  for (Var p : parts) {
    check_same_graph(parts[0], p, "concat_rows");
    const Tensor& pv = g.value(p);
    require(pv.rank() == 2 && pv.dim(1) == cols,
            "concat_rows: column counts differ");
    ids.push_back(p.id);
    row_counts.push_back(pv.dim(0));
    total_rows += pv.dim(0);
  }
  Tensor out({total_rows, cols});
  int row = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    for (int i = 0; i < pv.dim(0); ++i, ++row)
      for (int j = 0; j < cols; ++j) out.at(row, j) = pv.at(i, j);
  }
  return g.emplace(std::move(out), std::move(ids),
                   [row_counts, cols](Graph& gr, int self) {
                     const Tensor& dc = gr.grad_of(self);
                     int row0 = 0;
                     const auto& parents = gr.parents_of(self);
                     for (std::size_t k = 0; k < parents.size(); ++k) {
                       int p = parents[k];
                       int rc = row_counts[k];
                       if (gr.wants_grad(p)) {
                         Tensor& dp = gr.grad_buffer(p);
                         for (int i = 0; i < rc; ++i)
                           for (int j = 0; j < cols; ++j)
                             dp.at(i, j) += dc.at(row0 + i, j);
                       }
                       row0 += rc;
                     }
                   });
}

Var slice_cols(Var a, int start, int width) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  require(av.rank() == 2, "slice_cols: expects rank-2 tensor");
  require(start >= 0 && width > 0 && start + width <= av.dim(1),
          "slice_cols: range [" + std::to_string(start) + ", " +
              std::to_string(start + width) + ") out of bounds for " +
              shape_str(av.shape()));
  int m = av.dim(0);
  Tensor out({m, width});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < width; ++j) out.at(i, j) = av.at(i, start + j);
  return g.emplace(std::move(out), {a.id}, [m, start, width](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < width; ++j) da.at(i, start + j) += dc.at(i, j);
  });
}

Var slice_rows(Var a, int start, int count) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  require(av.rank() == 2, "slice_rows: expects rank-2 tensor");
  require(start >= 0 && count > 0 && start + count <= av.dim(0),
          "slice_rows: range [" + std::to_string(start) + ", " +
              std::to_string(start + count) + ") out of bounds for " +
              shape_str(av.shape()));
  int cols = av.dim(1);
  Tensor out({count, cols});
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) = av.at(start + i, j);
  return g.emplace(std::move(out), {a.id}, [start, count, cols](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < cols; ++j) da.at(start + i, j) += dc.at(i, j);
  });
}

Var reshape(Var a, std::vector<int> shape) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  require(shape_size(shape) == av.size(),
          "reshape: cannot view " + shape_str(av.shape()) + " as " +
              shape_str(shape));
  Tensor out(std::move(shape), av.values());
  return g.emplace(std::move(out), {a.id}, [](Graph& gr, int self) {
    const Tensor& dc = gr.grad_of(self);
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i];
  });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  const Tensor& av = g.value(a);
  double total = std::accumulate(av.values().begin(), av.values().end(), 0.0);
  return g.emplace(Tensor::scalar(total), {a.id}, [](Graph& gr, int self) {
    double d = gr.grad_of(self)[0];
    Tensor& da = gr.grad_buffer(gr.parents_of(self)[0]);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += d;
  });
}

}  // namespace swe::ad
