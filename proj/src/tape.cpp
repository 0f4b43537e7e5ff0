#include "clkcrec/tape.hpp"

#include <algorithm>
#include <cmath>

#include "clkcrec/errors.hpp"
#include "clkcrec/kernels.hpp"

namespace clk {

double Param::grad_norm() const {
  double s = 0.0;
  for (double g : grad.values()) s += g * g;
  return std::sqrt(s);
}

Tape::Node& Tape::node(Id id) {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) throw UsageError("tape id out of range");
  return nodes_[id];
}

const Tape::Node& Tape::node(Id id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) throw UsageError("tape id out of range");
  return nodes_[id];
}

Tape::Id Tape::push_dense(DenseMatrix v, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(v);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tape::Id Tape::push_sparse(SparseMatrix v, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.sval = std::move(v);
  n.sparse = true;
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const DenseMatrix& Tape::value(Id id) const {
  const Node& n = node(id);
  if (n.sparse) throw UsageError("value(): node is sparse");
  return n.val;
}

const SparseMatrix& Tape::sparse_value(Id id) const {
  const Node& n = node(id);
  if (!n.sparse) throw UsageError("sparse_value(): node is dense");
  return n.sval;
}

const DenseMatrix& Tape::grad(Id id) const {
  const Node& n = node(id);
  if (n.sparse) throw UsageError("grad(): node is sparse");
  return n.grad;
}

double Tape::scalar(Id id) const {
  const DenseMatrix& v = value(id);
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("scalar(): node is not 1x1");
  return v.at(0, 0);
}

bool Tape::requires_grad(Id id) const { return node(id).needs_grad; }

void Tape::accum(Id id, const DenseMatrix& g) {
  Node& n = node(id);
  if (!n.needs_grad) return;
  for (std::size_t i = 0; i < n.grad.values().size(); ++i) n.grad.values()[i] += g.values()[i];
}

Tape::Id Tape::leaf(Param& p) {
  Id id = push_dense(p.value, true, nullptr);
  nodes_[id].param = &p;
  nodes_[id].back = [id](Tape& t) {
    Node& n = t.nodes_[id];
    for (std::size_t i = 0; i < n.grad.values().size(); ++i)
      n.param->grad.values()[i] += n.grad.values()[i];
  };
  return id;
}

Tape::Id Tape::constant(DenseMatrix v) { return push_dense(std::move(v), false, nullptr); }

Tape::Id Tape::add(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("add: shape mismatch");
  DenseMatrix out = va;
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] += vb.values()[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      t.accum(a, t.nodes_[id].grad);
      t.accum(b, t.nodes_[id].grad);
    };
  return id;
}

Tape::Id Tape::sub(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("sub: shape mismatch");
  DenseMatrix out = va;
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] -= vb.values()[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      t.accum(a, g);
      if (t.nodes_[b].needs_grad) {
        DenseMatrix ng_(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.values().size(); ++i) ng_.values()[i] = -g.values()[i];
        t.accum(b, ng_);
      }
    };
  return id;
}

Tape::Id Tape::scale(Id a, double c) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x *= c;
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, c, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i) ga.values()[i] = c * g.values()[i];
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::ew_mul(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("ew_mul: shape mismatch");
  DenseMatrix out = va;
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] *= vb.values()[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      if (t.nodes_[a].needs_grad) {
        DenseMatrix ga(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.values().size(); ++i)
          ga.values()[i] = g.values()[i] * t.nodes_[b].val.values()[i];
        t.accum(a, ga);
      }
      if (t.nodes_[b].needs_grad) {
        DenseMatrix gb(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.values().size(); ++i)
          gb.values()[i] = g.values()[i] * t.nodes_[a].val.values()[i];
        t.accum(b, gb);
      }
    };
  return id;
}

Tape::Id Tape::ew_div(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("ew_div: shape mismatch");
  DenseMatrix out = va;
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] /= vb.values()[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      const DenseMatrix& vb_ = t.nodes_[b].val;
      if (t.nodes_[a].needs_grad) {
        DenseMatrix ga(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.values().size(); ++i)
          ga.values()[i] = g.values()[i] / vb_.values()[i];
        t.accum(a, ga);
      }
      if (t.nodes_[b].needs_grad) {
        DenseMatrix gb(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.values().size(); ++i)
          gb.values()[i] = -g.values()[i] * y.values()[i] / vb_.values()[i];
        t.accum(b, gb);
      }
    };
  return id;
}

Tape::Id Tape::tanh_(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = std::tanh(x);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] * (1.0 - y.values()[i] * y.values()[i]);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::sigmoid_(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = 1.0 / (1.0 + std::exp(-x));
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] * y.values()[i] * (1.0 - y.values()[i]);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::exp_(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = std::exp(x);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] * y.values()[i];
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::log_(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = std::log(x);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va = t.nodes_[a].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] / va.values()[i];
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::sqrt_(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = std::sqrt(x);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] * 0.5 / y.values()[i];
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::softplus(Id a) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va = t.nodes_[a].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] / (1.0 + std::exp(-va.values()[i]));
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
  DenseMatrix out = value(a);
  for (double& x : out.values()) x = x > 0.0 ? x : slope * x;
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, slope, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va = t.nodes_[a].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.values().size(); ++i)
        ga.values()[i] = g.values()[i] * (va.values()[i] > 0.0 ? 1.0 : slope);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::row_softmax(Id a) {
  const DenseMatrix& va = value(a);
  if (va.cols() == 0 || va.rows() == 0) throw ShapeError("row_softmax: empty input");
  DenseMatrix out(va.rows(), va.cols());
  for (int i = 0; i < va.rows(); ++i) {
    double mx = va.at(i, 0);
    for (int j = 1; j < va.cols(); ++j) mx = std::max(mx, va.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < va.cols(); ++j) {
      out.at(i, j) = std::exp(va.at(i, j) - mx);
      sum += out.at(i, j);
    }
    for (int j = 0; j < va.cols(); ++j) out.at(i, j) /= sum;
  }
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& y = t.nodes_[id].val;
      DenseMatrix ga(g.rows(), g.cols());
      for (int i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < g.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
        for (int j = 0; j < g.cols(); ++j) ga.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
      }
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::row_sum(Id a) {
  const DenseMatrix& va = value(a);
  DenseMatrix out(va.rows(), 1);
  for (int i = 0; i < va.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < va.cols(); ++j) s += va.at(i, j);
    out.at(i, 0) = s;
  }
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va_ = t.nodes_[a].val;
      DenseMatrix ga(va_.rows(), va_.cols());
      for (int i = 0; i < va_.rows(); ++i)
        for (int j = 0; j < va_.cols(); ++j) ga.at(i, j) = g.at(i, 0);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::reduce_sum(Id a) {
  const DenseMatrix& va = value(a);
  double s = 0.0;
  for (double x : va.values()) s += x;
  DenseMatrix out(1, 1);
  out.at(0, 0) = s;
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const double g = t.nodes_[id].grad.at(0, 0);
      const DenseMatrix& va_ = t.nodes_[a].val;
      DenseMatrix ga(va_.rows(), va_.cols(), g);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::rows_scale(Id a, Id v) {
  const DenseMatrix &va = value(a), &vv = value(v);
  if (vv.rows() != va.rows() || vv.cols() != 1) throw ShapeError("rows_scale: scaler must be n x 1");
  DenseMatrix out = va;
  for (int i = 0; i < va.rows(); ++i)
    for (int j = 0; j < va.cols(); ++j) out.at(i, j) *= vv.at(i, 0);
  bool ng = requires_grad(a) || requires_grad(v);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, v, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va_ = t.nodes_[a].val;
      const DenseMatrix& vv_ = t.nodes_[v].val;
      if (t.nodes_[a].needs_grad) {
        DenseMatrix ga(g.rows(), g.cols());
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) ga.at(i, j) = g.at(i, j) * vv_.at(i, 0);
        t.accum(a, ga);
      }
      if (t.nodes_[v].needs_grad) {
        DenseMatrix gv(g.rows(), 1);
        for (int i = 0; i < g.rows(); ++i) {
          double s = 0.0;
          for (int j = 0; j < g.cols(); ++j) s += g.at(i, j) * va_.at(i, j);
          gv.at(i, 0) = s;
        }
        t.accum(v, gv);
      }
    };
  return id;
}

Tape::Id Tape::add_row_bias(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (vb.rows() != 1 || vb.cols() != va.cols()) throw ShapeError("add_row_bias: bias must be 1 x cols");
  DenseMatrix out = va;
  for (int i = 0; i < va.rows(); ++i)
    for (int j = 0; j < va.cols(); ++j) out.at(i, j) += vb.at(0, j);
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      t.accum(a, g);
      if (t.nodes_[b].needs_grad) {
        DenseMatrix gb(1, g.cols());
        for (int j = 0; j < g.cols(); ++j) {
          double s = 0.0;
          for (int i = 0; i < g.rows(); ++i) s += g.at(i, j);
          gb.at(0, j) = s;
        }
        t.accum(b, gb);
      }
    };
  return id;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const DenseMatrix &va = value(a), &vb = value(b);
  if (va.rows() != vb.rows()) throw ShapeError("concat_cols: row count mismatch");
  DenseMatrix out(va.rows(), va.cols() + vb.cols());
  for (int i = 0; i < va.rows(); ++i) {
    for (int j = 0; j < va.cols(); ++j) out.at(i, j) = va.at(i, j);
    for (int j = 0; j < vb.cols(); ++j) out.at(i, va.cols() + j) = vb.at(i, j);
  }
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const int ca = t.nodes_[a].val.cols();
      if (t.nodes_[a].needs_grad) {
        DenseMatrix ga(g.rows(), ca);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < ca; ++j) ga.at(i, j) = g.at(i, j);
        t.accum(a, ga);
      }
      if (t.nodes_[b].needs_grad) {
        const int cb = t.nodes_[b].val.cols();
        DenseMatrix gb(g.rows(), cb);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < cb; ++j) gb.at(i, j) = g.at(i, ca + j);
        t.accum(b, gb);
      }
    };
  return id;
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> rows) {
  const DenseMatrix& va = value(a);
  for (int r : rows)
    if (r < 0 || r >= va.rows()) throw UsageError("gather_rows: index out of range");
  DenseMatrix out(static_cast<int>(rows.size()), va.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < va.cols(); ++j) out.at(static_cast<int>(i), j) = va.at(rows[i], j);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, rows = std::move(rows), id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va_ = t.nodes_[a].val;
      DenseMatrix ga(va_.rows(), va_.cols());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < g.cols(); ++j) ga.at(rows[i], j) += g.at(static_cast<int>(i), j);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::select_col(Id a, int col) {
  const DenseMatrix& va = value(a);
  if (col < 0 || col >= va.cols()) throw UsageError("select_col: index out of range");
  DenseMatrix out(va.rows(), 1);
  for (int i = 0; i < va.rows(); ++i) out.at(i, 0) = va.at(i, col);
  bool ng = requires_grad(a);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, col, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& va_ = t.nodes_[a].val;
      DenseMatrix ga(va_.rows(), va_.cols());
      for (int i = 0; i < g.rows(); ++i) ga.at(i, col) = g.at(i, 0);
      t.accum(a, ga);
    };
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  DenseMatrix out = clk::matmul(value(a), value(b));
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      if (t.nodes_[a].needs_grad) t.accum(a, clk::matmul_nt(g, t.nodes_[b].val));
      if (t.nodes_[b].needs_grad) t.accum(b, clk::matmul_tn(t.nodes_[a].val, g));
    };
  return id;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
  DenseMatrix out = clk::matmul_nt(value(a), value(b));
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      if (t.nodes_[a].needs_grad) t.accum(a, clk::matmul(g, t.nodes_[b].val));
      if (t.nodes_[b].needs_grad) t.accum(b, clk::matmul_tn(g, t.nodes_[a].val));
    };
  return id;
}

Tape::Id Tape::matmul_tn(Id a, Id b) {
  DenseMatrix out = clk::matmul_tn(value(a), value(b));
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      if (t.nodes_[a].needs_grad) t.accum(a, clk::matmul_nt(t.nodes_[b].val, g));
      if (t.nodes_[b].needs_grad) t.accum(b, clk::matmul(t.nodes_[a].val, g));
    };
  return id;
}

Tape::Id Tape::circcorr_rows(Id h, Id z) {
  const DenseMatrix &vh = value(h), &vz = value(z);
  if (vz.rows() != 1 || vz.cols() != vh.cols()) throw ShapeError("circcorr_rows: z must be 1 x d");
  const int d = vh.cols();
  DenseMatrix out(vh.rows(), d);
  kernels::circcorr_rows(vh.data(), vz.data(), out.data(), vh.rows(), d);
  bool ng = requires_grad(h) || requires_grad(z);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [h, z, d, id](Tape& t) {
      const DenseMatrix& g = t.nodes_[id].grad;
      const DenseMatrix& vh_ = t.nodes_[h].val;
      const DenseMatrix& vz_ = t.nodes_[z].val;
      if (t.nodes_[h].needs_grad) {
        // d out[r][t] / d h[r][i] = z[(i+t)%d]; index symmetric in (i,t),
        // so grad_h row = circ_corr(grad row, z)
        DenseMatrix gh(g.rows(), d);
        kernels::circcorr_rows(g.data(), vz_.data(), gh.data(), g.rows(), d);
        t.accum(h, gh);
      }
      if (t.nodes_[z].needs_grad) {
        // accumulate into a doubled buffer, then fold: avoids mod d inside
        std::vector<double> acc2(2 * d, 0.0);
        for (int r = 0; r < g.rows(); ++r) {
          const double* gr = g.data() + static_cast<long>(r) * d;
          const double* hr = vh_.data() + static_cast<long>(r) * d;
          for (int tt = 0; tt < d; ++tt) {
            const double gv = gr[tt];
            if (gv == 0.0) continue;
            double* at = acc2.data() + tt;
            for (int i = 0; i < d; ++i) at[i] += gv * hr[i];
          }
        }
        DenseMatrix gz(1, d);
        for (int i = 0; i < d; ++i) gz.at(0, i) = acc2[i] + acc2[d + i];
        t.accum(z, gz);
      }
    };
  return id;
}

Tape::Id Tape::spmm_const(const SparseMatrix* a, Id x) {
  DenseMatrix out = clk::spmm(*a, value(x));
  bool ng = requires_grad(x);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, x, id](Tape& t) {
      t.accum(x, clk::spmm(sp_transpose(*a), t.nodes_[id].grad));
    };
  return id;
}

Tape::Id Tape::sp_combine(std::vector<const SparseMatrix*> mats, Id weights) {
  const DenseMatrix& w = value(weights);
  if (static_cast<std::size_t>(w.rows()) * w.cols() != mats.size())
    throw ShapeError("sp_combine: weight count mismatch");
  std::vector<double> wv(w.values().begin(), w.values().end());
  SparseMatrix out = sp_lincomb(mats, wv);
  bool ng = requires_grad(weights);
  Id id = push_sparse(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [mats = std::move(mats), weights, id](Tape& t) {
      const SparseMatrix& s = t.nodes_[id].sval;
      const std::vector<double>& gs = t.nodes_[id].sgrad;
      DenseMatrix gw(t.nodes_[weights].val.rows(), t.nodes_[weights].val.cols());
      for (std::size_t m = 0; m < mats.size(); ++m) {
        const SparseMatrix& am = *mats[m];
        double acc = 0.0;
        for (int i = 0; i < am.rows(); ++i)
          for (int e = am.rowptr()[i]; e < am.rowptr()[i + 1]; ++e) {
            int pos = s.find(i, am.colidx()[e]);
            if (pos >= 0) acc += gs[pos] * am.vals()[e];
          }
        gw.values()[m] = acc;
      }
      t.accum(weights, gw);
    };
  return id;
}

Tape::Id Tape::sp_row_normalize_v(Id a) {
  const SparseMatrix& va = sparse_value(a);
  SparseMatrix out = clk::sp_row_normalize(va);
  bool ng = requires_grad(a);
  Id id = push_sparse(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const SparseMatrix& x = t.nodes_[a].sval;
      const std::vector<double>& gy = t.nodes_[id].sgrad;
      std::vector<double>& gx = t.nodes_[a].sgrad;
      for (int i = 0; i < x.rows(); ++i) {
        double r = 0.0;
        for (int e = x.rowptr()[i]; e < x.rowptr()[i + 1]; ++e) r += x.vals()[e];
        if (r <= 0.0) {  // zero row: identity map
          for (int e = x.rowptr()[i]; e < x.rowptr()[i + 1]; ++e) gx[e] += gy[e];
          continue;
        }
        double mixed = 0.0;
        for (int e = x.rowptr()[i]; e < x.rowptr()[i + 1]; ++e) mixed += gy[e] * x.vals()[e];
        for (int e = x.rowptr()[i]; e < x.rowptr()[i + 1]; ++e)
          gx[e] += gy[e] / r - mixed / (r * r);
      }
    };
  return id;
}

Tape::Id Tape::sp_matmul_v(Id a, Id b) {
  const SparseMatrix &va = sparse_value(a), &vb = sparse_value(b);
  SparseMatrix out = clk::sp_matmul(va, vb);
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push_sparse(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const SparseMatrix& A = t.nodes_[a].sval;
      const SparseMatrix& B = t.nodes_[b].sval;
      const SparseMatrix& C = t.nodes_[id].sval;
      const std::vector<double>& gc = t.nodes_[id].sgrad;
      const bool need_a = t.nodes_[a].needs_grad, need_b = t.nodes_[b].needs_grad;
      std::vector<double>* ga = need_a ? &t.nodes_[a].sgrad : nullptr;
      std::vector<double>* gb = need_b ? &t.nodes_[b].sgrad : nullptr;
      // scatter gC row i once into a dense scratch, then every (i,j) entry of
      // A touches only the short pattern of B row j
      std::vector<double> row(C.cols(), 0.0);
      for (int i = 0; i < A.rows(); ++i) {
        for (int p = C.rowptr()[i]; p < C.rowptr()[i + 1]; ++p) row[C.colidx()[p]] = gc[p];
        for (int e = A.rowptr()[i]; e < A.rowptr()[i + 1]; ++e) {
          const int j = A.colidx()[e];
          const double av = A.vals()[e];
          double acc = 0.0;
          for (int q = B.rowptr()[j]; q < B.rowptr()[j + 1]; ++q) {
            const double g = row[B.colidx()[q]];
            acc += g * B.vals()[q];
            if (need_b) (*gb)[q] += av * g;
          }
          if (need_a) (*ga)[e] += acc;
        }
        for (int p = C.rowptr()[i]; p < C.rowptr()[i + 1]; ++p) row[C.colidx()[p]] = 0.0;
      }
    };
  return id;
}

Tape::Id Tape::sp_add_identity_v(Id a) {
  const SparseMatrix& va = sparse_value(a);
  SparseMatrix out = clk::sp_add_identity(va);
  bool ng = requires_grad(a);
  Id id = push_sparse(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const SparseMatrix& x = t.nodes_[a].sval;
      const SparseMatrix& y = t.nodes_[id].sval;
      const std::vector<double>& gy = t.nodes_[id].sgrad;
      std::vector<double>& gx = t.nodes_[a].sgrad;
      for (int i = 0; i < x.rows(); ++i)
        for (int e = x.rowptr()[i]; e < x.rowptr()[i + 1]; ++e) {
          int pos = y.find(i, x.colidx()[e]);
          if (pos >= 0) gx[e] += gy[pos];
        }
    };
  return id;
}

Tape::Id Tape::spmm_v(Id a, Id x) {
  const SparseMatrix& va = sparse_value(a);
  DenseMatrix out = clk::spmm(va, value(x));
  bool ng = requires_grad(a) || requires_grad(x);
  Id id = push_dense(std::move(out), ng, nullptr);
  if (ng)
    nodes_[id].back = [a, x, id](Tape& t) {
      const SparseMatrix& S = t.nodes_[a].sval;
      const DenseMatrix& X = t.nodes_[x].val;
      const DenseMatrix& g = t.nodes_[id].grad;
      if (t.nodes_[x].needs_grad) t.accum(x, clk::spmm(sp_transpose(S), g));
      if (t.nodes_[a].needs_grad) {
        std::vector<double>& gs = t.nodes_[a].sgrad;
        for (int i = 0; i < S.rows(); ++i)
          for (int e = S.rowptr()[i]; e < S.rowptr()[i + 1]; ++e) {
            const int j = S.colidx()[e];
            double acc = 0.0;
            for (int c = 0; c < X.cols(); ++c) acc += g.at(i, c) * X.at(j, c);
            gs[e] += acc;
          }
      }
    };
  return id;
}

void Tape::backward(Id loss) {
  const Node& ln = node(loss);
  if (ln.sparse || ln.val.rows() != 1 || ln.val.cols() != 1)
    throw UsageError("backward: loss must be a recorded 1x1 dense value");
  for (Node& n : nodes_) {
    if (!n.needs_grad) continue;
    if (n.sparse)
      n.sgrad.assign(n.sval.nnz(), 0.0);
    else
      n.grad = DenseMatrix(n.val.rows(), n.val.cols());
  }
  if (!nodes_[loss].needs_grad) return;  // loss independent of every parameter
  nodes_[loss].grad.at(0, 0) = 1.0;
  for (int i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.back) n.back(*this);
  }
}

}  // namespace clk
