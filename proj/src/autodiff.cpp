// SPDX-License-Identifier: Apache-2.0
#include "protoseq/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "protoseq/kernels.hpp"

namespace protoseq::ad {

const char *op_name(Op op) {
  switch (op) {
  case Op::Input: return "input";
  case Op::Constant: return "constant";
  case Op::Param: return "param";
  case Op::Add: return "add";
  case Op::Sub: return "sub";
  case Op::Mul: return "mul";
  case Op::Affine: return "affine";
  case Op::MatVec: return "matvec";
  case Op::Sigmoid: return "sigmoid";
  case Op::Tanh: return "tanh";
  case Op::Exp: return "exp";
  case Op::ExpNegSquare: return "exp_neg_square";
  case Op::Relu: return "relu";
  case Op::Sqrt: return "sqrt";
  case Op::Abs: return "abs";
  case Op::Slice: return "slice";
  case Op::Concat: return "concat";
  case Op::GatherRow: return "gather_row";
  case Op::StackRows: return "stack_rows";
  case Op::Sum: return "sum";
  case Op::GaussianSimilarity: return "gaussian_similarity";
  case Op::PairwiseSqDist: return "pairwise_sq_dist";
  case Op::PairwiseDist: return "pairwise_dist";
  case Op::RowMin: return "row_min";
  case Op::ColMin: return "col_min";
  case Op::Softmax: return "softmax";
  case Op::CrossEntropy: return "cross_entropy";
  case Op::BinaryCrossEntropy: return "binary_cross_entropy";
  }
  return "unknown";
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void resize(Tensor &t, std::size_t rows, std::size_t cols) {
  t.rows = rows;
  t.cols = cols;
  t.data.assign(rows * cols, 0.0);
}

} // namespace

// ---------------------------------------------------------------------------
// Construction

void Tape::check_same_tape(Var v) const {
  if (v.tape != this || v.id >= nodes_.size())
    throw GraphError("tape", nodes_.size(), "operand belongs to another tape");
}

Var Tape::push(Node node, std::initializer_list<std::uint32_t> args) {
  node.arg_begin = static_cast<std::uint32_t>(args_.size());
  node.arg_count = static_cast<std::uint32_t>(args.size());
  args_.insert(args_.end(), args.begin(), args.end());
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  try {
    compute(id);
  } catch (...) {
    nodes_.pop_back();
    args_.resize(args_.size() - args.size());
    throw;
  }
  return Var{this, id};
}

Var Tape::push(Node node, const std::vector<Var> &args) {
  const std::size_t before = args_.size();
  node.arg_begin = static_cast<std::uint32_t>(before);
  node.arg_count = static_cast<std::uint32_t>(args.size());
  for (const Var &v : args) {
    check_same_tape(v);
    args_.push_back(v.id);
  }
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  try {
    compute(id);
  } catch (...) {
    nodes_.pop_back();
    args_.resize(before);
    throw;
  }
  return Var{this, id};
}

Var Tape::input(const std::string &name, std::size_t rows, std::size_t cols) {
  Node n = node_of(Op::Input);
  n.name = name;
  n.value = Tensor(rows, cols);
  return push(std::move(n), {});
}

Var Tape::constant(Tensor value) {
  Node n = node_of(Op::Constant);
  n.value = std::move(value);
  return push(std::move(n), {});
}

Var Tape::parameter(Parameter &p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
    return Var{this, it->second};
  Node n = node_of(Op::Param);
  n.param = &p;
  Var v = push(std::move(n), {});
  param_nodes_.emplace(&p, v.id);
  return v;
}

#define PROTOSEQ_UNARY(fn, kind)                                               \
  Var Tape::fn(Var x) {                                                        \
    check_same_tape(x);                                                        \
    return push(node_of(Op::kind), {x.id});                                       \
  }
#define PROTOSEQ_BINARY(fn, kind)                                              \
  Var Tape::fn(Var a, Var b) {                                                 \
    check_same_tape(a);                                                        \
    check_same_tape(b);                                                        \
    return push(node_of(Op::kind), {a.id, b.id});                                 \
  }

PROTOSEQ_BINARY(add, Add)
PROTOSEQ_BINARY(sub, Sub)
PROTOSEQ_BINARY(mul, Mul)
PROTOSEQ_BINARY(matvec, MatVec)
PROTOSEQ_BINARY(gaussian_similarity, GaussianSimilarity)
PROTOSEQ_BINARY(pairwise_sq_dist, PairwiseSqDist)
PROTOSEQ_BINARY(pairwise_dist, PairwiseDist)
PROTOSEQ_UNARY(sigmoid, Sigmoid)
PROTOSEQ_UNARY(tanh, Tanh)
PROTOSEQ_UNARY(exp, Exp)
PROTOSEQ_UNARY(exp_neg_square, ExpNegSquare)
PROTOSEQ_UNARY(relu, Relu)
PROTOSEQ_UNARY(sqrt, Sqrt)
PROTOSEQ_UNARY(abs, Abs)
PROTOSEQ_UNARY(sum, Sum)
PROTOSEQ_UNARY(row_min, RowMin)
PROTOSEQ_UNARY(col_min, ColMin)
PROTOSEQ_UNARY(softmax, Softmax)

#undef PROTOSEQ_UNARY
#undef PROTOSEQ_BINARY

Var Tape::affine(Var x, double scale, double shift) {
  check_same_tape(x);
  Node n = node_of(Op::Affine);
  n.a = scale;
  n.b = shift;
  return push(std::move(n), {x.id});
}

Var Tape::slice(Var x, std::size_t begin, std::size_t len) {
  check_same_tape(x);
  Node n = node_of(Op::Slice);
  n.index = begin;
  n.length = len;
  return push(std::move(n), {x.id});
}

Var Tape::concat(const std::vector<Var> &parts) {
  return push(node_of(Op::Concat), parts);
}

Var Tape::gather_row(Var table, std::size_t index) {
  check_same_tape(table);
  Node n = node_of(Op::GatherRow);
  n.index = index;
  return push(std::move(n), {table.id});
}

Var Tape::stack_rows(const std::vector<Var> &rows) {
  return push(node_of(Op::StackRows), rows);
}

Var Tape::cross_entropy(Var probs, std::size_t target) {
  check_same_tape(probs);
  Node n = node_of(Op::CrossEntropy);
  n.index = target;
  return push(std::move(n), {probs.id});
}

Var Tape::binary_cross_entropy(Var probs, const Tensor &targets) {
  check_same_tape(probs);
  Node n = node_of(Op::BinaryCrossEntropy);
  n.aux = targets;
  return push(std::move(n), {probs.id});
}

// ---------------------------------------------------------------------------
// Forward

void Tape::compute(std::uint32_t id) {
  Node &n = nodes_[id];
  const auto fail = [&](const std::string &what) {
    throw GraphError(op_name(n.op), id, what);
  };
  const auto &k = kernels::active();
  const auto in = [&](std::size_t i) -> const Tensor & {
    return value_of(arg(n, i));
  };
  const auto elementwise = [&](auto f) {
    const Tensor &x = in(0);
    resize(n.value, x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i)
      n.value[i] = f(x[i]);
  };
  const auto require_column = [&](const Tensor &t, const char *what) {
    if (t.cols != 1)
      fail(std::string(what) + " must be a column vector, got " + t.shape_string());
  };

  switch (n.op) {
  case Op::Input:
  case Op::Constant:
  case Op::Param:
    return;

  case Op::Add:
  case Op::Sub:
  case Op::Mul: {
    const Tensor &a = in(0), &b = in(1);
    if (!a.same_shape(b))
      fail("shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    resize(n.value, a.rows, a.cols);
    if (n.op == Op::Add)
      for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] + b[i];
    else if (n.op == Op::Sub)
      for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] - b[i];
    else
      for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] * b[i];
    return;
  }
  case Op::Affine: {
    const double s = n.a, t = n.b;
    elementwise([s, t](double x) { return s * x + t; });
    return;
  }
  case Op::MatVec: {
    const Tensor &m = in(0), &x = in(1);
    require_column(x, "operand");
    if (m.cols != x.rows)
      fail("shape mismatch " + m.shape_string() + " * " + x.shape_string());
    resize(n.value, m.rows, 1);
    k.gemv(m.data.data(), m.rows, m.cols, x.data.data(), n.value.data.data());
    return;
  }
  case Op::Sigmoid: elementwise(stable_sigmoid); return;
  case Op::Tanh: elementwise([](double x) { return std::tanh(x); }); return;
  case Op::Exp: elementwise([](double x) { return std::exp(x); }); return;
  case Op::ExpNegSquare:
    elementwise([](double x) { return std::exp(-x * x); });
    return;
  case Op::Relu: elementwise([](double x) { return x > 0.0 ? x : 0.0; }); return;
  case Op::Sqrt:
    elementwise([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
    return;
  case Op::Abs: elementwise([](double x) { return std::fabs(x); }); return;

  case Op::Slice: {
    const Tensor &x = in(0);
    require_column(x, "operand");
    if (n.index + n.length > x.rows || n.length == 0)
      fail("range [" + std::to_string(n.index) + ", " +
           std::to_string(n.index + n.length) + ") out of " + x.shape_string());
    resize(n.value, n.length, 1);
    std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(n.index), n.length,
                n.value.data.begin());
    return;
  }
  case Op::Concat: {
    if (n.arg_count == 0)
      fail("no operands");
    std::size_t total = 0;
    for (std::size_t i = 0; i < n.arg_count; ++i) {
      require_column(in(i), "operand");
      total += in(i).rows;
    }
    resize(n.value, total, 1);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n.arg_count; ++i) {
      const Tensor &x = in(i);
      std::copy(x.data.begin(), x.data.end(),
                n.value.data.begin() + static_cast<std::ptrdiff_t>(off));
      off += x.rows;
    }
    return;
  }
  case Op::GatherRow: {
    const Tensor &t = in(0);
    if (n.index >= t.rows)
      fail("row " + std::to_string(n.index) + " out of " + t.shape_string());
    resize(n.value, t.cols, 1);
    const auto r = t.row(n.index);
    std::copy(r.begin(), r.end(), n.value.data.begin());
    return;
  }
  case Op::StackRows: {
    if (n.arg_count == 0)
      fail("no operands");
    const std::size_t m = in(0).rows;
    for (std::size_t i = 0; i < n.arg_count; ++i) {
      require_column(in(i), "operand");
      if (in(i).rows != m)
        fail("row " + std::to_string(i) + " has length " +
             std::to_string(in(i).rows) + ", expected " + std::to_string(m));
    }
    resize(n.value, n.arg_count, m);
    for (std::size_t i = 0; i < n.arg_count; ++i)
      std::copy(in(i).data.begin(), in(i).data.end(), n.value.row(i).begin());
    return;
  }
  case Op::Sum: {
    const Tensor &x = in(0);
    double s = 0.0;
    for (double v : x.data)
      s += v;
    resize(n.value, 1, 1);
    n.value[0] = s;
    return;
  }
  case Op::GaussianSimilarity: {
    const Tensor &e = in(0), &p = in(1);
    require_column(e, "embedding");
    if (p.cols != e.rows)
      fail("embedding " + e.shape_string() + " vs prototypes " + p.shape_string());
    resize(n.value, p.rows, 1);
    for (std::size_t i = 0; i < p.rows; ++i)
      n.value[i] = std::exp(-k.squared_distance(e.data.data(), p.row(i).data(), e.rows));
    return;
  }
  case Op::PairwiseSqDist:
  case Op::PairwiseDist: {
    const Tensor &a = in(0), &b = in(1);
    if (a.cols != b.cols)
      fail("width mismatch " + a.shape_string() + " vs " + b.shape_string());
    resize(n.value, a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.rows; ++j)
        n.value(i, j) = k.squared_distance(a.row(i).data(), b.row(j).data(), a.cols);
    if (n.op == Op::PairwiseDist)
      for (double &v : n.value.data)
        v = std::sqrt(v);
    return;
  }
  case Op::RowMin:
  case Op::ColMin: {
    const Tensor &x = in(0);
    if (x.empty())
      fail("empty operand");
    const bool rows = n.op == Op::RowMin;
    const std::size_t outer = rows ? x.rows : x.cols;
    const std::size_t inner = rows ? x.cols : x.rows;
    resize(n.value, outer, 1);
    resize(n.aux, outer, 1);
    for (std::size_t o = 0; o < outer; ++o) {
      std::size_t best = 0;
      double best_v = rows ? x(o, 0) : x(0, o);
      for (std::size_t i = 1; i < inner; ++i) {
        const double v = rows ? x(o, i) : x(i, o);
        if (v < best_v) {
          best_v = v;
          best = i;
        }
      }
      n.value[o] = best_v;
      n.aux[o] = static_cast<double>(best);
    }
    return;
  }
  case Op::Softmax: {
    const Tensor &x = in(0);
    require_column(x, "operand");
    resize(n.value, x.rows, 1);
    const double mx = *std::max_element(x.data.begin(), x.data.end());
    double z = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      n.value[i] = std::exp(x[i] - mx);
      z += n.value[i];
    }
    for (double &v : n.value.data)
      v /= z;
    return;
  }
  case Op::CrossEntropy: {
    const Tensor &p = in(0);
    require_column(p, "probabilities");
    if (n.index >= p.rows)
      fail("target " + std::to_string(n.index) + " out of " + p.shape_string());
    resize(n.value, 1, 1);
    n.value[0] = -std::log(std::max(p[n.index], kProbFloor));
    return;
  }
  case Op::BinaryCrossEntropy: {
    const Tensor &p = in(0);
    require_column(p, "probabilities");
    if (!n.aux.same_shape(p))
      fail("targets " + n.aux.shape_string() + " vs " + p.shape_string());
    double s = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
      const double q = std::clamp(p[i], kProbFloor, 1.0 - kProbFloor);
      s -= n.aux[i] * std::log(q) + (1.0 - n.aux[i]) * std::log(1.0 - q);
    }
    resize(n.value, 1, 1);
    n.value[0] = s;
    return;
  }
  }
}

// ---------------------------------------------------------------------------
// Backward

Tensor &Tape::grad_slot(std::uint32_t id) {
  Node &n = nodes_[id];
  if (n.op == Op::Param) {
    if (!n.param->grad.same_shape(n.param->value))
      n.param->zero_grad();
    return n.param->grad;
  }
  if (n.adjoint.empty()) {
    const Tensor &v = value_of(id);
    n.adjoint = Tensor(v.rows, v.cols);
  }
  return n.adjoint;
}

void Tape::propagate(std::uint32_t id) {
  const Node &n = nodes_[id];
  const Tensor &g = n.adjoint;
  const Tensor &y = n.value;
  const auto &k = kernels::active();
  const auto in = [&](std::size_t i) -> const Tensor & {
    return value_of(arg(n, i));
  };
  const auto elementwise = [&](auto dydx) {
    const Tensor &x = in(0);
    Tensor &gx = grad_slot(arg(n, 0));
    for (std::size_t i = 0; i < x.size(); ++i)
      gx[i] += g[i] * dydx(x[i], y[i]);
  };

  switch (n.op) {
  case Op::Input:
  case Op::Constant:
  case Op::Param:
    return;
  case Op::Add: {
    k.axpy(1.0, g.data.data(), grad_slot(arg(n, 0)).data.data(), g.size());
    k.axpy(1.0, g.data.data(), grad_slot(arg(n, 1)).data.data(), g.size());
    return;
  }
  case Op::Sub: {
    k.axpy(1.0, g.data.data(), grad_slot(arg(n, 0)).data.data(), g.size());
    k.axpy(-1.0, g.data.data(), grad_slot(arg(n, 1)).data.data(), g.size());
    return;
  }
  case Op::Mul: {
    const Tensor &a = in(0), &b = in(1);
    {
      Tensor &ga = grad_slot(arg(n, 0));
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
    }
    Tensor &gb = grad_slot(arg(n, 1));
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
    return;
  }
  case Op::Affine:
    k.axpy(n.a, g.data.data(), grad_slot(arg(n, 0)).data.data(), g.size());
    return;
  case Op::MatVec: {
    const Tensor &m = in(0), &x = in(1);
    k.ger_acc(grad_slot(arg(n, 0)).data.data(), m.rows, m.cols, g.data.data(),
              x.data.data());
    k.gemv_t_acc(m.data.data(), m.rows, m.cols, g.data.data(),
                 grad_slot(arg(n, 1)).data.data());
    return;
  }
  case Op::Sigmoid: elementwise([](double, double v) { return v * (1.0 - v); }); return;
  case Op::Tanh: elementwise([](double, double v) { return 1.0 - v * v; }); return;
  case Op::Exp: elementwise([](double, double v) { return v; }); return;
  case Op::ExpNegSquare:
    elementwise([](double x, double v) { return -2.0 * x * v; });
    return;
  case Op::Relu: elementwise([](double x, double) { return x > 0.0 ? 1.0 : 0.0; }); return;
  case Op::Sqrt:
    elementwise([](double, double v) { return v > 0.0 ? 0.5 / v : 0.0; });
    return;
  case Op::Abs:
    elementwise([](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    return;
  case Op::Slice: {
    Tensor &gx = grad_slot(arg(n, 0));
    for (std::size_t i = 0; i < n.length; ++i)
      gx[n.index + i] += g[i];
    return;
  }
  case Op::Concat: {
    std::size_t off = 0;
    for (std::size_t i = 0; i < n.arg_count; ++i) {
      Tensor &gx = grad_slot(arg(n, i));
      k.axpy(1.0, g.data.data() + off, gx.data.data(), gx.size());
      off += gx.size();
    }
    return;
  }
  case Op::GatherRow: {
    Tensor &gt = grad_slot(arg(n, 0));
    k.axpy(1.0, g.data.data(), gt.row(n.index).data(), g.size());
    return;
  }
  case Op::StackRows: {
    for (std::size_t i = 0; i < n.arg_count; ++i) {
      Tensor &gx = grad_slot(arg(n, i));
      k.axpy(1.0, g.row(i).data(), gx.data.data(), gx.size());
    }
    return;
  }
  case Op::Sum: {
    Tensor &gx = grad_slot(arg(n, 0));
    for (double &v : gx.data)
      v += g[0];
    return;
  }
  case Op::GaussianSimilarity: {
    // d a_i / d e = -2 a_i (e - p_i), expressed through the cached output.
    const Tensor &e = in(0), &p = in(1);
    std::vector<double> diff(e.rows);
    Tensor *ge = &grad_slot(arg(n, 0));
    Tensor *gp = &grad_slot(arg(n, 1));
    for (std::size_t i = 0; i < p.rows; ++i) {
      const double c = 2.0 * g[i] * y[i];
      if (c == 0.0)
        continue;
      for (std::size_t j = 0; j < e.rows; ++j)
        diff[j] = e[j] - p(i, j);
      k.axpy(-c, diff.data(), ge->data.data(), e.rows);
      k.axpy(c, diff.data(), gp->row(i).data(), e.rows);
    }
    return;
  }
  case Op::PairwiseSqDist: {
    const Tensor &a = in(0), &b = in(1);
    std::vector<double> diff(a.cols);
    Tensor *ga = &grad_slot(arg(n, 0));
    Tensor *gb = &grad_slot(arg(n, 1));
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.rows; ++j) {
        const double c = 2.0 * g(i, j);
        if (c == 0.0)
          continue;
        for (std::size_t t = 0; t < a.cols; ++t)
          diff[t] = a(i, t) - b(j, t);
        k.axpy(c, diff.data(), ga->row(i).data(), a.cols);
        k.axpy(-c, diff.data(), gb->row(j).data(), a.cols);
      }
    return;
  }
  case Op::PairwiseDist: {
    const Tensor &a = in(0), &b = in(1);
    std::vector<double> diff(a.cols);
    Tensor *ga = &grad_slot(arg(n, 0));
    Tensor *gb = &grad_slot(arg(n, 1));
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.rows; ++j) {
        if (g(i, j) == 0.0)
          continue;
        const double d = n.value(i, j);
        if (d == 0.0) {
          (*ga)(i, 0) += g(i, j);
          (*gb)(j, 0) -= g(i, j);
          continue;
        }
        for (std::size_t t = 0; t < a.cols; ++t)
          diff[t] = a(i, t) - b(j, t);
        k.axpy(g(i, j) / d, diff.data(), ga->row(i).data(), a.cols);
        k.axpy(-g(i, j) / d, diff.data(), gb->row(j).data(), a.cols);
      }
    return;
  }
  case Op::RowMin:
  case Op::ColMin: {
    Tensor &gx = grad_slot(arg(n, 0));
    const bool rows = n.op == Op::RowMin;
    for (std::size_t o = 0; o < g.size(); ++o) {
      const auto at = static_cast<std::size_t>(n.aux[o]);
      if (rows)
        gx(o, at) += g[o];
      else
        gx(at, o) += g[o];
    }
    return;
  }
  case Op::Softmax: {
    double gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      gy += g[i] * y[i];
    Tensor &gx = grad_slot(arg(n, 0));
    for (std::size_t i = 0; i < y.size(); ++i)
      gx[i] += y[i] * (g[i] - gy);
    return;
  }
  case Op::CrossEntropy: {
    const Tensor &p = in(0);
    const double q = p[n.index];
    if (q > kProbFloor)
      grad_slot(arg(n, 0))[n.index] += -g[0] / q;
    return;
  }
  case Op::BinaryCrossEntropy: {
    const Tensor &p = in(0);
    Tensor &gp = grad_slot(arg(n, 0));
    for (std::size_t i = 0; i < p.rows; ++i) {
      const double q = p[i];
      if (q <= kProbFloor || q >= 1.0 - kProbFloor)
        continue;
      const double t = n.aux[i];
      gp[i] += -g[0] * (t / q - (1.0 - t) / (1.0 - q));
    }
    return;
  }
  }
}

void Tape::backward(Var loss) {
  check_same_tape(loss);
  const Tensor &lv = value(loss);
  if (lv.rows != 1 || lv.cols != 1)
    throw GraphError(op_name(nodes_[loss.id].op), loss.id,
                     "loss must be scalar, got " + lv.shape_string());
  for (Node &n : nodes_)
    n.adjoint = Tensor();
  grad_slot(loss.id)[0] += 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (nodes_[id].op != Op::Param && !nodes_[id].adjoint.empty())
      propagate(id);
  }
}

Tensor Tape::adjoint(Var v) const {
  check_same_tape(v);
  const Node &n = nodes_[v.id];
  if (n.op == Op::Param)
    return n.param->grad;
  if (n.adjoint.empty()) {
    const Tensor &val = value_of(v.id);
    return Tensor(val.rows, val.cols);
  }
  return n.adjoint;
}

Tensor Tape::evaluate(Var output, const Bindings &inputs) {
  check_same_tape(output);
  for (const auto &[name, t] : inputs) {
    bool found = false;
    for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
      Node &n = nodes_[id];
      if (n.op != Op::Input || n.name != name)
        continue;
      if (!n.value.same_shape(t))
        throw GraphError("input", id,
                         "binding '" + name + "' has shape " + t.shape_string() +
                             ", expected " + n.value.shape_string());
      n.value = t;
      found = true;
    }
    if (!found)
      throw GraphError("input", nodes_.size(), "no placeholder named '" + name + "'");
  }
  for (std::uint32_t id = 0; id <= output.id; ++id)
    compute(id);
  return value_of(output.id);
}

std::vector<Parameter *> Tape::reachable_parameters(Var loss) const {
  check_same_tape(loss);
  std::vector<char> seen(loss.id + 1, 0);
  seen[loss.id] = 1;
  std::vector<Parameter *> out;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (!seen[id])
      continue;
    const Node &n = nodes_[id];
    if (n.op == Op::Param)
      out.push_back(n.param);
    for (std::size_t i = 0; i < n.arg_count; ++i)
      seen[arg(n, i)] = 1;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::unordered_map<const Parameter *, Tensor> gradients(Tape &tape, Var loss) {
  const std::vector<Parameter *> params = tape.reachable_parameters(loss);
  for (Parameter *p : params)
    p->zero_grad();
  tape.backward(loss);
  std::unordered_map<const Parameter *, Tensor> out;
  for (Parameter *p : params)
    out.emplace(p, p->grad);
  return out;
}

} // namespace protoseq::ad
