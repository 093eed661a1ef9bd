// SPDX-License-Identifier: Apache-2.0
#pragma once

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A Tape records nodes in construction order, so node indices are already a
// topological order and the graph cannot contain cycles. Values are computed
// eagerly as nodes are appended; Tape::evaluate re-runs the recorded program
// with new input bindings. backward() walks the tape in reverse and
// accumulates parameter adjoints directly into Parameter::grad.
//
// A tape is single-owner and not thread-safe. Separate tapes may read the
// same Parameter values from different threads as long as nobody runs
// backward() on them concurrently.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "protoseq/tensor.hpp"

namespace protoseq::ad {

/// A trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

  void zero_grad() {
    if (!grad.same_shape(value))
      grad = Tensor(value.rows, value.cols);
    else
      grad.fill(0.0);
  }
};

/// Shape or usage error raised while building or evaluating a graph.
class GraphError : public std::invalid_argument {
public:
  GraphError(const std::string &op, std::size_t node, const std::string &what)
      : std::invalid_argument(op + " (node " + std::to_string(node) + "): " + what),
        op_(op), node_(node) {}
  const std::string &op() const { return op_; }
  std::size_t node() const { return node_; }

private:
  std::string op_;
  std::size_t node_;
};

enum class Op : std::uint8_t {
  Input,
  Constant,
  Param,
  Add,
  Sub,
  Mul,
  Affine,        // a*x + b with scalar a, b
  MatVec,        // M[r x c] * x[c x 1]
  Sigmoid,
  Tanh,
  Exp,
  ExpNegSquare,  // exp(-x^2), elementwise
  Relu,
  Sqrt,          // subgradient 0 at 0
  Abs,           // subgradient 0 at 0
  Slice,         // rows [begin, begin + len) of a column vector
  Concat,        // column vectors stacked end to end
  GatherRow,     // row `index` of a matrix, as a column vector
  StackRows,     // n column vectors of length m -> n x m
  Sum,           // sum of all entries -> 1 x 1
  GaussianSimilarity,  // e[m], P[k x m] -> exp(-||e - P_i||^2), k x 1
  PairwiseSqDist,      // A[n x m], B[k x m] -> n x k
  PairwiseDist,        // A[n x m], B[k x m] -> ||A_i - B_j||, n x k
  RowMin,        // n x k -> n x 1 (min over each row)
  ColMin,        // n x k -> k x 1 (min over each column)
  Softmax,       // column vector
  CrossEntropy,  // probs[C], one-hot target -> -log p_y, clamped
  BinaryCrossEntropy,  // probs[C], 0/1 targets -> summed BCE, clamped
};

const char *op_name(Op op);

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape *tape = nullptr;
  std::uint32_t id = 0;

  const Tensor &value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
};

using Bindings = std::map<std::string, Tensor>;

class Tape {
public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// Named placeholder. Holds zeros until bound through evaluate().
  Var input(const std::string &name, std::size_t rows, std::size_t cols);
  Var constant(Tensor value);
  /// Leaf referring to `p`. Repeated calls with the same parameter return
  /// the same node. `p` must outlive the tape.
  Var parameter(Parameter &p);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var x, double scale, double shift);
  Var matvec(Var m, Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var exp(Var x);
  Var exp_neg_square(Var x);
  Var relu(Var x);
  Var sqrt(Var x);
  Var abs(Var x);
  Var slice(Var x, std::size_t begin, std::size_t len);
  Var concat(const std::vector<Var> &parts);
  Var gather_row(Var table, std::size_t index);
  Var stack_rows(const std::vector<Var> &rows);
  Var sum(Var x);
  Var gaussian_similarity(Var e, Var prototypes);
  Var pairwise_sq_dist(Var a, Var b);
  /// Euclidean distances. At a coincident pair the subgradient is the first
  /// unit axis (any unit vector is a valid subgradient of the norm at 0), so
  /// hinge penalties can still separate identical rows.
  Var pairwise_dist(Var a, Var b);
  Var row_min(Var x);
  Var col_min(Var x);
  Var softmax(Var x);
  /// `target` is a 0-based class index.
  Var cross_entropy(Var probs, std::size_t target);
  Var binary_cross_entropy(Var probs, const Tensor &targets);

  const Tensor &value(Var v) const { return value_of(v.id); }
  /// Adjoint from the last backward(); zeros if the node was not reached.
  Tensor adjoint(Var v) const;

  /// Reverse sweep from a 1x1 loss. Parameter adjoints are added to
  /// Parameter::grad (callers zero them between steps).
  void backward(Var loss);

  /// Re-run the recorded program with `inputs` bound to named placeholders
  /// and return the value of `output`. Unbound placeholders keep their
  /// current value.
  Tensor evaluate(Var output, const Bindings &inputs);

  std::size_t size() const { return nodes_.size(); }

  /// Parameters whose leaves feed `loss`, in tape order.
  std::vector<Parameter *> reachable_parameters(Var loss) const;

  /// Clamp applied to probabilities before taking logs.
  static constexpr double kProbFloor = 1e-12;

private:
  struct Node {
    Op op;
    std::uint32_t arg_begin = 0;
    std::uint32_t arg_count = 0;
    std::size_t index = 0;   // slice begin, gather row, CE target
    std::size_t length = 0;  // slice length
    double a = 0.0, b = 0.0; // affine coefficients
    Parameter *param = nullptr;
    std::string name;        // input placeholders
    Tensor value;            // unused for Param nodes
    Tensor aux;              // BCE targets; argmin indices for min ops
    Tensor adjoint;
  };
  static Node node_of(Op op) {
    Node n;
    n.op = op;
    return n;
  }

  const Tensor &value_of(std::uint32_t id) const {
    const Node &n = nodes_[id];
    return n.op == Op::Param ? n.param->value : n.value;
  }
  std::uint32_t arg(const Node &n, std::size_t i) const {
    return args_[n.arg_begin + i];
  }
  Var push(Node node, std::initializer_list<std::uint32_t> args);
  Var push(Node node, const std::vector<Var> &args);
  void check_same_tape(Var v) const;
  void compute(std::uint32_t id);
  void propagate(std::uint32_t id);
  Tensor &grad_slot(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> args_;
  std::unordered_map<const Parameter *, std::uint32_t> param_nodes_;
};

inline const Tensor &Var::value() const { return tape->value(*this); }

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }

/// Gradients of a scalar loss with respect to every parameter reachable from
/// it. Parameter::grad fields are zeroed first and hold the result afterwards.
std::unordered_map<const Parameter *, Tensor> gradients(Tape &tape, Var loss);

} // namespace protoseq::ad
