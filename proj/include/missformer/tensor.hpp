#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace missformer {

using Index = Eigen::Index;

/// All dense storage is row-major so that flattening and reshaping follow the
/// serialized layout of checkpoints and corpus files.
template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <class Scalar>
void require_finite(const DenseMatrix<Scalar>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::domain_error(std::string(what) + ": non-finite values");
  }
}

/// One record on the tape. Holds the forward value, the (lazily allocated)
/// gradient, and a closure that routes an upstream gradient into the parents.
template <class Scalar>
struct TapeNode {
  DenseMatrix<Scalar> value;
  DenseMatrix<Scalar> grad;  // empty until a backward pass populates it
  bool requires_grad = false;
  bool leaf = true;
  int backward_runs = 0;  // counted on the node a backward pass was seeded from
  std::vector<std::shared_ptr<TapeNode>> parents;
  std::function<void(const DenseMatrix<Scalar>&)> backward_fn;
};

template <class Scalar, class Expr>
void accumulate(TapeNode<Scalar>& n, const Expr& g) {
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = DenseMatrix<Scalar>::Zero(n.value.rows(), n.value.cols());
  }
  n.grad += g;
}

}  // namespace detail

/// Dense 2-d tensor with optional reverse-mode gradient tracking.
///
/// Scalars are 1x1, vectors are 1xN or Nx1. Copies are shallow: they share the
/// underlying tape node, which is how the computation graph is threaded.
/// Values are immutable once an op has consumed them; the only sanctioned
/// mutations are gradient accumulation during backward() and leaf updates via
/// update_value() between graphs (the optimizer path).
template <class Scalar>
class TensorT {
 public:
  using Matrix = DenseMatrix<Scalar>;
  using Node = detail::TapeNode<Scalar>;

  TensorT() : node_(std::make_shared<Node>()) {}

  explicit TensorT(Matrix m, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    detail::require_finite(m, "tensor");
    node_->value = std::move(m);
    node_->requires_grad = requires_grad;
  }

  static TensorT zeros(Index rows, Index cols, bool requires_grad = false) {
    return TensorT(Matrix::Zero(rows, cols), requires_grad);
  }

  static TensorT constant(Index rows, Index cols, Scalar v) {
    return TensorT(Matrix::Constant(rows, cols, v));
  }

  static TensorT scalar(Scalar v) { return constant(1, 1, v); }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }

  const Matrix& value() const { return node_->value; }

  /// The held scalar; throws unless the tensor is 1x1.
  Scalar item() const {
    if (size() != 1) {
      throw std::invalid_argument("item: tensor is " + detail::shape_string(rows(), cols()) +
                                  ", expected 1x1");
    }
    return node_->value(0, 0);
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  bool has_grad() const { return node_->grad.size() != 0; }

  const Matrix& grad() const {
    if (!has_grad()) throw std::logic_error("grad: no gradient has been populated");
    return node_->grad;
  }

  void zero_grad() {
    if (has_grad()) node_->grad.setZero();
  }

  /// Leaf-only in-place value replacement (optimizer step). The caller must
  /// not hold live graphs built from the old value.
  void update_value(const Matrix& v) {
    if (!node_->leaf) throw std::logic_error("update_value: only leaf tensors may be mutated");
    if (v.rows() != rows() || v.cols() != cols()) {
      throw std::invalid_argument("update_value: shape " + detail::shape_string(v.rows(), v.cols()) +
                                  " does not match " + detail::shape_string(rows(), cols()));
    }
    detail::require_finite(v, "update_value");
    node_->value = v;
  }

  /// Internal: the tape node backing this tensor.
  const std::shared_ptr<Node>& tape_node() const { return node_; }

 private:
  explicit TensorT(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  std::shared_ptr<Node> node_;

  template <class S>
  friend TensorT<S> make_op(DenseMatrix<S> value, const char* op_name,
                            std::vector<std::shared_ptr<detail::TapeNode<S>>> parents,
                            std::function<void(const DenseMatrix<S>&)> backward_fn);
};

using Tensor = TensorT<double>;

/// Assemble an op result node. Gradient tracking is inherited from the
/// parents; untracked results drop their parent edges so dead graph segments
/// are reclaimed eagerly.
template <class Scalar>
TensorT<Scalar> make_op(DenseMatrix<Scalar> value, const char* op_name,
                        std::vector<std::shared_ptr<detail::TapeNode<Scalar>>> parents,
                        std::function<void(const DenseMatrix<Scalar>&)> backward_fn) {
  detail::require_finite(value, op_name);
  auto node = std::make_shared<detail::TapeNode<Scalar>>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p->requires_grad) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->leaf = false;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return TensorT<Scalar>(std::move(node));
}

/// Reverse pass from a scalar loss. Populates grad on every reachable
/// gradient-tracked tensor. Re-running on the same graph is an error unless
/// `accumulate` is set, in which case leaf gradients add up.
template <class Scalar>
void backward(const TensorT<Scalar>& loss, bool accumulate = false) {
  using Node = detail::TapeNode<Scalar>;
  const std::shared_ptr<Node>& root = loss.tape_node();
  if (root->value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                detail::shape_string(root->value.rows(), root->value.cols()));
  }
  if (!root->requires_grad) {
    throw std::invalid_argument("backward: loss is not connected to any gradient-tracked tensor");
  }
  if (root->backward_runs > 0 && !accumulate) {
    throw std::logic_error("backward: already run on this graph (rebuild it or pass accumulate=true)");
  }
  ++root->backward_runs;

  // Topological order over the gradient-tracked subgraph, iterative post-order.
  std::vector<Node*> topo;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* n;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{root.get()}};
  seen.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p});
    } else {
      topo.push_back(f.n);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass scratch; leaf gradients persist so that
  // successive graphs (and accumulate reruns) add up.
  for (Node* n : topo) {
    if (!n->leaf) {
      n->grad = DenseMatrix<Scalar>::Zero(n->value.rows(), n->value.cols());
    } else if (n->grad.size() == 0) {
      n->grad = DenseMatrix<Scalar>::Zero(n->value.rows(), n->value.cols());
    }
  }
  root->grad(0, 0) += Scalar(1);

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(n->grad);
  }
}

// ---------------------------------------------------------------------------
// Free ops. Each returns a fresh tape node whose backward_fn accumulates into
// the parents. Backward rules are checked against finite differences in the
// test suite; keep them in sync with any change here.
// ---------------------------------------------------------------------------

namespace detail {

template <class Scalar>
void require_same_shape(const TensorT<Scalar>& a, const TensorT<Scalar>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.rows(), a.cols()) + " vs " +
                                shape_string(b.rows(), b.cols()));
  }
}

}  // namespace detail

template <class Scalar>
TensorT<Scalar> matmul(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                detail::shape_string(a.rows(), a.cols()) + " * " +
                                detail::shape_string(b.rows(), b.cols()));
  }
  auto na = a.tape_node();
  auto nb = b.tape_node();
  return make_op<Scalar>(
      na->value * nb->value, "matmul", {na, nb}, [na, nb](const DenseMatrix<Scalar>& g) {
        detail::accumulate(*na, g * nb->value.transpose());
        detail::accumulate(*nb, na->value.transpose() * g);
      });
}

template <class Scalar>
TensorT<Scalar> add(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  auto na = a.tape_node();
  auto nb = b.tape_node();
  return make_op<Scalar>(na->value + nb->value, "add", {na, nb},
                         [na, nb](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na, g);
                           detail::accumulate(*nb, g);
                         });
}

template <class Scalar>
TensorT<Scalar> sub(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  detail::require_same_shape(a, b, "sub");
  auto na = a.tape_node();
  auto nb = b.tape_node();
  return make_op<Scalar>(na->value - nb->value, "sub", {na, nb},
                         [na, nb](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na, g);
                           detail::accumulate(*nb, -g);
                         });
}

/// Elementwise (Hadamard) product.
template <class Scalar>
TensorT<Scalar> mul(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  detail::require_same_shape(a, b, "mul");
  auto na = a.tape_node();
  auto nb = b.tape_node();
  return make_op<Scalar>(na->value.cwiseProduct(nb->value), "mul", {na, nb},
                         [na, nb](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na, g.cwiseProduct(nb->value));
                           detail::accumulate(*nb, g.cwiseProduct(na->value));
                         });
}

template <class Scalar>
TensorT<Scalar> scale(const TensorT<Scalar>& a, Scalar c) {
  if (!std::isfinite(static_cast<double>(c))) throw std::domain_error("scale: non-finite factor");
  auto na = a.tape_node();
  return make_op<Scalar>(na->value * c, "scale", {na},
                         [na, c](const DenseMatrix<Scalar>& g) { detail::accumulate(*na, g * c); });
}

/// x + r with r a 1xN row broadcast over every row of x (bias add).
template <class Scalar>
TensorT<Scalar> add_rowwise(const TensorT<Scalar>& x, const TensorT<Scalar>& r) {
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw std::invalid_argument("add_rowwise: row is " + detail::shape_string(r.rows(), r.cols()) +
                                ", expected 1x" + std::to_string(x.cols()));
  }
  auto nx = x.tape_node();
  auto nr = r.tape_node();
  DenseMatrix<Scalar> out = nx->value;
  out.rowwise() += nr->value.row(0);
  return make_op<Scalar>(std::move(out), "add_rowwise", {nx, nr},
                         [nx, nr](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*nx, g);
                           detail::accumulate(*nr, g.colwise().sum());
                         });
}

template <class Scalar>
TensorT<Scalar> transpose(const TensorT<Scalar>& a) {
  auto na = a.tape_node();
  return make_op<Scalar>(na->value.transpose(), "transpose", {na},
                         [na](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na, g.transpose());
                         });
}

/// Row-major reshape; element order is preserved.
template <class Scalar>
TensorT<Scalar> reshape(const TensorT<Scalar>& a, Index rows, Index cols) {
  if (rows < 0 || cols < 0 || rows * cols != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + detail::shape_string(a.rows(), a.cols()) +
                                " as " + detail::shape_string(rows, cols));
  }
  auto na = a.tape_node();
  const Index ar = a.rows(), ac = a.cols();
  DenseMatrix<Scalar> out = Eigen::Map<const DenseMatrix<Scalar>>(na->value.data(), rows, cols);
  return make_op<Scalar>(std::move(out), "reshape", {na},
                         [na, ar, ac](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na,
                                              Eigen::Map<const DenseMatrix<Scalar>>(g.data(), ar, ac));
                         });
}

/// Concatenate along the last axis (columns). All parts must share row count.
template <class Scalar>
TensorT<Scalar> concat_cols(const std::vector<TensorT<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no tensors");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw std::invalid_argument("concat_cols: row mismatch " +
                                  detail::shape_string(p.rows(), p.cols()) + " vs " +
                                  std::to_string(rows) + " rows");
    }
    cols += p.cols();
  }
  DenseMatrix<Scalar> out(rows, cols);
  std::vector<std::shared_ptr<detail::TapeNode<Scalar>>> nodes;
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    nodes.push_back(p.tape_node());
    offsets.push_back(at);
    at += p.cols();
  }
  auto parents = nodes;
  return make_op<Scalar>(std::move(out), "concat_cols", std::move(parents),
                         [nodes, offsets](const DenseMatrix<Scalar>& g) {
                           for (std::size_t i = 0; i < nodes.size(); ++i) {
                             detail::accumulate(*nodes[i],
                                                g.middleCols(offsets[i], nodes[i]->value.cols()));
                           }
                         });
}

/// Concatenate along the first axis (rows). All parts must share column count.
template <class Scalar>
TensorT<Scalar> concat_rows(const std::vector<TensorT<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no tensors");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw std::invalid_argument("concat_rows: column mismatch " +
                                  detail::shape_string(p.rows(), p.cols()) + " vs " +
                                  std::to_string(cols) + " cols");
    }
    rows += p.rows();
  }
  DenseMatrix<Scalar> out(rows, cols);
  std::vector<std::shared_ptr<detail::TapeNode<Scalar>>> nodes;
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    nodes.push_back(p.tape_node());
    offsets.push_back(at);
    at += p.rows();
  }
  auto parents = nodes;
  return make_op<Scalar>(std::move(out), "concat_rows", std::move(parents),
                         [nodes, offsets](const DenseMatrix<Scalar>& g) {
                           for (std::size_t i = 0; i < nodes.size(); ++i) {
                             detail::accumulate(*nodes[i],
                                                g.middleRows(offsets[i], nodes[i]->value.rows()));
                           }
                         });
}

template <class Scalar>
TensorT<Scalar> slice_rows(const TensorT<Scalar>& a, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > a.rows()) {
    throw std::invalid_argument("slice_rows: [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside " +
                                detail::shape_string(a.rows(), a.cols()));
  }
  auto na = a.tape_node();
  return make_op<Scalar>(na->value.middleRows(first, count), "slice_rows", {na},
                         [na, first, count](const DenseMatrix<Scalar>& g) {
                           if (!na->requires_grad) return;
                           if (na->grad.size() == 0) {
                             na->grad = DenseMatrix<Scalar>::Zero(na->value.rows(), na->value.cols());
                           }
                           na->grad.middleRows(first, count) += g;
                         });
}

template <class Scalar>
TensorT<Scalar> slice_cols(const TensorT<Scalar>& a, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > a.cols()) {
    throw std::invalid_argument("slice_cols: [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside " +
                                detail::shape_string(a.rows(), a.cols()));
  }
  auto na = a.tape_node();
  return make_op<Scalar>(na->value.middleCols(first, count), "slice_cols", {na},
                         [na, first, count](const DenseMatrix<Scalar>& g) {
                           if (!na->requires_grad) return;
                           if (na->grad.size() == 0) {
                             na->grad = DenseMatrix<Scalar>::Zero(na->value.rows(), na->value.cols());
                           }
                           na->grad.middleCols(first, count) += g;
                         });
}

template <class Scalar>
TensorT<Scalar> relu(const TensorT<Scalar>& a) {
  auto na = a.tape_node();
  return make_op<Scalar>(na->value.cwiseMax(Scalar(0)), "relu", {na},
                         [na](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(
                               *na, ((na->value.array() > Scalar(0)).template cast<Scalar>() *
                                     g.array())
                                        .matrix());
                         });
}

/// Softmax along `axis` (1 = within each row, 0 = within each column),
/// stabilized by max subtraction. Rows/columns of the result sum to one.
template <class Scalar>
TensorT<Scalar> softmax(const TensorT<Scalar>& a, int axis = 1) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis must be 0 or 1");
  if (axis == 0) return transpose(softmax(transpose(a), 1));
  if (a.cols() == 0 || a.rows() == 0) throw std::invalid_argument("softmax: empty axis");

  auto na = a.tape_node();
  DenseMatrix<Scalar> y(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto row = na->value.row(i).array();
    const Scalar m = row.maxCoeff();
    Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (row - m).exp();
    y.row(i) = (e / e.sum()).matrix();
  }
  return make_op<Scalar>(y, "softmax", {na}, [na, y](const DenseMatrix<Scalar>& g) {
    DenseMatrix<Scalar> dx(y.rows(), y.cols());
    for (Index i = 0; i < y.rows(); ++i) {
      const Scalar dot = g.row(i).cwiseProduct(y.row(i)).sum();
      dx.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
    }
    detail::accumulate(*na, dx);
  });
}

/// Per-row normalization over the last axis followed by the learned affine
/// map: y = gain * (x - mean) / sqrt(var + eps) + bias. Variance is the
/// population variance; eps sits inside the square root.
template <class Scalar>
TensorT<Scalar> layer_norm(const TensorT<Scalar>& x, const TensorT<Scalar>& gain,
                           const TensorT<Scalar>& bias, Scalar eps) {
  const Index d = x.cols();
  if (d == 0) throw std::invalid_argument("layer_norm: zero-length last dimension");
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw std::invalid_argument("layer_norm: gain/bias must be 1x" + std::to_string(d));
  }
  if (!(eps >= Scalar(0))) throw std::invalid_argument("layer_norm: eps must be >= 0");

  auto nx = x.tape_node();
  auto ng = gain.tape_node();
  auto nb = bias.tape_node();

  DenseMatrix<Scalar> xhat(x.rows(), d);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_sigma(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    auto row = nx->value.row(i).array();
    const Scalar mean = row.mean();
    const Scalar var = (row - mean).square().mean();
    const Scalar is = Scalar(1) / std::sqrt(var + eps);
    inv_sigma(i) = is;
    xhat.row(i) = ((row - mean) * is).matrix();
  }
  DenseMatrix<Scalar> out = xhat;
  out.array().rowwise() *= ng->value.row(0).array();
  out.rowwise() += nb->value.row(0);

  return make_op<Scalar>(std::move(out), "layer_norm", {nx, ng, nb},
                         [nx, ng, nb, xhat, inv_sigma](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*ng, (g.array() * xhat.array()).colwise().sum().matrix());
                           detail::accumulate(*nb, g.colwise().sum());
                           if (!nx->requires_grad) return;
                           const Index d = xhat.cols();
                           DenseMatrix<Scalar> dxhat = g;
                           dxhat.array().rowwise() *= ng->value.row(0).array();
                           DenseMatrix<Scalar> dx(xhat.rows(), d);
                           for (Index i = 0; i < xhat.rows(); ++i) {
                             auto dh = dxhat.row(i).array();
                             auto h = xhat.row(i).array();
                             const Scalar m1 = dh.mean();
                             const Scalar m2 = (dh * h).mean();
                             dx.row(i) = (inv_sigma(i) * (dh - m1 - h * m2)).matrix();
                           }
                           detail::accumulate(*nx, dx);
                         });
}

/// Mean over all entries, as a 1x1 tensor.
template <class Scalar>
TensorT<Scalar> mean_all(const TensorT<Scalar>& a) {
  if (a.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  auto na = a.tape_node();
  const Scalar n = static_cast<Scalar>(a.size());
  DenseMatrix<Scalar> out(1, 1);
  out(0, 0) = na->value.mean();
  return make_op<Scalar>(std::move(out), "mean_all", {na},
                         [na, n](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na,
                                              DenseMatrix<Scalar>::Constant(
                                                  na->value.rows(), na->value.cols(), g(0, 0) / n));
                         });
}

/// Sum over all entries, as a 1x1 tensor.
template <class Scalar>
TensorT<Scalar> sum_all(const TensorT<Scalar>& a) {
  auto na = a.tape_node();
  DenseMatrix<Scalar> out(1, 1);
  out(0, 0) = na->value.sum();
  return make_op<Scalar>(std::move(out), "sum_all", {na},
                         [na](const DenseMatrix<Scalar>& g) {
                           detail::accumulate(*na,
                                              DenseMatrix<Scalar>::Constant(
                                                  na->value.rows(), na->value.cols(), g(0, 0)));
                         });
}

}  // namespace missformer
