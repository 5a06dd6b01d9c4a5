#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsre/types.hpp"

namespace fsre {

// All differentiable quantities are dense 2-D row-major matrices; vectors are
// 1xN, scalars 1x1, and higher-rank tensors (per-head attention) are kept as
// separate matrices.
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct DiffNode {
  Matrix<S> value;
  Matrix<S> grad;
  std::function<void()> backward;
  const char* op = "leaf";
  bool requires_grad = false;
};

template <typename S>
class Tape;

// Cheap handle into a tape; never outlives it.
template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  DiffNode<S>* node = nullptr;

  const Matrix<S>& value() const { return node->value; }
  const Matrix<S>& grad() const { return node->grad; }
  long rows() const { return node->value.rows(); }
  long cols() const { return node->value.cols(); }
  bool requires_grad() const { return node->requires_grad; }
  explicit operator bool() const { return node != nullptr; }
};

// Eager reverse-mode tape: every op computes its value immediately and pushes
// a closure that scatters the output gradient to its parents. Node addresses
// are stable (deque), so closures hold raw pointers.
template <typename S>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // When false, no backward closures are recorded (pure evaluation).
  bool grad_enabled = true;

  Var<S> leaf(Matrix<S> value, bool requires_grad = false, const char* op = "leaf") {
    return push(op, std::move(value), requires_grad && grad_enabled, {});
  }

  Var<S> constant(Matrix<S> value, const char* op = "const") {
    return push(op, std::move(value), false, {});
  }

  // Accumulates d(loss)/d(node) into every node that requires a gradient.
  void backward(Var<S> loss) {
    if (loss.tape != this) throw_internal("backward: loss from a different tape");
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw_internal("backward: loss must be a scalar");
    }
    if (!loss.node->requires_grad) {
      throw_internal("backward: loss does not depend on any differentiable leaf");
    }
    for (DiffNode<S>& node : nodes_) {
      if (node.requires_grad) node.grad = Matrix<S>::Zero(node.value.rows(), node.value.cols());
    }
    loss.node->grad(0, 0) = S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->requires_grad && it->backward) it->backward();
    }
  }

  std::size_t size() const { return nodes_.size(); }

  // Creates the node first, then wires a closure that receives it; ops need
  // the result node to read their own value/grad during backward.
  template <typename Back>
  Var<S> make(const char* op, Matrix<S> value, bool requires_grad, Back&& back) {
    const bool rg = requires_grad && grad_enabled;
    Var<S> out = push(op, std::move(value), rg, {});
    if (rg) {
      out.node->backward = [fn = std::forward<Back>(back), node = out.node]() { fn(*node); };
    }
    return out;
  }

 private:
  Var<S> push(const char* op, Matrix<S> value, bool requires_grad,
              std::function<void()> backward) {
    if (!value.allFinite()) {
      throw_numeric(std::string("op '") + op + "' produced a non-finite value");
    }
    nodes_.push_back({std::move(value), {}, std::move(backward), op, requires_grad});
    return {this, &nodes_.back()};
  }

  std::deque<DiffNode<S>> nodes_;
};

namespace detail {

inline void expect(bool ok, const char* op, const std::string& what) {
  if (!ok) throw_internal(std::string(op) + ": " + what);
}

template <typename S>
Tape<S>* same_tape(const Var<S>& a, const Var<S>& b, const char* op) {
  expect(a.tape != nullptr && a.tape == b.tape, op, "operands from different tapes");
  return a.tape;
}

template <typename S>
void expect_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  expect(a.rows() == b.rows() && a.cols() == b.cols(), op,
         "shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>* tape = detail::same_tape(a, b, "matmul");
  detail::expect(a.cols() == b.rows(), "matmul",
                 "inner dims " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  Matrix<S> value = a.value() * b.value();
  auto* an = a.node;
  auto* bn = b.node;
  return tape->make("matmul", std::move(value), an->requires_grad || bn->requires_grad,
                    [an, bn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad.noalias() += out.grad * bn->value.transpose();
                      if (bn->requires_grad) bn->grad.noalias() += an->value.transpose() * out.grad;
                    });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  Tape<S>* tape = detail::same_tape(a, b, "add");
  detail::expect_same_shape(a, b, "add");
  auto* an = a.node;
  auto* bn = b.node;
  return tape->make("add", Matrix<S>(a.value() + b.value()),
                    an->requires_grad || bn->requires_grad, [an, bn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad += out.grad;
                      if (bn->requires_grad) bn->grad += out.grad;
                    });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  Tape<S>* tape = detail::same_tape(a, b, "sub");
  detail::expect_same_shape(a, b, "sub");
  auto* an = a.node;
  auto* bn = b.node;
  return tape->make("sub", Matrix<S>(a.value() - b.value()),
                    an->requires_grad || bn->requires_grad, [an, bn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad += out.grad;
                      if (bn->requires_grad) bn->grad -= out.grad;
                    });
}

template <typename S>
Var<S> cwise_mul(Var<S> a, Var<S> b) {
  Tape<S>* tape = detail::same_tape(a, b, "cwise_mul");
  detail::expect_same_shape(a, b, "cwise_mul");
  auto* an = a.node;
  auto* bn = b.node;
  return tape->make("cwise_mul", Matrix<S>(a.value().cwiseProduct(b.value())),
                    an->requires_grad || bn->requires_grad, [an, bn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad += out.grad.cwiseProduct(bn->value);
                      if (bn->requires_grad) bn->grad += out.grad.cwiseProduct(an->value);
                    });
}

// Elementwise mul*a + add with compile-time constants.
template <typename S>
Var<S> affine(Var<S> a, S mul, S add_c) {
  auto* an = a.node;
  Matrix<S> value = (a.value().array() * mul + add_c).matrix();
  return a.tape->make("affine", std::move(value), an->requires_grad,
                      [an, mul](const DiffNode<S>& out) { an->grad += mul * out.grad; });
}

template <typename S>
Var<S> add_rowvec(Var<S> a, Var<S> r) {
  Tape<S>* tape = detail::same_tape(a, r, "add_rowvec");
  detail::expect(r.rows() == 1 && r.cols() == a.cols(), "add_rowvec", "row vector shape");
  Matrix<S> value = a.value();
  value.rowwise() += r.value().row(0);
  auto* an = a.node;
  auto* rn = r.node;
  return tape->make("add_rowvec", std::move(value), an->requires_grad || rn->requires_grad,
                    [an, rn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad += out.grad;
                      if (rn->requires_grad) rn->grad += out.grad.colwise().sum();
                    });
}

template <typename S>
Var<S> transpose(Var<S> a) {
  auto* an = a.node;
  return a.tape->make("transpose", Matrix<S>(a.value().transpose()), an->requires_grad,
                      [an](const DiffNode<S>& out) { an->grad += out.grad.transpose(); });
}

template <typename S>
Var<S> vtanh(Var<S> a) {
  auto* an = a.node;
  return a.tape->make("tanh", Matrix<S>(a.value().array().tanh().matrix()), an->requires_grad,
                      [an](const DiffNode<S>& out) {
                        an->grad.array() +=
                            out.grad.array() * (S(1) - out.value.array().square());
                      });
}

// Exact (erf-based) Gaussian error linear unit.
template <typename S>
Var<S> gelu(Var<S> a) {
  constexpr S kInvSqrt2 = S(0.7071067811865475244);
  constexpr S kInvSqrt2Pi = S(0.3989422804014326779);
  auto* an = a.node;
  Matrix<S> value = a.value().unaryExpr([kInvSqrt2](S x) {
    return S(0.5) * x * (S(1) + std::erf(x * kInvSqrt2));
  });
  return a.tape->make("gelu", std::move(value), an->requires_grad,
                      [an, kInvSqrt2, kInvSqrt2Pi](const DiffNode<S>& out) {
                        an->grad += out.grad.cwiseProduct(
                            an->value.unaryExpr([kInvSqrt2, kInvSqrt2Pi](S x) {
                              const S cdf = S(0.5) * (S(1) + std::erf(x * kInvSqrt2));
                              const S dens = kInvSqrt2Pi * std::exp(S(-0.5) * x * x);
                              return cdf + x * dens;
                            }));
                      });
}

namespace detail {

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) {
    return S(1) / (S(1) + std::exp(-x));
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
S stable_softplus(S x) {
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace detail

template <typename S>
Var<S> sigmoid(Var<S> a) {
  auto* an = a.node;
  Matrix<S> value = a.value().unaryExpr([](S x) { return detail::stable_sigmoid(x); });
  return a.tape->make("sigmoid", std::move(value), an->requires_grad,
                      [an](const DiffNode<S>& out) {
                        an->grad.array() += out.grad.array() * out.value.array() *
                                            (S(1) - out.value.array());
                      });
}

template <typename S>
Var<S> softplus(Var<S> a) {
  auto* an = a.node;
  Matrix<S> value = a.value().unaryExpr([](S x) { return detail::stable_softplus(x); });
  return a.tape->make("softplus", std::move(value), an->requires_grad,
                      [an](const DiffNode<S>& out) {
                        an->grad +=
                            out.grad.cwiseProduct(an->value.unaryExpr(
                                [](S x) { return detail::stable_sigmoid(x); }));
                      });
}

// a^p elementwise; defined for nonnegative inputs (probabilities).
template <typename S>
Var<S> pow_const(Var<S> a, S p) {
  auto* an = a.node;
  Matrix<S> value = a.value().array().pow(p).matrix();
  return a.tape->make("pow_const", std::move(value), an->requires_grad,
                      [an, p](const DiffNode<S>& out) {
                        an->grad.array() +=
                            out.grad.array() * p * an->value.array().pow(p - S(1));
                      });
}

// Shift-stable softmax over each row independently.
template <typename S>
Var<S> softmax_rows(Var<S> a) {
  Matrix<S> value(a.rows(), a.cols());
  for (long i = 0; i < a.rows(); ++i) {
    const S m = a.value().row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (a.value().row(i).array() - m).exp();
    value.row(i) = (e / e.sum()).matrix();
  }
  auto* an = a.node;
  return a.tape->make("softmax_rows", std::move(value), an->requires_grad,
                      [an](const DiffNode<S>& out) {
                        for (long i = 0; i < out.value.rows(); ++i) {
                          const S inner = out.grad.row(i).dot(out.value.row(i));
                          an->grad.row(i).array() +=
                              out.value.row(i).array() *
                              (out.grad.row(i).array() - inner);
                        }
                      });
}

// Row-wise layer normalization with learned gain/bias (1xN each).
template <typename S>
Var<S> layer_norm_rows(Var<S> x, Var<S> gain, Var<S> bias, S eps = S(1e-5)) {
  Tape<S>* tape = detail::same_tape(x, gain, "layer_norm");
  detail::same_tape(gain, bias, "layer_norm");
  detail::expect(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm", "gain shape");
  detail::expect(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm", "bias shape");
  const long n = x.cols();
  Matrix<S> value(x.rows(), n);
  for (long i = 0; i < x.rows(); ++i) {
    const S mu = x.value().row(i).mean();
    const S var = (x.value().row(i).array() - mu).square().mean();
    const S inv = S(1) / std::sqrt(var + eps);
    value.row(i) =
        (((x.value().row(i).array() - mu) * inv) * gain.value().row(0).array() +
         bias.value().row(0).array())
            .matrix();
  }
  auto* xn = x.node;
  auto* gn = gain.node;
  auto* bn = bias.node;
  const bool rg = xn->requires_grad || gn->requires_grad || bn->requires_grad;
  return tape->make("layer_norm", std::move(value), rg,
                    [xn, gn, bn, eps, n](const DiffNode<S>& out) {
                      for (long i = 0; i < out.value.rows(); ++i) {
                        const S mu = xn->value.row(i).mean();
                        const S var = (xn->value.row(i).array() - mu).square().mean();
                        const S inv = S(1) / std::sqrt(var + eps);
                        Eigen::Array<S, 1, Eigen::Dynamic> xhat =
                            (xn->value.row(i).array() - mu) * inv;
                        Eigen::Array<S, 1, Eigen::Dynamic> dy = out.grad.row(i).array();
                        if (gn->requires_grad) gn->grad.array() += (dy * xhat).matrix().array();
                        if (bn->requires_grad) bn->grad += out.grad.row(i);
                        if (xn->requires_grad) {
                          Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
                              dy * gn->value.row(0).array();
                          const S m1 = dxhat.mean();
                          const S m2 = (dxhat * xhat).mean();
                          xn->grad.row(i).array() += inv * (dxhat - m1 - xhat * m2);
                        }
                      }
                    });
}

template <typename S>
Var<S> gather_rows(Var<S> a, std::vector<int> idx) {
  detail::expect(!idx.empty(), "gather_rows", "empty index list");
  Matrix<S> value(static_cast<long>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    detail::expect(idx[i] >= 0 && idx[i] < a.rows(), "gather_rows", "row index out of range");
    value.row(static_cast<long>(i)) = a.value().row(idx[i]);
  }
  auto* an = a.node;
  return a.tape->make("gather_rows", std::move(value), an->requires_grad,
                      [an, idx = std::move(idx)](const DiffNode<S>& out) {
                        for (std::size_t i = 0; i < idx.size(); ++i) {
                          an->grad.row(idx[i]) += out.grad.row(static_cast<long>(i));
                        }
                      });
}

// Mean of the selected rows, as a 1xN vector.
template <typename S>
Var<S> mean_rows(Var<S> a, std::vector<int> idx) {
  detail::expect(!idx.empty(), "mean_rows", "empty index list");
  Matrix<S> value = Matrix<S>::Zero(1, a.cols());
  for (int i : idx) {
    detail::expect(i >= 0 && i < a.rows(), "mean_rows", "row index out of range");
    value.row(0) += a.value().row(i);
  }
  value /= static_cast<S>(idx.size());
  auto* an = a.node;
  return a.tape->make("mean_rows", std::move(value), an->requires_grad,
                      [an, idx = std::move(idx)](const DiffNode<S>& out) {
                        const S w = S(1) / static_cast<S>(idx.size());
                        for (int i : idx) an->grad.row(i) += w * out.grad.row(0);
                      });
}

template <typename S>
Var<S> slice_cols(Var<S> a, long start, long len) {
  detail::expect(start >= 0 && len > 0 && start + len <= a.cols(), "slice_cols", "bad range");
  auto* an = a.node;
  return a.tape->make("slice_cols", Matrix<S>(a.value().middleCols(start, len)),
                      an->requires_grad, [an, start, len](const DiffNode<S>& out) {
                        an->grad.middleCols(start, len) += out.grad;
                      });
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  detail::expect(!parts.empty(), "concat_cols", "no operands");
  Tape<S>* tape = parts[0].tape;
  long cols = 0;
  bool rg = false;
  for (const Var<S>& p : parts) {
    detail::same_tape(parts[0], p, "concat_cols");
    detail::expect(p.rows() == parts[0].rows(), "concat_cols", "row mismatch");
    cols += p.cols();
    rg = rg || p.node->requires_grad;
  }
  Matrix<S> value(parts[0].rows(), cols);
  long at = 0;
  std::vector<DiffNode<S>*> nodes;
  for (const Var<S>& p : parts) {
    value.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    nodes.push_back(p.node);
  }
  return tape->make("concat_cols", std::move(value), rg,
                    [nodes = std::move(nodes)](const DiffNode<S>& out) {
                      long at = 0;
                      for (DiffNode<S>* n : nodes) {
                        if (n->requires_grad) {
                          n->grad += out.grad.middleCols(at, n->value.cols());
                        }
                        at += n->value.cols();
                      }
                    });
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  detail::expect(!parts.empty(), "concat_rows", "no operands");
  Tape<S>* tape = parts[0].tape;
  long rows = 0;
  bool rg = false;
  for (const Var<S>& p : parts) {
    detail::same_tape(parts[0], p, "concat_rows");
    detail::expect(p.cols() == parts[0].cols(), "concat_rows", "column mismatch");
    rows += p.rows();
    rg = rg || p.node->requires_grad;
  }
  Matrix<S> value(rows, parts[0].cols());
  long at = 0;
  std::vector<DiffNode<S>*> nodes;
  for (const Var<S>& p : parts) {
    value.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    nodes.push_back(p.node);
  }
  return tape->make("concat_rows", std::move(value), rg,
                    [nodes = std::move(nodes)](const DiffNode<S>& out) {
                      long at = 0;
                      for (DiffNode<S>* n : nodes) {
                        if (n->requires_grad) {
                          n->grad += out.grad.middleRows(at, n->value.rows());
                        }
                        at += n->value.rows();
                      }
                    });
}

template <typename S>
Var<S> sum_all(Var<S> a) {
  Matrix<S> value(1, 1);
  value(0, 0) = a.value().sum();
  auto* an = a.node;
  return a.tape->make("sum_all", std::move(value), an->requires_grad,
                      [an](const DiffNode<S>& out) {
                        an->grad.array() += out.grad(0, 0);
                      });
}

template <typename S>
Var<S> mean_all(Var<S> a) {
  const S n = static_cast<S>(a.rows() * a.cols());
  return affine(sum_all(a), S(1) / n, S(0));
}

template <typename S>
Var<S> dot(Var<S> a, Var<S> b) {
  Tape<S>* tape = detail::same_tape(a, b, "dot");
  detail::expect_same_shape(a, b, "dot");
  detail::expect(a.rows() == 1, "dot", "expects row vectors");
  Matrix<S> value(1, 1);
  value(0, 0) = a.value().row(0).dot(b.value().row(0));
  auto* an = a.node;
  auto* bn = b.node;
  return tape->make("dot", std::move(value), an->requires_grad || bn->requires_grad,
                    [an, bn](const DiffNode<S>& out) {
                      const S g = out.grad(0, 0);
                      if (an->requires_grad) an->grad += g * bn->value;
                      if (bn->requires_grad) bn->grad += g * an->value;
                    });
}

// a / s with a 1x1 scalar node s.
template <typename S>
Var<S> div_by_scalarv(Var<S> a, Var<S> s) {
  Tape<S>* tape = detail::same_tape(a, s, "div_by_scalarv");
  detail::expect(s.rows() == 1 && s.cols() == 1, "div_by_scalarv", "divisor must be 1x1");
  const S sv = s.value()(0, 0);
  detail::expect(sv != S(0), "div_by_scalarv", "division by exact zero");
  auto* an = a.node;
  auto* sn = s.node;
  return tape->make("div_by_scalarv", Matrix<S>(a.value() / sv),
                    an->requires_grad || sn->requires_grad, [an, sn](const DiffNode<S>& out) {
                      const S sv = sn->value(0, 0);
                      if (an->requires_grad) an->grad += out.grad / sv;
                      if (sn->requires_grad) {
                        sn->grad(0, 0) -= out.grad.cwiseProduct(out.value).sum() / sv;
                      }
                    });
}

template <typename S>
Var<S> mul_by_scalarv(Var<S> a, Var<S> s) {
  Tape<S>* tape = detail::same_tape(a, s, "mul_by_scalarv");
  detail::expect(s.rows() == 1 && s.cols() == 1, "mul_by_scalarv", "factor must be 1x1");
  auto* an = a.node;
  auto* sn = s.node;
  return tape->make("mul_by_scalarv", Matrix<S>(a.value() * s.value()(0, 0)),
                    an->requires_grad || sn->requires_grad, [an, sn](const DiffNode<S>& out) {
                      if (an->requires_grad) an->grad += out.grad * sn->value(0, 0);
                      if (sn->requires_grad) {
                        sn->grad(0, 0) += out.grad.cwiseProduct(an->value).sum();
                      }
                    });
}

// Maximum over all entries; ties break toward the first entry in row-major
// order so the backward pass is deterministic.
template <typename S>
Var<S> reduce_max(Var<S> a) {
  long bi = 0;
  long bj = 0;
  S best = a.value()(0, 0);
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      if (a.value()(i, j) > best) {
        best = a.value()(i, j);
        bi = i;
        bj = j;
      }
    }
  }
  Matrix<S> value(1, 1);
  value(0, 0) = best;
  auto* an = a.node;
  return a.tape->make("reduce_max", std::move(value), an->requires_grad,
                      [an, bi, bj](const DiffNode<S>& out) {
                        an->grad(bi, bj) += out.grad(0, 0);
                      });
}

// log(sum(exp(a))) over all entries, shift-stable.
template <typename S>
Var<S> logsumexp_all(Var<S> a) {
  const S m = a.value().maxCoeff();
  const S lse = m + std::log((a.value().array() - m).exp().sum());
  Matrix<S> value(1, 1);
  value(0, 0) = lse;
  auto* an = a.node;
  return a.tape->make("logsumexp", std::move(value), an->requires_grad,
                      [an, lse](const DiffNode<S>& out) {
                        an->grad.array() +=
                            out.grad(0, 0) * (an->value.array() - lse).exp();
                      });
}

// ------------------------------------------------------------------
// Verification and gradient utilities.

// Central finite differences of f around the current contents of x.
template <typename S>
Matrix<S> fd_grad(Matrix<S>& x, const std::function<S()>& f, S h = S(1e-5)) {
  if (!(h > S(0))) throw_config("fd_grad: step must be positive");
  Matrix<S> g(x.rows(), x.cols());
  for (long i = 0; i < x.rows(); ++i) {
    for (long j = 0; j < x.cols(); ++j) {
      const S orig = x(i, j);
      x(i, j) = orig + h;
      const S fp = f();
      x(i, j) = orig - h;
      const S fm = f();
      x(i, j) = orig;
      g(i, j) = (fp - fm) / (S(2) * h);
    }
  }
  return g;
}

// Largest elementwise relative error, with a floor so near-zero entries
// compare absolutely.
template <typename S>
S max_rel_err(const Matrix<S>& a, const Matrix<S>& b, S floor = S(1e-4)) {
  detail::expect(a.rows() == b.rows() && a.cols() == b.cols(), "max_rel_err", "shape mismatch");
  S worst = S(0);
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      const S denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

template <typename S>
using GradMap = std::map<std::string, Matrix<S>>;

// Scales all gradients by max_norm/norm when the joint L2 norm exceeds
// max_norm; returns the pre-clip norm.
template <typename S>
S clip_global_norm(GradMap<S>& grads, S max_norm) {
  if (!(max_norm > S(0))) throw_config("clip_global_norm: max_norm must be positive");
  S sq = S(0);
  for (const auto& [name, g] : grads) sq += g.squaredNorm();
  const S norm = std::sqrt(sq);
  if (norm > max_norm) {
    const S scale = max_norm / norm;
    for (auto& [name, g] : grads) g *= scale;
  }
  return norm;
}

}  // namespace fsre
