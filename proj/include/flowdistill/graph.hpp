#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowdistill/errors.hpp"
#include "flowdistill/kernels.hpp"
#include "flowdistill/tensor.hpp"

namespace fd {

using NodeId = int32_t;

enum class OpKind : uint8_t {
  kInput,
  kParam,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kConcatLast,
  kGatherRows,
  kRelu,
  kSoftplus,
  kExp,
  kLog,
  kAbs,
  kSquare,
  kSqrt,
  kReduceSum,
  kReduceMean,
  kSliceLast,
  kReshape,
  kScale,
};

// Define-by-run computation graph: every op evaluates eagerly and records
// enough to run one reverse sweep. Nodes only ever reference earlier nodes.
// A graph instance is confined to a single thread for its forward+backward
// lifetime; kernels may fan out via OpenMP internally.
template <typename S>
class GraphT {
 public:
  using scalar_type = S;

  struct Node {
    OpKind kind;
    NodeId a = -1;
    NodeId b = -1;
    std::vector<NodeId> list;       // concat inputs
    TensorT<S> value;
    std::vector<int64_t> gather_idx;
    int64_t slice_start = 0;
    int64_t slice_len = 0;
    S scale = S(1);
    bool requires_grad = false;
  };

  NodeId input(TensorT<S> v) { return push(OpKind::kInput, std::move(v), false); }

  NodeId param(const TensorT<S>& v) {
    NodeId id = push(OpKind::kParam, v, true);
    param_ids_.push_back(id);
    return id;
  }

  const TensorT<S>& value(NodeId id) const { return node(id).value; }
  S scalar_value(NodeId id) const {
    const TensorT<S>& v = node(id).value;
    if (v.numel() != 1) throw ContractError("scalar_value: node holds " + shape_str(v.shape));
    return v.values[0];
  }
  size_t size() const { return nodes_.size(); }

  NodeId matmul(NodeId ia, NodeId ib) {
    const TensorT<S>& A = node(ia).value;
    const TensorT<S>& B = node(ib).value;
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
      throw ShapeError("matmul: incompatible shapes " + shape_str(A.shape) + " * " +
                       shape_str(B.shape));
    }
    TensorT<S> out({A.dim(0), B.dim(1)});
    kernels::matmul(A.data(), B.data(), out.data(), A.dim(0), A.dim(1), B.dim(1));
    return push2(OpKind::kMatmul, ia, ib, std::move(out));
  }

  NodeId add(NodeId ia, NodeId ib) { return binary(OpKind::kAdd, ia, ib); }
  NodeId sub(NodeId ia, NodeId ib) { return binary(OpKind::kSub, ia, ib); }
  NodeId mul(NodeId ia, NodeId ib) { return binary(OpKind::kMul, ia, ib); }

  NodeId concat_last(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_last: no inputs");
    const TensorT<S>& first = node(parts[0]).value;
    std::vector<int64_t> lead(first.shape.begin(), first.shape.end() - 1);
    int64_t total_last = 0;
    bool rg = false;
    for (NodeId p : parts) {
      const TensorT<S>& t = node(p).value;
      if (t.rank() != first.rank() ||
          !std::equal(lead.begin(), lead.end(), t.shape.begin())) {
        throw ShapeError("concat_last: leading dims differ, " + shape_str(first.shape) + " vs " +
                         shape_str(t.shape));
      }
      total_last += t.shape.back();
      rg = rg || node(p).requires_grad;
    }
    std::vector<int64_t> out_shape = lead;
    out_shape.push_back(total_last);
    TensorT<S> out(out_shape);
    const int64_t rows = out.numel() / total_last;
    int64_t off = 0;
    for (NodeId p : parts) {
      const TensorT<S>& t = node(p).value;
      const int64_t w = t.shape.back();
      for (int64_t r = 0; r < rows; ++r) {
        const S* src = t.data() + r * w;
        S* dst = out.data() + r * total_last + off;
        for (int64_t j = 0; j < w; ++j) dst[j] = src[j];
      }
      off += w;
    }
    Node n;
    n.kind = OpKind::kConcatLast;
    n.list = parts;
    n.value = std::move(out);
    n.requires_grad = rg;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId gather_rows(NodeId table, std::vector<int64_t> idx) {
    const TensorT<S>& T = node(table).value;
    if (T.rank() != 2) throw ShapeError("gather_rows: table must be 2-d, got " + shape_str(T.shape));
    const int64_t rows = T.dim(0);
    for (int64_t i : idx) {
      if (i < 0 || i >= rows) {
        throw BoundsError("gather_rows: index " + std::to_string(i) + " out of range [0," +
                          std::to_string(rows) + ")");
      }
    }
    TensorT<S> out({static_cast<int64_t>(idx.size()), T.dim(1)});
    kernels::gather_rows(T.data(), idx.data(), out.data(), static_cast<int64_t>(idx.size()),
                         T.dim(1));
    Node n;
    n.kind = OpKind::kGatherRows;
    n.a = table;
    n.value = std::move(out);
    n.gather_idx = std::move(idx);
    n.requires_grad = node(table).requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId relu(NodeId ia) {
    return unary(OpKind::kRelu, ia, [](S x) { return x > S(0) ? x : S(0); });
  }

  // Overflow-safe softplus: max(x,0) + log1p(exp(-|x|)). Output > 0.
  NodeId softplus(NodeId ia) {
    return unary(OpKind::kSoftplus, ia, [](S x) {
      const S ax = x < S(0) ? -x : x;
      const S base = x > S(0) ? x : S(0);
      return base + static_cast<S>(std::log1p(std::exp(static_cast<double>(-ax))));
    });
  }

  NodeId exp_op(NodeId ia) {
    NodeId id = unary(OpKind::kExp, ia, [](S x) { return static_cast<S>(std::exp(static_cast<double>(x))); });
    check_finite(id, "exp");
    return id;
  }

  NodeId log_op(NodeId ia) {
    const TensorT<S>& x = node(ia).value;
    for (const S v : x.values) {
      if (!(v > S(0))) throw NumericError("log: input must be positive, got " + std::to_string(v));
    }
    return unary(OpKind::kLog, ia, [](S v) { return static_cast<S>(std::log(static_cast<double>(v))); });
  }

  NodeId abs_op(NodeId ia) {
    return unary(OpKind::kAbs, ia, [](S x) { return x < S(0) ? -x : x; });
  }

  NodeId square(NodeId ia) {
    return unary(OpKind::kSquare, ia, [](S x) { return x * x; });
  }

  NodeId sqrt_op(NodeId ia) {
    const TensorT<S>& x = node(ia).value;
    for (const S v : x.values) {
      if (v < S(0)) throw NumericError("sqrt: negative input " + std::to_string(v));
    }
    return unary(OpKind::kSqrt, ia, [](S v) { return static_cast<S>(std::sqrt(static_cast<double>(v))); });
  }

  NodeId reduce_sum(NodeId ia) {
    const TensorT<S>& x = node(ia).value;
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(kernels::reduce_sum(x.data(), x.numel())));
    return push2(OpKind::kReduceSum, ia, -1, std::move(out));
  }

  NodeId reduce_mean(NodeId ia) {
    const TensorT<S>& x = node(ia).value;
    if (x.numel() == 0) throw ContractError("reduce_mean: empty tensor");
    TensorT<S> out = TensorT<S>::scalar(
        static_cast<S>(kernels::reduce_sum(x.data(), x.numel()) /
                       static_cast<long double>(x.numel())));
    return push2(OpKind::kReduceMean, ia, -1, std::move(out));
  }

  NodeId slice_last(NodeId ia, int64_t start, int64_t len) {
    const TensorT<S>& x = node(ia).value;
    if (x.rank() < 1) throw ShapeError("slice_last: rank-0 input");
    const int64_t last = x.shape.back();
    if (start < 0 || len < 0 || start + len > last) {
      throw BoundsError("slice_last: range [" + std::to_string(start) + "," +
                        std::to_string(start + len) + ") outside last dim " + std::to_string(last));
    }
    std::vector<int64_t> out_shape = x.shape;
    out_shape.back() = len;
    TensorT<S> out(out_shape);
    const int64_t rows = len == 0 ? 0 : out.numel() / len;
    for (int64_t r = 0; r < rows; ++r) {
      const S* src = x.data() + r * last + start;
      S* dst = out.data() + r * len;
      for (int64_t j = 0; j < len; ++j) dst[j] = src[j];
    }
    Node n;
    n.kind = OpKind::kSliceLast;
    n.a = ia;
    n.value = std::move(out);
    n.slice_start = start;
    n.slice_len = len;
    n.requires_grad = node(ia).requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId reshape(NodeId ia, std::vector<int64_t> new_shape) {
    const TensorT<S>& x = node(ia).value;
    if (TensorT<S>::shape_numel(new_shape) != x.numel()) {
      throw ShapeError("reshape: " + shape_str(x.shape) + " -> " + shape_str(new_shape) +
                       " changes element count");
    }
    TensorT<S> out(std::move(new_shape), x.values);
    return push2(OpKind::kReshape, ia, -1, std::move(out));
  }

  NodeId scale(NodeId ia, S c) {
    const TensorT<S>& x = node(ia).value;
    TensorT<S> out;
    out.shape = x.shape;
    out.values.resize(x.values.size());
    kernels::map1(x.data(), out.data(), x.numel(), [c](S v) { return c * v; });
    Node n;
    n.kind = OpKind::kScale;
    n.a = ia;
    n.value = std::move(out);
    n.scale = c;
    n.requires_grad = node(ia).requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  // Reverse-mode sweep from a scalar loss. Returns gradients for every
  // parameter node (zeros when the loss does not depend on one). A graph
  // supports exactly one backward pass per forward build.
  std::unordered_map<NodeId, TensorT<S>> backward(NodeId loss) {
    if (node(loss).value.numel() != 1) {
      throw ContractError("backward: loss must be scalar, got " + shape_str(node(loss).value.shape));
    }
    if (backward_done_) throw ContractError("backward: already run for this graph");
    backward_done_ = true;

    std::vector<TensorT<S>> grads(nodes_.size());
    std::vector<bool> has_grad(nodes_.size(), false);
    ensure_grad(grads, has_grad, loss).values[0] = S(1);

    for (NodeId id = loss; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!has_grad[static_cast<size_t>(id)] || !n.requires_grad) continue;
      if (n.kind != OpKind::kParam) {
        propagate(grads, has_grad, id);
        if (static_cast<NodeId>(id) != loss) {
          grads[static_cast<size_t>(id)] = TensorT<S>();  // free as soon as consumed
        }
      }
    }

    std::unordered_map<NodeId, TensorT<S>> out;
    for (NodeId pid : param_ids_) {
      if (has_grad[static_cast<size_t>(pid)]) {
        out.emplace(pid, std::move(grads[static_cast<size_t>(pid)]));
      } else {
        TensorT<S> z;
        z.shape = node(pid).value.shape;
        z.values.assign(node(pid).value.values.size(), S(0));
        out.emplace(pid, std::move(z));
      }
    }
    return out;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> param_ids_;
  bool backward_done_ = false;

  Node& node(NodeId id) { return nodes_.at(static_cast<size_t>(id)); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<size_t>(id)); }

  NodeId push(OpKind k, TensorT<S> v, bool rg) {
    Node n;
    n.kind = k;
    n.value = std::move(v);
    n.requires_grad = rg;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId push2(OpKind k, NodeId a, NodeId b, TensorT<S> v) {
    Node n;
    n.kind = k;
    n.a = a;
    n.b = b;
    n.value = std::move(v);
    n.requires_grad = (a >= 0 && node(a).requires_grad) || (b >= 0 && node(b).requires_grad);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  template <typename F>
  NodeId unary(OpKind k, NodeId ia, F f) {
    const TensorT<S>& x = node(ia).value;
    TensorT<S> out;
    out.shape = x.shape;
    out.values.resize(x.values.size());
    kernels::map1(x.data(), out.data(), x.numel(), f);
    return push2(k, ia, -1, std::move(out));
  }

  // Binary ops allow equal shapes, a scalar operand, or a suffix-broadcast
  // operand (its shape equals the trailing dims of the other).
  static bool suffix_of(const std::vector<int64_t>& small, const std::vector<int64_t>& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
  }

  NodeId binary(OpKind k, NodeId ia, NodeId ib) {
    const TensorT<S>& A = node(ia).value;
    const TensorT<S>& B = node(ib).value;
    const bool same = A.shape == B.shape;
    const bool b_small = !same && (B.numel() == 1 || suffix_of(B.shape, A.shape));
    const bool a_small = !same && !b_small && (A.numel() == 1 || suffix_of(A.shape, B.shape));
    if (!same && !b_small && !a_small) {
      throw ShapeError(op_name(k) + std::string(": shapes ") + shape_str(A.shape) + " and " +
                       shape_str(B.shape) + " are not broadcastable");
    }
    auto f = [k](S x, S y) -> S {
      switch (k) {
        case OpKind::kAdd: return x + y;
        case OpKind::kSub: return x - y;
        default: return x * y;
      }
    };
    TensorT<S> out;
    if (same) {
      out.shape = A.shape;
      out.values.resize(A.values.size());
      kernels::map2(A.data(), B.data(), out.data(), A.numel(), f);
    } else if (b_small) {
      out.shape = A.shape;
      out.values.resize(A.values.size());
      const int64_t small = std::max<int64_t>(B.numel(), 1);
      kernels::map2_bcast(A.data(), B.data(), out.data(), A.numel() / small, small, f);
    } else {
      out.shape = B.shape;
      out.values.resize(B.values.size());
      const int64_t small = std::max<int64_t>(A.numel(), 1);
      auto fr = [&f](S y, S x) { return f(x, y); };
      kernels::map2_bcast(B.data(), A.data(), out.data(), B.numel() / small, small, fr);
    }
    return push2(k, ia, ib, std::move(out));
  }

  static const char* op_name(OpKind k) {
    switch (k) {
      case OpKind::kAdd: return "add";
      case OpKind::kSub: return "sub";
      case OpKind::kMul: return "mul";
      default: return "op";
    }
  }

  TensorT<S>& ensure_grad(std::vector<TensorT<S>>& grads, std::vector<bool>& has, NodeId id) {
    TensorT<S>& g = grads[static_cast<size_t>(id)];
    if (!has[static_cast<size_t>(id)]) {
      g.shape = node(id).value.shape;
      g.values.assign(node(id).value.values.size(), S(0));
      has[static_cast<size_t>(id)] = true;
    }
    return g;
  }

  void add_into(std::vector<TensorT<S>>& grads, std::vector<bool>& has, NodeId id,
                const TensorT<S>& contribution, S sign = S(1)) {
    if (!node(id).requires_grad) return;
    TensorT<S>& g = ensure_grad(grads, has, id);
    kernels::axpy(sign, contribution.data(), g.data(), g.numel());
  }

  // Push dL/d(node) into dL/d(inputs) for one node.
  void propagate(std::vector<TensorT<S>>& grads, std::vector<bool>& has, NodeId id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    const TensorT<S>& dy = grads[static_cast<size_t>(id)];
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;
      case OpKind::kMatmul: {
        const TensorT<S>& A = node(n.a).value;
        const TensorT<S>& B = node(n.b).value;
        if (node(n.a).requires_grad) {
          TensorT<S> da(A.shape);
          kernels::matmul_a_bt(dy.data(), B.data(), da.data(), A.dim(0), B.dim(1), A.dim(1));
          add_into(grads, has, n.a, da);
        }
        if (node(n.b).requires_grad) {
          TensorT<S> db(B.shape);
          kernels::matmul_at_b(A.data(), dy.data(), db.data(), A.dim(0), A.dim(1), B.dim(1));
          add_into(grads, has, n.b, db);
        }
        break;
      }
      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul: {
        binary_backward(grads, has, n, dy);
        break;
      }
      case OpKind::kConcatLast: {
        const int64_t total_last = n.value.shape.back();
        const int64_t rows = n.value.numel() / total_last;
        int64_t off = 0;
        for (NodeId p : n.list) {
          const TensorT<S>& t = node(p).value;
          const int64_t w = t.shape.back();
          if (node(p).requires_grad) {
            TensorT<S> dp;
            dp.shape = t.shape;
            dp.values.resize(t.values.size());
            for (int64_t r = 0; r < rows; ++r) {
              const S* src = dy.data() + r * total_last + off;
              S* dst = dp.data() + r * w;
              for (int64_t j = 0; j < w; ++j) dst[j] = src[j];
            }
            add_into(grads, has, p, dp);
          }
          off += w;
        }
        break;
      }
      case OpKind::kGatherRows: {
        if (node(n.a).requires_grad) {
          TensorT<S>& g = ensure_grad(grads, has, n.a);
          kernels::scatter_add_rows(dy.data(), n.gather_idx.data(), g.data(),
                                    static_cast<int64_t>(n.gather_idx.size()),
                                    node(n.a).value.dim(1));
        }
        break;
      }
      case OpKind::kRelu: {
        unary_backward(grads, has, n, dy, [](S x, S) { return x > S(0) ? S(1) : S(0); });
        break;
      }
      case OpKind::kSoftplus: {
        unary_backward(grads, has, n, dy, [](S x, S) {
          if (x >= S(0)) return static_cast<S>(1.0 / (1.0 + std::exp(static_cast<double>(-x))));
          const double e = std::exp(static_cast<double>(x));
          return static_cast<S>(e / (1.0 + e));
        });
        break;
      }
      case OpKind::kExp: {
        unary_backward(grads, has, n, dy, [](S, S y) { return y; });
        break;
      }
      case OpKind::kLog: {
        unary_backward(grads, has, n, dy, [](S x, S) { return S(1) / x; });
        break;
      }
      case OpKind::kAbs: {
        // subgradient 0 at exactly 0, so the MAE losses stay deterministic
        unary_backward(grads, has, n, dy,
                       [](S x, S) { return x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0)); });
        break;
      }
      case OpKind::kSquare: {
        unary_backward(grads, has, n, dy, [](S x, S) { return S(2) * x; });
        break;
      }
      case OpKind::kSqrt: {
        unary_backward(grads, has, n, dy,
                       [](S, S y) { return y > S(0) ? S(1) / (S(2) * y) : S(0); });
        break;
      }
      case OpKind::kReduceSum: {
        if (node(n.a).requires_grad) {
          TensorT<S>& g = ensure_grad(grads, has, n.a);
          const S d = dy.values[0];
          for (auto& v : g.values) v += d;
        }
        break;
      }
      case OpKind::kReduceMean: {
        if (node(n.a).requires_grad) {
          TensorT<S>& g = ensure_grad(grads, has, n.a);
          const S d = dy.values[0] / static_cast<S>(node(n.a).value.numel());
          for (auto& v : g.values) v += d;
        }
        break;
      }
      case OpKind::kSliceLast: {
        if (node(n.a).requires_grad) {
          TensorT<S>& g = ensure_grad(grads, has, n.a);
          const int64_t last = node(n.a).value.shape.back();
          const int64_t rows = n.slice_len == 0 ? 0 : n.value.numel() / n.slice_len;
          for (int64_t r = 0; r < rows; ++r) {
            const S* src = dy.data() + r * n.slice_len;
            S* dst = g.data() + r * last + n.slice_start;
            for (int64_t j = 0; j < n.slice_len; ++j) dst[j] += src[j];
          }
        }
        break;
      }
      case OpKind::kReshape: {
        if (node(n.a).requires_grad) {
          TensorT<S> da;
          da.shape = node(n.a).value.shape;
          da.values = dy.values;
          add_into(grads, has, n.a, da);
        }
        break;
      }
      case OpKind::kScale: {
        if (node(n.a).requires_grad) add_into(grads, has, n.a, dy, n.scale);
        break;
      }
    }
  }

  void unary_backward(std::vector<TensorT<S>>& grads, std::vector<bool>& has, const Node& n,
                      const TensorT<S>& dy, S (*dfn)(S, S)) {
    if (!node(n.a).requires_grad) return;
    const TensorT<S>& x = node(n.a).value;
    TensorT<S> dx;
    dx.shape = x.shape;
    dx.values.resize(x.values.size());
    const S* xp = x.data();
    const S* yp = n.value.data();
    const S* dyp = dy.data();
    S* dxp = dx.data();
    const int64_t m = x.numel();
    const bool par = kernels::parallel_enabled() && m >= kernels::kMapGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < m; ++i) dxp[i] = dyp[i] * dfn(xp[i], yp[i]);
    add_into(grads, has, n.a, dx);
  }

  void binary_backward(std::vector<TensorT<S>>& grads, std::vector<bool>& has, const Node& n,
                       const TensorT<S>& dy) {
    const TensorT<S>& A = node(n.a).value;
    const TensorT<S>& B = node(n.b).value;
    const bool same = A.shape == B.shape;
    const bool b_small = !same && (B.numel() == 1 || suffix_of(B.shape, A.shape));
    const S sb = n.kind == OpKind::kSub ? S(-1) : S(1);

    auto grad_for = [&](NodeId target, const TensorT<S>& self, const TensorT<S>& other,
                        bool self_small, S sign) {
      if (!node(target).requires_grad) return;
      if (n.kind == OpKind::kMul) {
        // d(self) = dy * other, reduced over broadcast repeats if self is small
        if (!self_small) {
          TensorT<S> d;
          d.shape = self.shape;
          d.values.resize(self.values.size());
          if (other.shape == self.shape) {
            kernels::map2(dy.data(), other.data(), d.data(), d.numel(),
                          [](S u, S v) { return u * v; });
          } else {
            const int64_t small = std::max<int64_t>(other.numel(), 1);
            kernels::map2_bcast(dy.data(), other.data(), d.data(), d.numel() / small, small,
                                [](S u, S v) { return u * v; });
          }
          add_into(grads, has, target, d, sign);
        } else {
          TensorT<S>& g = ensure_grad(grads, has, target);
          const int64_t small = std::max<int64_t>(self.numel(), 1);
          const int64_t repeats = dy.numel() / small;
          // fixed-order reduction of dy * other over the repeated axis
          for (int64_t r = 0; r < repeats; ++r) {
            const S* dyp = dy.data() + r * small;
            const S* op = other.data() + r * small;
            for (int64_t j = 0; j < small; ++j) g[j] += sign * dyp[j] * op[j];
          }
        }
      } else {
        if (!self_small) {
          add_into(grads, has, target, dy, sign);
        } else {
          TensorT<S>& g = ensure_grad(grads, has, target);
          const int64_t small = std::max<int64_t>(self.numel(), 1);
          kernels::reduce_repeats_add(dy.data(), g.data(), dy.numel() / small, small, sign);
        }
      }
    };

    const bool a_small = !same && !b_small;
    grad_for(n.a, A, B, a_small, S(1));
    grad_for(n.b, B, A, b_small, n.kind == OpKind::kMul ? S(1) : sb);
  }

  void check_finite(NodeId id, const char* what) {
    for (const S v : node(id).value.values) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError(std::string(what) + ": non-finite result");
      }
    }
  }
};

using Graph = GraphT<float>;
using GraphD = GraphT<double>;

// Convenience: y = x*W + b with b broadcast over rows.
template <typename S>
NodeId affine(GraphT<S>& g, NodeId x, NodeId w, NodeId b) {
  return g.add(g.matmul(x, w), b);
}

}  // namespace fd
