#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace dwl::nn {

/// Thread-local switch for tape recording. Rollouts run under NoGradGuard so
/// forward passes do not build a graph.
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
inline bool grad_enabled() { return grad_mode_flag(); }

class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense 2-D tensor with reverse-mode gradient accumulation. Scalars are
/// 1x1. The handle has shared-ownership semantics: copies alias one node.
template <typename S>
class TensorT {
 public:
  using Scalar = S;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;

  struct Node {
    std::vector<S> value;
    std::vector<S> grad;  // allocated lazily, same shape as value
    int rows = 0;
    int cols = 0;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
    std::string name;

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), S(0));
    }
  };

  TensorT() = default;

  static TensorT zeros(int rows, int cols, bool requires_grad = false) {
    return filled(rows, cols, S(0), requires_grad);
  }

  static TensorT filled(int rows, int cols, S v, bool requires_grad = false) {
    TensorT t;
    t.n_ = std::make_shared<Node>();
    t.n_->rows = rows;
    t.n_->cols = cols;
    t.n_->value.assign(static_cast<std::size_t>(rows) * cols, v);
    t.n_->requires_grad = requires_grad;
    return t;
  }

  static TensorT from_data(int rows, int cols, std::vector<S> data,
                           bool requires_grad = false) {
    if (data.size() != static_cast<std::size_t>(rows) * cols) {
      throw std::invalid_argument("TensorT: data size does not match shape");
    }
    TensorT t;
    t.n_ = std::make_shared<Node>();
    t.n_->rows = rows;
    t.n_->cols = cols;
    t.n_->value = std::move(data);
    t.n_->requires_grad = requires_grad;
    return t;
  }

  static TensorT scalar(S v) { return filled(1, 1, v); }

  bool defined() const { return static_cast<bool>(n_); }
  int rows() const { return n_->rows; }
  int cols() const { return n_->cols; }
  std::size_t size() const { return n_->value.size(); }
  bool requires_grad() const { return n_->requires_grad; }
  const std::string& name() const { return n_->name; }
  void set_name(std::string name) { n_->name = std::move(name); }

  // The handle shares its node; constness of a handle is shallow, like
  // shared_ptr. Gradient accessors therefore stay usable through captured
  // const copies inside backward closures.
  S* data() { return n_->value.data(); }
  const S* data() const { return n_->value.data(); }
  S* grad_data() const {
    n_->ensure_grad();
    return n_->grad.data();
  }
  const std::vector<S>& values() const { return n_->value; }
  std::vector<S>& values() { return n_->value; }
  const std::vector<S>& grad() const {
    n_->ensure_grad();
    return n_->grad;
  }

  MatMap mat() { return MatMap(n_->value.data(), n_->rows, n_->cols); }
  ConstMatMap mat() const { return ConstMatMap(n_->value.data(), n_->rows, n_->cols); }
  MatMap grad_mat() const {
    n_->ensure_grad();
    return MatMap(n_->grad.data(), n_->rows, n_->cols);
  }

  S operator()(int r, int c) const {
    return n_->value[static_cast<std::size_t>(r) * n_->cols + c];
  }
  S& operator()(int r, int c) {
    return n_->value[static_cast<std::size_t>(r) * n_->cols + c];
  }

  S item() const {
    if (size() != 1) throw std::invalid_argument("TensorT::item: tensor is not scalar");
    return n_->value[0];
  }

  void zero_grad() {
    if (n_) n_->grad.assign(n_->value.size(), S(0));
  }

  /// Reverse pass from this scalar. Gradients accumulate into the leaves
  /// (parameters and inputs); interior nodes are zeroed per pass so repeated
  /// calls add one fresh contribution each.
  void backward() const {
    if (size() != 1) {
      throw std::invalid_argument("backward: root must be a scalar loss");
    }
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    topo_sort(n_.get(), visited, order);
    for (Node* node : order) {
      if (node->backward_fn) node->grad.assign(node->value.size(), S(0));
    }
    n_->ensure_grad();
    n_->grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* node = *it;
      if (node->backward_fn) {
        node->ensure_grad();
        node->backward_fn(*node);
      }
    }
  }

  /// True when `other` is reachable from this tensor through the recorded
  /// graph (used by structural tests on input paths).
  bool depends_on(const TensorT& other) const {
    std::unordered_set<const Node*> visited;
    return search(n_.get(), other.n_.get(), visited);
  }

  std::vector<TensorT> parents() const {
    std::vector<TensorT> out;
    out.reserve(n_->parents.size());
    for (const auto& p : n_->parents) {
      TensorT t;
      t.n_ = p;
      out.push_back(t);
    }
    return out;
  }

  std::shared_ptr<Node> node() const { return n_; }

  /// Builds the result node of an op; records the tape only when autograd is
  /// enabled and some input is tracked.
  static TensorT make_op(int rows, int cols, std::vector<TensorT> inputs,
                         std::function<void(Node&)> backward_fn) {
    TensorT out = zeros(rows, cols, false);
    bool track = false;
    if (grad_enabled()) {
      for (const auto& in : inputs) track = track || in.requires_grad();
    }
    if (track) {
      out.n_->requires_grad = true;
      out.n_->parents.reserve(inputs.size());
      for (auto& in : inputs) out.n_->parents.push_back(in.n_);
      out.n_->backward_fn = std::move(backward_fn);
    }
    return out;
  }

 private:
  static void topo_sort(Node* node, std::unordered_set<Node*>& visited,
                        std::vector<Node*>& order) {
    // Iterative DFS; graphs from long BPTT windows overflow the stack with
    // naive recursion.
    struct Frame {
      Node* node;
      std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({node, 0});
    visited.insert(node);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        Node* p = f.node->parents[f.next_parent++].get();
        if (!visited.count(p)) {
          visited.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  static bool search(const Node* from, const Node* target,
                     std::unordered_set<const Node*>& visited) {
    if (from == target) return true;
    if (visited.count(from)) return false;
    visited.insert(from);
    for (const auto& p : from->parents) {
      if (search(p.get(), target, visited)) return true;
    }
    return false;
  }

  std::shared_ptr<Node> n_;
};

namespace detail {

template <typename S>
void check_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and structural ops. Each records its backward on the tape.
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree");
  }
  auto out = TensorT<S>::make_op(
      a.rows(), b.cols(), {a, b}, [a, b](typename TensorT<S>::Node& node) mutable {
        typename TensorT<S>::ConstMatMap g(node.grad.data(), node.rows, node.cols);
        if (a.requires_grad()) a.grad_mat().noalias() += g * b.mat().transpose();
        if (b.requires_grad()) b.grad_mat().noalias() += a.mat().transpose() * g;
      });
  out.mat().noalias() = a.mat() * b.mat();
  return out;
}

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape(a, b, "add");
  auto out = TensorT<S>::make_op(
      a.rows(), a.cols(), {a, b}, [a, b](typename TensorT<S>::Node& node) mutable {
        if (a.requires_grad()) a.grad_mat() += typename TensorT<S>::ConstMatMap(
            node.grad.data(), node.rows, node.cols);
        if (b.requires_grad()) b.grad_mat() += typename TensorT<S>::ConstMatMap(
            node.grad.data(), node.rows, node.cols);
      });
  out.mat() = a.mat() + b.mat();
  return out;
}

template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape(a, b, "sub");
  auto out = TensorT<S>::make_op(
      a.rows(), a.cols(), {a, b}, [a, b](typename TensorT<S>::Node& node) mutable {
        if (a.requires_grad()) a.grad_mat() += typename TensorT<S>::ConstMatMap(
            node.grad.data(), node.rows, node.cols);
        if (b.requires_grad()) b.grad_mat() -= typename TensorT<S>::ConstMatMap(
            node.grad.data(), node.rows, node.cols);
      });
  out.mat() = a.mat() - b.mat();
  return out;
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape(a, b, "mul");
  auto out = TensorT<S>::make_op(
      a.rows(), a.cols(), {a, b}, [a, b](typename TensorT<S>::Node& node) mutable {
        typename TensorT<S>::ConstMatMap g(node.grad.data(), node.rows, node.cols);
        if (a.requires_grad()) a.grad_mat().array() += g.array() * b.mat().array();
        if (b.requires_grad()) b.grad_mat().array() += g.array() * a.mat().array();
      });
  out.mat().array() = a.mat().array() * b.mat().array();
  return out;
}

/// x + v with v a [1 x c] row vector broadcast over rows (bias add).
template <typename S>
TensorT<S> add_rowvec(const TensorT<S>& x, const TensorT<S>& v) {
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw std::invalid_argument("add_rowvec: v must be 1 x cols(x)");
  }
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x, v}, [x, v](typename TensorT<S>::Node& node) mutable {
        typename TensorT<S>::ConstMatMap g(node.grad.data(), node.rows, node.cols);
        if (x.requires_grad()) x.grad_mat() += g;
        if (v.requires_grad()) v.grad_mat() += g.colwise().sum();
      });
  out.mat() = x.mat();
  out.mat().rowwise() += v.mat().row(0);
  return out;
}

/// x * v elementwise with v a [1 x c] row vector broadcast over rows.
template <typename S>
TensorT<S> mul_rowvec(const TensorT<S>& x, const TensorT<S>& v) {
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw std::invalid_argument("mul_rowvec: v must be 1 x cols(x)");
  }
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x, v}, [x, v](typename TensorT<S>::Node& node) mutable {
        typename TensorT<S>::ConstMatMap g(node.grad.data(), node.rows, node.cols);
        if (x.requires_grad()) {
          x.grad_mat().array() += g.array().rowwise() * v.mat().row(0).array();
        }
        if (v.requires_grad()) {
          v.grad_mat().array() += (g.array() * x.mat().array()).colwise().sum();
        }
      });
  out.mat().array() = x.mat().array().rowwise() * v.mat().row(0).array();
  return out;
}

/// x * m elementwise with m a [r x 1] column vector broadcast over columns
/// (per-row masking/scaling).
template <typename S>
TensorT<S> scale_rows(const TensorT<S>& x, const TensorT<S>& m) {
  if (m.cols() != 1 || m.rows() != x.rows()) {
    throw std::invalid_argument("scale_rows: m must be rows(x) x 1");
  }
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x, m}, [x, m](typename TensorT<S>::Node& node) mutable {
        typename TensorT<S>::ConstMatMap g(node.grad.data(), node.rows, node.cols);
        if (x.requires_grad()) {
          x.grad_mat().array() += g.array().colwise() * m.mat().col(0).array();
        }
        if (m.requires_grad()) {
          m.grad_mat().array() += (g.array() * x.mat().array()).rowwise().sum();
        }
      });
  out.mat().array() = x.mat().array().colwise() * m.mat().col(0).array();
  return out;
}

template <typename S>
TensorT<S> scalar_mul(const TensorT<S>& x, S k) {
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x}, [x, k](typename TensorT<S>::Node& node) mutable {
        if (x.requires_grad()) {
          x.grad_mat() += k * typename TensorT<S>::ConstMatMap(node.grad.data(),
                                                               node.rows, node.cols);
        }
      });
  out.mat() = k * x.mat();
  return out;
}

template <typename S>
TensorT<S> scalar_add(const TensorT<S>& x, S k) {
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x}, [x](typename TensorT<S>::Node& node) mutable {
        if (x.requires_grad()) {
          x.grad_mat() += typename TensorT<S>::ConstMatMap(node.grad.data(), node.rows,
                                                           node.cols);
        }
      });
  out.mat() = x.mat().array() + k;
  return out;
}

template <typename S>
TensorT<S> neg(const TensorT<S>& x) {
  return scalar_mul(x, S(-1));
}

namespace detail {

template <typename S, typename F, typename DF>
TensorT<S> unary_op(const TensorT<S>& x, F f, DF df_from_io) {
  auto out = TensorT<S>::make_op(
      x.rows(), x.cols(), {x},
      [x, df_from_io](typename TensorT<S>::Node& node) mutable {
        if (!x.requires_grad()) return;
        auto gx = x.grad_mat();
        const S* in = x.data();
        for (std::size_t i = 0; i < node.value.size(); ++i) {
          gx.data()[i] += node.grad[i] * df_from_io(in[i], node.value[i]);
        }
      });
  S* o = out.data();
  const S* in = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace detail

template <typename S>
TensorT<S> sigmoid(const TensorT<S>& x) {
  return detail::unary_op(
      x, [](S v) { return S(1) / (S(1) + std::exp(-v)); },
      [](S, S y) { return y * (S(1) - y); });
}

template <typename S>
TensorT<S> tanh_t(const TensorT<S>& x) {
  return detail::unary_op(x, [](S v) { return std::tanh(v); },
                          [](S, S y) { return S(1) - y * y; });
}

template <typename S>
TensorT<S> elu(const TensorT<S>& x, S alpha = S(1)) {
  return detail::unary_op(
      x,
      [alpha](S v) { return v >= S(0) ? v : alpha * (std::exp(v) - S(1)); },
      [alpha](S v, S y) { return v >= S(0) ? S(1) : y + alpha; });
}

template <typename S>
TensorT<S> exp_t(const TensorT<S>& x) {
  return detail::unary_op(x, [](S v) { return std::exp(v); }, [](S, S y) { return y; });
}

template <typename S>
TensorT<S> log_t(const TensorT<S>& x) {
  return detail::unary_op(x, [](S v) { return std::log(v); },
                          [](S v, S) { return S(1) / v; });
}

template <typename S>
TensorT<S> abs_t(const TensorT<S>& x) {
  return detail::unary_op(
      x, [](S v) { return std::abs(v); },
      [](S v, S) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); });
}

template <typename S>
TensorT<S> square(const TensorT<S>& x) {
  return detail::unary_op(x, [](S v) { return v * v; }, [](S v, S) { return S(2) * v; });
}

template <typename S>
TensorT<S> sqrt_t(const TensorT<S>& x) {
  return detail::unary_op(
      x, [](S v) { return std::sqrt(v); },
      [](S, S y) { return y > S(0) ? S(1) / (S(2) * y) : S(0); });
}

template <typename S>
TensorT<S> clip(const TensorT<S>& x, S lo, S hi) {
  return detail::unary_op(
      x, [lo, hi](S v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](S v, S) { return (v > lo && v < hi) ? S(1) : S(0); });
}

/// Elementwise min; ties route the gradient to the first argument.
template <typename S>
TensorT<S> minimum(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check_same_shape(a, b, "minimum");
  auto out = TensorT<S>::make_op(
      a.rows(), a.cols(), {a, b}, [a, b](typename TensorT<S>::Node& node) mutable {
        const S* av = a.data();
        const S* bv = b.data();
        S* ga = a.requires_grad() ? a.grad_data() : nullptr;
        S* gb = b.requires_grad() ? b.grad_data() : nullptr;
        for (std::size_t i = 0; i < node.value.size(); ++i) {
          if (av[i] <= bv[i]) {
            if (ga) ga[i] += node.grad[i];
          } else {
            if (gb) gb[i] += node.grad[i];
          }
        }
      });
  out.mat() = a.mat().cwiseMin(b.mat());
  return out;
}

template <typename S>
TensorT<S> sum(const TensorT<S>& x) {
  auto out = TensorT<S>::make_op(1, 1, {x}, [x](typename TensorT<S>::Node& node) mutable {
    if (x.requires_grad()) x.grad_mat().array() += node.grad[0];
  });
  out.data()[0] = x.mat().sum();
  return out;
}

template <typename S>
TensorT<S> mean(const TensorT<S>& x) {
  const S inv = S(1) / static_cast<S>(x.size());
  auto out = TensorT<S>::make_op(1, 1, {x},
                                 [x, inv](typename TensorT<S>::Node& node) mutable {
                                   if (x.requires_grad()) {
                                     x.grad_mat().array() += node.grad[0] * inv;
                                   }
                                 });
  out.data()[0] = x.mat().sum() * inv;
  return out;
}

/// [r x c] -> [r x 1] row sums.
template <typename S>
TensorT<S> row_sum(const TensorT<S>& x) {
  auto out = TensorT<S>::make_op(
      x.rows(), 1, {x}, [x](typename TensorT<S>::Node& node) mutable {
        if (!x.requires_grad()) return;
        auto gx = x.grad_mat();
        for (int r = 0; r < node.rows; ++r) {
          gx.row(r).array() += node.grad[static_cast<std::size_t>(r)];
        }
      });
  out.mat().col(0) = x.mat().rowwise().sum();
  return out;
}

}  // namespace dwl::nn
