#include "actgen/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace actgen {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

MapConst as_matrix(const Tensor& t) {
  return MapConst(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

MapMat as_matrix(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
}

using Lookup = std::function<const Tensor&(std::int32_t)>;

// Forward evaluation of one node. Shared by eager construction and replay()
// so a replay is bit-identical to the captured pass.
Tensor evaluate_node(const TapeNode& n, const Lookup& in) {
  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      return n.value;
    case Op::kMatMul: {
      const Tensor& a = in(n.a);
      const Tensor& b = in(n.b);
      Tensor out({a.rows(), b.cols()});
      as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
      return out;
    }
    case Op::kTranspose: {
      const Tensor& a = in(n.a);
      Tensor out({a.cols(), a.rows()});
      as_matrix(out) = as_matrix(a).transpose();
      return out;
    }
    case Op::kAdd: {
      Tensor out = in(n.a);
      const Tensor& b = in(n.b);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      return out;
    }
    case Op::kSub: {
      Tensor out = in(n.a);
      const Tensor& b = in(n.b);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
      return out;
    }
    case Op::kMul: {
      Tensor out = in(n.a);
      const Tensor& b = in(n.b);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
      return out;
    }
    case Op::kScale: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v *= n.p0;
      return out;
    }
    case Op::kAddRowVec: {
      const Tensor& a = in(n.a);
      const Tensor& bias = in(n.b);
      Tensor out = a;
      std::size_t r = a.rows(), c = a.cols();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bias[j];
      }
      return out;
    }
    case Op::kConcatCols: {
      const Tensor& a = in(n.a);
      const Tensor& b = in(n.b);
      std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
      Tensor out({r, ca + cb});
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out[i * (ca + cb) + j] = a[i * ca + j];
        for (std::size_t j = 0; j < cb; ++j) out[i * (ca + cb) + ca + j] = b[i * cb + j];
      }
      return out;
    }
    case Op::kSliceCols: {
      const Tensor& a = in(n.a);
      std::size_t r = a.rows(), c = a.cols(), w = n.c1 - n.c0;
      Tensor out({r, w});
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a[i * c + n.c0 + j];
      }
      return out;
    }
    case Op::kTanh: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = std::tanh(v);
      return out;
    }
    case Op::kSigmoid: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
      return out;
    }
    case Op::kRelu: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case Op::kExp: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = std::exp(v);
      return out;
    }
    case Op::kLog: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = std::log(std::max(v, Tape::kLogEps));
      return out;
    }
    case Op::kSqrt: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = std::sqrt(std::max(v, 0.0));
      return out;
    }
    case Op::kClamp: {
      Tensor out = in(n.a);
      for (double& v : out.values()) v = std::clamp(v, n.p0, n.p1);
      return out;
    }
    case Op::kSum: {
      double s = 0.0;
      for (double v : in(n.a).values()) s += v;
      return Tensor::scalar(s);
    }
    case Op::kMean: {
      const Tensor& a = in(n.a);
      double s = 0.0;
      for (double v : a.values()) s += v;
      return Tensor::scalar(s / static_cast<double>(a.size()));
    }
    case Op::kSqNorm: {
      double s = 0.0;
      for (double v : in(n.a).values()) s += v * v;
      return Tensor::scalar(s);
    }
    case Op::kSoftmaxRows: {
      const Tensor& a = in(n.a);
      std::size_t r = a.rows(), c = a.cols();
      Tensor out({r, c});
      for (std::size_t i = 0; i < r; ++i) {
        double mx = a[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, a[i * c + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          double e = std::exp(a[i * c + j] - mx);
          out[i * c + j] = e;
          z += e;
        }
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
      }
      return out;
    }
  }
  throw std::logic_error("unhandled op");
}

}  // namespace

const TapeNode& Tape::node(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw std::out_of_range("tape node id " + std::to_string(id));
  }
  return nodes_[static_cast<std::size_t>(id)];
}

TapeNode& Tape::node(Id id) {
  return const_cast<TapeNode&>(static_cast<const Tape*>(this)->node(id));
}

Tape::Id Tape::push(TapeNode n) {
  if (n.op != Op::kLeaf && n.op != Op::kConstant) {
    if (n.a >= 0) node(n.a);  // bounds check
    if (n.b >= 0) node(n.b);
    n.value = evaluate_node(n, [this](std::int32_t id) -> const Tensor& { return nodes_[static_cast<std::size_t>(id)].value; });
    n.value.require_finite("tape op output");
  }
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Tensor v, bool trainable) {
  v.require_finite("tape leaf");
  TapeNode n;
  n.op = Op::kLeaf;
  n.trainable = trainable;
  n.value = std::move(v);
  return push(std::move(n));
}

Tape::Id Tape::constant(Tensor v) {
  v.require_finite("tape constant");
  TapeNode n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  return push(std::move(n));
}

void Tape::check_rank2(Id id, const char* who) const {
  if (node(id).value.rank() != 2) {
    throw std::invalid_argument(std::string(who) + ": operand is not rank-2: " +
                                shape_to_string(node(id).value.shape()));
  }
}

Tape::Id Tape::matmul(Id a, Id b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  if (node(a).value.cols() != node(b).value.rows()) shape_error("matmul", node(a).value, node(b).value);
  TapeNode n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Tape::Id Tape::transpose(Id a) {
  check_rank2(a, "transpose");
  TapeNode n;
  n.op = Op::kTranspose;
  n.a = a;
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  if (!node(a).value.same_shape(node(b).value)) shape_error("add", node(a).value, node(b).value);
  TapeNode n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  if (!node(a).value.same_shape(node(b).value)) shape_error("sub", node(a).value, node(b).value);
  TapeNode n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  if (!node(a).value.same_shape(node(b).value)) shape_error("mul", node(a).value, node(b).value);
  TapeNode n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("scale: non-finite factor");
  TapeNode n;
  n.op = Op::kScale;
  n.a = a;
  n.p0 = s;
  return push(std::move(n));
}

Tape::Id Tape::add_rowvec(Id a, Id bias) {
  check_rank2(a, "add_rowvec");
  check_rank2(bias, "add_rowvec");
  if (node(bias).value.rows() != 1 || node(bias).value.cols() != node(a).value.cols()) {
    shape_error("add_rowvec", node(a).value, node(bias).value);
  }
  TapeNode n;
  n.op = Op::kAddRowVec;
  n.a = a;
  n.b = bias;
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  check_rank2(a, "concat_cols");
  check_rank2(b, "concat_cols");
  if (node(a).value.rows() != node(b).value.rows()) shape_error("concat_cols", node(a).value, node(b).value);
  TapeNode n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Tape::Id Tape::slice_cols(Id a, std::size_t c0, std::size_t c1) {
  check_rank2(a, "slice_cols");
  if (c0 >= c1 || c1 > node(a).value.cols()) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                                ") invalid for " + shape_to_string(node(a).value.shape()));
  }
  TapeNode n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.c0 = c0;
  n.c1 = c1;
  return push(std::move(n));
}

#define ACTGEN_UNARY(NAME, OPK)    \
  Tape::Id Tape::NAME(Id a) {      \
    TapeNode n;                    \
    n.op = OPK;                    \
    n.a = a;                       \
    return push(std::move(n));     \
  }

ACTGEN_UNARY(tanh, Op::kTanh)
ACTGEN_UNARY(sigmoid, Op::kSigmoid)
ACTGEN_UNARY(relu, Op::kRelu)
ACTGEN_UNARY(exp, Op::kExp)
ACTGEN_UNARY(log, Op::kLog)
ACTGEN_UNARY(sqrt, Op::kSqrt)
ACTGEN_UNARY(sum, Op::kSum)
ACTGEN_UNARY(mean, Op::kMean)
ACTGEN_UNARY(squared_norm, Op::kSqNorm)

#undef ACTGEN_UNARY

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be < hi");
  TapeNode n;
  n.op = Op::kClamp;
  n.a = a;
  n.p0 = lo;
  n.p1 = hi;
  return push(std::move(n));
}

Tape::Id Tape::softmax_rows(Id a) {
  check_rank2(a, "softmax_rows");
  TapeNode n;
  n.op = Op::kSoftmaxRows;
  n.a = a;
  return push(std::move(n));
}

void Tape::backward(Id root) {
  if (node(root).value.size() != 1) {
    throw std::invalid_argument("backward: root is not scalar; pass an explicit seed");
  }
  backward(root, Tensor::scalar(1.0));
}

void Tape::backward(Id root, const Tensor& seed) {
  if (backward_done_) {
    throw std::logic_error("backward: tape already consumed");
  }
  if (!seed.same_shape(node(root).value)) {
    shape_error("backward seed", seed, node(root).value);
  }
  seed.require_finite("backward seed");
  backward_done_ = true;

  auto grad_of = [this](Id id) -> Tensor& {
    TapeNode& m = node(id);
    if (!m.grad.defined()) m.grad = Tensor::zeros(m.value.shape());
    return m.grad;
  };

  node(root).grad = seed;

  for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0; --i) {
    TapeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad.defined()) continue;                       // not reached from root
    if (n.op == Op::kLeaf || n.op == Op::kConstant) continue;
    const Tensor& g = n.grad;

    // Skip accumulation into constants: they are gradient sinks.
    auto want = [this](std::int32_t id) { return node(id).op != Op::kConstant; };

    switch (n.op) {
      case Op::kMatMul: {
        const Tensor& a = node(n.a).value;
        const Tensor& b = node(n.b).value;
        if (want(n.a)) as_matrix(grad_of(n.a)).noalias() += as_matrix(g) * as_matrix(b).transpose();
        if (want(n.b)) as_matrix(grad_of(n.b)).noalias() += as_matrix(a).transpose() * as_matrix(g);
        break;
      }
      case Op::kTranspose: {
        if (want(n.a)) as_matrix(grad_of(n.a)) += as_matrix(g).transpose();
        break;
      }
      case Op::kAdd: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (want(n.b)) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k];
        }
        break;
      }
      case Op::kSub: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (want(n.b)) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& a = node(n.a).value;
        const Tensor& b = node(n.b).value;
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * b[k];
        }
        if (want(n.b)) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * a[k];
        }
        break;
      }
      case Op::kScale: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += n.p0 * g[k];
        }
        break;
      }
      case Op::kAddRowVec: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (want(n.b)) {
          Tensor& gb = grad_of(n.b);
          std::size_t r = g.rows(), c = g.cols();
          for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = 0; y < c; ++y) gb[y] += g[x * c + y];
          }
        }
        break;
      }
      case Op::kConcatCols: {
        std::size_t r = g.rows();
        std::size_t ca = node(n.a).value.cols();
        std::size_t cb = node(n.b).value.cols();
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = 0; y < ca; ++y) ga[x * ca + y] += g[x * (ca + cb) + y];
          }
        }
        if (want(n.b)) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = 0; y < cb; ++y) gb[x * cb + y] += g[x * (ca + cb) + ca + y];
          }
        }
        break;
      }
      case Op::kSliceCols: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          std::size_t r = g.rows(), w = g.cols(), c = node(n.a).value.cols();
          for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = 0; y < w; ++y) ga[x * c + n.c0 + y] += g[x * w + y];
          }
        }
        break;
      }
      case Op::kTanh: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
        }
        break;
      }
      case Op::kSigmoid: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
        }
        break;
      }
      case Op::kRelu: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = node(n.a).value;
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += x[k] > 0.0 ? g[k] : 0.0;
        }
        break;
      }
      case Op::kExp: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * y[k];
        }
        break;
      }
      case Op::kLog: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = node(n.a).value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (x[k] > kLogEps) ga[k] += g[k] / x[k];
          }
        }
        break;
      }
      case Op::kSqrt: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = node(n.a).value;
          const Tensor& y = n.value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (x[k] > 0.0) ga[k] += g[k] * 0.5 / y[k];
          }
        }
        break;
      }
      case Op::kClamp: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = node(n.a).value;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (x[k] > n.p0 && x[k] < n.p1) ga[k] += g[k];
          }
        }
        break;
      }
      case Op::kSum: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          double s = g.item();
          for (double& v : ga.values()) v += s;
        }
        break;
      }
      case Op::kMean: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          double s = g.item() / static_cast<double>(node(n.a).value.size());
          for (double& v : ga.values()) v += s;
        }
        break;
      }
      case Op::kSqNorm: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& x = node(n.a).value;
          double s = g.item();
          for (std::size_t k = 0; k < x.size(); ++k) ga[k] += s * 2.0 * x[k];
        }
        break;
      }
      case Op::kSoftmaxRows: {
        if (want(n.a)) {
          Tensor& ga = grad_of(n.a);
          const Tensor& y = n.value;
          std::size_t r = y.rows(), c = y.cols();
          for (std::size_t x = 0; x < r; ++x) {
            double dot = 0.0;
            for (std::size_t k = 0; k < c; ++k) dot += g[x * c + k] * y[x * c + k];
            for (std::size_t k = 0; k < c; ++k) {
              ga[x * c + k] += y[x * c + k] * (g[x * c + k] - dot);
            }
          }
        }
        break;
      }
      case Op::kLeaf:
      case Op::kConstant:
        break;
    }
  }

  for (const TapeNode& n : nodes_) {
    if (n.grad.defined() && !n.grad.all_finite()) {
      throw std::runtime_error("backward: non-finite gradient");
    }
  }
}

Tensor Tape::grad(Id id) const {
  if (!backward_done_) throw std::logic_error("grad: backward() has not run");
  const TapeNode& n = node(id);
  if (n.op == Op::kConstant) throw std::logic_error("grad: node is a constant");
  if (!n.grad.defined()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> values;
  values.reserve(nodes_.size());
  for (const TapeNode& n : nodes_) {
    values.push_back(evaluate_node(n, [&values](std::int32_t id) -> const Tensor& {
      return values[static_cast<std::size_t>(id)];
    }));
  }
  return values;
}

double Tape::eval_with(Id root, const std::vector<std::pair<Id, Tensor>>& overrides) const {
  node(root);  // bounds check
  std::vector<Tensor> values;
  values.reserve(static_cast<std::size_t>(root) + 1);
  for (std::int32_t i = 0; i <= root; ++i) {
    const TapeNode& n = nodes_[static_cast<std::size_t>(i)];
    const Tensor* replaced = nullptr;
    for (const auto& [id, t] : overrides) {
      if (id == i) {
        if (!t.same_shape(n.value)) shape_error("eval_with override", t, n.value);
        replaced = &t;
        break;
      }
    }
    if (replaced) {
      values.push_back(*replaced);
    } else {
      values.push_back(evaluate_node(n, [&values](std::int32_t id) -> const Tensor& {
        return values[static_cast<std::size_t>(id)];
      }));
    }
  }
  return values.back().item();
}

}  // namespace actgen
