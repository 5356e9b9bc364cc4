#pragma once

#include <cstdint>
#include <vector>

#include "actgen/tensor.hpp"

namespace actgen {

/// Primitive operations recorded on a Tape.
enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kMatMul,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRowVec,
  kConcatCols,
  kSliceCols,
  kTanh,
  kSigmoid,
  kRelu,
  kExp,
  kLog,
  kSqrt,
  kClamp,
  kSum,
  kMean,
  kSqNorm,
  kSoftmaxRows,
};

struct TapeNode {
  Op op = Op::kLeaf;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double p0 = 0.0;      // scale factor / clamp low
  double p1 = 0.0;      // clamp high
  std::size_t c0 = 0;   // slice column begin
  std::size_t c1 = 0;   // slice column end
  bool trainable = false;
  Tensor value;
  Tensor grad;  // filled by backward()
};

/// Reverse-mode computation record.
///
/// Operations evaluate eagerly as the graph is built; the node list is the
/// replayable record of the forward pass. backward() runs once per tape and
/// accumulates exact reverse-mode gradients into every non-constant node.
/// Every produced value is checked for finiteness; a NaN/Inf intermediate
/// raises std::runtime_error.
///
/// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  using Id = std::int32_t;

  Id leaf(Tensor v, bool trainable = true);
  Id constant(Tensor v);

  /// Matrix product, rank-2 operands: [m,k] x [k,n] -> [m,n].
  Id matmul(Id a, Id b);
  Id transpose(Id a);
  /// Elementwise, identical shapes.
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double s);
  /// a: [m,n], bias: [1,n]; bias row added to every row of a.
  Id add_rowvec(Id a, Id bias);
  /// [m,p] ++ [m,q] -> [m,p+q].
  Id concat_cols(Id a, Id b);
  /// Columns [c0, c1) of a rank-2 tensor.
  Id slice_cols(Id a, std::size_t c0, std::size_t c1);
  Id tanh(Id a);
  Id sigmoid(Id a);
  Id relu(Id a);
  Id exp(Id a);
  /// ln(max(x, kLogEps)); the guard keeps log of clamped probabilities finite.
  Id log(Id a);
  /// sqrt(max(x, 0)).
  Id sqrt(Id a);
  Id clamp(Id a, double lo, double hi);
  /// Reductions over all elements -> scalar (shape [1]).
  Id sum(Id a);
  Id mean(Id a);
  Id squared_norm(Id a);
  /// Row-wise, shift-invariant softmax of a [m,n] tensor.
  Id softmax_rows(Id a);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(Id id) const { return node(id).value; }
  bool trainable(Id id) const { return node(id).trainable; }

  /// Reverse pass from a scalar root with seed gradient 1.
  void backward(Id root);
  /// Reverse pass with an explicit seed of the root's shape.
  void backward(Id root, const Tensor& seed);

  /// Gradient accumulated at a node; zeros if the node was not reached.
  /// Valid only after backward().
  Tensor grad(Id id) const;

  /// Recompute every node value from the recorded operations. The result is
  /// bit-identical to the captured forward pass.
  std::vector<Tensor> replay() const;

  /// Recompute the scalar root with some leaf values overridden; used by
  /// finite-difference checks. Does not modify the tape.
  double eval_with(Id root, const std::vector<std::pair<Id, Tensor>>& overrides) const;

  static constexpr double kLogEps = 1e-12;

 private:
  const TapeNode& node(Id id) const;
  TapeNode& node(Id id);
  Id push(TapeNode n);
  void check_rank2(Id id, const char* who) const;

  std::vector<TapeNode> nodes_;
  bool backward_done_ = false;
};

}  // namespace actgen
