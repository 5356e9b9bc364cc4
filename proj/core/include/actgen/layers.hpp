#pragma once

#include <string>
#include <vector>

#include "actgen/rng.hpp"
#include "actgen/tape.hpp"
#include "actgen/tensor.hpp"

namespace actgen {

/// Single-layer LSTM weights. Gate pre-activations are computed as
/// z = x W_x + h W_h + b with the 4H columns ordered [input, forget, cell,
/// output]; cell updates follow the standard equations
///   i = sigmoid(z_i), f = sigmoid(z_f), g = tanh(z_g), o = sigmoid(z_o)
///   c' = f * c + i * g,  h' = o * tanh(c').
struct LstmParams {
  Tensor w_x;  // [in, 4H]
  Tensor w_h;  // [H, 4H]
  Tensor b;    // [1, 4H]

  std::size_t input_dim() const { return w_x.rows(); }
  std::size_t hidden_dim() const { return w_h.rows(); }

  bool operator==(const LstmParams& other) const = default;
};

/// Fully connected stack: relu between layers, linear at the end.
struct MlpParams {
  std::vector<Tensor> weights;  // [in_k, out_k]
  std::vector<Tensor> biases;   // [1, out_k]

  std::size_t input_dim() const { return weights.front().rows(); }
  std::size_t output_dim() const { return weights.back().cols(); }

  bool operator==(const MlpParams& other) const = default;
};

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases.
Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Zero biases, forget-gate bias +1.
LstmParams init_lstm(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

MlpParams init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t output_dim, Rng& rng);

/// Tape ids of one parameter set, bound once per tape so all uses share the
/// same node (and gradient accumulator).
struct BoundLstm {
  Tape::Id w_x = -1, w_h = -1, b = -1;
  std::size_t hidden = 0;
};

struct BoundMlp {
  std::vector<Tape::Id> weights;
  std::vector<Tape::Id> biases;
};

BoundLstm bind_lstm(Tape& tape, const LstmParams& p, bool trainable);
BoundMlp bind_mlp(Tape& tape, const MlpParams& p, bool trainable);

struct LstmState {
  Tape::Id h = -1;
  Tape::Id c = -1;
};

/// Zero initial hidden/cell state for a batch of `rows`.
LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden);

/// One LSTM cell step over a [rows, in] input.
LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Tape::Id x_t, const LstmState& state);

/// MLP forward over a [rows, in] input.
Tape::Id mlp_apply(Tape& tape, const BoundMlp& mlp, Tape::Id x);

/// Names/tensors of a parameter set, for optimizers and checkpoints.
void append_named(std::vector<std::pair<std::string, Tensor*>>& out, const std::string& prefix,
                  LstmParams& p);
void append_named(std::vector<std::pair<std::string, Tensor*>>& out, const std::string& prefix,
                  MlpParams& p);
void append_named(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& prefix,
                  const LstmParams& p);
void append_named(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& prefix,
                  const MlpParams& p);

}  // namespace actgen
