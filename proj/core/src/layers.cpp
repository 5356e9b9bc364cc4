#include "actgen/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace actgen {

Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("init_weight: zero dimension");
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return rng.uniform_tensor({fan_in, fan_out}, -bound, bound);
}

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmParams p;
  p.w_x = init_weight(input_dim, 4 * hidden_dim, rng);
  p.w_h = init_weight(hidden_dim, 4 * hidden_dim, rng);
  p.b = Tensor::zeros({1, 4 * hidden_dim});
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) p.b[j] = 1.0;  // forget gate
  return p;
}

MlpParams init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t output_dim, Rng& rng) {
  MlpParams p;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    p.weights.push_back(init_weight(in, h, rng));
    p.biases.push_back(Tensor::zeros({1, h}));
    in = h;
  }
  p.weights.push_back(init_weight(in, output_dim, rng));
  p.biases.push_back(Tensor::zeros({1, output_dim}));
  return p;
}

BoundLstm bind_lstm(Tape& tape, const LstmParams& p, bool trainable) {
  BoundLstm b;
  b.hidden = p.hidden_dim();
  b.w_x = trainable ? tape.leaf(p.w_x) : tape.constant(p.w_x);
  b.w_h = trainable ? tape.leaf(p.w_h) : tape.constant(p.w_h);
  b.b = trainable ? tape.leaf(p.b) : tape.constant(p.b);
  return b;
}

BoundMlp bind_mlp(Tape& tape, const MlpParams& p, bool trainable) {
  BoundMlp b;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    b.weights.push_back(trainable ? tape.leaf(p.weights[i]) : tape.constant(p.weights[i]));
    b.biases.push_back(trainable ? tape.leaf(p.biases[i]) : tape.constant(p.biases[i]));
  }
  return b;
}

LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden) {
  LstmState s;
  s.h = tape.constant(Tensor::zeros({rows, hidden}));
  s.c = tape.constant(Tensor::zeros({rows, hidden}));
  return s;
}

LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Tape::Id x_t, const LstmState& state) {
  const std::size_t H = lstm.hidden;
  Tape::Id z = tape.add_rowvec(
      tape.add(tape.matmul(x_t, lstm.w_x), tape.matmul(state.h, lstm.w_h)), lstm.b);
  Tape::Id i = tape.sigmoid(tape.slice_cols(z, 0, H));
  Tape::Id f = tape.sigmoid(tape.slice_cols(z, H, 2 * H));
  Tape::Id g = tape.tanh(tape.slice_cols(z, 2 * H, 3 * H));
  Tape::Id o = tape.sigmoid(tape.slice_cols(z, 3 * H, 4 * H));
  LstmState next;
  next.c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
  next.h = tape.mul(o, tape.tanh(next.c));
  return next;
}

Tape::Id mlp_apply(Tape& tape, const BoundMlp& mlp, Tape::Id x) {
  Tape::Id cur = x;
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    cur = tape.add_rowvec(tape.matmul(cur, mlp.weights[i]), mlp.biases[i]);
    if (i + 1 < mlp.weights.size()) cur = tape.relu(cur);
  }
  return cur;
}

void append_named(std::vector<std::pair<std::string, Tensor*>>& out, const std::string& prefix,
                  LstmParams& p) {
  out.emplace_back(prefix + ".w_x", &p.w_x);
  out.emplace_back(prefix + ".w_h", &p.w_h);
  out.emplace_back(prefix + ".b", &p.b);
}

void append_named(std::vector<std::pair<std::string, Tensor*>>& out, const std::string& prefix,
                  MlpParams& p) {
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    out.emplace_back(prefix + ".w" + std::to_string(i), &p.weights[i]);
    out.emplace_back(prefix + ".b" + std::to_string(i), &p.biases[i]);
  }
}

void append_named(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& prefix,
                  const LstmParams& p) {
  out.emplace_back(prefix + ".w_x", &p.w_x);
  out.emplace_back(prefix + ".w_h", &p.w_h);
  out.emplace_back(prefix + ".b", &p.b);
}

void append_named(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& prefix,
                  const MlpParams& p) {
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    out.emplace_back(prefix + ".w" + std::to_string(i), &p.weights[i]);
    out.emplace_back(prefix + ".b" + std::to_string(i), &p.biases[i]);
  }
}

}  // namespace actgen
