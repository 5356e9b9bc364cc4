#include "actgen/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace actgen {

NoiseSequence sample_noise_sequence(std::size_t seq_len, std::size_t noise_dim, Rng& rng) {
  if (seq_len < 2) throw std::invalid_argument("noise sequence length must be >= 2");
  return NoiseSequence{rng.gaussian({seq_len, noise_dim})};
}

std::vector<std::pair<std::string, Tensor*>> GeneratorParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  append_named(out, "latent.lstm", latent.lstm);
  out.emplace_back("latent.head_w", &latent.head_w);
  out.emplace_back("latent.head_b", &latent.head_b);
  append_named(out, "decoder", decoder);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> GeneratorParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  append_named(out, "latent.lstm", latent.lstm);
  out.emplace_back("latent.head_w", &latent.head_w);
  out.emplace_back("latent.head_b", &latent.head_b);
  append_named(out, "decoder", decoder);
  return out;
}

GeneratorParams init_generator_params(const GeneratorDims& dims, Rng& rng) {
  if (dims.classes == 0 || dims.pose_dim == 0 || dims.noise_dim == 0 || dims.latent_dim == 0 ||
      dims.lstm_hidden == 0) {
    throw std::invalid_argument("init_generator_params: zero dimension");
  }
  GeneratorParams p;
  p.dims = dims;
  p.latent.lstm = init_lstm(dims.noise_dim + dims.classes, dims.lstm_hidden, rng);
  p.latent.head_w = init_weight(dims.lstm_hidden, dims.latent_dim, rng);
  p.latent.head_b = Tensor::zeros({1, dims.latent_dim});
  p.decoder = init_mlp(dims.latent_dim + dims.classes, dims.decoder_hidden, dims.pose_dim, rng);
  return p;
}

BoundGenerator bind_generator(Tape& tape, const GeneratorParams& p, bool trainable) {
  BoundGenerator b;
  b.lstm = bind_lstm(tape, p.latent.lstm, trainable);
  b.head_w = trainable ? tape.leaf(p.latent.head_w) : tape.constant(p.latent.head_w);
  b.head_b = trainable ? tape.leaf(p.latent.head_b) : tape.constant(p.latent.head_b);
  b.decoder = bind_mlp(tape, p.decoder, trainable);
  b.latent_dim = p.latent.head_w.cols();
  return b;
}

RolloutNodes latent_rollout_nodes(Tape& tape, const BoundGenerator& gen,
                                  const std::vector<Tape::Id>& noise_steps, Tape::Id label,
                                  bool direct_latent) {
  if (noise_steps.size() < 2) throw std::invalid_argument("latent rollout needs T >= 2 steps");
  const std::size_t rows = tape.value(noise_steps.front()).rows();
  LstmState state = lstm_zero_state(tape, rows, gen.lstm.hidden);

  RolloutNodes out;
  for (std::size_t t = 0; t < noise_steps.size(); ++t) {
    Tape::Id x_t = tape.concat_cols(noise_steps[t], label);
    state = lstm_step(tape, gen.lstm, x_t, state);
    Tape::Id v_t = tape.add_rowvec(tape.matmul(state.h, gen.head_w), gen.head_b);
    out.residuals.push_back(v_t);
    if (direct_latent) {
      out.latents.push_back(v_t);
    } else if (t == 0) {
      out.latents.push_back(v_t);  // h_1 = v_1
    } else {
      out.latents.push_back(tape.add(out.latents.back(), out.residuals[t - 1]));
    }
  }
  return out;
}

Tape::Id decode_frame_nodes(Tape& tape, const BoundGenerator& gen, Tape::Id latent, Tape::Id label) {
  return mlp_apply(tape, gen.decoder, tape.concat_cols(latent, label));
}

Tape::Id smoothness_sum_nodes(Tape& tape, const std::vector<Tape::Id>& latents,
                              const std::vector<Tape::Id>& poses, double sigma1, double sigma2) {
  if (latents.size() != poses.size()) {
    throw std::invalid_argument("smoothness: latent/pose length mismatch");
  }
  if (latents.size() < 2) throw std::invalid_argument("smoothness: need T >= 2");
  Tape::Id total = tape.constant(Tensor::scalar(0.0));
  for (std::size_t t = 1; t < latents.size(); ++t) {
    if (sigma1 != 0.0) {
      Tape::Id dh = tape.squared_norm(tape.sub(latents[t], latents[t - 1]));
      total = tape.add(total, tape.scale(dh, sigma1));
    }
    if (sigma2 != 0.0) {
      Tape::Id dx = tape.squared_norm(tape.sub(poses[t], poses[t - 1]));
      total = tape.add(total, tape.scale(dx, sigma2));
    }
  }
  return total;
}

namespace {

// Splits a [T, d] tensor into T constant [1, d] rows on the tape.
std::vector<Tape::Id> rows_as_constants(Tape& tape, const Tensor& t) {
  std::vector<Tape::Id> ids;
  ids.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    ids.push_back(tape.constant(Tensor::row(t.row_vector(r))));
  }
  return ids;
}

Tensor stack_rows(Tape& tape, const std::vector<Tape::Id>& ids) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ids.size());
  for (Tape::Id id : ids) rows.push_back(tape.value(id).row_vector(0));
  return Tensor::from_rows(rows);
}

}  // namespace

LatentTrajectory latent_rollout(const LatentLstmParams& theta1, const NoiseSequence& noise,
                                const LabelDistribution& label, bool direct_latent) {
  if (noise.length() < 2) throw std::invalid_argument("latent_rollout: noise length must be >= 2");
  if (theta1.lstm.input_dim() != noise.noise_dim() + label.classes()) {
    throw std::invalid_argument("latent_rollout: lstm input dim " +
                                std::to_string(theta1.lstm.input_dim()) + " != noise_dim + classes = " +
                                std::to_string(noise.noise_dim() + label.classes()));
  }

  Tape tape;
  BoundGenerator gen;
  gen.lstm = bind_lstm(tape, theta1.lstm, false);
  gen.head_w = tape.constant(theta1.head_w);
  gen.head_b = tape.constant(theta1.head_b);
  gen.latent_dim = theta1.head_w.cols();

  std::vector<Tape::Id> noise_steps = rows_as_constants(tape, noise.xi);
  Tape::Id label_id = tape.constant(Tensor::row(label.weights()));
  RolloutNodes nodes = latent_rollout_nodes(tape, gen, noise_steps, label_id, direct_latent);

  LatentTrajectory traj;
  traj.residuals = stack_rows(tape, nodes.residuals);
  traj.latents = stack_rows(tape, nodes.latents);
  return traj;
}

ActionPose decode_frame(const MlpParams& decoder, const std::vector<double>& latent,
                        const LabelDistribution& label) {
  if (decoder.input_dim() != latent.size() + label.classes()) {
    throw std::invalid_argument("decode_frame: decoder input dim " +
                                std::to_string(decoder.input_dim()) + " != latent_dim + classes = " +
                                std::to_string(latent.size() + label.classes()));
  }
  Tape tape;
  BoundMlp mlp = bind_mlp(tape, decoder, false);
  std::vector<double> in = latent;
  in.insert(in.end(), label.weights().begin(), label.weights().end());
  Tape::Id out = mlp_apply(tape, mlp, tape.constant(Tensor::row(in)));
  return tape.value(out).row_vector(0);
}

std::pair<ActionSequence, LatentTrajectory> generate_sequence(const GeneratorParams& params,
                                                              const LabelDistribution& label,
                                                              std::size_t seq_len, std::uint64_t seed,
                                                              bool direct_latent) {
  if (seq_len < 2) throw std::invalid_argument("generate_sequence: T must be >= 2");
  if (label.classes() != params.dims.classes) {
    throw std::invalid_argument("generate_sequence: label has " + std::to_string(label.classes()) +
                                " classes, generator expects " + std::to_string(params.dims.classes));
  }
  Rng rng(seed);
  NoiseSequence noise = sample_noise_sequence(seq_len, params.dims.noise_dim, rng);
  LatentTrajectory traj = latent_rollout(params.latent, noise, label, direct_latent);

  ActionSequence seq;
  seq.frames.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    seq.frames.push_back(decode_frame(params.decoder, traj.latents.row_vector(t), label));
  }
  return {std::move(seq), std::move(traj)};
}

double smoothness_penalty(const Tensor& latents, const Tensor& poses, double sigma1, double sigma2) {
  if (latents.rows() != poses.rows()) {
    throw std::invalid_argument("smoothness_penalty: length mismatch (" +
                                std::to_string(latents.rows()) + " vs " + std::to_string(poses.rows()) + ")");
  }
  if (latents.rows() < 2) throw std::invalid_argument("smoothness_penalty: need T >= 2");
  if (sigma1 < 0.0 || sigma2 < 0.0) throw std::invalid_argument("smoothness_penalty: sigmas must be >= 0");
  double total = 0.0;
  for (std::size_t t = 1; t < latents.rows(); ++t) {
    double dh = 0.0, dx = 0.0;
    for (std::size_t k = 0; k < latents.cols(); ++k) {
      double d = latents.at(t, k) - latents.at(t - 1, k);
      dh += d * d;
    }
    for (std::size_t k = 0; k < poses.cols(); ++k) {
      double d = poses.at(t, k) - poses.at(t - 1, k);
      dx += d * d;
    }
    total += sigma1 * dh + sigma2 * dx;
  }
  return total;
}

LabelDistribution mix_labels(const std::vector<double>& weights) {
  if (weights.empty()) throw std::invalid_argument("mix_labels: empty weights");
  double s = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("mix_labels: weights must be finite and >= 0");
    s += w;
  }
  if (s <= 0.0) throw std::invalid_argument("mix_labels: weights must not all be zero");
  std::vector<double> norm(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) norm[i] = weights[i] / s;
  return LabelDistribution(std::move(norm));
}

}  // namespace actgen
