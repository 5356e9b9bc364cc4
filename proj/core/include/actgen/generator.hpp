#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "actgen/data.hpp"
#include "actgen/layers.hpp"
#include "actgen/tape.hpp"
#include "actgen/tensor.hpp"

namespace actgen {

/// i.i.d. standard Gaussian inputs for one rollout, one [noise_dim] row per
/// time step.
struct NoiseSequence {
  Tensor xi;  // [T, noise_dim]

  std::size_t length() const { return xi.rows(); }
  std::size_t noise_dim() const { return xi.cols(); }
};

NoiseSequence sample_noise_sequence(std::size_t seq_len, std::size_t noise_dim, Rng& rng);

/// Latent rollout output: residuals v_1..v_T and latents h_1..h_T with
/// h_1 = v_1 and h_{t+1} = h_t + v_t.
struct LatentTrajectory {
  Tensor residuals;  // [T, latent_dim]
  Tensor latents;    // [T, latent_dim]

  std::size_t length() const { return latents.rows(); }
  std::size_t latent_dim() const { return latents.cols(); }
};

struct GeneratorDims {
  std::size_t classes = 0;
  std::size_t pose_dim = 0;
  std::size_t noise_dim = 16;
  std::size_t latent_dim = 6;
  std::size_t lstm_hidden = 256;
  std::vector<std::size_t> decoder_hidden = {512, 512};
};

/// Recurrent latent generator (theta_1): LSTM over (noise_t, label) inputs
/// plus a linear head emitting latent residuals.
struct LatentLstmParams {
  LstmParams lstm;  // input noise_dim + classes
  Tensor head_w;    // [H, latent_dim]
  Tensor head_b;    // [1, latent_dim]

  bool operator==(const LatentLstmParams& other) const = default;
};

/// Full generator: latent rollout (theta_1) plus the shared frame-wise
/// decoder MLP (theta_2) mapping concat(latent, label) to a pose.
struct GeneratorParams {
  GeneratorDims dims;
  LatentLstmParams latent;
  MlpParams decoder;

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  bool operator==(const GeneratorParams& other) const = default;
};

GeneratorParams init_generator_params(const GeneratorDims& dims, Rng& rng);

// ---- graph builders (shared by training and the plain entry points) ----

struct BoundGenerator {
  BoundLstm lstm;
  Tape::Id head_w = -1, head_b = -1;
  BoundMlp decoder;
  std::size_t latent_dim = 0;
};

BoundGenerator bind_generator(Tape& tape, const GeneratorParams& p, bool trainable);

struct RolloutNodes {
  std::vector<Tape::Id> residuals;  // v_t, each [rows, latent_dim]
  std::vector<Tape::Id> latents;    // h_t
};

/// Latent rollout over `noise_steps` ([rows, noise_dim] per step) with the
/// label rows appended to every step input. `direct_latent` emits the head
/// output as h_t directly instead of accumulating residuals.
RolloutNodes latent_rollout_nodes(Tape& tape, const BoundGenerator& gen,
                                  const std::vector<Tape::Id>& noise_steps, Tape::Id label,
                                  bool direct_latent = false);

/// Frame-local decode of one latent batch: MLP(concat(h, label)).
Tape::Id decode_frame_nodes(Tape& tape, const BoundGenerator& gen, Tape::Id latent, Tape::Id label);

/// Sum over steps of sigma1 ||h_t - h_{t-1}||^2 + sigma2 ||x_t - x_{t-1}||^2,
/// summed over all batch rows.
Tape::Id smoothness_sum_nodes(Tape& tape, const std::vector<Tape::Id>& latents,
                              const std::vector<Tape::Id>& poses, double sigma1, double sigma2);

// ---- plain entry points ----

LatentTrajectory latent_rollout(const LatentLstmParams& theta1, const NoiseSequence& noise,
                                const LabelDistribution& label, bool direct_latent = false);

ActionPose decode_frame(const MlpParams& decoder, const std::vector<double>& latent,
                        const LabelDistribution& label);

/// Samples a noise sequence from `seed` and composes rollout + frame decode.
/// Pure: identical arguments give identical output.
std::pair<ActionSequence, LatentTrajectory> generate_sequence(const GeneratorParams& params,
                                                              const LabelDistribution& label,
                                                              std::size_t seq_len, std::uint64_t seed,
                                                              bool direct_latent = false);

/// Omega = sum_{t>=2} sigma1 ||h_t - h_{t-1}||^2 + sigma2 ||x_t - x_{t-1}||^2.
double smoothness_penalty(const Tensor& latents, const Tensor& poses, double sigma1, double sigma2);

/// Normalizes non-negative weights to a probability vector.
LabelDistribution mix_labels(const std::vector<double>& weights);

}  // namespace actgen
