#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "actgen/critics.hpp"
#include "actgen/data.hpp"
#include "actgen/generator.hpp"
#include "actgen/numerics.hpp"
#include "actgen/tape.hpp"

namespace actgen {

/// All training scalars with their default values, plus dimensions, seeds and
/// ablation switches.
struct TrainingConfig {
  // loss weights
  double lambda_gp = 10.0;      // gradient penalty weight
  double gamma_cycle = 0.1;     // cycle / supervised cross-entropy weight
  double sigma_latent = 0.05;   // smoothness weight on latent steps
  double sigma_action = 5e-5;   // smoothness weight on pose steps
  // optimization
  double lr_pretrain = 1e-3;
  double lr_main = 1e-4;
  std::size_t disc_steps = 1;   // K discriminator updates per generator update
  std::size_t batch_size = 32;  // m
  std::size_t iterations = 0;
  std::size_t pretrain_iterations = 0;
  std::size_t pretrain_critic_steps = 1;
  // shapes
  std::size_t seq_len = 16;
  std::size_t latent_dim = 6;
  std::size_t noise_dim = 16;
  std::size_t lstm_hidden = 256;
  std::size_t encoder_hidden = 256;
  std::size_t head_hidden = 1024;
  std::vector<std::size_t> decoder_hidden = {512, 512};
  std::vector<std::size_t> pretrain_critic_hidden = {256, 256};
  // determinism
  std::uint64_t seed = 0;
  // ablations
  bool no_cycle = false;       // drop the generated-pair cross-entropy term
  bool direct_latent = false;  // latents taken directly from the LSTM head
  // gradient penalty location: at the data points as written, or at random
  // interpolates between real and generated frames
  bool gp_at_interpolates = false;
  std::size_t checkpoint_interval = 0;  // 0 disables periodic checkpoints

  /// Applies a named ablation: none | no-smoothness | latent-only |
  /// action-only | no-cycle | direct-latent.
  void apply_ablation(const std::string& name);
  void validate() const;

  bool operator==(const TrainingConfig& other) const = default;
};

std::string training_config_to_json(const TrainingConfig& config);
/// Parses a JSON object; unknown keys are rejected.
TrainingConfig training_config_from_json(const std::string& text);

/// Thrown when a training loss turns non-finite. Checkpoints already written
/// stay on disk.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::int64_t iteration, const std::string& what)
      : std::runtime_error("training diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_ = 0;
};

/// Complete trainable state: the three networks, their optimizer moments, the
/// iteration counter and the loop RNG state. Serializes losslessly through
/// save_checkpoint / load_checkpoint.
struct ModelState {
  TrainingConfig config;
  GeneratorParams gen;
  ClassifierParams cls;
  DiscriminatorParams dis;
  AdamState opt_gen;
  AdamState opt_cls;
  AdamState opt_dis;
  std::int64_t iteration = 0;
  std::string rng_state;

  std::size_t classes() const { return gen.dims.classes; }
  std::size_t pose_dim() const { return gen.dims.pose_dim; }

  bool operator==(const ModelState& other) const = default;
};

/// Fresh networks and optimizer states for `dataset` under `config`;
/// deterministic in config.seed. Does not run pretraining.
ModelState init_model_state(const Dataset& dataset, const TrainingConfig& config);

// ---- batches ----

/// Time-major real minibatch: frames[t] is [m, d], labels is [m, C].
/// Sequences whose length differs from seq_len are linearly resampled.
struct GanBatch {
  std::vector<Tensor> frames;
  Tensor labels;

  std::size_t size() const { return labels.rows(); }
};

GanBatch make_gan_batch(const std::vector<DatasetRecord>& records, std::size_t seq_len);

/// Noise inputs for m generated sequences plus their prior-drawn one-hot
/// conditioning labels.
struct GanNoise {
  std::vector<Tensor> steps;  // per t: [m, noise_dim]
  Tensor labels;              // [m, C]
};

GanNoise sample_gan_noise(std::size_t m, std::size_t seq_len, std::size_t noise_dim,
                          std::size_t classes, Rng& rng);

// ---- loss graphs ----

/// Discriminator objective (to be maximized):
/// (1/m) sum_i [ log D(x_i, C(x_i)) + log(1 - D(G(xi_i, y_i), y_i)) ].
Tape::Id disc_objective_nodes(Tape& tape, const BoundGenerator& gen, const BoundClassifier& cls,
                              const BoundDiscriminator& dis, const GanBatch& real,
                              const GanNoise& noise, const TrainingConfig& config);

struct GenLossNodes {
  Tape::Id total = -1;
  Tape::Id adv = -1;      // (1/m) sum log(1 - D(G, y))
  Tape::Id smooth = -1;   // (1/m) sum Omega (already sigma-weighted)
  Tape::Id ce_real = -1;  // (1/m) sum H(C(x), y), unweighted
  Tape::Id cycle = -1;    // (1/m) sum H(C(G), y), unweighted
};

/// Generator/classifier objective (to be minimized):
/// adv + smooth + gamma * (ce_real + cycle).
GenLossNodes gen_objective_nodes(Tape& tape, const BoundGenerator& gen, const BoundClassifier& cls,
                                 const BoundDiscriminator& dis, const GanBatch& real,
                                 const GanNoise& noise, const TrainingConfig& config);

// ---- gradient penalty / decoder pretraining ----

/// mean over rows of (||g_row|| - 1)^2 for a [B, d] gradient batch.
Tape::Id gradient_norm_penalty_nodes(Tape& tape, Tape::Id input_grads);

/// MLP forward pass that keeps the pre-activations, so the gradient of the
/// scalar output w.r.t. the input can be assembled as a tape expression
/// (relu masks enter as constants; exact almost everywhere).
struct MlpForward {
  Tape::Id out = -1;
  std::vector<Tape::Id> preacts;
};

MlpForward mlp_apply_tracked(Tape& tape, const BoundMlp& mlp, Tape::Id x);

/// d out / d input for a single-output MLP, [B, in]; columns [0, grad_cols)
/// are returned (the label part of a conditional critic input is excluded).
Tape::Id mlp_input_gradient_nodes(Tape& tape, const BoundMlp& mlp, const MlpForward& forward,
                                  std::size_t rows, std::size_t grad_cols);

/// Frame-level critic for decoder pretraining; discarded afterwards.
struct PretrainCriticParams {
  MlpParams mlp;  // input d (+ C when conditioned on labels), output 1

  bool operator==(const PretrainCriticParams& other) const = default;
};

/// Eq-style gradient penalty at the given critic input batch:
/// mean_i (||grad_x critic(x_i)|| - 1)^2, gradient taken w.r.t. all input
/// columns.
double gradient_penalty(const PretrainCriticParams& critic, const Tensor& batch);

/// WGAN-GP pretraining of the shared frame-wise decoder on pooled frames.
/// Real frames keep their sequence labels; generated frames get uniform
/// labels and standard Gaussian latent inputs. Returns the trained decoder.
MlpParams pretrain_decoder(const Dataset& dataset, const TrainingConfig& config, std::uint64_t seed);

// ---- steps & loop ----

struct DiscStepInfo {
  double objective = 0.0;  // value before the update
};

struct GenStepInfo {
  double total = 0.0;
  double adv = 0.0;
  double smooth = 0.0;
  double ce_real = 0.0;
  double cycle = 0.0;
};

/// One Adam ascent step on the discriminator objective; theta and phi frozen.
DiscStepInfo discriminator_step(ModelState& state, const GanBatch& batch, const GanNoise& noise,
                                const TrainingConfig& config);

/// One Adam descent step on the combined generator/classifier loss; psi frozen.
GenStepInfo generator_classifier_step(ModelState& state, const GanBatch& batch, const GanNoise& noise,
                                      const TrainingConfig& config);

struct TrainLogRow {
  std::int64_t iteration = 0;
  double loss_d = 0.0;
  double loss_adv_g = 0.0;
  double loss_smooth = 0.0;
  double loss_cls_real = 0.0;
  double loss_cycle = 0.0;
};

struct TrainHooks {
  /// Called every config.checkpoint_interval iterations with a state whose
  /// rng_state is current, so training can resume bit-exactly from it.
  std::function<void(const ModelState&)> on_checkpoint;
  std::function<void(const TrainLogRow&)> on_log;
};

struct TrainResult {
  ModelState state;
  std::vector<TrainLogRow> log;
};

/// Full Algorithm-style run: init, optional decoder pretraining, then
/// `iterations` outer steps of K discriminator updates followed by one
/// generator/classifier update. Deterministic in config.seed.
TrainResult train(const Dataset& dataset, const TrainingConfig& config, const TrainHooks& hooks = {});

/// Continues a (possibly checkpointed) state to state.config.iterations.
TrainResult train_from(const Dataset& dataset, ModelState state, const TrainHooks& hooks = {});

/// Stand-alone supervised classifier training (cross-entropy only); used as
/// the independent baseline in evaluation protocols.
ClassifierParams train_classifier_supervised(const Dataset& dataset, const CriticDims& dims,
                                             std::size_t iterations, std::size_t batch_size,
                                             double lr, std::uint64_t seed);

// ---- persistence ----

/// Versioned binary container of named tensors and scalars; lossless.
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);

/// Decoder-only checkpoint written by pretraining.
void save_decoder_checkpoint(const MlpParams& decoder, const std::string& path);
MlpParams load_decoder_checkpoint(const std::string& path);

}  // namespace actgen
