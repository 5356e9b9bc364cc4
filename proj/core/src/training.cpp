#include "actgen/training.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <stdexcept>

namespace actgen {

namespace {

using json = nlohmann::ordered_json;

// Sub-stream tags under the run seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamPretrain = 2;
constexpr std::uint64_t kStreamLoop = 3;

using NamedIds = std::vector<std::pair<std::string, Tape::Id>>;

void append_ids(NamedIds& out, const std::string& prefix, const BoundLstm& b) {
  out.emplace_back(prefix + ".w_x", b.w_x);
  out.emplace_back(prefix + ".w_h", b.w_h);
  out.emplace_back(prefix + ".b", b.b);
}

void append_ids(NamedIds& out, const std::string& prefix, const BoundMlp& b) {
  for (std::size_t i = 0; i < b.weights.size(); ++i) {
    out.emplace_back(prefix + ".w" + std::to_string(i), b.weights[i]);
    out.emplace_back(prefix + ".b" + std::to_string(i), b.biases[i]);
  }
}

// Mirrors GeneratorParams::named_tensors().
NamedIds named_ids(const BoundGenerator& b) {
  NamedIds out;
  append_ids(out, "latent.lstm", b.lstm);
  out.emplace_back("latent.head_w", b.head_w);
  out.emplace_back("latent.head_b", b.head_b);
  append_ids(out, "decoder", b.decoder);
  return out;
}

NamedIds encoder_head_ids(const BoundEncoder& e) {
  NamedIds out;
  append_ids(out, "enc.fwd", e.fwd);
  append_ids(out, "enc.bwd", e.bwd);
  out.emplace_back("enc.head_w", e.head_w);
  out.emplace_back("enc.head_b", e.head_b);
  return out;
}

NamedIds named_ids(const BoundClassifier& b) {
  NamedIds out = encoder_head_ids(b.encoder);
  out.emplace_back("out_w", b.out_w);
  out.emplace_back("out_b", b.out_b);
  return out;
}

NamedIds named_ids(const BoundDiscriminator& b) {
  NamedIds out = encoder_head_ids(b.encoder);
  out.emplace_back("out_w", b.out_w);
  out.emplace_back("out_b", b.out_b);
  return out;
}

std::map<std::string, Tensor> collect_grads(const Tape& tape, const NamedIds& ids) {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, id] : ids) grads.emplace(name, tape.grad(id));
  return grads;
}

std::vector<Tape::Id> tensor_constants(Tape& tape, const std::vector<Tensor>& ts) {
  std::vector<Tape::Id> ids;
  ids.reserve(ts.size());
  for (const Tensor& t : ts) ids.push_back(tape.constant(t));
  return ids;
}

// (1/m) sum_i sum_c Y_ic * log(P_ic), negated: the batched cross entropy.
Tape::Id batched_cross_entropy(Tape& tape, Tape::Id probs, Tape::Id target_const) {
  Tape::Id picked = tape.sum(tape.mul(target_const, tape.log(probs)));
  double m = static_cast<double>(tape.value(probs).rows());
  return tape.scale(picked, -1.0 / m);
}

struct FakeRollout {
  RolloutNodes rollout;
  std::vector<Tape::Id> poses;
  Tape::Id labels = -1;
};

FakeRollout build_fake(Tape& tape, const BoundGenerator& gen, const GanNoise& noise,
                       const TrainingConfig& config) {
  FakeRollout fake;
  fake.labels = tape.constant(noise.labels);
  std::vector<Tape::Id> steps = tensor_constants(tape, noise.steps);
  fake.rollout = latent_rollout_nodes(tape, gen, steps, fake.labels, config.direct_latent);
  fake.poses.reserve(fake.rollout.latents.size());
  for (Tape::Id h : fake.rollout.latents) {
    fake.poses.push_back(decode_frame_nodes(tape, gen, h, fake.labels));
  }
  return fake;
}

}  // namespace

void TrainingConfig::apply_ablation(const std::string& name) {
  if (name.empty() || name == "none") return;
  if (name == "no-smoothness") {
    sigma_latent = 0.0;
    sigma_action = 0.0;
  } else if (name == "latent-only") {
    sigma_action = 0.0;
  } else if (name == "action-only") {
    sigma_latent = 0.0;
  } else if (name == "no-cycle") {
    no_cycle = true;
  } else if (name == "direct-latent") {
    direct_latent = true;
  } else {
    throw std::invalid_argument("unknown ablation '" + name +
                                "' (expected none, no-smoothness, latent-only, action-only, "
                                "no-cycle or direct-latent)");
  }
}

void TrainingConfig::validate() const {
  auto nonneg = [](double v, const char* n) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("training config: ") + n + " must be finite and >= 0");
    }
  };
  nonneg(lambda_gp, "lambda_gp");
  nonneg(gamma_cycle, "gamma_cycle");
  nonneg(sigma_latent, "sigma_latent");
  nonneg(sigma_action, "sigma_action");
  nonneg(lr_pretrain, "lr_pretrain");
  nonneg(lr_main, "lr_main");
  if (batch_size == 0) throw std::invalid_argument("training config: batch_size must be >= 1");
  if (disc_steps == 0) throw std::invalid_argument("training config: disc_steps must be >= 1");
  if (seq_len < 2) throw std::invalid_argument("training config: seq_len must be >= 2");
  if (latent_dim == 0 || noise_dim == 0 || lstm_hidden == 0 || encoder_hidden == 0 ||
      head_hidden == 0) {
    throw std::invalid_argument("training config: zero model dimension");
  }
}

std::string training_config_to_json(const TrainingConfig& c) {
  json j;
  j["lambda_gp"] = c.lambda_gp;
  j["gamma_cycle"] = c.gamma_cycle;
  j["sigma_latent"] = c.sigma_latent;
  j["sigma_action"] = c.sigma_action;
  j["lr_pretrain"] = c.lr_pretrain;
  j["lr_main"] = c.lr_main;
  j["disc_steps"] = c.disc_steps;
  j["batch_size"] = c.batch_size;
  j["iterations"] = c.iterations;
  j["pretrain_iterations"] = c.pretrain_iterations;
  j["pretrain_critic_steps"] = c.pretrain_critic_steps;
  j["seq_len"] = c.seq_len;
  j["latent_dim"] = c.latent_dim;
  j["noise_dim"] = c.noise_dim;
  j["lstm_hidden"] = c.lstm_hidden;
  j["encoder_hidden"] = c.encoder_hidden;
  j["head_hidden"] = c.head_hidden;
  j["decoder_hidden"] = c.decoder_hidden;
  j["pretrain_critic_hidden"] = c.pretrain_critic_hidden;
  j["seed"] = c.seed;
  j["no_cycle"] = c.no_cycle;
  j["direct_latent"] = c.direct_latent;
  j["gp_at_interpolates"] = c.gp_at_interpolates;
  j["checkpoint_interval"] = c.checkpoint_interval;
  return j.dump();
}

TrainingConfig training_config_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("training config: expected a JSON object");
  TrainingConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda_gp") c.lambda_gp = value.get<double>();
    else if (key == "gamma_cycle") c.gamma_cycle = value.get<double>();
    else if (key == "sigma_latent") c.sigma_latent = value.get<double>();
    else if (key == "sigma_action") c.sigma_action = value.get<double>();
    else if (key == "lr_pretrain") c.lr_pretrain = value.get<double>();
    else if (key == "lr_main") c.lr_main = value.get<double>();
    else if (key == "disc_steps") c.disc_steps = value.get<std::size_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "iterations") c.iterations = value.get<std::size_t>();
    else if (key == "pretrain_iterations") c.pretrain_iterations = value.get<std::size_t>();
    else if (key == "pretrain_critic_steps") c.pretrain_critic_steps = value.get<std::size_t>();
    else if (key == "seq_len") c.seq_len = value.get<std::size_t>();
    else if (key == "latent_dim") c.latent_dim = value.get<std::size_t>();
    else if (key == "noise_dim") c.noise_dim = value.get<std::size_t>();
    else if (key == "lstm_hidden") c.lstm_hidden = value.get<std::size_t>();
    else if (key == "encoder_hidden") c.encoder_hidden = value.get<std::size_t>();
    else if (key == "head_hidden") c.head_hidden = value.get<std::size_t>();
    else if (key == "decoder_hidden") c.decoder_hidden = value.get<std::vector<std::size_t>>();
    else if (key == "pretrain_critic_hidden") c.pretrain_critic_hidden = value.get<std::vector<std::size_t>>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "no_cycle") c.no_cycle = value.get<bool>();
    else if (key == "direct_latent") c.direct_latent = value.get<bool>();
    else if (key == "gp_at_interpolates") c.gp_at_interpolates = value.get<bool>();
    else if (key == "checkpoint_interval") c.checkpoint_interval = value.get<std::size_t>();
    else if (key == "ablation") c.apply_ablation(value.get<std::string>());
    else throw std::invalid_argument("training config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

ModelState init_model_state(const Dataset& dataset, const TrainingConfig& config) {
  config.validate();
  dataset.validate();

  ModelState state;
  state.config = config;

  Rng rng(Rng::derive(config.seed, kStreamInit));
  GeneratorDims gdims;
  gdims.classes = dataset.classes;
  gdims.pose_dim = dataset.dim;
  gdims.noise_dim = config.noise_dim;
  gdims.latent_dim = config.latent_dim;
  gdims.lstm_hidden = config.lstm_hidden;
  gdims.decoder_hidden = config.decoder_hidden;
  state.gen = init_generator_params(gdims, rng);

  CriticDims cdims;
  cdims.classes = dataset.classes;
  cdims.pose_dim = dataset.dim;
  cdims.encoder_hidden = config.encoder_hidden;
  cdims.head_hidden = config.head_hidden;
  state.cls = init_classifier_params(cdims, rng);
  state.dis = init_discriminator_params(cdims, rng);

  state.opt_gen.config.lr = config.lr_main;
  state.opt_cls.config.lr = config.lr_main;
  state.opt_dis.config.lr = config.lr_main;

  Rng loop(Rng::derive(config.seed, kStreamLoop));
  state.rng_state = loop.state();
  return state;
}

GanBatch make_gan_batch(const std::vector<DatasetRecord>& records, std::size_t seq_len) {
  if (records.empty()) throw std::invalid_argument("make_gan_batch: empty batch");
  const std::size_t m = records.size();
  const std::size_t d = records.front().sequence.dim();
  const std::size_t classes = records.front().label.classes();

  GanBatch batch;
  batch.labels = Tensor({m, classes});
  std::vector<ActionSequence> resampled;
  resampled.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    resampled.push_back(resample_sequence(records[i].sequence, seq_len));
    for (std::size_t c = 0; c < classes; ++c) {
      batch.labels.at(i, c) = records[i].label.weights()[c];
    }
  }
  batch.frames.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    Tensor frame({m, d});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < d; ++k) frame.at(i, k) = resampled[i].frames[t][k];
    }
    batch.frames.push_back(std::move(frame));
  }
  return batch;
}

GanNoise sample_gan_noise(std::size_t m, std::size_t seq_len, std::size_t noise_dim,
                          std::size_t classes, Rng& rng) {
  GanNoise noise;
  noise.steps.reserve(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) noise.steps.push_back(rng.gaussian({m, noise_dim}));
  noise.labels = Tensor({m, classes});
  for (std::size_t i = 0; i < m; ++i) noise.labels.at(i, rng.index(classes)) = 1.0;
  return noise;
}

Tape::Id disc_objective_nodes(Tape& tape, const BoundGenerator& gen, const BoundClassifier& cls,
                              const BoundDiscriminator& dis, const GanBatch& real,
                              const GanNoise& noise, const TrainingConfig& config) {
  const std::size_t m = real.size();

  std::vector<Tape::Id> real_frames = tensor_constants(tape, real.frames);
  Tape::Id cls_probs = classifier_probs_nodes(tape, cls, real_frames);
  Tape::Id d_real = discriminator_prob_nodes(tape, dis, real_frames, cls_probs);
  Tape::Id term_real = tape.mean(tape.log(d_real));

  FakeRollout fake = build_fake(tape, gen, noise, config);
  Tape::Id d_fake = discriminator_prob_nodes(tape, dis, fake.poses, fake.labels);
  Tape::Id ones = tape.constant(Tensor::full({m, 1}, 1.0));
  Tape::Id term_fake = tape.mean(tape.log(tape.sub(ones, d_fake)));

  return tape.add(term_real, term_fake);
}

GenLossNodes gen_objective_nodes(Tape& tape, const BoundGenerator& gen, const BoundClassifier& cls,
                                 const BoundDiscriminator& dis, const GanBatch& real,
                                 const GanNoise& noise, const TrainingConfig& config) {
  const std::size_t m = real.size();
  const double inv_m = 1.0 / static_cast<double>(m);

  GenLossNodes nodes;
  FakeRollout fake = build_fake(tape, gen, noise, config);

  Tape::Id d_fake = discriminator_prob_nodes(tape, dis, fake.poses, fake.labels);
  Tape::Id ones = tape.constant(Tensor::full({m, 1}, 1.0));
  nodes.adv = tape.mean(tape.log(tape.sub(ones, d_fake)));

  if (config.sigma_latent != 0.0 || config.sigma_action != 0.0) {
    Tape::Id omega = smoothness_sum_nodes(tape, fake.rollout.latents, fake.poses,
                                          config.sigma_latent, config.sigma_action);
    nodes.smooth = tape.scale(omega, inv_m);
  } else {
    nodes.smooth = tape.constant(Tensor::scalar(0.0));
  }

  Tape::Id total = tape.add(nodes.adv, nodes.smooth);
  if (config.gamma_cycle != 0.0) {
    std::vector<Tape::Id> real_frames = tensor_constants(tape, real.frames);
    Tape::Id real_probs = classifier_probs_nodes(tape, cls, real_frames);
    Tape::Id real_labels = tape.constant(real.labels);
    nodes.ce_real = batched_cross_entropy(tape, real_probs, real_labels);

    if (config.no_cycle) {
      nodes.cycle = tape.constant(Tensor::scalar(0.0));
    } else {
      Tape::Id fake_probs = classifier_probs_nodes(tape, cls, fake.poses);
      nodes.cycle = batched_cross_entropy(tape, fake_probs, fake.labels);
    }
    total = tape.add(total, tape.scale(tape.add(nodes.ce_real, nodes.cycle), config.gamma_cycle));
  } else {
    nodes.ce_real = tape.constant(Tensor::scalar(0.0));
    nodes.cycle = tape.constant(Tensor::scalar(0.0));
  }
  nodes.total = total;
  return nodes;
}

Tape::Id gradient_norm_penalty_nodes(Tape& tape, Tape::Id input_grads) {
  const Tensor& g = tape.value(input_grads);
  const std::size_t rows = g.rows(), cols = g.cols();
  Tape::Id col_ones = tape.constant(Tensor::full({cols, 1}, 1.0));
  Tape::Id row_sq = tape.matmul(tape.mul(input_grads, input_grads), col_ones);  // [B,1]
  Tape::Id norm = tape.sqrt(row_sq);
  Tape::Id ones = tape.constant(Tensor::full({rows, 1}, 1.0));
  Tape::Id dev = tape.sub(norm, ones);
  return tape.mean(tape.mul(dev, dev));
}

MlpForward mlp_apply_tracked(Tape& tape, const BoundMlp& mlp, Tape::Id x) {
  MlpForward fwd;
  Tape::Id cur = x;
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    cur = tape.add_rowvec(tape.matmul(cur, mlp.weights[i]), mlp.biases[i]);
    if (i + 1 < mlp.weights.size()) {
      fwd.preacts.push_back(cur);
      cur = tape.relu(cur);
    }
  }
  fwd.out = cur;
  return fwd;
}

Tape::Id mlp_input_gradient_nodes(Tape& tape, const BoundMlp& mlp, const MlpForward& forward,
                                  std::size_t rows, std::size_t grad_cols) {
  if (tape.value(forward.out).cols() != 1) {
    throw std::invalid_argument("mlp_input_gradient_nodes: critic output must be 1-dimensional");
  }
  const std::size_t layers = mlp.weights.size();
  // d out / d a_{L-1} is the last weight column, identical for every row.
  Tape::Id ones = tape.constant(Tensor::full({rows, 1}, 1.0));
  Tape::Id g = tape.matmul(ones, tape.transpose(mlp.weights[layers - 1]));
  for (std::size_t k = layers - 1; k > 0; --k) {
    // relu' of the pre-activation enters as a constant mask; exact a.e.
    const Tensor& z = tape.value(forward.preacts[k - 1]);
    Tensor mask(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) mask[i] = z[i] > 0.0 ? 1.0 : 0.0;
    g = tape.mul(g, tape.constant(std::move(mask)));
    g = tape.matmul(g, tape.transpose(mlp.weights[k - 1]));
  }
  const std::size_t in_cols = tape.value(g).cols();
  if (grad_cols > in_cols) throw std::invalid_argument("mlp_input_gradient_nodes: grad_cols too large");
  if (grad_cols < in_cols) g = tape.slice_cols(g, 0, grad_cols);
  return g;
}

double gradient_penalty(const PretrainCriticParams& critic, const Tensor& batch) {
  if (batch.rank() != 2 || batch.rows() == 0) {
    throw std::invalid_argument("gradient_penalty: batch must be a non-empty [B, d] tensor");
  }
  if (batch.cols() != critic.mlp.input_dim()) {
    throw std::invalid_argument("gradient_penalty: batch dim " + std::to_string(batch.cols()) +
                                " != critic input dim " + std::to_string(critic.mlp.input_dim()));
  }
  Tape tape;
  BoundMlp mlp = bind_mlp(tape, critic.mlp, false);
  Tape::Id x = tape.constant(batch);
  MlpForward fwd = mlp_apply_tracked(tape, mlp, x);
  Tape::Id grads = mlp_input_gradient_nodes(tape, mlp, fwd, batch.rows(), batch.cols());
  return tape.value(gradient_norm_penalty_nodes(tape, grads)).item();
}

namespace {

struct FramePool {
  Tensor frames;  // [N, d]
  Tensor labels;  // [N, C]
};

FramePool pool_frames(const Dataset& dataset) {
  std::size_t n = 0;
  for (const DatasetRecord& r : dataset.records) n += r.sequence.length();
  FramePool pool{Tensor({n, dataset.dim}), Tensor({n, dataset.classes})};
  std::size_t row = 0;
  for (const DatasetRecord& r : dataset.records) {
    for (const ActionPose& f : r.sequence.frames) {
      for (std::size_t k = 0; k < dataset.dim; ++k) pool.frames.at(row, k) = f[k];
      for (std::size_t c = 0; c < dataset.classes; ++c) {
        pool.labels.at(row, c) = r.label.weights()[c];
      }
      ++row;
    }
  }
  return pool;
}

Tensor sample_rows(const FramePool& pool, std::size_t m, Rng& rng, Tensor* labels_out) {
  Tensor x({m, pool.frames.cols()});
  if (labels_out) *labels_out = Tensor({m, pool.labels.cols()});
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t r = rng.index(pool.frames.rows());
    for (std::size_t k = 0; k < pool.frames.cols(); ++k) x.at(i, k) = pool.frames.at(r, k);
    if (labels_out) {
      for (std::size_t c = 0; c < pool.labels.cols(); ++c) {
        labels_out->at(i, c) = pool.labels.at(r, c);
      }
    }
  }
  return x;
}

Tensor uniform_one_hot(std::size_t m, std::size_t classes, Rng& rng) {
  Tensor y({m, classes});
  for (std::size_t i = 0; i < m; ++i) y.at(i, rng.index(classes)) = 1.0;
  return y;
}

Tensor hcat(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), a.cols() + b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) out.at(i, k) = a.at(i, k);
    for (std::size_t k = 0; k < b.cols(); ++k) out.at(i, a.cols() + k) = b.at(i, k);
  }
  return out;
}

}  // namespace

MlpParams pretrain_decoder(const Dataset& dataset, const TrainingConfig& config, std::uint64_t seed) {
  config.validate();
  dataset.validate();
  if (dataset.records.empty()) throw std::invalid_argument("pretrain_decoder: empty dataset");

  const std::size_t d = dataset.dim;
  const std::size_t classes = dataset.classes;
  const std::size_t m = config.batch_size;

  Rng rng(seed);
  MlpParams decoder = init_mlp(config.latent_dim + classes, config.decoder_hidden, d, rng);
  PretrainCriticParams critic{init_mlp(d + classes, config.pretrain_critic_hidden, 1, rng)};

  if (config.pretrain_iterations == 0) return decoder;

  FramePool pool = pool_frames(dataset);
  AdamState opt_dec, opt_crit;
  opt_dec.config.lr = config.lr_pretrain;
  opt_crit.config.lr = config.lr_pretrain;

  std::vector<std::pair<std::string, Tensor*>> dec_params;
  append_named(dec_params, "dec", decoder);
  std::vector<std::pair<std::string, Tensor*>> crit_params;
  append_named(crit_params, "crit", critic.mlp);

  for (std::size_t iter = 0; iter < config.pretrain_iterations; ++iter) {
    try {
      for (std::size_t k = 0; k < config.pretrain_critic_steps; ++k) {
        Tensor real_labels;
        Tensor real_x = sample_rows(pool, m, rng, &real_labels);
        Tensor h = rng.gaussian({m, config.latent_dim});
        Tensor fake_labels = uniform_one_hot(m, classes, rng);

        Tape tape;
        BoundMlp dec = bind_mlp(tape, decoder, false);
        BoundMlp cr = bind_mlp(tape, critic.mlp, true);

        Tape::Id fake_x = mlp_apply(tape, dec, tape.constant(hcat(h, fake_labels)));
        Tape::Id fake_in = tape.concat_cols(fake_x, tape.constant(fake_labels));
        Tape::Id crit_fake = tape.mean(mlp_apply(tape, cr, fake_in));

        Tensor real_in = hcat(real_x, real_labels);
        Tape::Id real_in_id = tape.constant(real_in);
        MlpForward real_fwd = mlp_apply_tracked(tape, cr, real_in_id);
        Tape::Id crit_real = tape.mean(real_fwd.out);

        // Penalty at the real points; optionally at interpolates between the
        // real and generated frames.
        Tape::Id penalty;
        if (config.gp_at_interpolates) {
          const Tensor& fake_val = tape.value(fake_x);
          Tensor mix({m, d});
          for (std::size_t i = 0; i < m; ++i) {
            double u = rng.uniform();
            for (std::size_t c = 0; c < d; ++c) {
              mix.at(i, c) = u * real_x.at(i, c) + (1.0 - u) * fake_val.at(i, c);
            }
          }
          Tape::Id mix_in = tape.constant(hcat(mix, real_labels));
          MlpForward mix_fwd = mlp_apply_tracked(tape, cr, mix_in);
          Tape::Id grads = mlp_input_gradient_nodes(tape, cr, mix_fwd, m, d);
          penalty = gradient_norm_penalty_nodes(tape, grads);
        } else {
          Tape::Id grads = mlp_input_gradient_nodes(tape, cr, real_fwd, m, d);
          penalty = gradient_norm_penalty_nodes(tape, grads);
        }

        Tape::Id objective = tape.add(tape.sub(crit_real, crit_fake),
                                      tape.scale(penalty, config.lambda_gp));
        Tape::Id loss = tape.scale(objective, -1.0);  // ascend
        tape.backward(loss);
        NamedIds ids;
        append_ids(ids, "crit", cr);
        adam_step(crit_params, collect_grads(tape, ids), opt_crit);
      }

      // Decoder step: maximize the critic's score on generated frames.
      Tensor h = rng.gaussian({m, config.latent_dim});
      Tensor fake_labels = uniform_one_hot(m, classes, rng);
      Tape tape;
      BoundMlp dec = bind_mlp(tape, decoder, true);
      BoundMlp cr = bind_mlp(tape, critic.mlp, false);
      Tape::Id fake_x = mlp_apply(tape, dec, tape.constant(hcat(h, fake_labels)));
      Tape::Id fake_in = tape.concat_cols(fake_x, tape.constant(fake_labels));
      Tape::Id loss = tape.scale(tape.mean(mlp_apply(tape, cr, fake_in)), -1.0);
      tape.backward(loss);
      NamedIds ids;
      append_ids(ids, "dec", dec);
      adam_step(dec_params, collect_grads(tape, ids), opt_dec);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(static_cast<std::int64_t>(iter), std::string("pretraining: ") + e.what());
    }
  }
  return decoder;
}

DiscStepInfo discriminator_step(ModelState& state, const GanBatch& batch, const GanNoise& noise,
                                const TrainingConfig& config) {
  Tape tape;
  BoundGenerator gen = bind_generator(tape, state.gen, false);
  BoundClassifier cls = bind_classifier(tape, state.cls, false);
  BoundDiscriminator dis = bind_discriminator(tape, state.dis, true);

  Tape::Id objective = disc_objective_nodes(tape, gen, cls, dis, batch, noise, config);
  DiscStepInfo info{tape.value(objective).item()};

  tape.backward(tape.scale(objective, -1.0));  // ascent
  std::vector<std::pair<std::string, Tensor*>> params = state.dis.named_tensors();
  adam_step(params, collect_grads(tape, named_ids(dis)), state.opt_dis);
  return info;
}

GenStepInfo generator_classifier_step(ModelState& state, const GanBatch& batch, const GanNoise& noise,
                                      const TrainingConfig& config) {
  Tape tape;
  BoundGenerator gen = bind_generator(tape, state.gen, true);
  BoundClassifier cls = bind_classifier(tape, state.cls, true);
  BoundDiscriminator dis = bind_discriminator(tape, state.dis, false);

  GenLossNodes nodes = gen_objective_nodes(tape, gen, cls, dis, batch, noise, config);
  GenStepInfo info;
  info.total = tape.value(nodes.total).item();
  info.adv = tape.value(nodes.adv).item();
  info.smooth = tape.value(nodes.smooth).item();
  info.ce_real = tape.value(nodes.ce_real).item();
  info.cycle = tape.value(nodes.cycle).item();

  tape.backward(nodes.total);
  std::vector<std::pair<std::string, Tensor*>> gen_params = state.gen.named_tensors();
  adam_step(gen_params, collect_grads(tape, named_ids(gen)), state.opt_gen);
  std::vector<std::pair<std::string, Tensor*>> cls_params = state.cls.named_tensors();
  adam_step(cls_params, collect_grads(tape, named_ids(cls)), state.opt_cls);
  return info;
}

TrainResult train_from(const Dataset& dataset, ModelState state, const TrainHooks& hooks) {
  const TrainingConfig& config = state.config;
  config.validate();
  dataset.validate();
  if (state.iteration < static_cast<std::int64_t>(config.iterations) && dataset.records.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }

  Rng rng(0);
  rng.set_state(state.rng_state);

  TrainResult result;
  while (state.iteration < static_cast<std::int64_t>(config.iterations)) {
    const std::int64_t iter = state.iteration + 1;
    TrainLogRow row;
    row.iteration = iter;
    try {
      for (std::size_t k = 0; k < config.disc_steps; ++k) {
        GanBatch batch = make_gan_batch(minibatch(dataset, config.batch_size, rng), config.seq_len);
        GanNoise noise = sample_gan_noise(config.batch_size, config.seq_len, config.noise_dim,
                                          dataset.classes, rng);
        DiscStepInfo d = discriminator_step(state, batch, noise, config);
        row.loss_d = d.objective;
      }
      GanBatch batch = make_gan_batch(minibatch(dataset, config.batch_size, rng), config.seq_len);
      GanNoise noise = sample_gan_noise(config.batch_size, config.seq_len, config.noise_dim,
                                        dataset.classes, rng);
      GenStepInfo g = generator_classifier_step(state, batch, noise, config);
      row.loss_adv_g = g.adv;
      row.loss_smooth = g.smooth;
      row.loss_cls_real = g.ce_real;
      row.loss_cycle = g.cycle;
    } catch (const TrainingDiverged&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(iter, e.what());
    }

    state.iteration = iter;
    result.log.push_back(row);
    if (hooks.on_log) hooks.on_log(row);
    if (config.checkpoint_interval > 0 && hooks.on_checkpoint &&
        iter % static_cast<std::int64_t>(config.checkpoint_interval) == 0) {
      state.rng_state = rng.state();
      hooks.on_checkpoint(state);
    }
  }
  state.rng_state = rng.state();
  result.state = std::move(state);
  return result;
}

TrainResult train(const Dataset& dataset, const TrainingConfig& config, const TrainHooks& hooks) {
  ModelState state = init_model_state(dataset, config);
  if (config.pretrain_iterations > 0) {
    state.gen.decoder = pretrain_decoder(dataset, config, Rng::derive(config.seed, kStreamPretrain));
  }
  return train_from(dataset, std::move(state), hooks);
}

ClassifierParams train_classifier_supervised(const Dataset& dataset, const CriticDims& dims,
                                             std::size_t iterations, std::size_t batch_size,
                                             double lr, std::uint64_t seed) {
  dataset.validate();
  if (dataset.records.empty()) throw std::invalid_argument("train_classifier_supervised: empty dataset");

  Rng rng(Rng::derive(seed, kStreamInit));
  ClassifierParams params = init_classifier_params(dims, rng);
  AdamState opt;
  opt.config.lr = lr;
  std::vector<std::pair<std::string, Tensor*>> named = params.named_tensors();

  Rng loop(Rng::derive(seed, kStreamLoop));
  const std::size_t seq_len = dataset.records.front().sequence.length();
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    GanBatch batch = make_gan_batch(minibatch(dataset, batch_size, loop), seq_len);
    Tape tape;
    BoundClassifier cls = bind_classifier(tape, params, true);
    std::vector<Tape::Id> frames;
    frames.reserve(batch.frames.size());
    for (const Tensor& f : batch.frames) frames.push_back(tape.constant(f));
    Tape::Id probs = classifier_probs_nodes(tape, cls, frames);
    Tape::Id loss = batched_cross_entropy(tape, probs, tape.constant(batch.labels));
    tape.backward(loss);
    adam_step(named, collect_grads(tape, named_ids(cls)), opt);
  }
  return params;
}

}  // namespace actgen
