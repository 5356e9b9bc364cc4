#include "actgen/critics.hpp"

#include <stdexcept>

namespace actgen {

BiLstmEncoderParams init_bilstm_encoder(std::size_t input_dim, std::size_t hidden,
                                        std::size_t head, Rng& rng) {
  BiLstmEncoderParams p;
  p.fwd = init_lstm(input_dim, hidden, rng);
  p.bwd = init_lstm(input_dim, hidden, rng);
  p.head_w = init_weight(2 * hidden, head, rng);
  p.head_b = Tensor::zeros({1, head});
  return p;
}

ClassifierParams init_classifier_params(const CriticDims& dims, Rng& rng) {
  if (dims.classes == 0 || dims.pose_dim == 0) {
    throw std::invalid_argument("init_classifier_params: zero dimension");
  }
  ClassifierParams p;
  p.encoder = init_bilstm_encoder(dims.pose_dim, dims.encoder_hidden, dims.head_hidden, rng);
  p.out_w = init_weight(dims.head_hidden, dims.classes, rng);
  p.out_b = Tensor::zeros({1, dims.classes});
  p.classes = dims.classes;
  return p;
}

DiscriminatorParams init_discriminator_params(const CriticDims& dims, Rng& rng) {
  if (dims.classes == 0 || dims.pose_dim == 0) {
    throw std::invalid_argument("init_discriminator_params: zero dimension");
  }
  DiscriminatorParams p;
  p.encoder = init_bilstm_encoder(dims.pose_dim + dims.classes, dims.encoder_hidden,
                                  dims.head_hidden, rng);
  p.out_w = init_weight(dims.head_hidden, 1, rng);
  p.out_b = Tensor::zeros({1, 1});
  p.classes = dims.classes;
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ClassifierParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  append_named(out, "enc.fwd", encoder.fwd);
  append_named(out, "enc.bwd", encoder.bwd);
  out.emplace_back("enc.head_w", &encoder.head_w);
  out.emplace_back("enc.head_b", &encoder.head_b);
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> DiscriminatorParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  append_named(out, "enc.fwd", encoder.fwd);
  append_named(out, "enc.bwd", encoder.bwd);
  out.emplace_back("enc.head_w", &encoder.head_w);
  out.emplace_back("enc.head_b", &encoder.head_b);
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ClassifierParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  append_named(out, "enc.fwd", encoder.fwd);
  append_named(out, "enc.bwd", encoder.bwd);
  out.emplace_back("enc.head_w", &encoder.head_w);
  out.emplace_back("enc.head_b", &encoder.head_b);
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> DiscriminatorParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  append_named(out, "enc.fwd", encoder.fwd);
  append_named(out, "enc.bwd", encoder.bwd);
  out.emplace_back("enc.head_w", &encoder.head_w);
  out.emplace_back("enc.head_b", &encoder.head_b);
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

BoundEncoder bind_encoder(Tape& tape, const BiLstmEncoderParams& p, bool trainable) {
  BoundEncoder b;
  b.fwd = bind_lstm(tape, p.fwd, trainable);
  b.bwd = bind_lstm(tape, p.bwd, trainable);
  b.head_w = trainable ? tape.leaf(p.head_w) : tape.constant(p.head_w);
  b.head_b = trainable ? tape.leaf(p.head_b) : tape.constant(p.head_b);
  return b;
}

BoundClassifier bind_classifier(Tape& tape, const ClassifierParams& p, bool trainable) {
  BoundClassifier b;
  b.encoder = bind_encoder(tape, p.encoder, trainable);
  b.out_w = trainable ? tape.leaf(p.out_w) : tape.constant(p.out_w);
  b.out_b = trainable ? tape.leaf(p.out_b) : tape.constant(p.out_b);
  return b;
}

BoundDiscriminator bind_discriminator(Tape& tape, const DiscriminatorParams& p, bool trainable) {
  BoundDiscriminator b;
  b.encoder = bind_encoder(tape, p.encoder, trainable);
  b.out_w = trainable ? tape.leaf(p.out_w) : tape.constant(p.out_w);
  b.out_b = trainable ? tape.leaf(p.out_b) : tape.constant(p.out_b);
  return b;
}

Tape::Id bilstm_code_nodes(Tape& tape, const BoundEncoder& enc, const std::vector<Tape::Id>& frames) {
  if (frames.empty()) throw std::invalid_argument("bilstm encode: empty sequence");
  const std::size_t rows = tape.value(frames.front()).rows();

  LstmState f = lstm_zero_state(tape, rows, enc.fwd.hidden);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    f = lstm_step(tape, enc.fwd, frames[t], f);
  }
  LstmState b = lstm_zero_state(tape, rows, enc.bwd.hidden);
  for (std::size_t t = frames.size(); t > 0; --t) {
    b = lstm_step(tape, enc.bwd, frames[t - 1], b);
  }
  Tape::Id code = tape.concat_cols(f.h, b.h);
  return tape.relu(tape.add_rowvec(tape.matmul(code, enc.head_w), enc.head_b));
}

Tape::Id classifier_probs_nodes(Tape& tape, const BoundClassifier& cls,
                                const std::vector<Tape::Id>& frames) {
  Tape::Id code = bilstm_code_nodes(tape, cls.encoder, frames);
  Tape::Id logits = tape.add_rowvec(tape.matmul(code, cls.out_w), cls.out_b);
  return tape.softmax_rows(logits);
}

Tape::Id discriminator_prob_nodes(Tape& tape, const BoundDiscriminator& dis,
                                  const std::vector<Tape::Id>& frames, Tape::Id label) {
  std::vector<Tape::Id> augmented;
  augmented.reserve(frames.size());
  for (Tape::Id f : frames) augmented.push_back(tape.concat_cols(f, label));
  Tape::Id code = bilstm_code_nodes(tape, dis.encoder, augmented);
  Tape::Id logit = tape.add_rowvec(tape.matmul(code, dis.out_w), dis.out_b);
  return tape.clamp(tape.sigmoid(logit), kDiscriminatorEps, 1.0 - kDiscriminatorEps);
}

namespace {

std::vector<Tape::Id> frame_constants(Tape& tape, const Tensor& frames) {
  std::vector<Tape::Id> ids;
  ids.reserve(frames.rows());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    ids.push_back(tape.constant(Tensor::row(frames.row_vector(t))));
  }
  return ids;
}

}  // namespace

Tensor bilstm_encode(const BiLstmEncoderParams& params, const Tensor& frames) {
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw std::invalid_argument("bilstm_encode: frames must be a [T, d] tensor with T >= 1");
  }
  if (frames.cols() != params.fwd.input_dim()) {
    throw std::invalid_argument("bilstm_encode: frame dim " + std::to_string(frames.cols()) +
                                " != encoder input dim " + std::to_string(params.fwd.input_dim()));
  }
  Tape tape;
  BoundEncoder enc = bind_encoder(tape, params, false);
  Tape::Id code = bilstm_code_nodes(tape, enc, frame_constants(tape, frames));
  return tape.value(code);
}

LabelDistribution classify(const ClassifierParams& params, const ActionSequence& sequence) {
  sequence.validate();
  if (sequence.dim() != params.encoder.fwd.input_dim()) {
    throw std::invalid_argument("classify: pose dim " + std::to_string(sequence.dim()) +
                                " != classifier input dim " +
                                std::to_string(params.encoder.fwd.input_dim()));
  }
  Tape tape;
  BoundClassifier cls = bind_classifier(tape, params, false);
  Tape::Id probs = classifier_probs_nodes(tape, cls, frame_constants(tape, sequence.as_tensor()));
  return LabelDistribution(tape.value(probs).row_vector(0));
}

double discriminate(const DiscriminatorParams& params, const ActionSequence& sequence,
                    const LabelDistribution& label) {
  sequence.validate();
  if (label.classes() != params.classes) {
    throw std::invalid_argument("discriminate: label classes mismatch");
  }
  if (sequence.dim() + params.classes != params.encoder.fwd.input_dim()) {
    throw std::invalid_argument("discriminate: pose dim + classes != discriminator input dim");
  }
  Tape tape;
  BoundDiscriminator dis = bind_discriminator(tape, params, false);
  Tape::Id label_id = tape.constant(Tensor::row(label.weights()));
  Tape::Id prob = discriminator_prob_nodes(tape, dis, frame_constants(tape, sequence.as_tensor()), label_id);
  return tape.value(prob).item();
}

}  // namespace actgen
