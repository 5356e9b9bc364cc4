#pragma once

#include <utility>
#include <vector>

#include "actgen/data.hpp"
#include "actgen/layers.hpp"
#include "actgen/tape.hpp"

namespace actgen {

/// Shared bi-directional LSTM encoder: a forward LSTM over the frames and a
/// backward LSTM over the reversed frames; their final hidden states are
/// concatenated and passed through a relu dense head.
struct BiLstmEncoderParams {
  LstmParams fwd;
  LstmParams bwd;
  Tensor head_w;  // [2H, head]
  Tensor head_b;  // [1, head]

  std::size_t hidden_dim() const { return fwd.hidden_dim(); }
  std::size_t head_dim() const { return head_w.cols(); }

  bool operator==(const BiLstmEncoderParams& other) const = default;
};

/// Sequence classifier (phi): encoder over raw frames, C output logits,
/// softmax on top.
struct ClassifierParams {
  BiLstmEncoderParams encoder;
  Tensor out_w;  // [head, C]
  Tensor out_b;  // [1, C]
  std::size_t classes = 0;

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  bool operator==(const ClassifierParams& other) const = default;
};

/// Sequence discriminator (psi): the label vector is concatenated to every
/// frame before encoding; one logit, sigmoid output clamped to
/// [1e-6, 1 - 1e-6] so both log D and log(1 - D) stay finite.
struct DiscriminatorParams {
  BiLstmEncoderParams encoder;  // input pose_dim + classes
  Tensor out_w;                 // [head, 1]
  Tensor out_b;                 // [1, 1]
  std::size_t classes = 0;

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  bool operator==(const DiscriminatorParams& other) const = default;
};

struct CriticDims {
  std::size_t classes = 0;
  std::size_t pose_dim = 0;
  std::size_t encoder_hidden = 256;
  std::size_t head_hidden = 1024;
};

BiLstmEncoderParams init_bilstm_encoder(std::size_t input_dim, std::size_t hidden,
                                        std::size_t head, Rng& rng);
ClassifierParams init_classifier_params(const CriticDims& dims, Rng& rng);
DiscriminatorParams init_discriminator_params(const CriticDims& dims, Rng& rng);

constexpr double kDiscriminatorEps = 1e-6;

// ---- graph builders ----

struct BoundEncoder {
  BoundLstm fwd;
  BoundLstm bwd;
  Tape::Id head_w = -1, head_b = -1;
};

struct BoundClassifier {
  BoundEncoder encoder;
  Tape::Id out_w = -1, out_b = -1;
};

struct BoundDiscriminator {
  BoundEncoder encoder;
  Tape::Id out_w = -1, out_b = -1;
};

BoundEncoder bind_encoder(Tape& tape, const BiLstmEncoderParams& p, bool trainable);
BoundClassifier bind_classifier(Tape& tape, const ClassifierParams& p, bool trainable);
BoundDiscriminator bind_discriminator(Tape& tape, const DiscriminatorParams& p, bool trainable);

/// Encoder code of a frame sequence (each step [rows, in]); [rows, head].
Tape::Id bilstm_code_nodes(Tape& tape, const BoundEncoder& enc, const std::vector<Tape::Id>& frames);

/// Class probabilities [rows, C].
Tape::Id classifier_probs_nodes(Tape& tape, const BoundClassifier& cls,
                                const std::vector<Tape::Id>& frames);

/// Clamped discriminator probability [rows, 1]; `label` rows are concatenated
/// to every frame, so gradients flow into the sequence, the label, and psi.
Tape::Id discriminator_prob_nodes(Tape& tape, const BoundDiscriminator& dis,
                                  const std::vector<Tape::Id>& frames, Tape::Id label);

// ---- plain entry points ----

/// Code vector of one sequence, [1, head] as a tensor.
Tensor bilstm_encode(const BiLstmEncoderParams& params, const Tensor& frames);

LabelDistribution classify(const ClassifierParams& params, const ActionSequence& sequence);

double discriminate(const DiscriminatorParams& params, const ActionSequence& sequence,
                    const LabelDistribution& label);

}  // namespace actgen
