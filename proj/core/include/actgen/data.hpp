#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "actgen/rng.hpp"
#include "actgen/tensor.hpp"

namespace actgen {

/// One action pose: d finite coordinates.
using ActionPose = std::vector<double>;

/// Probability vector over the C action classes. One-hot for real training
/// labels, soft for class mixing. Entries are validated at construction:
/// non-negative, summing to 1 within 1e-6.
class LabelDistribution {
 public:
  explicit LabelDistribution(std::vector<double> weights);
  static LabelDistribution one_hot(std::size_t classes, std::size_t index);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t classes() const { return weights_.size(); }
  bool is_one_hot() const;
  std::size_t argmax() const;

  bool operator==(const LabelDistribution& other) const = default;

 private:
  std::vector<double> weights_;
};

/// Ordered pose frames; length T >= 2 and a common dimension d.
struct ActionSequence {
  std::vector<ActionPose> frames;

  std::size_t length() const { return frames.size(); }
  std::size_t dim() const { return frames.empty() ? 0 : frames.front().size(); }
  /// [T, d] tensor view of the frames.
  Tensor as_tensor() const;
  static ActionSequence from_tensor(const Tensor& t);
  void validate() const;

  bool operator==(const ActionSequence& other) const = default;
};

struct DatasetRecord {
  ActionSequence sequence;
  LabelDistribution label;

  bool operator==(const DatasetRecord& other) const = default;
};

/// Per-dimension standardization statistics. `scale` is floored at 1e-6 so a
/// constant dimension cannot blow up the division.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;

  static NormStats identity(std::size_t dim);
  bool is_identity() const;

  bool operator==(const NormStats& other) const = default;
};

struct Dataset {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::vector<DatasetRecord> records;
  NormStats norm;  // stats of the last normalization applied, identity otherwise

  void validate() const;
  std::vector<std::size_t> class_counts() const;
  /// Indices of records whose label argmax is `cls`.
  std::vector<std::size_t> indices_of_class(std::size_t cls) const;

  bool operator==(const Dataset& other) const = default;
};

/// Harmonic trajectory parameters of one synthetic class. Frequency is in
/// cycles per sequence; dimension pairs (2p, 2p+1) trace a cos/sin pair with
/// a deterministic per-pair phase and amplitude falloff.
struct ClassSpec {
  double frequency = 1.0;
  double phase = 0.0;
  double amplitude = 1.0;
};

/// Well-separated default specs for C classes.
std::vector<ClassSpec> default_class_specs(std::size_t classes);

/// Clean (noise-free) frame of class `spec` at time t of a length-T sequence.
ActionPose synthetic_clean_frame(const ClassSpec& spec, std::size_t t, std::size_t seq_len,
                                 std::size_t dim);

/// JSON Lines dataset file:
///   line 1:  {"version":1,"classes":C,"dim":d,"names":[...]}             (header)
///   line k:  {"label":int,"frames":[[f64 x d] x T]}                       (records)
/// A soft conditioning label is recorded in an optional "mix" field; a
/// non-identity normalization is recorded in an optional "norm" header field.
/// Round-trips are bit-exact.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

/// Per-dimension sinusoid of the record's class plus Gaussian jitter scaled
/// by noise_scale. Deterministic under seed; labels one-hot. `dim` must be
/// even (harmonic cos/sin pairs).
Dataset synthesize_dataset(const std::vector<ClassSpec>& class_specs, std::size_t sequences_per_class,
                           std::size_t seq_len, std::size_t dim, double noise_scale,
                           std::uint64_t seed);

/// Stratified split; every class contributes round(fraction * n) records to
/// the train side (clamped so both sides stay non-empty).
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed);

/// Standardizes every dimension to zero mean and unit scale
/// (scale = max(std, 1e-6)); returns the transformed dataset and the stats.
std::pair<Dataset, NormStats> normalize(const Dataset& dataset);
ActionPose denormalize(const ActionPose& pose, const NormStats& stats);

/// Uniform sample of m records with replacement.
std::vector<DatasetRecord> minibatch(const Dataset& dataset, std::size_t m, std::uint64_t seed);
std::vector<DatasetRecord> minibatch(const Dataset& dataset, std::size_t m, Rng& rng);

/// Linear time resampling to `target_len` frames with endpoints preserved.
/// A sequence already at the target length passes through unchanged.
ActionSequence resample_sequence(const ActionSequence& sequence, std::size_t target_len);

}  // namespace actgen
