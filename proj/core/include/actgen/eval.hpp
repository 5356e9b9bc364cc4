#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actgen/critics.hpp"
#include "actgen/data.hpp"

namespace actgen {

/// Gaussian kernel two-sample machinery. k(x, y) = exp(-||x-y||^2 / (2 s^2))
/// with s swept over the bandwidth grid; the paper-style statistic reports
/// the maximum over the sweep.
struct KernelConfig {
  std::vector<double> bandwidths;

  /// {10^k : k = -4..9}, 14 points.
  static KernelConfig default_grid();
};

double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y, double bandwidth);

/// Unbiased MMD^2 estimator over two vector sets (no diagonal terms). May be
/// negative; symmetric in (X, Y). Requires |X| >= 2, |Y| >= 2.
double mmd_u_squared(const std::vector<std::vector<double>>& x,
                     const std::vector<std::vector<double>>& y, double bandwidth);

/// max over the grid of sqrt(max(MMD^2_u, 0)).
double mmd_max(const std::vector<std::vector<double>>& x,
               const std::vector<std::vector<double>>& y, const KernelConfig& kernel);

using SequenceSet = std::vector<ActionSequence>;

/// Frame-level statistic: for every class j and frame index i, the MMD
/// between the sets of i-th frames of generated and real sequences, averaged
/// over frames and classes. Sequences are resampled to the real corpus
/// reference length first.
double mmd_avg(const std::vector<SequenceSet>& generated, const std::vector<SequenceSet>& real,
               const KernelConfig& kernel = KernelConfig::default_grid());

/// Sequence-level statistic: per class, the MMD between whole sequences
/// flattened to (T*d)-vectors after resampling, averaged over classes.
double mmd_seq(const std::vector<SequenceSet>& generated, const std::vector<SequenceSet>& real,
               const KernelConfig& kernel = KernelConfig::default_grid());

/// Most common sequence length of the real per-class sets.
std::size_t reference_length(const std::vector<SequenceSet>& real);

/// Records of `dataset` grouped per argmax class.
std::vector<SequenceSet> dataset_by_class(const Dataset& dataset);

struct AccuracyReport {
  std::vector<double> per_class;
  double mean = 0.0;
};

/// Argmax accuracy of the classifier, per class and averaged; samples at most
/// `per_class_cap` sequences per class (without replacement, seeded).
AccuracyReport classification_accuracy(const ClassifierParams& classifier, const Dataset& dataset,
                                       std::size_t per_class_cap, std::uint64_t seed);

/// Standard deviation (population) of the distances from each sequence to the
/// frame-wise mean sequence. Zero iff the set is collapsed onto its mean at
/// equal distances.
double diversity_std(const SequenceSet& sequences);

struct EvalReport {
  double mmd_avg = 0.0;
  double mmd_seq = 0.0;
  AccuracyReport accuracy_real;
  AccuracyReport accuracy_generated;
  std::vector<double> diversity_generated;  // per class
  std::vector<double> diversity_real;       // per class
  // metadata
  std::size_t classes = 0;
  std::size_t samples_per_class = 0;
  std::size_t reference_len = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

}  // namespace actgen
