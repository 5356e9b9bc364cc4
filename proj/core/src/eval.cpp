#include "actgen/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace actgen {

KernelConfig KernelConfig::default_grid() {
  KernelConfig k;
  for (int e = -4; e <= 9; ++e) k.bandwidths.push_back(std::pow(10.0, e));
  return k;
}

double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y, double bandwidth) {
  if (x.size() != y.size()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("gaussian_kernel: bandwidth must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
}

double mmd_u_squared(const std::vector<std::vector<double>>& x,
                     const std::vector<std::vector<double>>& y, double bandwidth) {
  const std::size_t m = x.size(), n = y.size();
  if (m < 2 || n < 2) throw std::invalid_argument("mmd_u_squared: need at least 2 samples per set");
  const std::size_t d = x.front().size();
  for (const auto& v : x) {
    if (v.size() != d) throw std::invalid_argument("mmd_u_squared: ragged X");
  }
  for (const auto& v : y) {
    if (v.size() != d) throw std::invalid_argument("mmd_u_squared: X/Y dimension mismatch");
  }
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd_u_squared: bandwidth must be positive");

  const double inv_two_bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  auto sqdist = [d](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double t = a[k] - b[k];
      s += t * t;
    }
    return s;
  };

  double xx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) xx += std::exp(-sqdist(x[i], x[j]) * inv_two_bw2);
  }
  double yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) yy += std::exp(-sqdist(y[i], y[j]) * inv_two_bw2);
  }
  double xy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) xy += std::exp(-sqdist(x[i], y[j]) * inv_two_bw2);
  }

  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  return 2.0 * xx / (md * (md - 1.0)) + 2.0 * yy / (nd * (nd - 1.0)) - 2.0 * xy / (md * nd);
}

double mmd_max(const std::vector<std::vector<double>>& x,
               const std::vector<std::vector<double>>& y, const KernelConfig& kernel) {
  if (kernel.bandwidths.empty()) throw std::invalid_argument("mmd_max: empty bandwidth grid");
  double best = 0.0;
  for (double bw : kernel.bandwidths) {
    double v = std::sqrt(std::max(mmd_u_squared(x, y, bw), 0.0));
    best = std::max(best, v);
  }
  return best;
}

std::size_t reference_length(const std::vector<SequenceSet>& real) {
  std::map<std::size_t, std::size_t> counts;
  for (const SequenceSet& set : real) {
    for (const ActionSequence& s : set) ++counts[s.length()];
  }
  if (counts.empty()) throw std::invalid_argument("reference_length: no sequences");
  std::size_t best_len = 0, best_count = 0;
  for (const auto& [len, count] : counts) {
    if (count > best_count) {
      best_len = len;
      best_count = count;
    }
  }
  return best_len;
}

std::vector<SequenceSet> dataset_by_class(const Dataset& dataset) {
  std::vector<SequenceSet> out(dataset.classes);
  for (const DatasetRecord& r : dataset.records) out[r.label.argmax()].push_back(r.sequence);
  return out;
}

namespace {

std::vector<SequenceSet> resample_all(const std::vector<SequenceSet>& sets, std::size_t len) {
  std::vector<SequenceSet> out(sets.size());
  for (std::size_t c = 0; c < sets.size(); ++c) {
    out[c].reserve(sets[c].size());
    for (const ActionSequence& s : sets[c]) out[c].push_back(resample_sequence(s, len));
  }
  return out;
}

void check_class_counts(const std::vector<SequenceSet>& generated,
                        const std::vector<SequenceSet>& real) {
  if (generated.size() != real.size() || generated.empty()) {
    throw std::invalid_argument("mmd: generated and real must cover the same classes");
  }
  for (std::size_t c = 0; c < generated.size(); ++c) {
    if (generated[c].size() < 2 || real[c].size() < 2) {
      throw std::invalid_argument("mmd: class " + std::to_string(c) + " needs at least 2 sequences per side");
    }
  }
}

std::vector<double> flatten(const ActionSequence& s) {
  std::vector<double> v;
  v.reserve(s.length() * s.dim());
  for (const ActionPose& f : s.frames) v.insert(v.end(), f.begin(), f.end());
  return v;
}

}  // namespace

double mmd_avg(const std::vector<SequenceSet>& generated, const std::vector<SequenceSet>& real,
               const KernelConfig& kernel) {
  check_class_counts(generated, real);
  const std::size_t len = reference_length(real);
  std::vector<SequenceSet> gen = resample_all(generated, len);
  std::vector<SequenceSet> ref = resample_all(real, len);

  double total = 0.0;
  for (std::size_t c = 0; c < gen.size(); ++c) {
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<std::vector<double>> x, y;
      x.reserve(gen[c].size());
      y.reserve(ref[c].size());
      for (const ActionSequence& s : gen[c]) x.push_back(s.frames[i]);
      for (const ActionSequence& s : ref[c]) y.push_back(s.frames[i]);
      total += mmd_max(x, y, kernel);
    }
  }
  return total / (static_cast<double>(len) * static_cast<double>(gen.size()));
}

double mmd_seq(const std::vector<SequenceSet>& generated, const std::vector<SequenceSet>& real,
               const KernelConfig& kernel) {
  check_class_counts(generated, real);
  const std::size_t len = reference_length(real);
  std::vector<SequenceSet> gen = resample_all(generated, len);
  std::vector<SequenceSet> ref = resample_all(real, len);

  double total = 0.0;
  for (std::size_t c = 0; c < gen.size(); ++c) {
    std::vector<std::vector<double>> x, y;
    x.reserve(gen[c].size());
    y.reserve(ref[c].size());
    for (const ActionSequence& s : gen[c]) x.push_back(flatten(s));
    for (const ActionSequence& s : ref[c]) y.push_back(flatten(s));
    total += mmd_max(x, y, kernel);
  }
  return total / static_cast<double>(gen.size());
}

AccuracyReport classification_accuracy(const ClassifierParams& classifier, const Dataset& dataset,
                                       std::size_t per_class_cap, std::uint64_t seed) {
  dataset.validate();
  if (per_class_cap == 0) throw std::invalid_argument("classification_accuracy: cap must be positive");

  Rng rng(seed);
  AccuracyReport report;
  report.per_class.resize(dataset.classes, 0.0);
  for (std::size_t c = 0; c < dataset.classes; ++c) {
    std::vector<std::size_t> idx = dataset.indices_of_class(c);
    if (idx.empty()) {
      throw std::invalid_argument("classification_accuracy: class " + std::to_string(c) + " is empty");
    }
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      std::size_t j = rng.index(i + 1);
      std::swap(idx[i], idx[j]);
    }
    const std::size_t take = std::min(per_class_cap, idx.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < take; ++i) {
      LabelDistribution pred = classify(classifier, dataset.records[idx[i]].sequence);
      if (pred.argmax() == c) ++correct;
    }
    report.per_class[c] = static_cast<double>(correct) / static_cast<double>(take);
    report.mean += report.per_class[c];
  }
  report.mean /= static_cast<double>(dataset.classes);
  return report;
}

double diversity_std(const SequenceSet& sequences) {
  if (sequences.size() < 2) throw std::invalid_argument("diversity_std: need at least 2 sequences");
  const std::size_t len = sequences.front().length();
  const std::size_t d = sequences.front().dim();
  for (const ActionSequence& s : sequences) {
    if (s.length() != len || s.dim() != d) {
      throw std::invalid_argument("diversity_std: sequences must share T and d");
    }
  }

  std::vector<double> mean(len * d, 0.0);
  for (const ActionSequence& s : sequences) {
    std::size_t k = 0;
    for (const ActionPose& f : s.frames) {
      for (double v : f) mean[k++] += v;
    }
  }
  for (double& v : mean) v /= static_cast<double>(sequences.size());

  std::vector<double> dist;
  dist.reserve(sequences.size());
  for (const ActionSequence& s : sequences) {
    double sq = 0.0;
    std::size_t k = 0;
    for (const ActionPose& f : s.frames) {
      for (double v : f) {
        double diff = v - mean[k++];
        sq += diff * diff;
      }
    }
    dist.push_back(std::sqrt(sq));
  }

  double mu = 0.0;
  for (double v : dist) mu += v;
  mu /= static_cast<double>(dist.size());
  double var = 0.0;
  for (double v : dist) var += (v - mu) * (v - mu);
  var /= static_cast<double>(dist.size());
  return std::sqrt(var);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["mmd_avg"] = mmd_avg;
  j["mmd_seq"] = mmd_seq;
  j["accuracy_real"] = {{"per_class", accuracy_real.per_class}, {"mean", accuracy_real.mean}};
  j["accuracy_generated"] = {{"per_class", accuracy_generated.per_class},
                             {"mean", accuracy_generated.mean}};
  j["diversity_generated"] = diversity_generated;
  j["diversity_real"] = diversity_real;
  j["metadata"] = {{"classes", classes},
                   {"samples_per_class", samples_per_class},
                   {"reference_len", reference_len},
                   {"seed", seed}};
  return j.dump(2);
}

}  // namespace actgen
