#include "actgen/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace actgen {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void line_error(std::size_t line_no, const std::string& msg) {
  throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + msg);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         std::size_t line_no) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) line_error(line_no, "unknown key '" + key + "'");
  }
}

}  // namespace

LabelDistribution::LabelDistribution(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("label distribution: empty weight vector");
  double s = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("label distribution: weights must be finite and non-negative");
    }
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-6) {
    throw std::invalid_argument("label distribution: weights sum to " + std::to_string(s) +
                                ", expected 1");
  }
}

LabelDistribution LabelDistribution::one_hot(std::size_t classes, std::size_t index) {
  if (index >= classes) {
    throw std::invalid_argument("one_hot: index " + std::to_string(index) + " >= classes " +
                                std::to_string(classes));
  }
  std::vector<double> w(classes, 0.0);
  w[index] = 1.0;
  return LabelDistribution(std::move(w));
}

bool LabelDistribution::is_one_hot() const {
  for (double w : weights_) {
    if (w != 0.0 && w != 1.0) return false;
  }
  return true;
}

std::size_t LabelDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
}

Tensor ActionSequence::as_tensor() const { return Tensor::from_rows(frames); }

ActionSequence ActionSequence::from_tensor(const Tensor& t) {
  ActionSequence seq;
  seq.frames.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) seq.frames.push_back(t.row_vector(r));
  seq.validate();
  return seq;
}

void ActionSequence::validate() const {
  if (frames.size() < 2) {
    throw std::invalid_argument("action sequence must have at least 2 frames, got " +
                                std::to_string(frames.size()));
  }
  std::size_t d = frames.front().size();
  if (d == 0) throw std::invalid_argument("action sequence has zero-dimensional frames");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != d) {
      throw std::invalid_argument("frame " + std::to_string(t) + " has dimension " +
                                  std::to_string(frames[t].size()) + ", expected " + std::to_string(d));
    }
    for (double v : frames[t]) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite coordinate in frame " + std::to_string(t));
    }
  }
}

NormStats NormStats::identity(std::size_t dim) {
  NormStats s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 1.0);
  return s;
}

bool NormStats::is_identity() const {
  for (double m : mean) {
    if (m != 0.0) return false;
  }
  for (double s : scale) {
    if (s != 1.0) return false;
  }
  return true;
}

void Dataset::validate() const {
  if (classes == 0) throw std::invalid_argument("dataset: classes must be positive");
  if (dim == 0) throw std::invalid_argument("dataset: dim must be positive");
  if (class_names.size() != classes) {
    throw std::invalid_argument("dataset: expected " + std::to_string(classes) + " class names, got " +
                                std::to_string(class_names.size()));
  }
  if (norm.mean.size() != dim || norm.scale.size() != dim) {
    throw std::invalid_argument("dataset: normalization stats dimension mismatch");
  }
  for (const DatasetRecord& r : records) {
    r.sequence.validate();
    if (r.sequence.dim() != dim) {
      throw std::invalid_argument("dataset: record dimension " + std::to_string(r.sequence.dim()) +
                                  " != dataset dim " + std::to_string(dim));
    }
    if (r.label.classes() != classes) {
      throw std::invalid_argument("dataset: record label has " + std::to_string(r.label.classes()) +
                                  " classes, dataset has " + std::to_string(classes));
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes, 0);
  for (const DatasetRecord& r : records) ++counts[r.label.argmax()];
  return counts;
}

std::vector<std::size_t> Dataset::indices_of_class(std::size_t cls) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label.argmax() == cls) idx.push_back(i);
  }
  return idx;
}

std::vector<ClassSpec> default_class_specs(std::size_t classes) {
  if (classes == 0) throw std::invalid_argument("default_class_specs: classes must be positive");
  std::vector<ClassSpec> specs(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    specs[c].frequency = 1.0 + static_cast<double>(c);
    specs[c].phase = 0.6 * static_cast<double>(c);
    specs[c].amplitude = 1.0 - 0.08 * static_cast<double>(c % 5);
  }
  return specs;
}

ActionPose synthetic_clean_frame(const ClassSpec& spec, std::size_t t, std::size_t seq_len,
                                 std::size_t dim) {
  ActionPose pose(dim);
  const double base = 2.0 * std::numbers::pi * spec.frequency * static_cast<double>(t) /
                      static_cast<double>(seq_len);
  for (std::size_t p = 0; p < dim / 2; ++p) {
    const double phase = spec.phase + 0.8 * static_cast<double>(p);
    const double amp = spec.amplitude / (1.0 + 0.35 * static_cast<double>(p));
    pose[2 * p] = amp * std::cos(base + phase);
    pose[2 * p + 1] = amp * std::sin(base + phase);
  }
  return pose;
}

Dataset synthesize_dataset(const std::vector<ClassSpec>& class_specs, std::size_t sequences_per_class,
                           std::size_t seq_len, std::size_t dim, double noise_scale,
                           std::uint64_t seed) {
  if (class_specs.empty()) throw std::invalid_argument("synthesize_dataset: no class specs");
  if (sequences_per_class == 0) throw std::invalid_argument("synthesize_dataset: sequences_per_class must be positive");
  if (seq_len < 2) throw std::invalid_argument("synthesize_dataset: seq_len must be >= 2");
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("synthesize_dataset: dim must be positive and even (harmonic pairs)");
  }
  if (noise_scale < 0.0 || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("synthesize_dataset: noise_scale must be finite and >= 0");
  }
  for (const ClassSpec& s : class_specs) {
    if (!std::isfinite(s.frequency) || !std::isfinite(s.phase) || !std::isfinite(s.amplitude)) {
      throw std::invalid_argument("synthesize_dataset: non-finite class spec");
    }
  }

  Dataset ds;
  ds.classes = class_specs.size();
  ds.dim = dim;
  ds.norm = NormStats::identity(dim);
  for (std::size_t c = 0; c < ds.classes; ++c) ds.class_names.push_back("class" + std::to_string(c));

  Rng rng(seed);
  for (std::size_t c = 0; c < ds.classes; ++c) {
    for (std::size_t s = 0; s < sequences_per_class; ++s) {
      ActionSequence seq;
      seq.frames.reserve(seq_len);
      for (std::size_t t = 0; t < seq_len; ++t) {
        ActionPose pose = synthetic_clean_frame(class_specs[c], t, seq_len, dim);
        if (noise_scale > 0.0) {
          for (double& v : pose) v += noise_scale * rng.normal();
        }
        seq.frames.push_back(std::move(pose));
      }
      ds.records.push_back({std::move(seq), LabelDistribution::one_hot(ds.classes, c)});
    }
  }
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw std::runtime_error("dataset file is empty: " + path);
  ++line_no;

  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    line_error(line_no, std::string("header parse error: ") + e.what());
  }
  reject_unknown_keys(header, {"version", "classes", "dim", "names", "norm"}, line_no);
  if (!header.contains("version") || !header["version"].is_number_integer() ||
      header["version"].get<int>() != 1) {
    line_error(line_no, "unsupported or missing version (expected 1)");
  }
  if (!header.contains("classes") || !header["classes"].is_number_unsigned() ||
      header["classes"].get<std::size_t>() == 0) {
    line_error(line_no, "missing or invalid 'classes'");
  }
  if (!header.contains("dim") || !header["dim"].is_number_unsigned() ||
      header["dim"].get<std::size_t>() == 0) {
    line_error(line_no, "missing or invalid 'dim'");
  }
  if (!header.contains("names") || !header["names"].is_array()) {
    line_error(line_no, "missing or invalid 'names'");
  }

  Dataset ds;
  ds.classes = header["classes"].get<std::size_t>();
  ds.dim = header["dim"].get<std::size_t>();
  for (const auto& n : header["names"]) {
    if (!n.is_string()) line_error(line_no, "'names' entries must be strings");
    ds.class_names.push_back(n.get<std::string>());
  }
  if (ds.class_names.size() != ds.classes) {
    line_error(line_no, "'names' has " + std::to_string(ds.class_names.size()) + " entries, expected " +
                            std::to_string(ds.classes));
  }
  ds.norm = NormStats::identity(ds.dim);
  if (header.contains("norm")) {
    const json& nj = header["norm"];
    reject_unknown_keys(nj, {"mean", "scale"}, line_no);
    if (!nj.contains("mean") || !nj.contains("scale")) line_error(line_no, "'norm' needs 'mean' and 'scale'");
    ds.norm.mean = nj["mean"].get<std::vector<double>>();
    ds.norm.scale = nj["scale"].get<std::vector<double>>();
    if (ds.norm.mean.size() != ds.dim || ds.norm.scale.size() != ds.dim) {
      line_error(line_no, "'norm' stats dimension mismatch");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("parse error: ") + e.what());
    }
    reject_unknown_keys(rec, {"label", "frames", "mix"}, line_no);
    if (!rec.contains("label") || !rec["label"].is_number_integer()) {
      line_error(line_no, "missing or invalid 'label'");
    }
    long long raw_label = rec["label"].get<long long>();
    if (raw_label < 0 || static_cast<std::size_t>(raw_label) >= ds.classes) {
      line_error(line_no, "label " + std::to_string(raw_label) + " out of range [0, " +
                              std::to_string(ds.classes) + ")");
    }
    if (!rec.contains("frames") || !rec["frames"].is_array() || rec["frames"].empty()) {
      line_error(line_no, "missing or invalid 'frames'");
    }

    ActionSequence seq;
    for (const auto& fj : rec["frames"]) {
      if (!fj.is_array()) line_error(line_no, "'frames' entries must be arrays");
      ActionPose pose;
      for (const auto& vj : fj) {
        if (!vj.is_number()) line_error(line_no, "frame coordinates must be numbers");
        pose.push_back(vj.get<double>());
      }
      if (pose.size() != ds.dim) {
        line_error(line_no, "frame has dimension " + std::to_string(pose.size()) + ", expected " +
                                std::to_string(ds.dim));
      }
      seq.frames.push_back(std::move(pose));
    }
    if (seq.frames.size() < 2) line_error(line_no, "sequence needs at least 2 frames");
    try {
      seq.validate();
    } catch (const std::exception& e) {
      line_error(line_no, e.what());
    }

    LabelDistribution label = LabelDistribution::one_hot(ds.classes, static_cast<std::size_t>(raw_label));
    if (rec.contains("mix")) {
      std::vector<double> w;
      try {
        w = rec["mix"].get<std::vector<double>>();
        label = LabelDistribution(std::move(w));
      } catch (const std::exception& e) {
        line_error(line_no, std::string("invalid 'mix': ") + e.what());
      }
      if (label.classes() != ds.classes) line_error(line_no, "'mix' length != classes");
    }
    ds.records.push_back({std::move(seq), std::move(label)});
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json header;
  header["version"] = 1;
  header["classes"] = dataset.classes;
  header["dim"] = dataset.dim;
  header["names"] = dataset.class_names;
  if (!dataset.norm.is_identity()) {
    header["norm"] = {{"mean", dataset.norm.mean}, {"scale", dataset.norm.scale}};
  }
  out << header.dump() << '\n';

  for (const DatasetRecord& r : dataset.records) {
    json rec;
    rec["label"] = r.label.argmax();
    rec["frames"] = r.sequence.frames;
    if (!r.label.is_one_hot()) rec["mix"] = r.label.weights();
    out << rec.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: fraction must be in (0, 1)");
  }
  dataset.validate();

  Dataset train = dataset, test = dataset;
  train.records.clear();
  test.records.clear();

  Rng rng(seed);
  for (std::size_t c = 0; c < dataset.classes; ++c) {
    std::vector<std::size_t> idx = dataset.indices_of_class(c);
    if (idx.size() < 2) {
      throw std::invalid_argument("split_dataset: class " + std::to_string(c) + " has " +
                                  std::to_string(idx.size()) + " records, need at least 2");
    }
    // Fisher-Yates with the deterministic rng.
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      std::size_t j = rng.index(i + 1);
      std::swap(idx[i], idx[j]);
    }
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_train ? train : test).records.push_back(dataset.records[idx[i]]);
    }
  }
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, NormStats> normalize(const Dataset& dataset) {
  dataset.validate();
  if (dataset.records.empty()) throw std::invalid_argument("normalize: empty dataset");

  const std::size_t d = dataset.dim;
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  std::size_t n = 0;
  for (const DatasetRecord& r : dataset.records) {
    for (const ActionPose& f : r.sequence.frames) {
      for (std::size_t k = 0; k < d; ++k) mean[k] += f[k];
      ++n;
    }
  }
  for (std::size_t k = 0; k < d; ++k) mean[k] /= static_cast<double>(n);
  for (const DatasetRecord& r : dataset.records) {
    for (const ActionPose& f : r.sequence.frames) {
      for (std::size_t k = 0; k < d; ++k) {
        double dv = f[k] - mean[k];
        var[k] += dv * dv;
      }
    }
  }

  NormStats stats;
  stats.mean = mean;
  stats.scale.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    stats.scale[k] = std::max(std::sqrt(var[k] / static_cast<double>(n)), 1e-6);
  }

  Dataset out = dataset;
  for (DatasetRecord& r : out.records) {
    for (ActionPose& f : r.sequence.frames) {
      for (std::size_t k = 0; k < d; ++k) f[k] = (f[k] - stats.mean[k]) / stats.scale[k];
    }
  }
  out.norm = stats;
  return {std::move(out), std::move(stats)};
}

ActionPose denormalize(const ActionPose& pose, const NormStats& stats) {
  if (pose.size() != stats.mean.size() || pose.size() != stats.scale.size()) {
    throw std::invalid_argument("denormalize: dimension mismatch");
  }
  ActionPose out(pose.size());
  for (std::size_t k = 0; k < pose.size(); ++k) out[k] = pose[k] * stats.scale[k] + stats.mean[k];
  return out;
}

std::vector<DatasetRecord> minibatch(const Dataset& dataset, std::size_t m, Rng& rng) {
  if (dataset.records.empty()) throw std::invalid_argument("minibatch: empty dataset");
  if (m == 0) throw std::invalid_argument("minibatch: m must be positive");
  std::vector<DatasetRecord> batch;
  batch.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    batch.push_back(dataset.records[rng.index(dataset.records.size())]);
  }
  return batch;
}

std::vector<DatasetRecord> minibatch(const Dataset& dataset, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  return minibatch(dataset, m, rng);
}

ActionSequence resample_sequence(const ActionSequence& sequence, std::size_t target_len) {
  sequence.validate();
  if (target_len < 2) throw std::invalid_argument("resample_sequence: target length must be >= 2");
  if (sequence.length() == target_len) return sequence;

  const std::size_t src_len = sequence.length();
  const std::size_t d = sequence.dim();
  ActionSequence out;
  out.frames.reserve(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    double pos = static_cast<double>(i) * static_cast<double>(src_len - 1) /
                 static_cast<double>(target_len - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, src_len - 1);
    double w = pos - static_cast<double>(lo);
    ActionPose f(d);
    for (std::size_t k = 0; k < d; ++k) {
      f[k] = (1.0 - w) * sequence.frames[lo][k] + w * sequence.frames[hi][k];
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace actgen
