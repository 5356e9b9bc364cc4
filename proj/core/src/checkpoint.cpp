#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <variant>

#include "actgen/training.hpp"

// Checkpoint container: a little-endian binary stream of named sections.
//
//   "AGCK" | u32 version | u32 section_count | sections... | "AGND"
//   section: u16 name_len | name | u8 kind | payload
//   kinds: 0 tensor (u8 rank, u64 dims..., f64 data...), 1 i64, 2 f64, 3 string
//
// Reads are bounds-checked; a short file fails loudly rather than producing a
// partial state.

namespace actgen {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'C', 'K'};
constexpr char kTrailer[4] = {'A', 'G', 'N', 'D'};
constexpr std::uint32_t kVersion = 1;

using Section = std::variant<Tensor, std::int64_t, double, std::string>;

class Writer {
 public:
  void add(const std::string& name, Section s) {
    if (!sections_.emplace(name, std::move(s)).second) {
      throw std::logic_error("checkpoint: duplicate section '" + name + "'");
    }
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(sections_.size()));
    for (const auto& [name, sec] : sections_) {
      if (name.size() > UINT16_MAX) throw std::logic_error("section name too long");
      put_u16(out, static_cast<std::uint16_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      if (const Tensor* t = std::get_if<Tensor>(&sec)) {
        put_u8(out, 0);
        put_u8(out, static_cast<std::uint8_t>(t->rank()));
        for (std::size_t d : t->shape()) put_u64(out, d);
        out.write(reinterpret_cast<const char*>(t->data()),
                  static_cast<std::streamsize>(t->size() * sizeof(double)));
      } else if (const std::int64_t* i = std::get_if<std::int64_t>(&sec)) {
        put_u8(out, 1);
        put_u64(out, static_cast<std::uint64_t>(*i));
      } else if (const double* f = std::get_if<double>(&sec)) {
        put_u8(out, 2);
        std::uint64_t bits;
        std::memcpy(&bits, f, 8);
        put_u64(out, bits);
      } else {
        const std::string& s = std::get<std::string>(sec);
        put_u8(out, 3);
        put_u64(out, s.size());
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
      }
    }
    out.write(kTrailer, 4);
    if (!out) throw std::runtime_error("write failed: " + path);
  }

 private:
  static void put_u8(std::ofstream& o, std::uint8_t v) { o.write(reinterpret_cast<const char*>(&v), 1); }
  static void put_u16(std::ofstream& o, std::uint16_t v) { o.write(reinterpret_cast<const char*>(&v), 2); }
  static void put_u32(std::ofstream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
  static void put_u64(std::ofstream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }

  std::map<std::string, Section> sections_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    char magic[4];
    take(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a checkpoint file: " + path);
    std::uint32_t version = u32();
    if (version != kVersion) {
      throw std::runtime_error("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                               std::to_string(kVersion) + ")");
    }
    std::uint32_t count = u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint16_t name_len = u16();
      std::string name(name_len, '\0');
      take(name.data(), name_len);
      std::uint8_t kind = u8();
      Section sec;
      switch (kind) {
        case 0: {
          std::uint8_t rank = u8();
          if (rank == 0) throw std::runtime_error("checkpoint tensor '" + name + "' has rank 0");
          std::vector<std::size_t> shape(rank);
          for (auto& d : shape) d = static_cast<std::size_t>(u64());
          std::size_t n = shape_size(shape);
          std::vector<double> vals(n);
          take(reinterpret_cast<char*>(vals.data()), n * sizeof(double));
          sec = Tensor(std::move(shape), std::move(vals));
          break;
        }
        case 1:
          sec = static_cast<std::int64_t>(u64());
          break;
        case 2: {
          std::uint64_t bits = u64();
          double d;
          std::memcpy(&d, &bits, 8);
          sec = d;
          break;
        }
        case 3: {
          std::uint64_t len = u64();
          std::string s(static_cast<std::size_t>(len), '\0');
          take(s.data(), static_cast<std::size_t>(len));
          sec = std::move(s);
          break;
        }
        default:
          throw std::runtime_error("checkpoint section '" + name + "' has unknown kind");
      }
      sections_.emplace(std::move(name), std::move(sec));
    }
    char trailer[4];
    take(trailer, 4);
    if (std::memcmp(trailer, kTrailer, 4) != 0) throw std::runtime_error("checkpoint trailer missing (truncated?)");
    if (pos_ != buf_.size()) throw std::runtime_error("checkpoint has trailing bytes");
  }

  const Tensor& tensor(const std::string& name) const { return get<Tensor>(name); }
  std::int64_t integer(const std::string& name) const { return get<std::int64_t>(name); }
  double real(const std::string& name) const { return get<double>(name); }
  const std::string& text(const std::string& name) const { return get<std::string>(name); }
  bool has(const std::string& name) const { return sections_.count(name) > 0; }

  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, _] : sections_) {
      if (name.rfind(prefix, 0) == 0) out.push_back(name);
    }
    return out;
  }

  void mark_consumed(const std::string& name) { consumed_.insert(consumed_.end(), name); }
  std::size_t section_count() const { return sections_.size(); }

 private:
  template <typename T>
  const T& get(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) throw std::runtime_error("checkpoint is missing section '" + name + "'");
    const T* v = std::get_if<T>(&it->second);
    if (!v) throw std::runtime_error("checkpoint section '" + name + "' has the wrong type");
    return *v;
  }

  void take(char* dst, std::size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error("truncated checkpoint");
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    take(reinterpret_cast<char*>(&v), 1);
    return v;
  }
  std::uint16_t u16() {
    std::uint16_t v;
    take(reinterpret_cast<char*>(&v), 2);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    take(reinterpret_cast<char*>(&v), 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    take(reinterpret_cast<char*>(&v), 8);
    return v;
  }

  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::map<std::string, Section> sections_;
  std::vector<std::string> consumed_;
};

void add_adam(Writer& w, const std::string& prefix, const AdamState& s) {
  w.add(prefix + ".step", s.step);
  w.add(prefix + ".lr", s.config.lr);
  w.add(prefix + ".beta1", s.config.beta1);
  w.add(prefix + ".beta2", s.config.beta2);
  w.add(prefix + ".eps", s.config.eps);
  for (const auto& [name, t] : s.m) w.add(prefix + ".m." + name, t);
  for (const auto& [name, t] : s.v) w.add(prefix + ".v." + name, t);
}

AdamState read_adam(const Reader& r, const std::string& prefix) {
  AdamState s;
  s.step = r.integer(prefix + ".step");
  s.config.lr = r.real(prefix + ".lr");
  s.config.beta1 = r.real(prefix + ".beta1");
  s.config.beta2 = r.real(prefix + ".beta2");
  s.config.eps = r.real(prefix + ".eps");
  for (const std::string& name : r.names_with_prefix(prefix + ".m.")) {
    s.m.emplace(name.substr(prefix.size() + 3), r.tensor(name));
  }
  for (const std::string& name : r.names_with_prefix(prefix + ".v.")) {
    s.v.emplace(name.substr(prefix.size() + 3), r.tensor(name));
  }
  return s;
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
  Writer w;
  w.add("kind", std::string("model"));
  w.add("config", training_config_to_json(state.config));
  w.add("classes", static_cast<std::int64_t>(state.classes()));
  w.add("pose_dim", static_cast<std::int64_t>(state.pose_dim()));
  w.add("iteration", state.iteration);
  w.add("rng_state", state.rng_state);

  for (const auto& [name, t] : state.gen.named_tensors()) w.add("gen." + name, *t);
  for (const auto& [name, t] : state.cls.named_tensors()) w.add("cls." + name, *t);
  for (const auto& [name, t] : state.dis.named_tensors()) w.add("dis." + name, *t);
  add_adam(w, "opt.gen", state.opt_gen);
  add_adam(w, "opt.cls", state.opt_cls);
  add_adam(w, "opt.dis", state.opt_dis);
  w.write(path);
}

ModelState load_checkpoint(const std::string& path) {
  Reader r(path);
  if (r.text("kind") != "model") {
    throw std::runtime_error("checkpoint '" + path + "' is not a model checkpoint (kind '" +
                             r.text("kind") + "')");
  }

  ModelState state;
  state.config = training_config_from_json(r.text("config"));
  state.iteration = r.integer("iteration");
  state.rng_state = r.text("rng_state");

  const std::size_t classes = static_cast<std::size_t>(r.integer("classes"));
  const std::size_t pose_dim = static_cast<std::size_t>(r.integer("pose_dim"));

  // Shells with the right layer structure; tensors assigned from sections.
  state.gen.dims.classes = classes;
  state.gen.dims.pose_dim = pose_dim;
  state.gen.dims.noise_dim = state.config.noise_dim;
  state.gen.dims.latent_dim = state.config.latent_dim;
  state.gen.dims.lstm_hidden = state.config.lstm_hidden;
  state.gen.dims.decoder_hidden = state.config.decoder_hidden;
  state.gen.decoder.weights.resize(state.config.decoder_hidden.size() + 1);
  state.gen.decoder.biases.resize(state.config.decoder_hidden.size() + 1);
  state.cls.classes = classes;
  state.dis.classes = classes;

  for (const auto& [name, t] : state.gen.named_tensors()) *t = r.tensor("gen." + name);
  for (const auto& [name, t] : state.cls.named_tensors()) *t = r.tensor("cls." + name);
  for (const auto& [name, t] : state.dis.named_tensors()) *t = r.tensor("dis." + name);
  state.opt_gen = read_adam(r, "opt.gen");
  state.opt_cls = read_adam(r, "opt.cls");
  state.opt_dis = read_adam(r, "opt.dis");
  return state;
}

void save_decoder_checkpoint(const MlpParams& decoder, const std::string& path) {
  Writer w;
  w.add("kind", std::string("decoder"));
  w.add("layers", static_cast<std::int64_t>(decoder.weights.size()));
  std::vector<std::pair<std::string, const Tensor*>> named;
  append_named(named, "decoder", decoder);
  for (const auto& [name, t] : named) w.add(name, *t);
  w.write(path);
}

MlpParams load_decoder_checkpoint(const std::string& path) {
  Reader r(path);
  if (r.text("kind") != "decoder") {
    throw std::runtime_error("checkpoint '" + path + "' is not a decoder checkpoint");
  }
  std::size_t layers = static_cast<std::size_t>(r.integer("layers"));
  if (layers == 0) throw std::runtime_error("decoder checkpoint has no layers");
  MlpParams p;
  p.weights.resize(layers);
  p.biases.resize(layers);
  std::vector<std::pair<std::string, Tensor*>> named;
  append_named(named, "decoder", p);
  for (const auto& [name, t] : named) *t = r.tensor(name);
  return p;
}

}  // namespace actgen
