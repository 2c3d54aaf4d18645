#include "pwlu/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "pwlu/error.hpp"

namespace pwlu::nn {

namespace {

constexpr std::uint32_t kTrailer = 0x21444E45;  // "END!" little-endian
// Sanity bound on counts read from a file before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(b[i], b[sizeof(T) - 1 - i]);
    }
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u8(std::uint8_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    for (double d : v) f64(d);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  // Counts read from the file are checked against the bytes left in the
  // stream (when it is seekable) so corrupt files fail before allocating.
  explicit Reader(std::istream& in) : in_(in) {
    const auto here = in_.tellg();
    if (here != std::streampos(-1) && in_.seekg(0, std::ios::end)) {
      const auto end = in_.tellg();
      in_.seekg(here);
      if (end >= here) end_ = static_cast<std::uint64_t>(end);
    }
    in_.clear();
  }

  std::uint64_t remaining() {
    const auto here = in_.tellg();
    if (here == std::streampos(-1)) return 0;
    const auto pos = static_cast<std::uint64_t>(here);
    return end_ > pos ? end_ - pos : 0;
  }

  template <typename T>
  T get() {
    T v;
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof(T))) {
      throw Error(ErrorCode::kTruncated, "checkpoint ends unexpectedly");
    }
    return to_little(v);
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  std::uint64_t count(const char* what) {
    const std::uint64_t n = u64();
    if (n > kMaxElements) {
      throw Error(ErrorCode::kFormat,
                  std::string("implausible ") + what + " count in checkpoint");
    }
    return n;
  }
  // A count of f64 values that must still be present in the stream.
  std::uint64_t f64_count(const char* what) {
    const std::uint64_t n = count(what);
    if (n > remaining() / sizeof(double)) {
      throw Error(ErrorCode::kTruncated, std::string("checkpoint too short for ") +
                                             what + " of " + std::to_string(n));
    }
    return n;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) {
      throw Error(ErrorCode::kFormat, "implausible string length");
    }
    std::string s(n, '\0');
    if (n > 0 && !in_.read(s.data(), n)) {
      throw Error(ErrorCode::kTruncated, "checkpoint ends inside a string");
    }
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(f64_count("array"));
    for (double& d : v) d = f64();
    return v;
  }

 private:
  std::istream& in_;
  std::uint64_t end_ = UINT64_MAX;
};

// Lower bound on the f64 values stored for a layer manifest entry, or
// UINT64_MAX when a dimension is implausible or the product overflows.
std::uint64_t stored_values(const LayerSpec& spec) {
  constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 24;
  std::uint64_t total = 1;
  const auto mul = [&](std::uint64_t v) {
    if (v > kMaxDim || __builtin_mul_overflow(total, v, &total)) {
      total = UINT64_MAX;
    }
  };
  const auto& d = spec.dims;
  if (spec.kind == "dense" && d.size() == 2) {
    mul(d[0] + 1);  // weights plus bias per output
    mul(d[1]);
  } else if (spec.kind == "conv2d" && d.size() == 5) {
    mul(d[0]);
    mul(d[1]);
    mul(d[2]);
    mul(d[2]);
  } else if (spec.kind == "pwlu" && d.size() == 3) {
    mul(d[0] ? d[1] : 1);
    mul(d[2] + 5);
  } else {
    return 0;  // no parameters, or rejected by make_layer
  }
  return total;
}

void write_schedule(Writer& w, const TrainSchedule& s) {
  w.u64(s.total_iterations);
  w.u64(s.realign_iteration);
  w.f64(s.base_lr);
  w.f64(s.momentum);
  w.f64(s.weight_decay);
  w.f64(s.warmup_fraction);
  w.f64(s.pwlu_lr_multiplier);
  w.u64(s.batch_size);
  w.u64(s.seed);
}

TrainSchedule read_schedule(Reader& r) {
  TrainSchedule s;
  s.total_iterations = r.u64();
  s.realign_iteration = r.u64();
  s.base_lr = r.f64();
  s.momentum = r.f64();
  s.weight_decay = r.f64();
  s.warmup_fraction = r.f64();
  s.pwlu_lr_multiplier = r.f64();
  s.batch_size = r.u64();
  s.seed = r.u64();
  return s;
}

void write_pwlu_state(Writer& w, const PwluLayer& layer) {
  w.u8(layer.frozen());
  w.u8(layer.collecting());
  for (std::size_t u = 0; u < layer.unit_count(); ++u) {
    const RunningStats& s = layer.stats()[u];
    w.f64(s.mean);
    w.f64(s.std);
    w.u64(s.update_count);
    const Reservoir& res = layer.reservoirs()[u];
    w.u64(res.seed());
    w.u64(res.capacity());
    w.u64(res.seen());
    w.doubles(res.samples());
  }
}

void read_pwlu_state(Reader& r, PwluLayer& layer) {
  layer.set_frozen(r.u8() != 0);
  layer.set_collecting(r.u8() != 0);
  for (std::size_t u = 0; u < layer.unit_count(); ++u) {
    RunningStats s;
    s.mean = r.f64();
    s.std = r.f64();
    s.update_count = r.u64();
    layer.set_stats(u, s);
    const std::uint64_t seed = r.u64();
    const std::uint64_t capacity = r.count("reservoir capacity");
    const std::uint64_t seen = r.u64();
    Reservoir res(seed, capacity);
    res.restore(seen, r.doubles());
    layer.reservoir(u) = std::move(res);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, Model& model,
                      const TrainerState& state) {
  Writer w(out);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_schedule(w, state.schedule);
  w.u64(state.iteration);
  w.u8(state.realigned);
  w.f64(state.accumulator.loss_sum);
  w.u64(state.accumulator.correct);
  w.u64(state.accumulator.seen);

  w.u32(static_cast<std::uint32_t>(model.size()));
  for (std::size_t li = 0; li < model.size(); ++li) {
    Layer& layer = model.layer(li);
    const LayerSpec spec = layer.spec();
    w.str(spec.kind);
    w.str(spec.name);
    w.u32(static_cast<std::uint32_t>(spec.dims.size()));
    for (std::uint64_t d : spec.dims) w.u64(d);
    const auto params = layer.params();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const ParamRef& p : params) {
      w.str(p.name);
      w.doubles(p.value);
    }
    if (const auto* pw = dynamic_cast<const PwluLayer*>(&layer)) {
      write_pwlu_state(w, *pw);
    }
  }

  w.u32(static_cast<std::uint32_t>(state.velocities.size()));
  for (const auto& v : state.velocities) w.doubles(v);

  w.u32(static_cast<std::uint32_t>(state.metrics.size()));
  for (const EpochMetrics& m : state.metrics) {
    w.u64(m.epoch);
    w.u64(m.iteration);
    w.f64(m.lr);
    w.f64(m.train_loss);
    w.f64(m.train_accuracy);
    w.f64(m.test_loss);
    w.f64(m.test_accuracy);
  }
  w.u32(kTrailer);
  if (!out) throw Error(ErrorCode::kIo, "failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a PWLU checkpoint");
  }
  Reader r(in);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat,
                "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.state.schedule = read_schedule(r);
  ck.state.iteration = r.u64();
  ck.state.realigned = r.u8() != 0;
  ck.state.accumulator.loss_sum = r.f64();
  ck.state.accumulator.correct = r.u64();
  ck.state.accumulator.seen = r.u64();

  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    LayerSpec spec;
    spec.kind = r.str();
    spec.name = r.str();
    const std::uint32_t n_dims = r.u32();
    if (n_dims > 16) throw Error(ErrorCode::kFormat, "too many layer dims");
    for (std::uint32_t d = 0; d < n_dims; ++d) spec.dims.push_back(r.u64());
    if (stored_values(spec) > r.remaining() / sizeof(double)) {
      throw Error(ErrorCode::kTruncated,
                  "checkpoint too short for layer '" + spec.name + "'");
    }
    auto layer = make_layer(spec);
    auto params = layer->params();
    const std::uint32_t n_params = r.u32();
    if (n_params != params.size()) {
      throw Error(ErrorCode::kFormat, "layer '" + spec.name + "' stores " +
                                          std::to_string(n_params) +
                                          " parameter arrays, expected " +
                                          std::to_string(params.size()));
    }
    for (ParamRef& p : params) {
      const std::string name = r.str();
      const auto values = r.doubles();
      if (name != p.name || values.size() != p.value.size()) {
        throw Error(ErrorCode::kFormat,
                    "parameter '" + name + "' does not match '" + p.name + "'");
      }
      std::copy(values.begin(), values.end(), p.value.begin());
    }
    if (auto* pw = dynamic_cast<PwluLayer*>(layer.get())) {
      read_pwlu_state(r, *pw);
      for (std::size_t u = 0; u < pw->unit_count(); ++u) {
        pw->set_unit(u, pw->unit(u));  // validates and drops fused caches
      }
    }
    ck.model.add(std::move(layer));
  }

  const std::uint32_t n_vel = r.u32();
  for (std::uint32_t i = 0; i < n_vel; ++i) {
    ck.state.velocities.push_back(r.doubles());
  }
  const std::uint32_t n_metrics = r.u32();
  for (std::uint32_t i = 0; i < n_metrics; ++i) {
    EpochMetrics m;
    m.epoch = r.u64();
    m.iteration = r.u64();
    m.lr = r.f64();
    m.train_loss = r.f64();
    m.train_accuracy = r.f64();
    m.test_loss = r.f64();
    m.test_accuracy = r.f64();
    ck.state.metrics.push_back(m);
  }
  if (r.u32() != kTrailer) {
    throw Error(ErrorCode::kFormat, "checkpoint trailer missing");
  }
  return ck;
}

void save_checkpoint(const std::string& path, Model& model,
                     const TrainerState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  write_checkpoint(out, model, state);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace pwlu::nn
