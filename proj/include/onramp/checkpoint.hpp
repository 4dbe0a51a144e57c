#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "onramp/train.hpp"

namespace onramp {

// Checkpoint container, version 1. Little-endian, no padding:
//
//   char[8]  magic "ONRMPCK\0"
//   u32      version (1)
//   u32      observation dimension
//   u32      hidden width
//   u32      reserved (0)
//   i64      steps, episodes, updates
//   4 x      parameter block: i64 n, f64[n]
//            (actor, critic, target actor, target critic)
//   2 x      Adam block: i64 t, i64 n, f64[n] first moment, f64[n] second
//            (actor, critic)
//   replay:  i64 capacity, i64 size, i64 head, i64 stride,
//            f64[size * stride]
//   rng:     i64 length, char[length] (std::mt19937_64 text state)
//   u64      FNV-1a 64 hash of every preceding byte

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'O', 'N', 'R', 'M', 'P', 'C', 'K', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArchitectureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace ckpt_detail {

class Writer {
 public:
  template <class T>
  void put(T value) {
    const auto* p = reinterpret_cast<const unsigned char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_doubles(const double* p, std::size_t n) {
    const auto* b = reinterpret_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), b, b + n * sizeof(double));
  }
  void put_vector(const Vector& v) {
    put<std::int64_t>(v.size());
    put_doubles(v.data(), static_cast<std::size_t>(v.size()));
  }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t n) : data_(data), n_(n) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  void get_doubles(double* out, std::size_t n) {
    if (n > (n_ - pos_) / sizeof(double)) throw IntegrityError("checkpoint truncated");
    std::memcpy(out, data_ + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  void get_vector(Vector& v, std::int64_t expected) {
    const auto n = get<std::int64_t>();
    if (n != expected) throw ArchitectureError("checkpoint parameter count does not match the configured network");
    v.resize(n);
    get_doubles(v.data(), static_cast<std::size_t>(n));
  }
  std::string get_string() {
    const auto n = get<std::int64_t>();
    if (n < 0) throw IntegrityError("checkpoint has a negative string length");
    need(static_cast<std::size_t>(n));
    std::string s(reinterpret_cast<const char*>(data_ + pos_), static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  bool at_end() const { return pos_ == n_; }

 private:
  void need(std::size_t k) const {
    if (k > n_ - pos_) throw IntegrityError("checkpoint truncated");
  }
  const unsigned char* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::vector<unsigned char> serialize_checkpoint(const TrainingState& st) {
  ckpt_detail::Writer w;
  for (char c : kCheckpointMagic) w.put(c);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(st.agent.actor().inputs()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(st.agent.actor().hidden()));
  w.put<std::uint32_t>(0);
  w.put<std::int64_t>(st.steps);
  w.put<std::int64_t>(st.episodes);
  w.put<std::int64_t>(st.updates);
  w.put_vector(st.agent.actor().params());
  w.put_vector(st.agent.critic().params());
  w.put_vector(st.agent.actor_target().params());
  w.put_vector(st.agent.critic_target().params());
  for (const AdamState* opt : {&st.agent.actor_optimizer(), &st.agent.critic_optimizer()}) {
    w.put<std::int64_t>(opt->t);
    w.put<std::int64_t>(opt->m.size());
    w.put_doubles(opt->m.data(), static_cast<std::size_t>(opt->m.size()));
    w.put_doubles(opt->v.data(), static_cast<std::size_t>(opt->v.size()));
  }
  w.put<std::int64_t>(st.replay.capacity());
  w.put<std::int64_t>(st.replay.size());
  w.put<std::int64_t>(st.replay.head());
  w.put<std::int64_t>(st.replay.stride());
  w.put_doubles(st.replay.storage().data(), st.replay.storage().size());
  std::ostringstream rng_text;
  rng_text << st.rng;
  const std::string rs = rng_text.str();
  w.put<std::int64_t>(static_cast<std::int64_t>(rs.size()));
  for (char c : rs) w.put(c);
  const std::uint64_t hash = fnv1a64(w.bytes().data(), w.bytes().size());
  w.put(hash);
  return std::move(w.bytes());
}

/// Restores a training state. The agent block of `cfg` supplies the
/// architecture and hyperparameters; a network-shape mismatch raises
/// ArchitectureError, any corruption raises IntegrityError.
inline TrainingState deserialize_checkpoint(const std::vector<unsigned char>& bytes, const DdpgConfig& cfg) {
  constexpr std::size_t kMin = 8 + 4 * 4 + 3 * 8 + 8;
  if (bytes.size() < kMin) throw IntegrityError("checkpoint too short");
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a64(bytes.data(), bytes.size() - 8) != stored) throw IntegrityError("checkpoint checksum mismatch");

  ckpt_detail::Reader r(bytes.data(), bytes.size() - 8);
  for (char c : kCheckpointMagic) {
    if (r.get<char>() != c) throw IntegrityError("not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IntegrityError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto obs_dim = r.get<std::uint32_t>();
  const auto hidden = r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  if (obs_dim != static_cast<std::uint32_t>(kObsDim) || hidden != static_cast<std::uint32_t>(cfg.hidden)) {
    throw ArchitectureError("checkpoint architecture (obs " + std::to_string(obs_dim) + ", hidden " +
                            std::to_string(hidden) + ") does not match config (obs " + std::to_string(kObsDim) +
                            ", hidden " + std::to_string(cfg.hidden) + ")");
  }
  TrainingState st(cfg);
  st.steps = r.get<std::int64_t>();
  st.episodes = r.get<std::int64_t>();
  st.updates = r.get<std::int64_t>();
  r.get_vector(st.agent.actor().params(), st.agent.actor().size());
  r.get_vector(st.agent.critic().params(), st.agent.critic().size());
  r.get_vector(st.agent.actor_target().params(), st.agent.actor_target().size());
  r.get_vector(st.agent.critic_target().params(), st.agent.critic_target().size());
  for (AdamState* opt : {&st.agent.actor_optimizer(), &st.agent.critic_optimizer()}) {
    opt->t = r.get<std::int64_t>();
    const auto n = r.get<std::int64_t>();
    if (n != opt->m.size()) throw ArchitectureError("checkpoint optimizer size does not match the network");
    r.get_doubles(opt->m.data(), static_cast<std::size_t>(n));
    r.get_doubles(opt->v.data(), static_cast<std::size_t>(n));
  }
  const auto capacity = r.get<std::int64_t>();
  const auto size = r.get<std::int64_t>();
  const auto head = r.get<std::int64_t>();
  const auto stride = r.get<std::int64_t>();
  if (capacity <= 0 || size < 0 || size > capacity || stride != 2 * kObsDim + 3) {
    throw IntegrityError("checkpoint replay header is inconsistent");
  }
  std::vector<double> data(static_cast<std::size_t>(size * stride));
  r.get_doubles(data.data(), data.size());
  st.replay = ReplayBuffer(capacity, kObsDim);
  try {
    st.replay.restore(std::move(data), size, head);
  } catch (const std::invalid_argument& e) {
    throw IntegrityError(e.what());
  }
  std::istringstream rng_text(r.get_string());
  rng_text >> st.rng;
  if (rng_text.fail()) throw IntegrityError("checkpoint RNG state is unreadable");
  if (!r.at_end()) throw IntegrityError("checkpoint has trailing bytes");
  return st;
}

inline void save_checkpoint(const TrainingState& st, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(st);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline TrainingState load_checkpoint(const std::filesystem::path& path, const DdpgConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open checkpoint '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, cfg);
}

}  // namespace onramp
