#include "liftpose/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'L', 'P', 'C', 'K', 'P', 'T', '\0', '\n'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void doubles(const Matrix& m) {
    buf_.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    auto n = pod<std::uint64_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void doubles(Matrix& m) {
    const std::size_t n = sizeof(double) * static_cast<std::size_t>(m.size());
    need(n);
    std::memcpy(m.data(), buf_.data() + pos_, n);
    pos_ += n;
  }
  void expect(const char* p, std::size_t n, const char* what) {
    need(n);
    if (std::memcmp(buf_.data() + pos_, p, n) != 0) {
      throw FormatError(std::string("checkpoint: bad ") + what);
    }
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint: truncated file");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(ck.header.version);
  w.str(ck.header.representation);
  w.pod<std::uint64_t>(ck.header.seed);
  w.pod<std::int64_t>(ck.header.epoch);
  w.str(ck.header.config_hash);
  w.str(ck.header.config_json);

  w.pod<std::uint64_t>(ck.stores.size());
  for (const auto& [store_name, store] : ck.stores) {
    w.str(store_name);
    w.pod<std::int64_t>(store.step());
    w.pod<std::uint64_t>(store.entries().size());
    for (const auto& [name, p] : store.entries()) {
      w.str(name);
      w.pod<std::uint8_t>(p.trainable ? 1 : 0);
      w.pod<std::uint64_t>(static_cast<std::uint64_t>(p.value.rows()));
      w.pod<std::uint64_t>(static_cast<std::uint64_t>(p.value.cols()));
      w.doubles(p.value);
      w.doubles(p.m);
      w.doubles(p.v);
    }
  }

  w.pod<std::uint64_t>(ck.rng_states.size());
  for (const auto& [name, state] : ck.rng_states) {
    w.str(name);
    w.str(state);
  }
  const std::uint64_t checksum = fnv1a(w.bytes());
  w.pod<std::uint64_t>(checksum);
  w.raw(kTrailer, sizeof(kTrailer));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t) + sizeof(kTrailer)) {
    throw FormatError("checkpoint: truncated file " + path.string());
  }

  Reader r(buf);
  r.expect(kMagic, sizeof(kMagic), "magic");
  Checkpoint ck;
  ck.header.version = r.pod<std::uint32_t>();
  if (ck.header.version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(ck.header.version));
  }
  ck.header.representation = r.str();
  ck.header.seed = r.pod<std::uint64_t>();
  ck.header.epoch = r.pod<std::int64_t>();
  ck.header.config_hash = r.str();
  ck.header.config_json = r.str();

  const auto n_stores = r.pod<std::uint64_t>();
  for (std::uint64_t s = 0; s < n_stores; ++s) {
    std::string store_name = r.str();
    ParamStore store;
    store.set_step(r.pod<std::int64_t>());
    const auto n_params = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_params; ++i) {
      std::string name = r.str();
      const bool trainable = r.pod<std::uint8_t>() != 0;
      const auto rows = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
      const auto cols = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
      Matrix value(rows, cols);
      r.doubles(value);
      store.add(name, std::move(value), trainable);
      Parameter& p = store.at(name);
      r.doubles(p.m);
      r.doubles(p.v);
    }
    ck.stores.emplace(std::move(store_name), std::move(store));
  }

  const auto n_rng = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_rng; ++i) {
    std::string name = r.str();
    ck.rng_states.emplace(std::move(name), r.str());
  }
  const std::size_t body = r.pos();
  const auto checksum = r.pod<std::uint64_t>();
  if (checksum != fnv1a(buf.substr(0, body))) throw FormatError("checkpoint: checksum mismatch");
  r.expect(kTrailer, sizeof(kTrailer), "trailer");
  return ck;
}

}  // namespace liftpose
