#include "eigenspline/cache_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "eigenspline/error.hpp"

namespace eigenspline {

namespace {

constexpr char kMagic[4] = {'E', 'I', 'G', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

class Writer {
 public:
  explicit Writer(std::vector<std::byte>& out) : out_(out) {}

  template <class U>
  void put_uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
  }
  void put_f64(double d) { put_uint(std::bit_cast<std::uint64_t>(d)); }

 private:
  std::vector<std::byte>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  template <class U>
  U get_uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(std::to_integer<unsigned>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > in_.size()) throw CorruptionError("cache: unexpected end of data");
  }
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::byte> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks for very large caches.
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::byte> save_cache(const EigenSystemCache& cache) {
  const auto n = static_cast<std::uint64_t>(cache.size());
  std::vector<std::byte> out;
  out.reserve(kHeaderBytes + 8 * (2 * n + n * n) + 4);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  Writer w(out);
  w.put_uint(kCacheFormatVersion);
  w.put_uint(static_cast<std::uint32_t>(cache.kernel));
  w.put_uint(n);
  for (double s : cache.s) w.put_f64(s);
  for (Eigen::Index k = 0; k < cache.gamma.size(); ++k) w.put_f64(cache.gamma(k));
  for (Eigen::Index i = 0; i < cache.v.size(); ++i) w.put_f64(cache.v.data()[i]);
  w.put_uint(crc32_of(out));
  return out;
}

std::uint32_t cache_checksum(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderBytes + 4) throw CorruptionError("cache: truncated");
  Reader r(bytes.subspan(bytes.size() - 4));
  return r.get_uint<std::uint32_t>();
}

EigenSystemCache load_cache(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("cache: bad magic (expected \"EIGC\")");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get_uint<std::uint32_t>();
  if (version != kCacheFormatVersion) {
    throw FormatError("cache: unsupported format version " + std::to_string(version));
  }
  const auto kernel_id = r.get_uint<std::uint32_t>();
  if (kernel_id != static_cast<std::uint32_t>(KernelKind::cubic) &&
      kernel_id != static_cast<std::uint32_t>(KernelKind::periodic)) {
    throw FormatError("cache: unknown kernel id " + std::to_string(kernel_id));
  }
  const auto n = r.get_uint<std::uint64_t>();
  // Guard the size arithmetic before trusting n.
  if (n < 2 || n > (1u << 20) ||
      bytes.size() != kHeaderBytes + 8 * (2 * n + n * n) + 4) {
    throw CorruptionError("cache: size " + std::to_string(bytes.size()) +
                          " bytes inconsistent with N = " + std::to_string(n));
  }
  if (crc32_of(bytes.first(bytes.size() - 4)) != cache_checksum(bytes)) {
    throw CorruptionError("cache: CRC-32 mismatch");
  }

  EigenSystemCache cache;
  cache.kernel = static_cast<KernelKind>(kernel_id);
  const auto N = static_cast<Eigen::Index>(n);
  cache.s.resize(n);
  for (auto& s : cache.s) s = r.get_f64();
  cache.gamma.resize(N);
  for (Eigen::Index k = 0; k < N; ++k) cache.gamma(k) = r.get_f64();
  cache.v.resize(N, N);
  for (Eigen::Index i = 0; i < N * N; ++i) cache.v.data()[i] = r.get_f64();
  return cache;
}

void write_cache_file(const EigenSystemCache& cache, const std::filesystem::path& path) {
  const auto bytes = save_cache(cache);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to " + path.string() + " failed");
}

EigenSystemCache read_cache_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open cache file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return load_cache(bytes);
}

std::string eigenvalue_csv(const EigenSystemCache& cache) {
  std::ostringstream os;
  os.precision(17);
  os << "k,eigenvalue\n";
  for (int k = 0; k < cache.size(); ++k) os << (k + 1) << ',' << cache.eigenvalue(k) << '\n';
  return os.str();
}

}  // namespace eigenspline
