#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"

namespace sim2real::distmetrics {
namespace {

static_assert(std::endian::native == std::endian::little,
              "FVEC I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'R', 'F', 'V'};
constexpr std::size_t kHeaderSize = 16;

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

FeatureSet ParseFvec(std::span<const unsigned char> bytes, const std::string& name) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Fail(ErrorKind::kFormat, name + ": not an FVEC file (bad magic)");
  }
  const std::uint32_t version = ReadU32(bytes.data() + 4);
  if (version != kFvecVersion) {
    Fail(ErrorKind::kFormat, name + ": unsupported FVEC version " + std::to_string(version));
  }
  FeatureSet fs;
  fs.count = ReadU32(bytes.data() + 8);
  fs.dim = ReadU32(bytes.data() + 12);
  const std::size_t expected = kHeaderSize + fs.count * fs.dim * sizeof(float);
  if (bytes.size() != expected) {
    Fail(ErrorKind::kFormat, name + ": FVEC payload size " +
                                 std::to_string(bytes.size() - kHeaderSize) +
                                 " bytes, header declares " + std::to_string(fs.count) +
                                 "x" + std::to_string(fs.dim));
  }
  fs.data.resize(fs.count * fs.dim);
  std::memcpy(fs.data.data(), bytes.data() + kHeaderSize, fs.data.size() * sizeof(float));
  for (std::size_t i = 0; i < fs.data.size(); ++i) {
    if (!std::isfinite(fs.data[i])) {
      Fail(ErrorKind::kData, name + ": non-finite value at row " +
                                 std::to_string(i / std::max<std::size_t>(fs.dim, 1)));
    }
  }
  return fs;
}

std::vector<unsigned char> SerializeFvec(const FeatureSet& fs) {
  if (fs.data.size() != fs.count * fs.dim) {
    Fail(ErrorKind::kInvalidArgument, "feature set data length does not match count x dim");
  }
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  PutU32(out, kFvecVersion);
  PutU32(out, static_cast<std::uint32_t>(fs.count));
  PutU32(out, static_cast<std::uint32_t>(fs.dim));
  const auto* p = reinterpret_cast<const unsigned char*>(fs.data.data());
  out.insert(out.end(), p, p + fs.data.size() * sizeof(float));
  return out;
}

FeatureSet ReadFvec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Fail(ErrorKind::kIo, path + ": cannot open (" + std::strerror(errno) + ")");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return ParseFvec(bytes, path);
}

void WriteFvec(const FeatureSet& fs, const std::string& path) {
  const auto bytes = SerializeFvec(fs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    Fail(ErrorKind::kIo, path + ": cannot open for writing (" + std::strerror(errno) + ")");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, path + ": write failed");
}

FeatureSet Concatenate(const std::vector<FeatureSet>& parts) {
  FeatureSet out;
  if (parts.empty()) return out;
  out.dim = parts.front().dim;
  for (const FeatureSet& p : parts) {
    if (p.dim != out.dim) {
      Fail(ErrorKind::kData, "feature dimension mismatch: " + std::to_string(out.dim) +
                                 " vs " + std::to_string(p.dim));
    }
    out.count += p.count;
    out.data.insert(out.data.end(), p.data.begin(), p.data.end());
  }
  return out;
}

}  // namespace sim2real::distmetrics
