#include "onn/binary_io.hpp"

#include <array>
#include <bit>
#include <limits>

#include "onn/errors.hpp"

namespace onn {

namespace {

template <typename T>
std::array<char, sizeof(T)> to_le(T v) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  return bytes;
}

template <typename T>
T from_le(const char* bytes) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void BinaryWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void BinaryWriter::u32(std::uint32_t v) {
  auto b = to_le(v);
  out_.write(b.data(), b.size());
}

void BinaryWriter::u64(std::uint64_t v) {
  auto b = to_le(v);
  out_.write(b.data(), b.size());
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw DataError("string too long to serialize");
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::raw(std::string_view bytes) { out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }

void BinaryWriter::f64s(std::span<const double> values) {
  for (double v : values) f64(v);
}

void BinaryReader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("unexpected end of binary stream");
}

std::uint8_t BinaryReader::u8() {
  char c = 0;
  read(&c, 1);
  return static_cast<std::uint8_t>(c);
}

std::uint32_t BinaryReader::u32() {
  char b[4];
  read(b, 4);
  return from_le<std::uint32_t>(b);
}

std::uint64_t BinaryReader::u64() {
  char b[8];
  read(b, 8);
  return from_le<std::uint64_t>(b);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() { return raw(u32()); }

std::string BinaryReader::raw(std::size_t n) {
  std::string s(n, '\0');
  if (n > 0) read(s.data(), n);
  return s;
}

void BinaryReader::f64s(std::span<double> values) {
  for (double& v : values) v = f64();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace onn
