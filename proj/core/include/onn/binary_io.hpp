#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace onn {

// Little-endian fixed-width encoding used by the dataset cache and checkpoints.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void raw(std::string_view bytes);
  void f64s(std::span<const double> values);

 private:
  std::ostream& out_;
};

// Every read throws DataError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::string raw(std::size_t n);
  void f64s(std::span<double> values);

 private:
  std::istream& in_;
  void read(char* dst, std::size_t n);
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace onn
