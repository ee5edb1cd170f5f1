#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "srlfd/errors.hpp"

namespace srlfd {

static_assert(std::endian::native == std::endian::little,
              "binary containers are written in host order and require a little-endian host");

// Little-endian binary output with I/O failures surfaced as IoError.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);

  void bytes(const void* data, std::size_t n);
  void magic(std::string_view m) { bytes(m.data(), m.size()); }
  template <class T>
  void put(T v) {
    bytes(&v, sizeof v);
  }
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);

  // FormatError when the leading bytes differ from `m`.
  void expect_magic(std::string_view m);
  // TruncatedError when fewer than n bytes remain.
  void bytes(void* data, std::size_t n);
  template <class T>
  T get() {
    T v{};
    bytes(&v, sizeof v);
    return v;
  }
  bool at_end();
  std::uint64_t remaining();

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace srlfd
