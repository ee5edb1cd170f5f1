#include "srlfd/binary_io.hpp"

namespace srlfd {

BinaryWriter::BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void BinaryWriter::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed on '" + path_ + "'");
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw IoError("closing '" + path_ + "' failed");
}

BinaryReader::BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open '" + path + "' for reading");
}

void BinaryReader::expect_magic(std::string_view m) {
  std::string got(m.size(), '\0');
  in_.read(got.data(), static_cast<std::streamsize>(m.size()));
  if (in_.gcount() != static_cast<std::streamsize>(m.size()) || got != m)
    throw FormatError("'" + path_ + "' is not a " + std::string(m) + " file (bad magic)");
}

void BinaryReader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n))
    throw TruncatedError("'" + path_ + "' is truncated");
}

bool BinaryReader::at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

std::uint64_t BinaryReader::remaining() {
  const auto here = in_.tellg();
  in_.seekg(0, std::ios::end);
  const auto end = in_.tellg();
  in_.seekg(here);
  return static_cast<std::uint64_t>(end - here);
}

}  // namespace srlfd
