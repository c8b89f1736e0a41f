#pragma once

// Little-endian binary container shared by checkpoints and suite files.
//
//   magic        8 bytes
//   version      u32
//   header       u64 length + UTF-8 text
//   sections     u32 count, then per section:
//                  u32 name length + name, u8 dtype, u64 element count, raw elements
//
// dtype: 1 = f64, 2 = u8, 3 = u64.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace metalstm::io {

using Magic = std::array<char, 8>;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};
class ShapeInconsistent : public FormatError {
 public:
  using FormatError::FormatError;
};

using SectionData = std::variant<std::vector<double>, std::vector<std::uint8_t>, std::vector<std::uint64_t>>;

struct Section {
  std::string name;
  SectionData data;
};

struct Container {
  Magic magic{};
  std::uint32_t version = 0;
  std::string header;
  std::vector<Section> sections;

  const Section& find(const std::string& name) const;
  const std::vector<double>& f64(const std::string& name) const;
  const std::vector<std::uint8_t>& u8(const std::string& name) const;
  const std::vector<std::uint64_t>& u64(const std::string& name) const;
};

void write_container(std::ostream& os, const Container& c);
std::string encode_container(const Container& c);

/// Reads a container, checking magic and version before anything else.
Container read_container(std::istream& is, const Magic& magic, std::uint32_t version);

void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

/// FNV-1a 64-bit hash, used for file and config fingerprints.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace metalstm::io
