#include "metalstm/container.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace metalstm::io {

namespace {

enum DType : std::uint8_t { kF64 = 1, kU8 = 2, kU64 = 3 };

// Sections larger than this are treated as corrupt rather than allocated.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw TruncatedFile(std::string("truncated file while reading ") + what);
  }

  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint8_t u8(const char* what) {
    char b;
    bytes(&b, 1, what);
    return static_cast<std::uint8_t>(b);
  }

  std::string text(std::uint64_t n, const char* what) {
    if (n > kMaxElements) throw FormatError(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }

 private:
  std::istream& is_;
};

}  // namespace

const Section& Container::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return s;
  throw ShapeInconsistent("missing section \"" + name + "\"");
}

const std::vector<double>& Container::f64(const std::string& name) const {
  const auto* v = std::get_if<std::vector<double>>(&find(name).data);
  if (!v) throw ShapeInconsistent("section \"" + name + "\" is not f64");
  return *v;
}

const std::vector<std::uint8_t>& Container::u8(const std::string& name) const {
  const auto* v = std::get_if<std::vector<std::uint8_t>>(&find(name).data);
  if (!v) throw ShapeInconsistent("section \"" + name + "\" is not u8");
  return *v;
}

const std::vector<std::uint64_t>& Container::u64(const std::string& name) const {
  const auto* v = std::get_if<std::vector<std::uint64_t>>(&find(name).data);
  if (!v) throw ShapeInconsistent("section \"" + name + "\" is not u64");
  return *v;
}

std::string encode_container(const Container& c) {
  std::string out(c.magic.begin(), c.magic.end());
  put_u32(out, c.version);
  put_u64(out, c.header.size());
  out += c.header;
  put_u32(out, static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    std::visit(
        [&](const auto& vec) {
          using T = typename std::decay_t<decltype(vec)>::value_type;
          if constexpr (std::is_same_v<T, double>) {
            out.push_back(static_cast<char>(kF64));
            put_u64(out, vec.size());
            for (double v : vec) put_u64(out, std::bit_cast<std::uint64_t>(v));
          } else if constexpr (std::is_same_v<T, std::uint8_t>) {
            out.push_back(static_cast<char>(kU8));
            put_u64(out, vec.size());
            out.append(vec.begin(), vec.end());
          } else {
            out.push_back(static_cast<char>(kU64));
            put_u64(out, vec.size());
            for (auto v : vec) put_u64(out, v);
          }
        },
        s.data);
  }
  return out;
}

void write_container(std::ostream& os, const Container& c) {
  const std::string bytes = encode_container(c);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Container read_container(std::istream& is, const Magic& magic, std::uint32_t version) {
  Reader r(is);
  Container c;
  char m[8];
  is.read(m, 8);
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got < 8 && std::equal(m, m + got, magic.begin())) throw TruncatedFile("truncated file while reading magic");
  if (got != 8 || !std::equal(m, m + 8, magic.begin())) {
    throw BadMagic("bad magic bytes: not a " + std::string(magic.begin(), magic.end()) + " file");
  }
  std::copy(m, m + 8, c.magic.begin());
  c.version = r.u32("version");
  if (c.version != version) {
    throw VersionMismatch("format version " + std::to_string(c.version) + " is not supported (expected " +
                          std::to_string(version) + ")");
  }
  c.header = r.text(r.u64("header length"), "header");
  const std::uint32_t count = r.u32("section count");
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    s.name = r.text(r.u32("section name length"), "section name");
    const std::uint8_t dtype = r.u8("section dtype");
    const std::uint64_t n = r.u64("section length");
    if (n > kMaxElements) throw FormatError("implausible length for section \"" + s.name + "\"");
    switch (dtype) {
      case kF64: {
        std::vector<double> v(n);
        for (auto& x : v) x = std::bit_cast<double>(r.u64(s.name.c_str()));
        s.data = std::move(v);
        break;
      }
      case kU8: {
        std::vector<std::uint8_t> v(n);
        r.bytes(reinterpret_cast<char*>(v.data()), n, s.name.c_str());
        s.data = std::move(v);
        break;
      }
      case kU64: {
        std::vector<std::uint64_t> v(n);
        for (auto& x : v) x = r.u64(s.name.c_str());
        s.data = std::move(v);
        break;
      }
      default:
        throw FormatError("unknown dtype " + std::to_string(dtype) + " in section \"" + s.name + "\"");
    }
    c.sections.push_back(std::move(s));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after last section");
  return c;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace metalstm::io
