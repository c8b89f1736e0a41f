#include "suite_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "metalstm/config.hpp"

namespace metalstm::cli {

using nlohmann::json;

std::string Suite::fingerprint() const {
  return std::to_string(seed) + "-" + io::hex64(io::fnv1a64(dump_gen_config(generator)));
}

Suite generate_suite(const GenConfig& generator, std::size_t count, std::uint64_t seed) {
  Suite s;
  s.seed = seed;
  s.generator = generator;
  s.datasets = gen_suite(generator, count, seed);
  return s;
}

std::string encode_suite(const Suite& suite) {
  io::Container c;
  c.magic = kSuiteMagic;
  c.version = kSuiteVersion;
  c.header = json{{"seed", suite.seed},
                  {"count", suite.datasets.size()},
                  {"generator", dump_gen_config(suite.generator)}}
                 .dump();
  for (std::size_t i = 0; i < suite.datasets.size(); ++i) {
    const LabeledDataset& d = suite.datasets[i];
    const std::string p = "d" + std::to_string(i) + ".";
    c.sections.push_back({p + "x", d.x.values()});
    c.sections.push_back({p + "y", d.y});
    c.sections.push_back({p + "meta", std::vector<std::uint64_t>{d.size(), d.n_in(), d.tau}});
  }
  return io::encode_container(c);
}

Suite decode_suite(const std::string& bytes) {
  std::istringstream is(bytes);
  const io::Container c = io::read_container(is, kSuiteMagic, kSuiteVersion);
  Suite s;
  std::size_t count = 0;
  try {
    const json h = json::parse(c.header);
    s.seed = h.at("seed").get<std::uint64_t>();
    count = h.at("count").get<std::size_t>();
    s.generator = parse_gen_config(h.at("generator").get<std::string>());
  } catch (const json::exception& e) {
    throw io::FormatError(std::string("suite header: ") + e.what());
  }
  if (c.sections.size() != 3 * count) throw io::ShapeInconsistent("suite: section count does not match header");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string p = "d" + std::to_string(i) + ".";
    const auto& meta = c.u64(p + "meta");
    if (meta.size() != 3) throw io::ShapeInconsistent("suite: malformed " + p + "meta");
    const std::size_t n = meta[0], n_in = meta[1];
    LabeledDataset d;
    const auto& x = c.f64(p + "x");
    if (x.size() != n * n_in || n_in != s.generator.n_in) throw io::ShapeInconsistent("suite: bad shape for " + p + "x");
    d.x = Tensor({n, n_in}, x);
    d.y = c.u8(p + "y");
    if (d.y.size() != n) throw io::ShapeInconsistent("suite: bad length for " + p + "y");
    d.tau = meta[2];
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw io::ShapeInconsistent("suite: dataset " + std::to_string(i) + ": " + e.what());
    }
    s.datasets.push_back(std::move(d));
  }
  return s;
}

void save_suite(const Suite& suite, const std::string& path) { io::write_file_atomic(path, encode_suite(suite)); }

Suite load_suite(const std::string& path) { return decode_suite(io::read_file(path)); }

void export_suite_csv(const Suite& suite, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < suite.datasets.size(); ++i) {
    const LabeledDataset& d = suite.datasets[i];
    char name[32];
    std::snprintf(name, sizeof name, "dataset_%04zu.csv", i);
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
    for (std::size_t j = 0; j < d.n_in(); ++j) os << 'x' << j << ',';
    os << "y,split\n";
    char buf[32];
    for (std::size_t t = 0; t < d.size(); ++t) {
      for (double v : d.row(t)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << ',';
      }
      os << int(d.y[t]) << ',' << (t + 1 < d.tau ? "train" : "test") << '\n';
    }
  }
}

}  // namespace metalstm::cli
