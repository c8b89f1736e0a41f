#pragma once

// Suite files: the checkpoint container with per-dataset sections
//   d<i>.x (f64, n*n_in), d<i>.y (u8, n), d<i>.meta (u64: n, n_in, tau)
// and a JSON header carrying the master seed and generator echo.

#include <cstdint>
#include <string>
#include <vector>

#include "metalstm/container.hpp"
#include "metalstm/datagen.hpp"

namespace metalstm::cli {

inline constexpr io::Magic kSuiteMagic{'M', 'L', 'S', 'T', 'M', 'S', 'U', 'I'};
inline constexpr std::uint32_t kSuiteVersion = 1;

struct Suite {
  std::uint64_t seed = 0;
  GenConfig generator;
  std::vector<LabeledDataset> datasets;

  std::size_t n_in() const { return generator.n_in; }
  /// Seed plus a hash of the generator echo; identical for regenerated suites.
  std::string fingerprint() const;
};

Suite generate_suite(const GenConfig& generator, std::size_t count, std::uint64_t seed);

std::string encode_suite(const Suite& suite);
Suite decode_suite(const std::string& bytes);
void save_suite(const Suite& suite, const std::string& path);
Suite load_suite(const std::string& path);

/// Plain-text inspection export: one CSV per dataset (x columns, y, split).
void export_suite_csv(const Suite& suite, const std::string& dir);

}  // namespace metalstm::cli
