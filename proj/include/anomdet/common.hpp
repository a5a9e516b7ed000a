// Copyright 2026 The anomdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ANOMDET_COMMON_HPP
#define ANOMDET_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace anomdet {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes shared by the library error types and the CLI.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kDivergence = 3,
  kCapacity = 4,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used for seed derivation so that sub-streams of a
// base seed are statistically independent of each other.
std::uint64_t mix64(std::uint64_t x);

// Seed for sub-stream `index` of `base`. Stable across releases: manifests
// record only base seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Deterministic random source. std::mt19937_64 has a fixed output sequence,
// and all variate transforms below are implemented here (the std::*
// distributions are implementation-defined), so streams are reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one spare value is cached.
  double gaussian();

  // Unbiased integer in [0, n); n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SHA-256 of a byte string, as a lowercase hex digest.
std::string sha256_hex(const std::string& bytes);

// SHA-256 of a file's contents. Throws DataError if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace anomdet

#endif  // ANOMDET_COMMON_HPP
