#pragma once

#include <cstdint>
#include <random>

namespace perplex {

// Stable 64-bit mix of (master, index); trial i of a run uses mix_seed(master, i)
// so serial and parallel executions draw identical streams.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) noexcept;

// Random source with a platform-independent uniform in [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace perplex
