#pragma once

// Seeded sampling shared by the optimizers.  Index reduction is a fixed
// 128-bit multiply-shift on raw mt19937_64 output, so a given seed replays
// the same index stream on every platform.

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace nsopt {

class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // uniform on {0, ..., n-1}
  Eigen::Index uniform_index(Eigen::Index n) {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(engine_()) * static_cast<std::uint64_t>(n);
    return static_cast<Eigen::Index>(wide >> 64);
  }

  // uniform on {1, ..., n}
  Eigen::Index uniform_1_to(Eigen::Index n) { return uniform_index(n) + 1; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nsopt
