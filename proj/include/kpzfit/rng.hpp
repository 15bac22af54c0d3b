#pragma once

#include <array>
#include <cstdint>

namespace kpzfit {

// Philox4x32-10 (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Counter-based stream keyed by (seed, run, substream). Two streams with
// different keys never overlap; draws are a pure function of the key and
// the draw index, so results do not depend on scheduling.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t run, std::uint32_t substream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double exponential(double rate = 1.0);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t run_lo_;
  std::uint32_t substream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace kpzfit
