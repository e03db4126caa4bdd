#pragma once

#include <array>
#include <cstdint>

namespace chaoscale {

// Philox4x32-10 (Salmon et al., SC'11): a keyed bijection of a 128-bit counter.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Variates addressed by (master seed, ensemble, level, replication, particle,
// step, lane). Identical addresses always give identical variates, so results
// never depend on how work is scheduled across threads.
class RngStream {
 public:
  // Step index reserved for initial-condition draws.
  static constexpr std::uint32_t kInitialStep = 0xFFFFFFFFu;

  RngStream(std::uint64_t master_seed, std::uint32_t ensemble, std::uint32_t level,
            std::uint32_t replication) noexcept;

  PhiloxCounter block(std::uint32_t particle, std::uint32_t step, std::uint32_t lane) const noexcept;

  // Uniform on the open interval (0, 1).
  double uniform(std::uint32_t particle, std::uint32_t step, std::uint32_t lane = 0) const noexcept;

  // Two independent standard normals from one block (Box-Muller).
  std::array<double, 2> normal_pair(std::uint32_t particle, std::uint32_t step,
                                    std::uint32_t lane = 0) const noexcept;

  // Standard normal for one coordinate; coordinates 2k and 2k+1 share a block.
  double normal(std::uint32_t particle, std::uint32_t step, std::uint32_t coordinate) const noexcept {
    return normal_pair(particle, step, coordinate / 2)[coordinate % 2];
  }

  std::uint32_t replication() const noexcept { return replication_; }

 private:
  PhiloxKey key_;
  std::uint32_t replication_;
};

}  // namespace chaoscale
