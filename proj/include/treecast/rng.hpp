#pragma once

#include <array>
#include <cstdint>

namespace treecast {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3"). A keyed bijection of a 128-bit counter; every
/// (seed, domain, level, index) tuple addresses its own stream, so results
/// do not depend on how work is split across threads.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key),
             static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1],
             static_cast<std::uint32_t>(p0)};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  std::array<std::uint32_t, 2> key_;
};

/// Sequential reader over one Philox stream. Each block yields two 64-bit
/// words.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t domain, std::uint32_t level,
                std::uint32_t index)
      : gen_(seed), domain_(domain), level_(level), index_(index) {}

  std::uint64_t next_u64() {
    if (slot_ == 2) refill();
    const std::uint64_t w = (std::uint64_t{buf_[2 * slot_ + 1]} << 32) |
                            buf_[2 * slot_];
    ++slot_;
    return w;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  void refill() {
    buf_ = gen_({block_++, index_, level_, domain_});
    slot_ = 0;
  }

  Philox4x32 gen_;
  std::uint32_t domain_;
  std::uint32_t level_;
  std::uint32_t index_;
  std::uint32_t block_ = 0;
  Philox4x32::Block buf_{};
  int slot_ = 2;
};

/// xoshiro256++ seeded from one Philox block via splitmix64. Used for
/// per-sample streams that need many draws: the Philox counter fixes the
/// starting point, the cheap generator supplies the bulk.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint32_t domain, std::uint32_t level,
            std::uint32_t index) {
    const auto b = Philox4x32(seed)({0, index, level, domain});
    std::uint64_t sm = (std::uint64_t{b[1]} << 32) | b[0];
    sm ^= (std::uint64_t{b[3]} << 32) | b[2];
    for (auto& word : s_) word = splitmix(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Stream domains; keep values stable, they are part of the reproducibility
/// contract.
enum class StreamDomain : std::uint32_t {
  PoolPlus = 1,
  PoolMinus = 2,
  BroadcastTree = 3,
};

}  // namespace treecast
