#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace levydetect {

/// Philox4x32-10 counter-based generator. The 64-bit key is the master seed;
/// the upper two counter words hold the stream id and the lower two count
/// blocks, so every (seed, stream) pair owns a disjoint 2^64-block sequence.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  /// One application of the bijection; exposed for known-answer tests.
  static Counter block(Counter ctr, Key key) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  Counter counter_;
  Counter buffer_{};
  int index_ = 4;
};

/// Identity of one replication's random stream.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  Philox4x32 engine() const noexcept { return {master_seed, stream_id}; }
};

/// Stream ids for replication `rep` of experiment arm `arm`. Arms are kept
/// apart in the upper bits so distinct arms never share a stream.
constexpr std::uint64_t stream_id_for(std::uint64_t arm, std::uint64_t rep) noexcept {
  return (arm << 40) | (rep & ((std::uint64_t{1} << 40) - 1));
}

}  // namespace levydetect
