#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace finmem {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
 * numbers: as easy as 1, 2, 3", SC'11). A pure function of (counter, key).
 */
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

inline constexpr const char* kGeneratorName = "philox4x32-10";

/**
 * Independent random stream addressed by (seed, stream id).
 *
 * Key = seed; counter = (block index, stream id). Stream-splitting rule: the
 * episode with index e of a batch draws from stream e, so a batch reproduces
 * bit-for-bit regardless of how episodes are scheduled across workers.
 */
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Index i with probability probs[i]; returns probs.size() for the residual
    /// mass 1 - sum(probs) (used for the exit outcome).
    std::size_t categorical(std::span<const double> probs);
    std::size_t uniform_index(std::size_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int available_ = 0; ///< unread 64-bit halves in buffer_
};

} // namespace finmem
