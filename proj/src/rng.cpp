#include "finmem/rng.hpp"

#include <stdexcept>

namespace finmem {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t(a) * std::uint64_t(b);
    hi = std::uint32_t(p >> 32);
    lo = std::uint32_t(p);
}

} // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

std::uint64_t RandomStream::next_u64() {
    if (available_ == 0) {
        const Philox4x32::Counter ctr{std::uint32_t(block_), std::uint32_t(block_ >> 32),
                                      std::uint32_t(stream_), std::uint32_t(stream_ >> 32)};
        const Philox4x32::Key key{std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
        buffer_ = Philox4x32::generate(ctr, key);
        ++block_;
        available_ = 2;
    }
    const int half = 2 - available_;
    --available_;
    return (std::uint64_t(buffer_[2 * half + 1]) << 32) | buffer_[2 * half];
}

double RandomStream::uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

std::size_t RandomStream::categorical(std::span<const double> probs) {
    const double r = uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (r < cumulative) return i;
    }
    return probs.size();
}

std::size_t RandomStream::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return std::size_t(uniform() * double(n)) % n;
}

} // namespace finmem
