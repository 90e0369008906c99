#pragma once

#include <array>
#include <cstdint>

namespace gflow {

// Philox4x32-10 counter-based generator (Salmon et al. 2011), exposed as a
// 64-bit UniformRandomBitGenerator. Streams never overlap: the key is the
// seed and the counter walks upward.
class Philox {
public:
    using result_type = std::uint64_t;
    using block_t = std::array<std::uint32_t, 4>;
    using key_t = std::array<std::uint32_t, 2>;

    explicit Philox(std::uint64_t seed = 0) : key_{(std::uint32_t)seed, (std::uint32_t)(seed >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        if (pos_ == 2) {
            buf_ = block(ctr_, key_);
            bump();
            pos_ = 0;
        }
        result_type r = (result_type)buf_[2 * pos_] | ((result_type)buf_[2 * pos_ + 1] << 32);
        ++pos_;
        return r;
    }

    static block_t block(block_t c, key_t k) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            std::uint64_t p0 = (std::uint64_t)M0 * c[0], p1 = (std::uint64_t)M1 * c[2];
            c = {(std::uint32_t)(p1 >> 32) ^ c[1] ^ k[0], (std::uint32_t)p1,
                 (std::uint32_t)(p0 >> 32) ^ c[3] ^ k[1], (std::uint32_t)p0};
            k[0] += W0;
            k[1] += W1;
        }
        return c;
    }

private:
    void bump() {
        for (auto& w : ctr_)
            if (++w != 0) break;
    }
    key_t key_;
    block_t ctr_{0, 0, 0, 0};
    block_t buf_{};
    int pos_ = 2;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// per-trial seed, a hash of (base seed, trial index)
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x9E3779B97F4A7C15ull));
}

using Rng = Philox;

}  // namespace gflow
