#pragma once

// Counter-based random number streams (Philox-4x32-10, Salmon et al. 2011).
//
// A stream is keyed by (master seed, stream id). Distinct stream ids under
// the same master seed give statistically independent sequences, and the
// output for a given (seed, stream, counter) triple is a pure function of
// those values, so replicate fan-out across threads cannot change results.

#include <array>
#include <cmath>
#include <cstdint>

namespace assoclt {

namespace philox {

inline constexpr std::uint32_t kW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(prod);
    hi = static_cast<std::uint32_t>(prod >> 32);
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mul_hi_lo(kM4x32A, ctr[0], lo0, hi0);
        mul_hi_lo(kM4x32B, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW32A;
        key[1] += kW32B;
    }
    return ctr;
}

}  // namespace philox

class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          stream_id_(stream_id) {}

    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        const int i = 4 - buffered_;
        buffered_ -= 2;
        return static_cast<std::uint64_t>(buf_[i]) |
               (static_cast<std::uint64_t>(buf_[i + 1]) << 32);
    }

    // Uniform in (0, 1]; the open lower end keeps log(u) finite.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Exp(rate) shifted to mean zero.
    double centered_exponential(double rate) {
        return (-std::log(uniform()) - 1.0) / rate;
    }

    // Uniform on [-half_width, half_width].
    double centered_uniform(double half_width) {
        return (2.0 * uniform() - 1.0) * half_width;
    }

    double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_),
            static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_id_),
            static_cast<std::uint32_t>(stream_id_ >> 32)};
        buf_ = philox::block(ctr, key_);
        ++counter_;
        buffered_ = 4;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int buffered_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace assoclt
