#pragma once
#include <cstdint>
#include <random>

namespace sgl {

/**
 * Stream-stable random source.
 *
 * std::mt19937_64 has a fully specified output sequence, but the standard
 * distributions do not, so uniform and normal variates are derived here
 * with fixed transforms: 53-bit mantissa fill for U[0,1) and the Marsaglia
 * polar method for N(0,1). A given seed therefore yields the same stream on
 * every conforming platform (modulo libm's log, which is used by the
 * polar method).
 */
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // U[0, 1)
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace sgl
