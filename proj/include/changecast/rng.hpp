#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace changecast {

/// splitmix64 step: advances state and returns the mixed output. Used only
/// for deriving substream seeds, never as the draw engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent per-stream seed from (master seed, stream id). Documented and
/// fixed so runs reproduce across platforms.
inline std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t state = master_seed;
    state = splitmix64(state) ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
    return splitmix64(state);
}

/// Seeded draw source with explicit transforms. The engine is mt19937_64
/// (bit-exact sequence fixed by the standard) and every transform consumes a
/// fixed number of engine outputs — Box-Muller deliberately discards its
/// second variate so one normal always costs two uniforms — which keeps
/// streams reproducible regardless of call interleaving.
class SubstreamRng {
  public:
    SubstreamRng(std::uint64_t master_seed, std::uint64_t stream_id)
        : engine_(substream_seed(master_seed, stream_id)) {}

    /// Uniform on the open interval (0, 1): 53-bit resolution, never 0 or 1,
    /// safe under log() and 1-u inversions.
    double next_unit() {
        return (static_cast<double>(engine_() >> 11) + 1.0) / 9007199254740993.0;
    }

    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace changecast
