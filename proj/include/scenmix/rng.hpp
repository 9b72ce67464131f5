#pragma once

// Deterministic random draws. Sequences are produced in fixed-size chunks,
// each chunk seeded independently from (seed, chunk index), so results do
// not depend on how the work is split across workers. Only explicit
// transforms are used (no std::*_distribution, whose output is
// implementation-defined).

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace scenmix {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t chunk) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x632be59bd9b4e019ULL * (stream + 1);
    (void)splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (chunk + 1);
    return splitmix64(s);
}

} // namespace detail

/// Chunk-seeded generator producing uniforms, normals and gammas.
class ChunkedRng {
public:
    static constexpr std::size_t chunk_size = 1 << 16;

    ChunkedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk)
        : eng_(detail::mix_seed(seed, stream, chunk)) {}

    double uniform01() {
        // 53-bit mantissa in (0,1); zero is remapped to keep logs finite.
        double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Marsaglia-Tsang gamma sampler, unit scale.
    double gamma(double shape) {
        if (!(shape > 0.0)) {
            throw std::domain_error("gamma: shape must be positive");
        }
        if (shape < 1.0) {
            double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Fills out[0..n) by invoking fill_chunk(rng, begin, end) per chunk with a
/// chunk-specific generator. Deterministic for a given (seed, stream).
template <class FillChunk>
inline void generate_chunked(std::size_t n, std::uint64_t seed,
                             std::uint64_t stream, const FillChunk& fill_chunk) {
    std::size_t n_chunks = (n + ChunkedRng::chunk_size - 1) / ChunkedRng::chunk_size;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        ChunkedRng rng(seed, stream, c);
        std::size_t begin = c * ChunkedRng::chunk_size;
        std::size_t end = std::min(n, begin + ChunkedRng::chunk_size);
        fill_chunk(rng, begin, end);
    }
}

/// Chunked pairwise sum; the reduction order is fixed regardless of how the
/// terms were produced.
template <class Get>
inline double chunked_sum(std::size_t n, const Get& get) {
    constexpr std::size_t block = 4096;
    std::vector<double> partials;
    partials.reserve(n / block + 1);
    std::size_t i = 0;
    while (i < n) {
        std::size_t end = std::min(n, i + block);
        double s = 0.0;
        for (; i < end; ++i) s += get(i);
        partials.push_back(s);
    }
    // Pairwise combine for stability.
    while (partials.size() > 1) {
        std::size_t half = (partials.size() + 1) / 2;
        for (std::size_t k = 0; k + half < partials.size(); ++k) {
            partials[k] += partials[k + half];
        }
        partials.resize(half);
    }
    return partials.empty() ? 0.0 : partials[0];
}

} // namespace scenmix
