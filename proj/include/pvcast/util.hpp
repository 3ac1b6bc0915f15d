#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace pvcast {

/// FNV-1a 64-bit hash, used to fingerprint configuration blobs in output files.
std::uint64_t fnv1a64(std::string_view s);

/// Shortest round-trippable decimal representation of a double (via
/// std::to_chars), so serialized numbers are identical across runs.
std::string format_double(double v);

/// Fixed-precision decimal formatting (for report tables).
std::string format_double(double v, int precision);

/// Coverage fraction rendered as a percent label ("0.9973" -> "99.73"),
/// rounded so binary representation noise never leaks into headers.
std::string format_percent(double fraction);

/// Deterministic random source. Uniform doubles come straight from the
/// mt19937_64 bit stream and normals from Box-Muller (no cached spare), so the
/// draw sequence is identical across platforms and never depends on libstdc++
/// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 gen_;
};

double mean_of(std::span<const double> v);
double population_std(std::span<const double> v);
double median_of(std::span<const double> v);  // copies and sorts
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace pvcast
