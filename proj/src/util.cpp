#include "pvcast/util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "pvcast/errors.hpp"

namespace pvcast {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_double(double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{})
        throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf.data(), res.ptr);
}

std::string format_double(double v, int precision) {
    std::array<char, 64> buf;
    const int n = std::snprintf(buf.data(), buf.size(), "%.*f", precision, v);
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

std::string format_percent(double fraction) {
    return format_double(std::round(fraction * 1e6) / 1e4);
}

double mean_of(std::span<const double> v) {
    if (v.empty()) throw DataError("mean_of: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double median_of(std::span<const double> v) {
    if (v.empty()) throw DataError("median_of: empty input");
    std::vector<double> tmp(v.begin(), v.end());
    std::sort(tmp.begin(), tmp.end());
    const std::size_t n = tmp.size();
    return n % 2 == 1 ? tmp[n / 2] : 0.5 * (tmp[n / 2 - 1] + tmp[n / 2]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw DataError("pearson: need two equal-length series of at least 2");
    // Accumulate moments in quad precision so the result does not depend on
    // row order (permutation invariance is part of the correlation contract).
    __float128 sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const __float128 x = a[i], y = b[i];
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    const __float128 nn = static_cast<__float128>(n);
    const double cov = static_cast<double>(sab - sa * sb / nn);
    const double va = static_cast<double>(saa - sa * sa / nn);
    const double vb = static_cast<double>(sbb - sb * sb / nn);
    if (va <= 0.0 || vb <= 0.0) return 0.0;  // constant column: correlation defined as 0
    return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace pvcast
