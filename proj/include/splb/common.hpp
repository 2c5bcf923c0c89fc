#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace splb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// rho <= 0 while taking moments of a population set.
struct DegenerateState : Error {
    using Error::Error;
};

// Geometry construction, validation, or file-format failure.
struct GeometryError : Error {
    using Error::Error;
};

// Config-file or run-configuration failure.
struct ConfigError : Error {
    using Error::Error;
};

using Vec3i = std::array<int32_t, 3>;
using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Vec3 sub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 scale(const Vec3& a, double k) {
    return {a[0] * k, a[1] * k, a[2] * k};
}

inline double norm(const Vec3& a) {
    return std::sqrt(dot(a, a));
}

inline Vec3 to_vec3(const Vec3i& a) {
    return {double(a[0]), double(a[1]), double(a[2])};
}

}  // namespace splb
