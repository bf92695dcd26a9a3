#pragma once

#include <array>
#include <cmath>

namespace impactkam {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Vec2 {
    double a = 0.0;
    double b = 0.0;
};

/// 2x2 real matrix, row major.
struct Mat2 {
    double m00 = 0.0, m01 = 0.0;
    double m10 = 0.0, m11 = 0.0;

    double det() const { return m00 * m11 - m01 * m10; }
};

inline Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.m00 * r.m00 + l.m01 * r.m10, l.m00 * r.m01 + l.m01 * r.m11,
            l.m10 * r.m00 + l.m11 * r.m10, l.m10 * r.m01 + l.m11 * r.m11};
}

inline Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.m00 * v.a + m.m01 * v.b, m.m10 * v.a + m.m11 * v.b};
}

inline double wrap_angle(double t) {
    double r = std::fmod(t, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r;
}

}  // namespace impactkam
