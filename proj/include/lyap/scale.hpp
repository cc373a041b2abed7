#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace lyap {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Rates are carried as log_b values; a vanishing rate is -inf.
inline double log_b(double x, double b) {
    if (!(x > 0)) return neg_inf;
    return std::log(x) / std::log(b);
}

inline double pow_b(double lb, double b) {
    if (lb == neg_inf) return 0.0;
    return std::pow(b, lb);
}

// floor with a small slack so that b^n stored through log/pow maps back to n
inline double scale_of(double lb) {
    if (std::isinf(lb)) return lb;
    return std::floor(lb + 1e-9);
}

inline int scale_int(double lb) {
    double s = scale_of(lb);
    if (s == neg_inf) return std::numeric_limits<int>::min();
    if (s == pos_inf) return std::numeric_limits<int>::max();
    return static_cast<int>(s);
}

// log_b(b^x + b^y) without overflow
inline double log_sum(double x, double y, double b) {
    if (x == neg_inf) return y;
    if (y == neg_inf) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::pow(b, std::min(x, y) - m)) / std::log(b);
}

inline std::string scale_str(double s) {
    if (s == neg_inf) return "-inf";
    if (s == pos_inf) return "+inf";
    return std::to_string(static_cast<long long>(scale_of(s)));
}

}  // namespace lyap
