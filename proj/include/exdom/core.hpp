#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace exdom {

inline constexpr double pi = 3.141592653589793238462643383279502884;

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double s, Vec a) {
    for (auto& x : a) x *= s;
    return a;
}

inline Vec unit(Vec a) {
    double r = norm2(a);
    if (r == 0.0) throw std::invalid_argument("unit: zero vector");
    for (auto& x : a) x /= r;
    return a;
}

/// Surface volume of the unit sphere S^{n-1} in R^n.
inline double sphere_volume(int n) {
    if (n < 1) throw std::invalid_argument("sphere_volume: n >= 1 required");
    return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Volume of the unit ball in R^n.
inline double ball_volume(int n) { return sphere_volume(n) / n; }

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LineFit fit_line(const Vec& x, const Vec& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 paired samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

/// Slope of log|y| against log x, skipping non-finite or zero values.
inline double loglog_slope(const Vec& x, const Vec& y) {
    Vec lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0 && std::isfinite(y[i]) && y[i] != 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::fabs(y[i])));
        }
    }
    return fit_line(lx, ly).slope;
}

/// Deterministic seeded generator used everywhere randomness is needed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform(double a = 0.0, double b = 1.0) {
        return std::uniform_real_distribution<double>(a, b)(eng_);
    }
    double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

    Vec gaussian_vec(int n) {
        Vec v(n);
        for (auto& x : v) x = gaussian();
        return v;
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

inline double sqr(double x) { return x * x; }

}  // namespace exdom
