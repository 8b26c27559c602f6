#pragma once

// Periodic Green function on flat tori by Ewald summation:
//   -Delta G = delta_0 - 1/Vol,   mean-zero,
// in 2D and 3D, with the short-range part screened by a Gaussian and the
// long-range part summed in Fourier space.

#include "exdom/core.hpp"

namespace exdom::lattice {

/// Exponential integral E1(x), x > 0 (series for small x, continued fraction
/// for large x).
inline double expint_e1(double x) {
    if (x <= 0.0) throw std::invalid_argument("expint_e1: x > 0 required");
    const double euler = 0.5772156649015328606;
    if (x <= 1.0) {
        double s = -euler - std::log(x);
        double term = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= -x / k;
            s -= term / k;
            if (std::fabs(term / k) < 1e-18) break;
        }
        return s;
    }
    // Lentz continued fraction for E1
    double b = x + 1.0, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        double del = c * d;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x);
}

class TorusGreen {
  public:
    TorusGreen(int n, Vec periods) : n_(n), L_(std::move(periods)) {
        if (n_ != 2 && n_ != 3) throw std::invalid_argument("TorusGreen: n in {2,3}");
        vol_ = 1.0;
        double lmin = L_[0];
        for (double l : L_) {
            vol_ *= l;
            lmin = std::min(lmin, l);
        }
        eta_ = 3.0 / lmin;
        // real-space shells: erfc(eta r) below 1e-17 for eta r > 6.2
        real_range_ = static_cast<int>(std::ceil(6.2 / (eta_ * lmin))) + 1;
        // k-space: exp(-k^2/4eta^2) below 1e-17 for k > 2 eta * 6.3
        double kmax = 2.0 * eta_ * 6.3;
        for (int a = 0; a < n_; ++a)
            krange_.push_back(static_cast<int>(std::ceil(kmax * L_[a] / (2.0 * pi))));
        build_ktable();
    }

    int dim() const { return n_; }

    /// G(x) for x anywhere (periodicity applied internally); x != 0 mod L.
    double value(const Vec& x) const {
        Vec y = reduce(x);
        double s = real_sum(y) + k_sum(y) - 1.0 / (4.0 * vol_ * eta_ * eta_);
        return s;
    }

    /// Constant term of the local expansion: lim_{r->0} (G - G_free).
    /// G_free = -(1/2pi) log r (2D), 1/(4 pi r) (3D).
    double regular_constant() const {
        if (const_cached_) return const_val_;
        // real sum minus free part at r->0: the R = 0 term contributes
        //   2D: -(gamma + 2 log eta)/(4 pi);  3D: -eta/(2 pi^{3/2}) * ... see below
        double c;
        if (n_ == 2) {
            const double euler = 0.5772156649015328606;
            c = -(euler + 2.0 * std::log(eta_)) / (4.0 * pi);
        } else {
            // erfc(eta r)/(4 pi r) = 1/(4 pi r) - eta/(2 pi^{3/2}) + O(r^2)
            c = -eta_ / (2.0 * std::pow(pi, 1.5));
        }
        // other lattice images at x = 0
        for (const auto& R : real_shifts()) {
            double r = norm2(R);
            if (r == 0.0) continue;
            c += (n_ == 2) ? expint_e1(eta_ * eta_ * r * r) / (4.0 * pi)
                           : std::erfc(eta_ * r) / (4.0 * pi * r);
        }
        // k-space at x = 0 and the neutralizing constant
        for (const auto& [k2, kv] : ktable_) c += std::exp(-k2 / (4.0 * eta_ * eta_)) / (vol_ * k2);
        (void)0;
        c -= 1.0 / (4.0 * vol_ * eta_ * eta_);
        const_val_ = c;
        const_cached_ = true;
        return c;
    }

  private:
    Vec reduce(const Vec& x) const {
        Vec y = x;
        for (int a = 0; a < n_; ++a) y[a] -= L_[a] * std::floor(y[a] / L_[a] + 0.5);
        return y;
    }

    std::vector<Vec> real_shifts() const {
        std::vector<Vec> out;
        int m = real_range_;
        if (n_ == 2) {
            for (int i = -m; i <= m; ++i)
                for (int j = -m; j <= m; ++j) out.push_back({i * L_[0], j * L_[1]});
        } else {
            for (int i = -m; i <= m; ++i)
                for (int j = -m; j <= m; ++j)
                    for (int k = -m; k <= m; ++k)
                        out.push_back({i * L_[0], j * L_[1], k * L_[2]});
        }
        return out;
    }

    double real_sum(const Vec& y) const {
        double s = 0.0;
        for (const auto& R : real_shifts()) {
            Vec d = y;
            for (int a = 0; a < n_; ++a) d[a] += R[a];
            double r = norm2(d);
            if (r < 1e-14) throw std::invalid_argument("TorusGreen: evaluation at the singularity");
            s += (n_ == 2) ? expint_e1(eta_ * eta_ * r * r) / (4.0 * pi)
                           : std::erfc(eta_ * r) / (4.0 * pi * r);
        }
        return s;
    }

    void build_ktable() {
        std::vector<int> m(n_, 0);
        std::function<void(int)> rec = [&](int a) {
            if (a == n_) {
                bool zero = true;
                for (int v : m) zero &= (v == 0);
                if (zero) return;
                Vec k(n_);
                double k2 = 0.0;
                for (int b = 0; b < n_; ++b) {
                    k[b] = 2.0 * pi * m[b] / L_[b];
                    k2 += k[b] * k[b];
                }
                ktable_.emplace_back(k2, k);
                return;
            }
            for (int v = -krange_[a]; v <= krange_[a]; ++v) {
                m[a] = v;
                rec(a + 1);
            }
        };
        rec(0);
    }

    double k_sum(const Vec& y) const {
        double s = 0.0;
        for (const auto& [k2, kv] : ktable_)
            s += std::exp(-k2 / (4.0 * eta_ * eta_)) * std::cos(dot(kv, y)) / (vol_ * k2);
        return s;
    }

    int n_;
    Vec L_;
    double vol_ = 1.0, eta_ = 3.0;
    int real_range_ = 2;
    std::vector<int> krange_;
    std::vector<std::pair<double, Vec>> ktable_;
    mutable bool const_cached_ = false;
    mutable double const_val_ = 0.0;
};

}  // namespace exdom::lattice
