#pragma once

// Sums of terms  c * x^alpha * |x|^s * log(|x|)^m  (s integer, m in {0,1}).
// The class is closed under partial derivatives, which is all the local
// Green expansions need: exact evaluation, exact flat Laplacians, and exact
// restriction/radial-derivative algebra on the unit sphere.

#include "exdom/spherical.hpp"

namespace exdom::rpoly {

using spherical::MultiIndex;
using spherical::Poly;

struct RTerm {
    double c = 0.0;
    MultiIndex alpha;
    int rpow = 0;
    int lpow = 0;  // power of log|x|, 0 or 1
};

class RPoly {
  public:
    int n = 0;
    std::vector<RTerm> terms;

    RPoly() = default;
    explicit RPoly(int dim) : n(dim) {}

    void add(double c, MultiIndex a, int rpow, int lpow = 0) {
        if (c != 0.0) terms.push_back({c, std::move(a), rpow, lpow});
    }
    void add_poly(const Poly& p, int rpow, int lpow, double scale = 1.0) {
        for (auto& [a, c] : p.terms) add(scale * c, a, rpow, lpow);
    }

    RPoly& operator+=(const RPoly& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        return *this;
    }
    RPoly& operator*=(double s) {
        for (auto& t : terms) t.c *= s;
        return *this;
    }

    /// Merge identical (alpha, rpow, lpow) triples.
    void compress() {
        std::map<std::tuple<MultiIndex, int, int>, double> m;
        for (auto& t : terms) m[{t.alpha, t.rpow, t.lpow}] += t.c;
        terms.clear();
        for (auto& [k, c] : m)
            if (std::fabs(c) > 0.0) terms.push_back({c, std::get<0>(k), std::get<1>(k), std::get<2>(k)});
    }

    double eval(const Vec& x) const {
        double r2 = dot(x, x);
        double r = std::sqrt(r2);
        double lg = 0.5 * std::log(r2);
        double s = 0.0;
        for (const auto& t : terms) {
            double v = t.c;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < t.alpha[i]; ++k) v *= x[i];
            v *= std::pow(r, t.rpow);
            if (t.lpow == 1) v *= lg;
            s += v;
        }
        return s;
    }

    /// d/dx_i; closed in the class:
    /// d( x^a r^s log^m ) = a_i x^{a-e_i} r^s log^m
    ///                    + s x^{a+e_i} r^{s-2} log^m
    ///                    + m x^{a+e_i} r^{s-2} log^{m-1}.
    RPoly derivative(int i) const {
        RPoly out(n);
        for (const auto& t : terms) {
            if (t.alpha[i] > 0) {
                MultiIndex a = t.alpha;
                a[i] -= 1;
                out.add(t.c * t.alpha[i], std::move(a), t.rpow, t.lpow);
            }
            if (t.rpow != 0) {
                MultiIndex a = t.alpha;
                a[i] += 1;
                out.add(t.c * t.rpow, std::move(a), t.rpow - 2, t.lpow);
            }
            if (t.lpow >= 1) {
                MultiIndex a = t.alpha;
                a[i] += 1;
                out.add(t.c * t.lpow, std::move(a), t.rpow - 2, t.lpow - 1);
            }
        }
        out.compress();
        return out;
    }

    RPoly laplacian_flat() const {
        RPoly out(n);
        for (int i = 0; i < n; ++i) out += derivative(i).derivative(i);
        out.compress();
        return out;
    }

    /// Multiply by a plain polynomial.
    RPoly times(const Poly& p) const {
        RPoly out(n);
        for (const auto& t : terms)
            for (auto& [b, cb] : p.terms) {
                MultiIndex a = t.alpha;
                for (int i = 0; i < n; ++i) a[i] += b[i];
                out.add(t.c * cb, std::move(a), t.rpow, t.lpow);
            }
        out.compress();
        return out;
    }

    /// Restriction to |x| = 1 as a plain polynomial (log terms vanish there).
    Poly sphere_restriction() const {
        Poly p;
        p.n = n;
        for (const auto& t : terms)
            if (t.lpow == 0) p.add_term(t.alpha, t.c);
        return p;
    }

    /// Radial derivative evaluated on |x| = 1 as a plain polynomial:
    /// d_r (x^a r^s log^m)|_{r=1} = (|a|+s) x^a [m=0] + m x^a [m=1].
    Poly radial_derivative_sphere() const {
        Poly p;
        p.n = n;
        for (const auto& t : terms) {
            int d = 0;
            for (int a : t.alpha) d += a;
            if (t.lpow == 0)
                p.add_term(t.alpha, t.c * (d + t.rpow));
            else if (t.lpow == 1)
                p.add_term(t.alpha, t.c);
        }
        return p;
    }

    /// Substitute x = eps * y, splitting log(eps |y|) = log eps + log |y|.
    /// Returns the expansion as an RPoly in y.
    RPoly rescale(double eps) const {
        RPoly out(n);
        double le = std::log(eps);
        for (const auto& t : terms) {
            int d = 0;
            for (int a : t.alpha) d += a;
            double scale = t.c * std::pow(eps, d + t.rpow);
            if (t.lpow == 0) {
                out.add(scale, t.alpha, t.rpow, 0);
            } else {
                out.add(scale * le, t.alpha, t.rpow, 0);
                out.add(scale, t.alpha, t.rpow, 1);
            }
        }
        out.compress();
        return out;
    }
};

}  // namespace exdom::rpoly
