#pragma once

// Exact verification of the four sphere-integral identities behind the
// third-order flux computation, by expanding each polynomial integrand into
// monomials and integrating with the Gamma-function formula.

#include "exdom/geometry.hpp"
#include "exdom/spherical.hpp"

namespace exdom::spherical {

struct IdentityResult {
    int lemma = 0;   // 1..4
    int sigma = 0;   // coordinate index, 0-based
    double computed = 0.0;
    double claimed = 0.0;
    double residual() const {
        double scale = std::max(1.0, std::fabs(claimed));
        return std::fabs(computed - claimed) / scale;
    }
};

namespace detail {

class MonomialCache {
  public:
    explicit MonomialCache(int n) : n_(n) {}
    /// Integral of a product of coordinates given by a list of indices.
    double product(std::initializer_list<int> idx) {
        MultiIndex a(n_, 0);
        for (int i : idx) ++a[i];
        auto it = cache_.find(a);
        if (it != cache_.end()) return it->second;
        double v = monomial_integral(n_, a);
        cache_.emplace(a, v);
        return v;
    }

  private:
    int n_;
    std::map<MultiIndex, double> cache_;
};

}  // namespace detail

/// Evaluate the four identities for every sigma. The claimed right-hand
/// sides use the same trace conventions as the curvature container, so the
/// identities are covariant under the overall sign convention.
inline std::vector<IdentityResult> verify_appendix(int n, const geom::CurvatureData& curv) {
    if (curv.n != n) throw std::invalid_argument("verify_appendix: dimension mismatch");
    {
        auto res = geom::symmetry_residuals(curv);
        if (res.antisym_ik > 1e-10) throw std::invalid_argument("curvature symmetry violation: antisymmetry in (i,k)");
        if (res.antisym_jl > 1e-10) throw std::invalid_argument("curvature symmetry violation: antisymmetry in (j,l)");
        if (res.pair > 1e-10) throw std::invalid_argument("curvature symmetry violation: pair exchange");
        if (res.bianchi1 > 1e-10) throw std::invalid_argument("curvature symmetry violation: first Bianchi");
        if (res.bianchi2_trace > 1e-10) throw std::invalid_argument("curvature symmetry violation: contracted second Bianchi");
        if (res.trace_consistency > 1e-10) throw std::invalid_argument("curvature symmetry violation: trace consistency");
    }
    detail::MonomialCache mc(n);
    const double vol = sphere_volume(n);
    std::vector<IdentityResult> out;

    for (int s = 0; s < n; ++s) {
        // Lemma 1: five-index curvature-derivative contraction against six coordinates.
        double v1 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        for (int m = 0; m < n; ++m) {
                            double c = curv.dR[curv.i5(i, k, j, l, m)];
                            if (c != 0.0) v1 += c * mc.product({i, j, k, l, m, s});
                        }
        out.push_back({1, s, v1, 0.0});

        // Lemma 2: contracted derivative tensor against four coordinates.
        double v2 = 0.0;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    double c = curv.contracted_dR(k, j, l);
                    if (c != 0.0) v2 += c * mc.product({j, k, l, s});
                }
        out.push_back({2, s, v2, 0.0});

        // Lemma 3: Ricci derivative against four coordinates.
        double v3 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
                for (int m = 0; m < n; ++m) {
                    double c = curv.dRic[(i * n + l) * n + m];
                    if (c != 0.0) v3 += c * mc.product({i, l, m, s});
                }
        out.push_back({3, s, v3, 2.0 / (n * (n + 2.0)) * vol * curv.dScal[s]});

        // Lemma 4: scalar-curvature gradient against two coordinates.
        double v4 = 0.0;
        for (int t = 0; t < n; ++t) v4 += curv.dScal[t] * mc.product({t, s});
        out.push_back({4, s, v4, vol / n * curv.dScal[s]});
    }
    return out;
}

}  // namespace exdom::spherical
