#pragma once

// Bounded harmonic extensions to the exterior of the unit ball, the dual
// extension of linear boundary data, and the continuous inward blend.
//
// The extension of boundary data phi = sum_j phi_j (degree-j harmonics) is
// H_phi(x) = sum_j |x|^{2-n-j} phi_j(x/|x|); each degree decays like
// r^{2-n-j}, so mean-zero data decays like r^{1-n}.

#include "exdom/spherical.hpp"

namespace exdom::ext {

using spherical::Basis;
using spherical::SphereFn;

struct ExteriorHarmonic {
    std::shared_ptr<const Basis> basis;
    Vec coeffs;  // harmonic coefficients of the boundary trace

    int dim() const { return basis->dim(); }

    /// Value at any x with |x| >= 1 (truncated beyond the carried cutoff).
    double eval(const Vec& x) const {
        double r = norm2(x);
        if (r < 1.0 - 1e-12) throw std::invalid_argument("ExteriorHarmonic: |x| >= 1 required");
        Vec u = x;
        for (auto& v : u) v /= r;
        Vec vals = basis->eval_all(u);
        const int n = dim();
        double s = 0.0;
        for (int k = 0; k < basis->count(); ++k) {
            if (coeffs[k] == 0.0) continue;
            int j = basis->degree_of(k);
            s += coeffs[k] * std::pow(r, 2 - n - j) * vals[k];
        }
        return s;
    }

    /// Radial derivative at |x| = 1 in the given unit direction.
    double radial_derivative_at_boundary(const Vec& u) const {
        Vec vals = basis->eval_all(u);
        const int n = dim();
        double s = 0.0;
        for (int k = 0; k < basis->count(); ++k) {
            int j = basis->degree_of(k);
            s += coeffs[k] * (2 - n - j) * vals[k];
        }
        return s;
    }

    /// Boundary trace as a SphereFn.
    SphereFn boundary() const {
        SphereFn f = SphereFn::zero(basis);
        f.coeffs = coeffs;
        return spherical::reconstruct(f);
    }
};

/// Bounded harmonic extension of decomposed boundary data.
inline ExteriorHarmonic extend(const SphereFn& phi) {
    if (!phi.coeffs) throw std::invalid_argument("extend: undecomposed input");
    ExteriorHarmonic h;
    h.basis = phi.basis;
    h.coeffs = *phi.coeffs;
    return h;
}

/// Extension of the linear function <y, a> on the unit sphere:
/// G_a(y) = |y|^{-n} <y, a>.
inline ExteriorHarmonic dual_extension(std::shared_ptr<const Basis> basis, const Vec& a) {
    const int n = basis->dim();
    if (n <= 3) {
        SphereFn f = SphereFn::from_function(basis, [&](const Vec& u) { return dot(u, a); });
        return extend(spherical::decompose(f, std::min(basis->max_degree(), 1)));
    }
    // Quadrature is Monte Carlo for n >= 4; project the polynomial exactly.
    ExteriorHarmonic h;
    h.basis = basis;
    h.coeffs.assign(basis->count(), 0.0);
    spherical::Poly lin;
    lin.n = n;
    for (int i = 0; i < n; ++i) {
        spherical::MultiIndex e(n, 0);
        e[i] = 1;
        lin.add_term(e, a[i]);
    }
    for (int k = basis->degree_offset(1); k < basis->degree_offset(2); ++k)
        h.coeffs[k] = spherical::sphere_inner(lin, basis->poly(k));
    return h;
}

/// Closed-form evaluation of the dual extension (used as an oracle).
inline double dual_extension_value(const Vec& a, const Vec& y) {
    double r = norm2(y);
    return std::pow(r, -static_cast<double>(a.size())) * dot(y, a);
}

/// Continuous inward blend at scale eps: zero inside eps/2, linear ramp
/// (2|x|/eps - 1) times the boundary trace up to eps, the harmonic extension
/// beyond. The ramp is linear exactly; the blend is only ever integrated.
inline double blend_inward(const ExteriorHarmonic& h, double eps, const Vec& x) {
    if (eps <= 0.0) throw std::invalid_argument("blend_inward: eps > 0 required");
    double r = norm2(x);
    if (r <= 0.5 * eps) return 0.0;
    Vec u = x;
    for (auto& v : u) v /= r;
    if (r <= eps) {
        double ramp = 2.0 * r / eps - 1.0;
        SphereFn b = h.boundary();
        // boundary value in direction u
        SphereFn bb = b;
        return ramp * bb.eval(u);
    }
    Vec y = (1.0 / eps) * x;
    return h.eval(y);
}

struct DecaySlope {
    double slope = 0.0;
    bool zero_field = false;
};

/// Least-squares slope of log sup |H| against log r over r in [4, 64].
/// Requires mean-zero boundary data (constant component would decay slower).
inline DecaySlope decay_slope(const ExteriorHarmonic& h) {
    if (std::fabs(h.coeffs[0]) > 1e-12 * (1.0 + norm2(h.coeffs)))
        throw std::invalid_argument("decay_slope: mean component present");
    double cmax = 0.0;
    for (double c : h.coeffs) cmax = std::max(cmax, std::fabs(c));
    if (cmax == 0.0) return {0.0, true};
    Vec rs, sups;
    for (double r = 4.0; r <= 64.0; r *= 2.0) {
        double sup = 0.0;
        for (const auto& u : h.basis->nodes()) {
            Vec x = r * u;
            sup = std::max(sup, std::fabs(h.eval(x)));
        }
        rs.push_back(r);
        sups.push_back(sup);
    }
    return {loglog_slope(rs, sups), false};
}

}  // namespace exdom::ext
