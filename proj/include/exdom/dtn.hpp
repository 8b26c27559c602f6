#pragma once

// The radial profile of the rescaled limit problem and the linearized
// boundary operator H, with two implementations: the definitional one via a
// harmonic extension, and the diagonal spectral multiplier
//   m_j = (n-2)(j-1) phi0p   (n >= 3),   m_j = (j-1) phi0p   (n = 2),
// plus the inverse on the orthogonal complement of V0 + V1.

#include "exdom/exterior.hpp"
#include "exdom/spherical.hpp"

namespace exdom::dtn {

using spherical::Basis;
using spherical::SphereFn;

/// phi1(r) = phi0p (1 - r^{2-n}) for n >= 3, phi0p log r for n = 2.
struct RadialProfile {
    int n = 3;
    double phi0p = 1.0;

    double value(double r) const {
        if (r < 1.0) throw std::invalid_argument("RadialProfile: r >= 1 required");
        return (n >= 3) ? phi0p * (1.0 - std::pow(r, 2.0 - n)) : phi0p * std::log(r);
    }
    double d1(double r) const {
        return (n >= 3) ? phi0p * (n - 2.0) * std::pow(r, 1.0 - n) : phi0p / r;
    }
    double d2(double r) const {
        return (n >= 3) ? phi0p * (n - 2.0) * (1.0 - n) * std::pow(r, -static_cast<double>(n))
                        : -phi0p / (r * r);
    }
};

/// First and second radial derivatives of phi1 at r = 1.
inline std::pair<double, double> profile_derivatives(int n, double phi0p) {
    if (n < 2) throw std::invalid_argument("profile_derivatives: n >= 2 required");
    if (n == 2) return {phi0p, -phi0p};
    return {(n - 2.0) * phi0p, -(n - 2.0) * (n - 1.0) * phi0p};
}

/// Diagonal multiplier of H on degree-j harmonics.
inline double multiplier(int n, int j, double phi0p) {
    return (n >= 3) ? (n - 2.0) * (j - 1.0) * phi0p : (j - 1.0) * phi0p;
}

namespace detail {
inline void require_mean_zero(const SphereFn& v) {
    if (v.coeffs) {
        if (std::fabs((*v.coeffs)[0]) > 1e-10 * std::max(1e-30, norm2(*v.coeffs)))
            throw std::invalid_argument("H: input must have zero mean");
        return;
    }
    double scale = std::max(1e-30, v.l2_norm());
    if (std::fabs(v.quad_integral()) / std::sqrt(sphere_volume(v.dim())) > 1e-10 * scale)
        throw std::invalid_argument("H: input must have zero mean");
}
}  // namespace detail

/// H via its definition: solve the exterior problem with boundary data
/// -d_r phi1 * vbar, take the radial derivative of the solution at r = 1 and
/// add d2_r phi1 * vbar.
inline SphereFn apply_H_definitional(const SphereFn& vbar, double phi0p) {
    detail::require_mean_zero(vbar);
    const int n = vbar.dim();
    auto [d1, d2] = profile_derivatives(n, phi0p);
    SphereFn data = vbar;
    for (auto& s : data.samples) s *= -d1;
    auto psi = ext::extend(spherical::decompose(data, vbar.basis->max_degree()));
    // Radial derivative of the extension per degree: factor (2 - n - j).
    SphereFn out = SphereFn::zero(vbar.basis);
    for (int k = 0; k < vbar.basis->count(); ++k) {
        int j = vbar.basis->degree_of(k);
        (*out.coeffs)[k] = (2.0 - n - j) * psi.coeffs[k];
    }
    out = spherical::reconstruct(out);
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += d2 * vbar.samples[i];
    return spherical::decompose(out, vbar.basis->max_degree());
}

/// H via the spectral multiplier.
inline SphereFn apply_H_multiplier(const SphereFn& vbar, double phi0p) {
    detail::require_mean_zero(vbar);
    const int n = vbar.dim();
    SphereFn g = vbar.coeffs ? vbar : spherical::decompose(vbar, vbar.basis->max_degree());
    SphereFn out = SphereFn::zero(vbar.basis);
    for (int k = 0; k < vbar.basis->count(); ++k) {
        int j = vbar.basis->degree_of(k);
        (*out.coeffs)[k] = multiplier(n, j, phi0p) * (*g.coeffs)[k];
    }
    return spherical::reconstruct(out);
}

/// Inverse of H on the orthogonal complement of V0 + V1: divide degree-j
/// coefficients by m_j for j >= 2. Inputs with V0 or V1 content beyond the
/// kernel tolerance are rejected.
inline SphereFn invert_H(const SphereFn& f, double phi0p, double kernel_tol = 1e-10) {
    if (phi0p == 0.0) throw std::invalid_argument("invert_H: phi0p = 0");
    const int n = f.dim();
    SphereFn g = f.coeffs ? f : spherical::decompose(f, f.basis->max_degree());
    double nf = std::max(1e-300, norm2(*g.coeffs));
    double bad = std::fabs((*g.coeffs)[0]);
    for (int k = f.basis->degree_offset(1); k < f.basis->degree_offset(2); ++k)
        bad = std::max(bad, std::fabs((*g.coeffs)[k]));
    if (bad > kernel_tol * nf)
        throw std::invalid_argument("invert_H: kernel obstruction (V0 or V1 content)");
    SphereFn out = SphereFn::zero(f.basis);
    for (int k = f.basis->degree_offset(2); k < f.basis->count(); ++k) {
        int j = f.basis->degree_of(k);
        (*out.coeffs)[k] = (*g.coeffs)[k] / multiplier(n, j, phi0p);
    }
    return spherical::reconstruct(out);
}

}  // namespace exdom::dtn
