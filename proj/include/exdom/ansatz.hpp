#pragma once

// The approximate eigenfunction built from the ground state, the Green
// function, and the blended exterior correction; the boundary-mismatch trace
// N(eps, Lambda, phi); the fixed-point fit of (Lambda, phi); and the
// eigenvalue coefficient mu.
//
// Field (n >= 3):  phi0 - eps^{n-2} (phi0(p) + Lambda) Gamma_p + chi Hblend
//        (n = 2):  phi0 - (log eps)^{-1} (phi0(p) + Lambda) Gamma_p + chi Hblend
// The global correction w is deliberately not assembled; its smallness shows
// up as the gap against the discretized eigenfunction.

#include <cstdio>

#include "exdom/exterior.hpp"
#include "exdom/geometry.hpp"
#include "exdom/green.hpp"
#include "exdom/lattice.hpp"

namespace exdom::ansatz {

using geom::ModelManifold;
using spherical::Basis;
using spherical::SphereFn;

inline double eps_weight(int n, double eps) {
    return (n >= 3) ? std::pow(eps, n - 2.0) : 1.0 / std::log(eps);
}

/// Quintic smoothstep cutoff: 1 for r <= R0, 0 for r >= 2 R0.
inline double cutoff_chi(double r, double R0) {
    if (r <= R0) return 1.0;
    if (r >= 2.0 * R0) return 0.0;
    double s = (r - R0) / R0;
    return 1.0 - (10.0 * s * s * s - 15.0 * s * s * s * s + 6.0 * s * s * s * s * s);
}

struct AnsatzState {
    ModelManifold model;
    Vec p;
    double eps = 0.0;
    double Lambda = 0.0;
    SphereFn phi;  // mean-zero boundary correction, decomposed
    double phi0p = 0.0;
    double R0 = 0.0;

    std::shared_ptr<lattice::TorusGreen> torus_green;        // flat tori: exact
    std::optional<green::GreenExpansion> local_green;        // otherwise: local expansion
    ext::ExteriorHarmonic hext;

    /// Green function value at displacement d from p (model coordinates).
    double gamma(const Vec& d) const {
        if (torus_green) return green::normalization_constant(model.n) * torus_green->value(d);
        return local_green->eval(d);
    }

    /// Assembled field at model point x (displacement handled internally).
    double field(const Vec& x) const {
        Vec d(model.n);
        for (int a = 0; a < model.n; ++a) d[a] = x[a] - p[a];
        if (torus_green) {
            for (int a = 0; a < model.n; ++a) {
                double L = model.lengths[a];
                d[a] -= L * std::floor(d[a] / L + 0.5);
            }
        }
        double r = norm2(d);
        double v = model.phi0(x) - eps_weight(model.n, eps) * (phi0p + Lambda) * gamma(d);
        double chi = cutoff_chi(r, R0);
        if (chi != 0.0) v += chi * ext::blend_inward(hext, eps, d);
        return v;
    }
};

/// Build the evaluable state. Errors: eps beyond the validity radius, and
/// closed curved models in dimensions 2 and 3 (no local expansion there).
inline AnsatzState assemble(const ModelManifold& m, const Vec& p, double eps, double Lambda,
                            const SphereFn& phi, double validity_radius = 0.0) {
    AnsatzState st;
    st.model = m;
    st.p = p;
    st.eps = eps;
    st.Lambda = Lambda;
    if (!phi.coeffs) throw std::invalid_argument("assemble: phi must be decomposed");
    st.phi = phi;
    st.phi0p = m.phi0(p);
    double vr = validity_radius > 0.0 ? validity_radius : m.validity_radius();
    st.R0 = 0.5 * vr;
    if (eps <= 0.0 || eps > 0.8 * st.R0)
        throw std::invalid_argument("assemble: eps too large for the validity radius");
    if (!m.flat() && m.n <= 3)
        throw std::invalid_argument(
            "assemble: closed curved models in dimension <= 3 have no local expansion");
    if (m.kind == geom::ModelKind::Torus) {
        st.torus_green = std::make_shared<lattice::TorusGreen>(m.n, m.lengths);
    } else {
        st.local_green = green::local_expansion(m.curvature_at(p), m.lambda0(), m.n);
    }
    st.hext = ext::extend(st.phi);
    return st;
}

/// Trace of the assembled field on |x - p| = eps, as a SphereFn on the
/// basis carried by phi: N(eps, Lambda, phi).
inline SphereFn boundary_mismatch(const AnsatzState& st) {
    SphereFn out = SphereFn::zero(st.phi.basis);
    for (std::size_t k = 0; k < out.samples.size(); ++k) {
        const Vec& dir = st.phi.basis->nodes()[k];
        Vec x(st.model.n);
        for (int a = 0; a < st.model.n; ++a) x[a] = st.p[a] + st.eps * dir[a];
        out.samples[k] = st.field(x);
    }
    return spherical::decompose(out, st.phi.basis->max_degree());
}

struct FitResult {
    double Lambda = 0.0;
    SphereFn phi;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Fixed-point iteration on (Lambda, phi): Lambda absorbs the mean of N
/// (the Lambda-derivative of N is -1 at leading order), phi absorbs the
/// fluctuation (phi-derivative is +1).
inline FitResult fit(const ModelManifold& m, const Vec& p, double eps,
                     std::shared_ptr<const Basis> basis, double tol = 1e-10, int maxit = 60,
                     double validity_radius = 0.0) {
    FitResult out;
    out.phi = SphereFn::zero(basis);
    if (eps == 0.0) {
        out.converged = true;
        return out;
    }
    double Lambda = 0.0;
    SphereFn phi = SphereFn::zero(basis);
    const double vol = sphere_volume(m.n);
    for (int it = 0; it < maxit; ++it) {
        auto st = assemble(m, p, eps, Lambda, phi, validity_radius);
        auto N = boundary_mismatch(st);
        double meanN = N.quad_integral() / vol;
        out.residual = N.linf_norm();
        out.iterations = it;
        if (out.residual <= tol) {
            out.converged = true;
            break;
        }
        Lambda += meanN;
        for (std::size_t i = 0; i < phi.samples.size(); ++i) {
            double y0 = basis->value_at_node(0, 0);
            (void)y0;
            phi.samples[i] -= (N.samples[i] - meanN);
        }
        phi = spherical::decompose(phi, basis->max_degree());
        (*phi.coeffs)[0] = 0.0;  // keep the correction mean-free
        phi = spherical::reconstruct(phi);
    }
    out.Lambda = Lambda;
    out.phi = phi;
    if (!out.converged) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "ansatz fit did not converge; residual %.3e", out.residual);
        throw std::runtime_error(buf);
    }
    return out;
}

/// Eigenvalue coefficient. Leading term c_n phi0(p)(phi0(p) + Lambda); for a
/// nonconstant ground state the blend-integral corrections are evaluated
/// numerically in polar coordinates around p (they vanish identically when
/// phi0 is constant, since the blend has mean-zero angular dependence).
inline double mu(const ModelManifold& m, const Vec& p, double Lambda, const SphereFn& phi,
                 double eps, double validity_radius = 0.0) {
    const int n = m.n;
    const double phi0p = m.phi0(p);
    double lead = green::normalization_constant(n) * phi0p * (phi0p + Lambda);
    if (!m.case1() || !phi.coeffs || eps == 0.0) return lead;
    double pnorm = 0.0;
    for (double c : *phi.coeffs) pnorm += c * c;
    if (pnorm == 0.0) return lead;

    // Int over M of chi * Hblend * phi0 and of B * phi0, polar around p.
    auto basis = phi.basis;
    auto hext = ext::extend(phi);
    const double R0 = 0.5 * (validity_radius > 0.0 ? validity_radius : m.validity_radius());
    auto chi = [&](double r) { return cutoff_chi(r, R0); };
    auto dchi = [&](double r) {
        const double fd = 1e-6 * R0;
        return (chi(r + fd) - chi(r - fd)) / (2 * fd);
    };
    auto d2chi = [&](double r) {
        const double fd = 1e-4 * R0;
        return (chi(r + fd) - 2.0 * chi(r) + chi(r - fd)) / (fd * fd);
    };
    // radial panels: [eps/2, eps] (ramp), [eps, R0], [R0, 2 R0]
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    double int_chiH = 0.0, int_B = 0.0;
    auto angular = [&](double r, bool ramp_region) {
        // returns (H~ phi0, Delta H~ phi0, dr H phi0) angular integrals at radius r
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < basis->node_count(); ++k) {
            const Vec& dir = basis->nodes()[k];
            Vec x(n);
            for (int a = 0; a < n; ++a) x[a] = p[a] + r * dir[a];
            double w = basis->weights()[k] * m.phi0(x);
            double y = r / eps;
            // H~ value and radial pieces from the degree series
            double hv = 0.0, dhv = 0.0, lapv = 0.0;
            for (int kk = 0; kk < basis->count(); ++kk) {
                double c = hext.coeffs[kk];
                if (c == 0.0) continue;
                int j = basis->degree_of(kk);
                double Y = basis->value_at_node(kk, k);
                if (!ramp_region) {
                    double pw = std::pow(y, 2 - n - j);
                    hv += c * pw * Y;
                    dhv += c * (2 - n - j) * std::pow(y, 1 - n - j) / eps * Y;
                } else {
                    double ramp = 2.0 * y - 1.0;
                    hv += c * ramp * Y;
                    // Laplacian of ramp(r/eps) Y_j(theta) in polar coordinates
                    double dr_ramp = 2.0 / eps;
                    double lap =
                        dr_ramp * (n - 1.0) / r - ramp * spherical::harmonic_eigenvalue(n, j) / (r * r);
                    lapv += c * lap * Y;
                }
            }
            acc[0] += w * hv;
            acc[1] += w * lapv;
            acc[2] += w * dhv;
        }
        return acc;
    };
    auto add_panel = [&](double lo, double hi, bool ramp_region) {
        for (int q = 0; q < 8; ++q) {
            double r = 0.5 * (hi - lo) * gx[q] + 0.5 * (hi + lo);
            double jac = 0.5 * (hi - lo) * std::pow(r, n - 1);
            auto acc = angular(r, ramp_region);
            double c = chi(r);
            int_chiH += gw[q] * jac * c * acc[0];
            if (ramp_region) {
                int_B += gw[q] * jac * c * acc[1];  // chi * Delta H~
            } else {
                // H~ Delta(chi) + 2 dH/dr dchi/dr  (chi radial)
                double lap_chi = d2chi(r) + (n - 1.0) / r * dchi(r);
                int_B += gw[q] * jac * (acc[0] * lap_chi + 2.0 * acc[2] * dchi(r));
            }
        }
    };
    add_panel(0.5 * eps, eps, true);
    add_panel(eps, R0, false);
    add_panel(R0, 2.0 * R0, false);

    const double W = eps_weight(n, eps);
    const double lambda0 = m.lambda0();
    return (lead - (int_B + lambda0 * int_chiH) / W) / (1.0 + int_chiH);
}

}  // namespace exdom::ansatz
