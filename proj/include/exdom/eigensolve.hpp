#pragma once

// First-eigenpair solves on flat 2D/3D models with an excised hole, flux
// traces on the hole boundary, the Hadamard shape derivative, the volume
// normalization v0(eps, vbar), and asymptotic-law fitting.

#include "exdom/geometry.hpp"
#include "exdom/grid.hpp"
#include "exdom/spherical.hpp"

namespace exdom::eig {

using geom::ModelManifold;
using spherical::Basis;
using spherical::SphereFn;

/// Hole boundary as a radial graph over the geodesic sphere:
/// rho(theta) = eps (1 + v0 + vbar(theta)).
struct HoleShape {
    Vec center;
    double eps = 0.0;
    double v0 = 0.0;
    std::optional<SphereFn> vbar;  // decomposed, mean-zero

    double rho(const Vec& dir) const {
        double v = 1.0 + v0;
        if (vbar) v += vbar->eval(dir);
        return eps * v;
    }
    double rho_max() const {
        double m = 1.0 + v0;
        if (vbar) m += vbar->linf_norm();
        return eps * m;
    }
    void validate(double validity_radius) const {
        double lo = 1.0 + v0;
        if (vbar) lo -= vbar->linf_norm();
        if (!(eps > 0.0) || lo <= 0.0)
            throw std::invalid_argument("HoleShape: 1 + v0 + vbar must stay positive");
        if (rho_max() > validity_radius)
            throw std::invalid_argument("HoleShape: radius exceeds the validity radius");
    }
};

struct EigenResult {
    double lambda = 0.0;
    Vec u;       // L2-normalized grid field, positive in the domain
    double h = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double residual = 0.0;
    std::shared_ptr<Discretization> grid;
};

namespace detail {

inline Closure closure_of(const ModelManifold& m) {
    switch (m.kind) {
        case geom::ModelKind::Torus: return Closure::Periodic;
        case geom::ModelKind::DirichletBox: return Closure::Dirichlet;
        case geom::ModelKind::NeumannBox: return Closure::Neumann;
        default: throw std::invalid_argument("grid solver supports flat models only");
    }
}

inline HoleGeometry hole_geometry(const HoleShape& hole) {
    HoleGeometry hg;
    hg.center = hole.center;
    hg.rho_max = hole.rho_max();
    hg.rho = [hole](const Vec& u) { return hole.rho(u); };
    return hg;
}

}  // namespace detail

struct FirstEigenOptions {
    double rel_tol = 1e-9;
    int max_outer = 100;
    const Vec* warm_start = nullptr;
    double warm_lambda = 0.0;  // shifts immediately when a warm pair is given
    bool cascadic = false;     // coarse-grid warm start (halved resolution)
    double min_nodes_across = 2.5;  // hard floor on hole resolution
};

inline std::shared_ptr<Discretization> make_grid(const ModelManifold& m, int nodes_per_unit,
                                                 const HoleShape* hole) {
    if (m.n < 2 || m.n > 3) throw std::invalid_argument("grid solver: 2D/3D models only");
    auto g = std::make_shared<Discretization>(m.n, m.lengths, nodes_per_unit,
                                              detail::closure_of(m));
    if (hole && hole->eps > 0.0) {
        hole->validate(1e18);  // positivity; validity radius is a model concern
        // hole must not touch the outer boundary
        if (m.kind != geom::ModelKind::Torus) {
            for (int a = 0; a < m.n; ++a)
                if (hole->center[a] - hole->rho_max() < 2 * g->h ||
                    hole->center[a] + hole->rho_max() > m.lengths[a] - 2 * g->h)
                    throw std::invalid_argument("first_eigen: hole touches the outer boundary");
        }
        g->cut_hole(detail::hole_geometry(*hole));
    } else {
        g->finalize_no_hole();
    }
    return g;
}

/// Smallest eigenpair of the Dirichlet(-hole) problem, inverse power
/// iteration with shift. For a closed flat model without a hole the pair is
/// (0, const) exactly and is returned without solving.
inline EigenResult first_eigen(const ModelManifold& m, const HoleShape& hole, int nodes_per_unit,
                               const FirstEigenOptions& opt = {}) {
    EigenResult res;
    const bool no_hole = hole.eps == 0.0;
    if (no_hole && !m.case1()) {
        auto g = make_grid(m, nodes_per_unit, nullptr);
        res.grid = g;
        res.h = g->h;
        res.lambda = 0.0;
        res.u.assign(g->total, 1.0);
        double nrm = std::sqrt(g->dot_active(res.u, res.u) * g->cell_volume());
        for (auto& v : res.u) v /= nrm;
        return res;
    }
    if (!no_hole) {
        double across = 2.0 * hole.eps / (1.0 / nodes_per_unit);
        if (across < opt.min_nodes_across)
            throw std::invalid_argument("first_eigen: grid does not resolve the hole");
    }
    auto g = make_grid(m, nodes_per_unit, no_hole ? nullptr : &hole);
    Vec warm;
    const Vec* warm_ptr = opt.warm_start;
    bool coarse_resolves =
        no_hole || 2.0 * hole.eps * (nodes_per_unit / 2) >= std::max(opt.min_nodes_across, 4.0);
    if (!warm_ptr && opt.cascadic && nodes_per_unit >= 64 && coarse_resolves) {
        FirstEigenOptions copt = opt;
        copt.cascadic = nodes_per_unit / 2 >= 64;
        copt.warm_start = nullptr;
        copt.rel_tol = std::max(opt.rel_tol, 1e-7);
        auto coarse = first_eigen(m, hole, nodes_per_unit / 2, copt);
        warm = prolong(*coarse.grid, coarse.u, *g);
        warm_ptr = &warm;
        FirstEigenOptions self = opt;
        self.warm_lambda = coarse.lambda;
        Vec u2;
        auto st2 = inverse_power(*g, u2, opt.rel_tol, opt.max_outer, warm_ptr, self.warm_lambda);
        if (!st2.converged)
            throw std::runtime_error("first_eigen: inverse iteration did not converge");
        double nrm2v = std::sqrt(g->dot_active(u2, u2) * g->cell_volume());
        for (auto& v : u2) v /= nrm2v;
        res.lambda = st2.lambda;
        res.u = std::move(u2);
        res.h = g->h;
        res.grid = g;
        res.outer_iterations = st2.outer_iterations;
        res.inner_iterations = st2.inner_iterations;
        res.residual = st2.residual;
        return res;
    }
    Vec u;
    auto st = inverse_power(*g, u, opt.rel_tol, opt.max_outer, warm_ptr, opt.warm_lambda);
    if (!st.converged)
        throw std::runtime_error("first_eigen: inverse iteration did not converge (residual " +
                                 std::to_string(st.residual) + ")");
    // L2 normalization in the grid measure, positive sign.
    double nrm = std::sqrt(g->dot_active(u, u) * g->cell_volume());
    for (auto& v : u) v /= nrm;
    res.lambda = st.lambda;
    res.u = std::move(u);
    res.h = g->h;
    res.grid = g;
    res.outer_iterations = st.outer_iterations;
    res.inner_iterations = st.inner_iterations;
    res.residual = st.residual;
    return res;
}

/// Outward (into the domain) unit normal of the hole boundary at parameter
/// direction dir, via the gradient of |x - p| - rho((x-p)/|x-p|).
inline Vec hole_normal(const HoleShape& hole, const Vec& dir) {
    const int d = static_cast<int>(hole.center.size());
    const double r0 = hole.rho(dir);
    Vec x = r0 * dir;  // displacement from center
    const double fd = 1e-5 * hole.eps;
    Vec grad(d);
    for (int a = 0; a < d; ++a) {
        Vec xp = x, xm = x;
        xp[a] += fd;
        xm[a] -= fd;
        auto phi = [&](const Vec& y) {
            double r = norm2(y);
            Vec u = y;
            for (auto& v : u) v /= r;
            return r - hole.rho(u);
        };
        grad[a] = (phi(xp) - phi(xm)) / (2 * fd);
    }
    return unit(grad);
}

/// Normal-derivative trace of the eigenfunction on the hole boundary,
/// sampled at the spherical quadrature nodes of the given basis. The normal
/// points into the domain, so the trace is positive.
inline SphereFn flux_trace(const EigenResult& res, const HoleShape& hole,
                           std::shared_ptr<const Basis> basis) {
    const auto& g = *res.grid;
    SphereFn out = SphereFn::zero(basis);
    const double h = g.h;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        const Vec& dir = basis->nodes()[k];
        Vec nu = hole_normal(hole, dir);
        double rho = hole.rho(dir);
        // one-sided third-order normal derivative with the boundary value 0:
        // u'(0) = (18 u(s) - 9 u(2s) + 2 u(3s)) / (6 s)
        double s_used = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
        for (int attempt = 0; attempt < 5 && s_used == 0.0; ++attempt) {
            double s1 = (2.0 + 0.5 * attempt) * h;
            Vec b(g.d), p1(g.d), p2(g.d), p3(g.d);
            for (int a = 0; a < g.d; ++a) {
                b[a] = hole.center[a] + rho * dir[a];
                p1[a] = b[a] + s1 * nu[a];
                p2[a] = b[a] + 2.0 * s1 * nu[a];
                p3[a] = b[a] + 3.0 * s1 * nu[a];
            }
            // points must be in the domain (outside the hole)
            Vec q1 = g.displacement(p1, hole.center), q2 = g.displacement(p2, hole.center);
            Vec q3 = g.displacement(p3, hole.center);
            if (g.has_hole && (g.hole.inside(q1) || g.hole.inside(q2) || g.hole.inside(q3)))
                continue;
            d1 = g.interpolate(res.u, p1);
            d2 = g.interpolate(res.u, p2);
            d3 = g.interpolate(res.u, p3);
            s_used = s1;
        }
        if (s_used == 0.0)
            throw std::runtime_error("flux_trace: insufficient grid resolution near boundary");
        out.samples[k] = (18.0 * d1 - 9.0 * d2 + 2.0 * d3) / (6.0 * s_used);
    }
    return spherical::decompose(out, basis->max_degree());
}

/// Boundary area element of the radial graph relative to the parameter
/// measure on S^{d-1}: rho^{d-1} sqrt(1 + |grad_S rho|^2 / rho^2).
inline double boundary_area_factor(const HoleShape& hole, const Vec& dir) {
    const int d = static_cast<int>(hole.center.size());
    double rho = hole.rho(dir);
    if (!hole.vbar) return std::pow(rho, d - 1);
    // |grad_S rho|^2 via the 0-homogeneous extension rho(x/|x|): its
    // Cartesian gradient at a unit vector is exactly the tangential gradient.
    const double fd = 1e-5;
    double g2 = 0.0;
    for (int a = 0; a < d; ++a) {
        Vec up = dir, um = dir;
        up[a] += fd;
        um[a] -= fd;
        double dr = (hole.rho(unit(up)) - hole.rho(unit(um))) / (2 * fd);
        g2 += dr * dr;
    }
    return std::pow(rho, d - 1) * std::sqrt(1.0 + g2 / (rho * rho));
}

/// Hadamard derivative of the first eigenvalue under a boundary velocity
/// field Xi (defined on parameter directions): with the into-domain normal,
/// d lambda/dt = + Int (du/dnu)^2 <Xi, nu> d(sigma).
inline double shape_derivative(const ModelManifold& m, const HoleShape& hole,
                               const std::function<Vec(const Vec&)>& Xi, int nodes_per_unit,
                               std::shared_ptr<const Basis> basis,
                               const EigenResult* precomputed = nullptr) {
    EigenResult res;
    if (precomputed) res = *precomputed;
    else res = first_eigen(m, hole, nodes_per_unit);
    auto flux = flux_trace(res, hole, basis);
    double s = 0.0;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        const Vec& dir = basis->nodes()[k];
        Vec nu = hole_normal(hole, dir);
        double xin = dot(Xi(dir), nu);
        s += basis->weights()[k] * sqr(flux.samples[k]) * xin * boundary_area_factor(hole, dir);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Volume normalization.
// ---------------------------------------------------------------------------

/// Geodesic-ball volume of the radial graph eps(1 + v0 + vbar) in the
/// expanded metric (sqrt(det g) from the normal-coordinate expansion; exact
/// for flat models).
inline double graph_volume(const geom::CurvatureData& curv, bool flat, double eps, double v0,
                           const SphereFn* vbar, std::shared_ptr<const Basis> basis) {
    const int d = basis->dim();
    double total = 0.0;
    // 8-point Gauss-Legendre on [0, rho(theta)]
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        const Vec& dir = basis->nodes()[k];
        double rho = eps * (1.0 + v0 + (vbar ? vbar->eval(dir) : 0.0));
        double inner;
        if (flat) {
            inner = std::pow(rho, d) / d;
        } else {
            inner = 0.0;
            for (int q = 0; q < 8; ++q) {
                double r = 0.5 * rho * (gx[q] + 1.0);
                Vec x(d);
                for (int a = 0; a < d; ++a) x[a] = r * dir[a];
                auto inv = geom::inverse_logdet_expansion(curv, x);
                double sqrtdet = std::exp(0.5 * inv.logdet);
                inner += gw[q] * sqrtdet * std::pow(r, d - 1);
            }
            inner *= 0.5 * rho;
        }
        total += basis->weights()[k] * inner;
    }
    return total;
}

/// Newton iteration for the constant v0 fixing Vol = eps^d Vol(B_1).
inline double volume_normalize(const ModelManifold& m, const Vec& p, double eps,
                               const SphereFn* vbar, std::shared_ptr<const Basis> basis) {
    const int d = m.n;
    auto curv = m.curvature_at(p);
    const bool flat = m.flat();
    const double target = std::pow(eps, d) * ball_volume(d);
    double v0 = 0.0;
    for (int it = 0; it < 60; ++it) {
        double vol = graph_volume(curv, flat, eps, v0, vbar, basis);
        double f = vol - target;
        if (std::fabs(f) <= 1e-12 * std::pow(eps, d)) return v0;
        // dVol/dv0 = Int sqrtdet(rho theta) rho^{d-1} eps dtheta
        double deriv = 0.0;
        for (std::size_t k = 0; k < basis->node_count(); ++k) {
            const Vec& dir = basis->nodes()[k];
            double rho = eps * (1.0 + v0 + (vbar ? vbar->eval(dir) : 0.0));
            double sqrtdet = 1.0;
            if (!flat) {
                Vec x(d);
                for (int a = 0; a < d; ++a) x[a] = rho * dir[a];
                sqrtdet = std::exp(0.5 * geom::inverse_logdet_expansion(curv, x).logdet);
            }
            deriv += basis->weights()[k] * sqrtdet * std::pow(rho, d - 1) * eps;
        }
        double step = f / deriv;
        if (!std::isfinite(step)) throw std::runtime_error("volume_normalize: Newton divergence");
        v0 -= step;
        if (std::fabs(step) > 0.5) throw std::runtime_error("volume_normalize: Newton divergence");
    }
    throw std::runtime_error("volume_normalize: Newton did not converge");
}

// ---------------------------------------------------------------------------
// Asymptotic fits.
// ---------------------------------------------------------------------------

struct AsymptoticFit {
    double mu_hat = 0.0;
    double intercept_aux = 0.0;  // slope in eps (n>=3) or the constant C0 (n=2)
};

/// n >= 3: least squares (lambda - lambda0)/eps^{n-2} = mu + beta eps.
/// n = 2:  lambda - lambda0 = mu / (log eps - C0), linearized exactly.
inline AsymptoticFit asymptotic_fit(int n, double lambda0, const Vec& eps, const Vec& lambda) {
    if (eps.size() != lambda.size() || eps.size() < 4)
        throw std::invalid_argument("asymptotic_fit: need at least 4 samples");
    AsymptoticFit out;
    if (n >= 3) {
        Vec y(eps.size());
        for (std::size_t i = 0; i < eps.size(); ++i)
            y[i] = (lambda[i] - lambda0) / std::pow(eps[i], n - 2.0);
        auto f = fit_line(eps, y);
        out.mu_hat = f.intercept;
        out.intercept_aux = f.slope;
    } else {
        // (lam-lam0) log eps = mu + C0 (lam-lam0)
        Vec x(eps.size()), y(eps.size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            x[i] = lambda[i] - lambda0;
            y[i] = (lambda[i] - lambda0) * std::log(eps[i]);
        }
        auto f = fit_line(x, y);
        out.mu_hat = f.intercept;
        out.intercept_aux = f.slope;  // C0
    }
    return out;
}

}  // namespace exdom::eig
