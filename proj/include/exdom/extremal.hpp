#pragma once

// The overdetermined-flux operator F, the modified Newton problem
// F(p, eps, vbar) + <a, .> = 0 with the linearization frozen at the spectral
// operator H, relocation of the hole center to kill the degree-1 obstruction,
// the linearization-gap probe, and the extremality certificate.

#include "exdom/ansatz.hpp"
#include "exdom/dtn.hpp"
#include "exdom/eigensolve.hpp"

namespace exdom::extremal {

using eig::EigenResult;
using eig::HoleShape;
using geom::ModelManifold;
using spherical::Basis;
using spherical::SphereFn;

struct FResult {
    SphereFn F;        // flux trace minus its measure-weighted mean
    double v0 = 0.0;
    double flux_mean = 0.0;
    EigenResult eig;
    HoleShape hole;
};

/// Map between vectors a and degree-1 coefficient blocks: <a, y> restricted
/// to the sphere decomposes as sum_i a_i y_i with <y_i, Y_k> the block
/// matrix; the y_i are orthogonal of squared norm Vol/n.
struct Degree1Map {
    std::shared_ptr<const Basis> basis;
    std::vector<Vec> M;  // M[i][k-block]: <y_i, Y_{block k}>

    explicit Degree1Map(std::shared_ptr<const Basis> b) : basis(std::move(b)) {
        const int n = basis->dim();
        const int k0 = basis->degree_offset(1), k1 = basis->degree_offset(2);
        M.assign(n, Vec(k1 - k0, 0.0));
        for (int i = 0; i < n; ++i)
            for (int k = k0; k < k1; ++k) {
                double s = 0.0;
                for (std::size_t q = 0; q < basis->node_count(); ++q)
                    s += basis->weights()[q] * basis->nodes()[q][i] * basis->value_at_node(k, q);
                M[i][k - k0] = s;
            }
    }

    /// Coefficients of <a, .> in the degree-1 block.
    Vec to_coeffs(const Vec& a) const {
        const int k0 = basis->degree_offset(1), k1 = basis->degree_offset(2);
        Vec c(k1 - k0, 0.0);
        for (int i = 0; i < basis->dim(); ++i)
            for (int k = 0; k < k1 - k0; ++k) c[k] += a[i] * M[i][k];
        return c;
    }
    /// Vector a whose linear function has the given degree-1 coefficients.
    Vec to_vector(const Vec& c) const {
        const int n = basis->dim();
        const double scale = n / sphere_volume(n);
        Vec a(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (std::size_t k = 0; k < c.size(); ++k) a[i] += scale * M[i][k] * c[k];
        return a;
    }
};

/// F(p, eps, vbar): volume-normalized hole, first eigenpair, flux trace on
/// the perturbed boundary minus its boundary-measure mean.
inline FResult F_op(const ModelManifold& m, const Vec& p, double eps, const SphereFn& vbar,
                    int nodes_per_unit, std::shared_ptr<const Basis> basis,
                    const Vec* warm = nullptr, double warm_lambda = 0.0) {
    FResult out;
    bool trivial = true;
    if (vbar.coeffs) {
        for (double c : *vbar.coeffs)
            if (c != 0.0) trivial = false;
    }
    out.v0 = trivial ? eig::volume_normalize(m, p, eps, nullptr, basis)
                     : eig::volume_normalize(m, p, eps, &vbar, basis);
    out.hole = HoleShape{p, eps, out.v0, trivial ? std::nullopt : std::optional<SphereFn>(vbar)};
    eig::FirstEigenOptions opt;
    opt.warm_start = warm;
    opt.warm_lambda = warm_lambda;
    opt.cascadic = (warm == nullptr);  // cold solves climb from a half grid
    out.eig = eig::first_eigen(m, out.hole, nodes_per_unit, opt);
    auto flux = eig::flux_trace(out.eig, out.hole, basis);
    // Dilated-metric normalization: the flux on the unit sphere of
    // eps^{-2} g is eps times the physical normal derivative. This makes F
    // commensurate with the spectral linearization H.
    for (auto& s : flux.samples) s *= eps;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        double af = eig::boundary_area_factor(out.hole, basis->nodes()[k]);
        num += basis->weights()[k] * flux.samples[k] * af;
        den += basis->weights()[k] * af;
    }
    out.flux_mean = num / den;
    out.F = flux;
    for (auto& s : out.F.samples) s -= out.flux_mean;
    out.F = spherical::decompose(out.F, basis->max_degree());
    return out;
}

struct ModifiedSolution {
    SphereFn vbar;
    Vec a;
    double v0 = 0.0;
    Vec residual_history;
    int iterations = 0;
    bool converged = false;
    FResult last;
};

namespace detail {

inline double residual_norm(const SphereFn& F, const Vec& a, const Degree1Map& map) {
    // || F + <a,.> ||_{L^2}
    double s = 0.0;
    for (std::size_t k = 0; k < F.basis->node_count(); ++k) {
        double lin = dot(a, F.basis->nodes()[k]);
        s += F.basis->weights()[k] * sqr(F.samples[k] + lin);
    }
    return std::sqrt(s);
}

}  // namespace detail

/// Quasi-Newton solve of F(p, eps, vbar) + <a, .> = 0 with the linearization
/// frozen at H: the orthogonal complement is corrected through the exact
/// spectral inverse, the degree-1 obstruction through a, and vbar is
/// re-volume-normalized every step. Backtracking keeps the residual monotone.
inline ModifiedSolution solve_modified(const ModelManifold& m, const Vec& p, double eps,
                                       int nodes_per_unit, std::shared_ptr<const Basis> basis,
                                       double tol = 1e-8, int maxit = 24) {
    const double phi0p = m.phi0(p);
    if (std::fabs(phi0p) < 1e-12)
        throw std::invalid_argument("solve_modified: kernel conditioning failure (phi0(p) = 0)");
    Degree1Map map(basis);
    ModifiedSolution sol;
    sol.vbar = SphereFn::zero(basis);
    sol.a.assign(m.n, 0.0);

    auto eval = [&](const SphereFn& vb, const Vec* warm, double wl) {
        return F_op(m, p, eps, vb, nodes_per_unit, basis, warm, wl);
    };

    FResult cur = eval(sol.vbar, nullptr, 0.0);
    double res = detail::residual_norm(cur.F, sol.a, map);
    sol.residual_history.push_back(res);

    for (int it = 0; it < maxit; ++it) {
        sol.iterations = it;
        if (res <= tol) {
            sol.converged = true;
            break;
        }
        // residual R = F + <a,.>; its degree-1 block updates a, the rest vbar
        SphereFn R = cur.F;
        for (std::size_t k = 0; k < R.samples.size(); ++k)
            R.samples[k] += dot(sol.a, basis->nodes()[k]);
        R = spherical::decompose(R, basis->max_degree());

        const int k0 = basis->degree_offset(1), k1 = basis->degree_offset(2);
        Vec c1((*R.coeffs).begin() + k0, (*R.coeffs).begin() + k1);
        Vec da = map.to_vector(c1);

        SphereFn Rperp = R;
        (*Rperp.coeffs)[0] = 0.0;
        for (int k = k0; k < k1; ++k) (*Rperp.coeffs)[k] = 0.0;
        Rperp = spherical::reconstruct(Rperp);
        SphereFn dv = dtn::invert_H(Rperp, phi0p);

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 8; ++bt, step *= 0.5) {
            SphereFn vb_try = sol.vbar;
            for (std::size_t i = 0; i < vb_try.samples.size(); ++i)
                vb_try.samples[i] -= step * dv.samples[i];
            vb_try = spherical::decompose(vb_try, basis->max_degree());
            (*vb_try.coeffs)[0] = 0.0;  // mean-free graph perturbation
            vb_try = spherical::reconstruct(vb_try);
            Vec a_try = sol.a;
            for (int i = 0; i < m.n; ++i) a_try[i] -= step * da[i];
            FResult nxt = eval(vb_try, &cur.eig.u, cur.eig.lambda);
            double res_try = detail::residual_norm(nxt.F, a_try, map);
            if (res_try <= res) {
                sol.vbar = vb_try;
                sol.a = a_try;
                cur = nxt;
                res = res_try;
                accepted = true;
                break;
            }
        }
        sol.residual_history.push_back(res);
        if (!accepted) break;  // stalled at the grid floor
    }
    if (res <= tol) sol.converged = true;
    sol.v0 = cur.v0;
    sol.last = cur;
    return sol;
}

struct ExtremalSolution {
    Vec p_eps;
    double eps = 0.0;
    ModifiedSolution inner;
    Vec a_norm_history;
    double extremality_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool translation_invariant_family = false;
    double jacobian_estimate = 0.0;
};

/// Damped secant iteration on p -> a(p, eps). On homogeneous models where
/// the obstruction vanishes identically, reports the family instead of a
/// point.
inline ExtremalSolution relocate(const ModelManifold& m, double eps, const Vec& p_init,
                                 int nodes_per_unit, std::shared_ptr<const Basis> basis,
                                 double tol = 1e-8, int max_steps = 12,
                                 double inner_tol = 1e-8) {
    ExtremalSolution out;
    out.eps = eps;
    Vec p = p_init;
    ModifiedSolution cur = solve_modified(m, p, eps, nodes_per_unit, basis, inner_tol);
    double an = norm2(cur.a);
    out.a_norm_history.push_back(an);

    if (an <= 10.0 * tol) {
        out.translation_invariant_family = !m.case1();
        out.converged = true;
        out.p_eps = p;
        out.inner = cur;
        return out;
    }

    // probe step along -a to estimate the scalar Jacobian d|a|/dp
    double J = 0.0;
    for (int it = 0; it < max_steps; ++it) {
        out.iterations = it + 1;
        Vec step(m.n);
        if (J == 0.0) {
            double kappa = (0.5 * eps) / an;  // move half a radius on the probe
            for (int i = 0; i < m.n; ++i) step[i] = -kappa * cur.a[i];
        } else {
            for (int i = 0; i < m.n; ++i) step[i] = -cur.a[i] / J;
            double sn = norm2(step);
            if (sn > 2.0 * eps)
                for (auto& s : step) s *= 2.0 * eps / sn;  // damping
        }
        Vec p_try = p;
        for (int i = 0; i < m.n; ++i) p_try[i] += step[i];
        ModifiedSolution nxt = solve_modified(m, p_try, eps, nodes_per_unit, basis, inner_tol);
        double an_try = norm2(nxt.a);
        // secant update of the scalar Jacobian
        Vec dp = step;
        Vec da(m.n);
        for (int i = 0; i < m.n; ++i) da[i] = nxt.a[i] - cur.a[i];
        double Jest = dot(da, dp) / std::max(dot(dp, dp), 1e-300);
        if (std::fabs(Jest) > 1e-14) J = Jest;
        if (an_try < an) {
            p = p_try;
            cur = nxt;
            an = an_try;
        } else {
            J *= 2.0;  // shrink subsequent steps
        }
        out.a_norm_history.push_back(an);
        if (an <= tol) break;
        if (out.a_norm_history.size() >= 3) {
            double prev = out.a_norm_history[out.a_norm_history.size() - 3];
            if (an > 0.9 * prev && an < 100 * tol) break;  // grid floor reached
        }
    }
    out.jacobian_estimate = J;
    if (std::fabs(J) < 1e-12 && an > tol)
        throw std::runtime_error("relocate: degenerate Jacobian (estimate ~ 0)");
    out.converged = an <= std::max(tol, 50 * tol);
    out.p_eps = p;
    out.inner = cur;
    return out;
}

/// Relative flux constancy defect (std/|mean|) plus the direct stationarity
/// check: Hadamard derivatives under volume-preserving deformations.
struct ExtremalityReport {
    double flux_residual = 0.0;      // std / |mean| of the flux trace
    double max_shape_derivative = 0.0;
    double flux_mean = 0.0;
};

inline ExtremalityReport extremality_residual(const ModelManifold& m, const HoleShape& hole,
                                              int nodes_per_unit,
                                              std::shared_ptr<const Basis> basis,
                                              int n_deformations = 5, std::uint64_t seed = 17u) {
    ExtremalityReport rep;
    auto res = eig::first_eigen(m, hole, nodes_per_unit);
    auto flux = eig::flux_trace(res, hole, basis);
    double wsum = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        double w = basis->weights()[k] * eig::boundary_area_factor(hole, basis->nodes()[k]);
        wsum += w;
        mean += w * flux.samples[k];
    }
    mean /= wsum;
    double var = 0.0;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
        double w = basis->weights()[k] * eig::boundary_area_factor(hole, basis->nodes()[k]);
        var += w * sqr(flux.samples[k] - mean);
    }
    rep.flux_mean = mean;
    rep.flux_residual = std::sqrt(var / wsum) / std::fabs(mean);

    Rng rng(seed);
    for (int t = 0; t < n_deformations; ++t) {
        // random band-limited mean-zero normal speed = volume preserving
        SphereFn xi = SphereFn::zero(basis);
        int kmax = std::min(basis->count(), basis->degree_offset(std::min(4, basis->max_degree())));
        for (int k = 1; k < kmax; ++k) (*xi.coeffs)[k] = rng.gaussian();
        double nrm = norm2(*xi.coeffs);
        for (auto& c : *xi.coeffs) c /= nrm;
        xi = spherical::reconstruct(xi);
        auto xi_field = [&](const Vec& dir) {
            Vec nu = eig::hole_normal(hole, dir);
            double val = xi.eval(dir);
            for (auto& c : nu) c *= val;
            return nu;
        };
        double dl = eig::shape_derivative(m, hole, xi_field, nodes_per_unit, basis, &res);
        rep.max_shape_derivative = std::max(rep.max_shape_derivative, std::fabs(dl));
    }
    return rep;
}

struct GapResult {
    Vec degrees;
    Vec gaps;        // per-degree L2 gap, Richardson-extrapolated across grids
    double max_gap = 0.0;
};

/// Central finite differences of F in vbar against the spectral operator H
/// on degree-2..jmax probes. Grid error is removed by Richardson
/// extrapolation of the differenced flux across the two resolutions.
inline GapResult linearization_gap(const ModelManifold& m, const Vec& p, double eps,
                                   int nodes_coarse, std::shared_ptr<const Basis> basis,
                                   int jmax = 8, double s = 0.05) {
    const double phi0p = m.phi0(p);
    GapResult out;
    auto probe_flux = [&](const SphereFn& vb, int N, const Vec* warm, double wl = 0.0) {
        return F_op(m, p, eps, vb, N, basis, warm, wl);
    };
    for (int j = 2; j <= std::min(jmax, basis->max_degree()); ++j) {
        SphereFn Y = SphereFn::harmonic(basis, basis->degree_offset(j));
        SphereFn vp = Y, vm = Y;
        for (auto& v : vp.samples) v *= s;
        for (auto& v : vm.samples) v *= -s;
        vp = spherical::decompose(vp, basis->max_degree());
        vm = spherical::decompose(vm, basis->max_degree());
        Vec lf[2];  // differenced flux per grid level
        int Ns[2] = {nodes_coarse, 2 * nodes_coarse};
        for (int lev = 0; lev < 2; ++lev) {
            auto Fp = probe_flux(vp, Ns[lev], nullptr);
            auto Fm = probe_flux(vm, Ns[lev], &Fp.eig.u, Fp.eig.lambda);
            lf[lev].resize(Fp.F.samples.size());
            for (std::size_t k = 0; k < lf[lev].size(); ++k)
                lf[lev][k] = (Fp.F.samples[k] - Fm.F.samples[k]) / (2.0 * s);
        }
        // Richardson: L = (4 L_fine - L_coarse)/3, then subtract H Y
        double m_j = dtn::multiplier(m.n, j, phi0p);
        double g2 = 0.0;
        for (std::size_t k = 0; k < lf[0].size(); ++k) {
            double L = (4.0 * lf[1][k] - lf[0][k]) / 3.0;
            g2 += basis->weights()[k] * sqr(L - m_j * Y.samples[k]);
        }
        out.degrees.push_back(j);
        out.gaps.push_back(std::sqrt(g2));
        out.max_gap = std::max(out.max_gap, out.gaps.back());
    }
    return out;
}

}  // namespace exdom::extremal
