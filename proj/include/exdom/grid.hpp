#pragma once

// Cartesian-grid discretization of -Laplace on a flat 2D/3D model with an
// embedded hole: Shortley-Weller rows on cells cut by the hole boundary,
// periodic / Dirichlet / Neumann outer closure, a Jacobi-preconditioned
// BiCGStab inner solver, and shifted inverse power iteration for the first
// eigenpair.

#include <cstring>

#include "exdom/core.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace exdom::eig {

enum class Closure { Periodic, Dirichlet, Neumann };

/// Radial-graph hole description: boundary at distance rho(dir) from center.
struct HoleGeometry {
    Vec center;
    std::function<double(const Vec&)> rho;  // unit direction -> radius
    double rho_max = 0.0;

    bool inside(const Vec& d) const {  // d = displacement from center
        double r = norm2(d);
        if (r >= rho_max) return false;
        if (r == 0.0) return true;
        Vec u = d;
        for (auto& v : u) v /= r;
        return r < rho(u);
    }
};

class Discretization {
  public:
    int d = 2;
    Vec lengths;
    double h = 0.0;
    std::array<int, 3> N{1, 1, 1};   // nodes per axis
    Closure closure = Closure::Periodic;
    double origin_off = 0.0;          // node i at (i + origin_off) * h
    std::vector<std::uint8_t> active;
    std::size_t total = 0;
    std::size_t active_count = 0;
    bool has_hole = false;
    HoleGeometry hole;

    struct IrregularRow {
        std::size_t idx;
        // per direction (2*d): arm length fraction (arm*h), neighbor idx or SIZE_MAX
        std::array<double, 6> arm;
        std::array<std::size_t, 6> nb;
        int ndir;
    };
    std::vector<IrregularRow> irregular;
    Vec diag;  // Jacobi preconditioner

    static constexpr std::size_t NO_NODE = static_cast<std::size_t>(-1);

    Discretization(int dim, Vec lens, int nodes_per_unit, Closure cl)
        : d(dim), lengths(std::move(lens)), closure(cl) {
        h = 1.0 / nodes_per_unit;
        for (int a = 0; a < d; ++a) {
            double cells = lengths[a] * nodes_per_unit;
            int c = static_cast<int>(std::llround(cells));
            if (std::fabs(cells - c) > 1e-9)
                throw std::invalid_argument("Discretization: side not commensurate with h");
            N[a] = (closure == Closure::Dirichlet) ? c - 1 : c;
        }
        origin_off = (closure == Closure::Dirichlet) ? 1.0 : (closure == Closure::Neumann ? 0.5 : 0.0);
        total = 1;
        for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(N[a]);
        active.assign(total, 1);
        active_count = total;
    }

    Vec node_pos(std::size_t idx) const {
        Vec x(d);
        std::size_t rem = idx;
        for (int a = 0; a < d; ++a) {
            x[a] = (static_cast<double>(rem % N[a]) + origin_off) * h;
            rem /= N[a];
        }
        return x;
    }
    std::size_t index(const std::array<int, 3>& c) const {
        std::size_t idx = 0;
        for (int a = d - 1; a >= 0; --a) idx = idx * N[a] + c[a];
        return idx;
    }

    /// Displacement from hole center with torus minimum image.
    Vec displacement(const Vec& x, const Vec& p) const {
        Vec dd(d);
        for (int a = 0; a < d; ++a) {
            double v = x[a] - p[a];
            if (closure == Closure::Periodic) {
                double L = lengths[a];
                v -= L * std::floor(v / L + 0.5);
            }
            dd[a] = v;
        }
        return dd;
    }

    void cut_hole(const HoleGeometry& hg) {
        hole = hg;
        has_hole = true;
        // Deactivate nodes strictly inside.
        std::array<int, 3> c{0, 0, 0};
        for (std::size_t idx = 0; idx < total; ++idx) {
            Vec x = node_pos(idx);
            Vec disp = displacement(x, hg.center);
            double r2 = dot(disp, disp);
            if (r2 < sqr(hg.rho_max) && hg.inside(disp)) {
                active[idx] = 0;
            }
        }
        (void)c;
        active_count = 0;
        for (auto v : active) active_count += v;
        build_irregular();
        build_diag();
    }

    void finalize_no_hole() {
        build_diag();
    }

    /// Neighbor of idx along axis a in direction s (+1/-1); NO_NODE when the
    /// outer closure removes it (Dirichlet: value 0; Neumann handled apart).
    std::size_t neighbor(std::size_t idx, int a, int s) const {
        std::size_t stride = 1;
        for (int b = 0; b < a; ++b) stride *= N[b];
        int coord = static_cast<int>((idx / stride) % N[a]);
        int nc = coord + s;
        if (nc < 0 || nc >= N[a]) {
            if (closure == Closure::Periodic) nc = (nc + N[a]) % N[a];
            else return NO_NODE;
        }
        return idx + static_cast<std::size_t>(nc - coord) * stride;
    }

    void build_irregular() {
        irregular.clear();
        for (std::size_t idx = 0; idx < total; ++idx) {
            if (!active[idx]) continue;
            Vec x = node_pos(idx);
            bool cut = false;
            IrregularRow row;
            row.idx = idx;
            row.ndir = 2 * d;
            for (int a = 0; a < d; ++a)
                for (int s = 0; s < 2; ++s) {
                    int dir = 2 * a + s;
                    int sg = s == 0 ? 1 : -1;
                    std::size_t nb = neighbor(idx, a, sg);
                    row.arm[dir] = 1.0;
                    row.nb[dir] = nb;
                    if (nb != NO_NODE && !active[nb]) {
                        // neighbor is inside the hole: find the cut fraction
                        double t = cut_fraction(x, a, sg);
                        row.arm[dir] = t;
                        row.nb[dir] = NO_NODE;
                        cut = true;
                    }
                }
            if (cut) irregular.push_back(row);
        }
    }

    /// Fraction t in (0,1] where the segment x -> x + sg*h*e_a crosses the
    /// hole boundary, by bisection on the signed distance function.
    double cut_fraction(const Vec& x, int a, int sg) const {
        auto phi = [&](double t) {
            Vec y = x;
            y[a] += sg * t * h;
            Vec disp = displacement(y, hole.center);
            double r = norm2(disp);
            Vec u = disp;
            for (auto& v : u) v /= std::max(r, 1e-300);
            return r - hole.rho(u);
        };
        double lo = 0.0, hi = 1.0;
        double flo = phi(0.0);
        if (flo <= 0.0) return 1e-3;  // node essentially on the boundary
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (phi(mid) > 0.0) lo = mid;
            else hi = mid;
        }
        return std::max(0.5 * (lo + hi), 1e-3);
    }

    void build_diag() {
        diag.assign(total, 1.0);
        const double h2 = h * h;
        for (std::size_t idx = 0; idx < total; ++idx) {
            if (!active[idx]) continue;
            if (closure == Closure::Neumann) {
                double v = 0.0;
                for (int a = 0; a < d; ++a)
                    for (int s : {1, -1})
                        if (neighbor(idx, a, s) != NO_NODE) v += 1.0 / h2;
                diag[idx] = v;
            } else {
                diag[idx] = 2.0 * d / h2;
            }
        }
        for (const auto& row : irregular) {
            double v = 0.0;
            for (int a = 0; a < d; ++a) {
                double hp = row.arm[2 * a] * h, hm = row.arm[2 * a + 1] * h;
                v += 2.0 / (hp * hm);
            }
            diag[row.idx] = v;
        }
    }

    /// y = (A - shift) x with A the negative Laplacian on active nodes.
    void matvec(const Vec& x, Vec& y, double shift = 0.0) const {
        const double h2 = h * h;
        const std::ptrdiff_t n0 = N[0], n1 = N[1], n2 = (d == 3) ? N[2] : 1;
        const bool per = closure == Closure::Periodic;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t k = 0; k < n2; ++k) {
            for (std::ptrdiff_t j = 0; j < n1; ++j) {
                const std::ptrdiff_t base = (k * n1 + j) * n0;
                const std::ptrdiff_t jm = (j > 0) ? -n0 : (per ? (n1 - 1) * n0 : 0);
                const std::ptrdiff_t jp = (j < n1 - 1) ? n0 : (per ? -(n1 - 1) * n0 : 0);
                const bool jml = (j == 0 && !per), jpl = (j == n1 - 1 && !per);
                std::ptrdiff_t km = 0, kp = 0;
                bool kml = false, kpl = false;
                if (d == 3) {
                    km = (k > 0) ? -n0 * n1 : (per ? (n2 - 1) * n0 * n1 : 0);
                    kp = (k < n2 - 1) ? n0 * n1 : (per ? -(n2 - 1) * n0 * n1 : 0);
                    kml = (k == 0 && !per);
                    kpl = (k == n2 - 1 && !per);
                }
                for (std::ptrdiff_t i = 0; i < n0; ++i) {
                    const std::ptrdiff_t idx = base + i;
                    if (!active[idx]) {
                        y[idx] = 0.0;
                        continue;
                    }
                    double s = 0.0;
                    int links = 0;
                    // x-axis
                    if (i > 0) { s += x[idx - 1]; ++links; }
                    else if (per) { s += x[idx + n0 - 1]; ++links; }
                    else if (closure == Closure::Dirichlet) ++links;
                    if (i < n0 - 1) { s += x[idx + 1]; ++links; }
                    else if (per) { s += x[idx - (n0 - 1)]; ++links; }
                    else if (closure == Closure::Dirichlet) ++links;
                    // y-axis
                    if (!jml) { s += x[idx + jm]; ++links; }
                    else if (closure == Closure::Dirichlet) ++links;
                    if (!jpl) { s += x[idx + jp]; ++links; }
                    else if (closure == Closure::Dirichlet) ++links;
                    if (d == 3) {
                        if (!kml) { s += x[idx + km]; ++links; }
                        else if (closure == Closure::Dirichlet) ++links;
                        if (!kpl) { s += x[idx + kp]; ++links; }
                        else if (closure == Closure::Dirichlet) ++links;
                    }
                    y[idx] = (links / h2 + 0.0) * x[idx] - s / h2 - shift * x[idx];
                }
            }
        }
        // Shortley-Weller corrections on cut rows.
        for (const auto& row : irregular) {
            double v = 0.0;
            for (int a = 0; a < d; ++a) {
                const double hp = row.arm[2 * a] * h, hm = row.arm[2 * a + 1] * h;
                v += 2.0 / (hp * hm) * x[row.idx];
                const std::size_t np = row.nb[2 * a], nm = row.nb[2 * a + 1];
                if (np != NO_NODE) v -= 2.0 / (hp * (hp + hm)) * x[np];
                if (nm != NO_NODE) v -= 2.0 / (hm * (hp + hm)) * x[nm];
            }
            y[row.idx] = v - shift * x[row.idx];
        }
    }

    double dot_active(const Vec& a, const Vec& b) const {
        double s = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : s)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(total); ++i)
            s += a[i] * b[i];
        return s;
    }

    /// Cell measure for discrete integrals.
    double cell_volume() const { return std::pow(h, d); }

    /// Quadratic Lagrange interpolation of a grid field at point x.
    /// Out-of-range Dirichlet values read 0; periodic wraps; inactive (hole)
    /// nodes read 0 as well (they only appear O(h) inside the boundary).
    double interpolate(const Vec& u, const Vec& x) const {
        std::array<int, 3> base{0, 0, 0};
        std::array<std::array<double, 3>, 3> w{};
        for (int a = 0; a < d; ++a) {
            double s = x[a] / h - origin_off;
            int c = static_cast<int>(std::llround(s));
            double t = s - c;  // in [-1/2, 1/2]
            base[a] = c;
            w[a][0] = 0.5 * t * (t - 1.0);
            w[a][1] = 1.0 - t * t;
            w[a][2] = 0.5 * t * (t + 1.0);
        }
        double val = 0.0;
        std::array<int, 3> off{0, 0, 0};
        int lim2 = (d == 3) ? 3 : 1;
        for (int oz = 0; oz < lim2; ++oz)
            for (int oy = 0; oy < 3; ++oy)
                for (int ox = 0; ox < 3; ++ox) {
                    double ww = w[0][ox] * w[1][oy] * (d == 3 ? w[2][oz] : (oz == 0 ? 1.0 : 0.0));
                    if (ww == 0.0) continue;
                    std::array<int, 3> c = base;
                    c[0] += ox - 1;
                    c[1] += oy - 1;
                    if (d == 3) c[2] += oz - 1;
                    double uv = 0.0;
                    bool ok = true;
                    for (int a = 0; a < d; ++a) {
                        if (c[a] < 0 || c[a] >= N[a]) {
                            if (closure == Closure::Periodic)
                                c[a] = (c[a] % N[a] + N[a]) % N[a];
                            else if (closure == Closure::Dirichlet) { ok = false; break; }
                            else { c[a] = std::clamp(c[a], 0, N[a] - 1); }
                        }
                    }
                    if (ok) uv = u[index(c)];
                    val += ww * uv;
                }
        (void)off;
        return val;
    }
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned BiCGStab for (A - shift) x = b, matrix-free.
inline SolveStats bicgstab(const Discretization& g, const Vec& b, Vec& x, double shift,
                           double tol, int maxit = 40000) {
    const std::size_t n = g.total;
    Vec r(n, 0.0), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n), tmp(n);
    g.matvec(x, tmp, shift);
    double bnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - tmp[i];
        bnorm += b[i] * b[i];
    }
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) bnorm = 1.0;
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    SolveStats st;
    auto precond = [&](const Vec& in, Vec& out) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            out[i] = in[i] / (g.diag[i] - shift);
    };
    double rnorm = std::sqrt(g.dot_active(r, r));
    double best = rnorm;
    int since_best = 0;
    for (int it = 0; it < maxit; ++it) {
        if (rnorm <= tol * bnorm) {
            st.converged = true;
            break;
        }
        if (rnorm < 0.999 * best) {
            best = rnorm;
            since_best = 0;
        } else if (++since_best > 600) {
            break;  // stagnation (inconsistent or ill-posed system)
        }
        double rho1 = g.dot_active(rhat, r);
        if (std::fabs(rho1) < 1e-300) {  // restart
            rhat = r;
            rho1 = g.dot_active(rhat, r);
        }
        if (it == 0) {
            p = r;
        } else {
            double beta = (rho1 / rho) * (alpha / omega);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho1;
        precond(p, phat);
        g.matvec(phat, v, shift);
        alpha = rho1 / g.dot_active(rhat, v);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            s[i] = r[i] - alpha * v[i];
        double snorm = std::sqrt(g.dot_active(s, s));
        if (snorm <= tol * bnorm) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
                x[i] += alpha * phat[i];
            st.iterations = it + 1;
            st.converged = true;
            st.residual = snorm / bnorm;
            return st;
        }
        precond(s, shat);
        g.matvec(shat, t, shift);
        double tt = g.dot_active(t, t);
        omega = g.dot_active(t, s) / std::max(tt, 1e-300);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = std::sqrt(g.dot_active(r, r));
        st.iterations = it + 1;
    }
    st.residual = rnorm / bnorm;
    st.converged = st.converged || rnorm <= tol * bnorm;
    return st;
}

struct EigenIterStats {
    double lambda = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Shifted inverse power iteration for the smallest eigenpair of A.
/// Start vector: all ones on active nodes (or a caller-provided warm start).
inline EigenIterStats inverse_power(const Discretization& g, Vec& u, double rel_tol = 1e-9,
                                    int max_outer = 100, const Vec* warm = nullptr,
                                    double warm_lambda = 0.0) {
    const std::size_t n = g.total;
    u.assign(n, 0.0);
    if (warm && warm->size() == n) {
        // mask stale values on nodes the current geometry excludes
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = g.active[i] ? (*warm)[i] : 0.0;
            nrm += u[i] * u[i];
        }
        if (!(nrm > 0.0) || !std::isfinite(nrm)) warm = nullptr;
    } else {
        warm = nullptr;
    }
    if (!warm)
        for (std::size_t i = 0; i < n; ++i) u[i] = g.active[i] ? 1.0 : 0.0;
    auto normalize = [&](Vec& w) {
        double s = std::sqrt(g.dot_active(w, w));
        if (s == 0.0) throw std::runtime_error("inverse_power: zero vector");
        for (auto& v : w) v /= s;
    };
    normalize(u);
    Vec au(n), y(n);
    EigenIterStats st;
    double lambda_prev = 0.0;
    double shift = (warm && warm_lambda > 0.0) ? 0.9 * warm_lambda : 0.0;
    st.lambda = (warm && warm_lambda > 0.0) ? warm_lambda : 0.0;
    for (int it = 0; it < max_outer; ++it) {
        y = u;  // warm start for the linear solve
        double inner_tol = (it < 2) ? 1e-4 : std::max(1e-13, 1e-3 * std::fabs(st.lambda - lambda_prev) /
                                                                  std::max(st.lambda, 1e-30));
        inner_tol = std::clamp(inner_tol, 1e-13, 1e-4);
        auto ls = bicgstab(g, u, y, shift, inner_tol);
        st.inner_iterations += ls.iterations;
        normalize(y);
        u = y;
        g.matvec(u, au, 0.0);
        lambda_prev = st.lambda;
        st.lambda = g.dot_active(u, au);
        double rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) rn += sqr(au[i] - st.lambda * u[i]);
        st.residual = std::sqrt(rn) / std::max(st.lambda, 1e-30);
        st.outer_iterations = it + 1;
        bool lam_ok = it > 1 && std::fabs(st.lambda - lambda_prev) <= rel_tol * std::fabs(st.lambda);
        if (lam_ok && st.residual < 1e-6) {
            st.converged = true;
            break;
        }
        if (it >= 1) shift = 0.9 * st.lambda;
    }
    // sign convention: positive mean
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += u[i];
    if (mean < 0)
        for (auto& v : u) v = -v;
    return st;
}

/// Bilinear/trilinear prolongation between two discretizations of the same
/// model (used for cascadic warm starts).
inline Vec prolong(const Discretization& coarse, const Vec& uc, const Discretization& fine) {
    Vec out(fine.total, 0.0);
    for (std::size_t idx = 0; idx < fine.total; ++idx) {
        if (!fine.active[idx]) continue;
        out[idx] = coarse.interpolate(uc, fine.node_pos(idx));
    }
    return out;
}

}  // namespace exdom::eig
