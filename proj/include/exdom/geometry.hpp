#pragma once

// Model manifolds, curvature tensors at a point with enforced symmetries,
// normal-coordinate expansions of the metric, and a seeded generator of
// synthetic curvature data.
//
// Index conventions. R[i,k,j,l] is the curvature 4-tensor appearing in the
// normal-coordinate expansion g_ij = delta + (1/3) R[i,k,j,l] x^k x^l + ...,
// antisymmetric in (i,k) and (j,l), symmetric under pair exchange, first
// Bianchi. Ricci uses the contraction that makes round spheres positively
// curved: Ric_kl = sum_i R[i,k,l,i], so Scal(S^n, radius 1) = n(n-1). The
// determinant expansion is then log|g| = -(1/3) Ric_kl x^k x^l - ..., which
// is what the direct log-det consistency oracle requires.

#include "exdom/core.hpp"
#include "exdom/spherical.hpp"

namespace exdom::geom {

struct CurvatureData {
    int n = 0;
    Vec R;      // n^4,  R[i,k,j,l]
    Vec dR;     // n^5,  R[i,k,j,l;m]
    Vec Ric;    // n^2
    Vec dRic;   // n^3,  Ric_{kl,m}
    double Scal = 0.0;
    Vec dScal;  // n

    std::size_t i4(int i, int k, int j, int l) const {
        return ((static_cast<std::size_t>(i) * n + k) * n + j) * n + l;
    }
    std::size_t i5(int i, int k, int j, int l, int m) const {
        return (((static_cast<std::size_t>(i) * n + k) * n + j) * n + l) * n + m;
    }

    static CurvatureData zero(int n) {
        CurvatureData c;
        c.n = n;
        c.R.assign(static_cast<std::size_t>(std::pow(n, 4)), 0.0);
        c.dR.assign(static_cast<std::size_t>(std::pow(n, 5)), 0.0);
        c.Ric.assign(n * n, 0.0);
        c.dRic.assign(n * n * n, 0.0);
        c.dScal.assign(n, 0.0);
        return c;
    }

    /// Constant-curvature tensor K (dR = 0), K = 1/radius^2 for round spheres.
    static CurvatureData constant_curvature(int n, double K) {
        CurvatureData c = zero(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        c.R[c.i4(i, k, j, l)] =
                            K * ((k == j && i == l ? 1.0 : 0.0) - (i == j && k == l ? 1.0 : 0.0));
        c.recompute_traces();
        return c;
    }

    void recompute_traces() {
        Ric.assign(n * n, 0.0);
        dRic.assign(n * n * n, 0.0);
        dScal.assign(n, 0.0);
        Scal = 0.0;
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += R[i4(i, k, l, i)];
                Ric[k * n + l] = s;
            }
        for (int k = 0; k < n; ++k) Scal += Ric[k * n + k];
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
                for (int m = 0; m < n; ++m) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i) s += dR[i5(i, k, l, i, m)];
                    dRic[(k * n + l) * n + m] = s;
                }
        for (int m = 0; m < n; ++m) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += dRic[(k * n + k) * n + m];
            dScal[m] = s;
        }
    }

    /// Contraction sum_i R[i,k,j,l;i] (first tensor slot against the
    /// derivative slot), as used in the third-order Green coefficients.
    double contracted_dR(int k, int j, int l) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += dR[i5(i, k, j, l, i)];
        return s;
    }
};

struct SymmetryResiduals {
    double antisym_ik = 0, antisym_jl = 0, pair = 0, bianchi1 = 0;
    double d_antisym_ik = 0, d_antisym_jl = 0, d_pair = 0, d_bianchi1 = 0;
    double bianchi2_trace = 0;           // div Ric - (1/2) grad Scal
    double trace_consistency = 0;        // stored traces vs recontraction
    double max() const {
        return std::max({antisym_ik, antisym_jl, pair, bianchi1, d_antisym_ik, d_antisym_jl,
                         d_pair, d_bianchi1, bianchi2_trace, trace_consistency});
    }
};

inline SymmetryResiduals symmetry_residuals(const CurvatureData& c) {
    SymmetryResiduals r;
    const int n = c.n;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    double v = c.R[c.i4(i, k, j, l)];
                    r.antisym_ik = std::max(r.antisym_ik, std::fabs(v + c.R[c.i4(k, i, j, l)]));
                    r.antisym_jl = std::max(r.antisym_jl, std::fabs(v + c.R[c.i4(i, k, l, j)]));
                    r.pair = std::max(r.pair, std::fabs(v - c.R[c.i4(j, l, i, k)]));
                    r.bianchi1 = std::max(
                        r.bianchi1,
                        std::fabs(v + c.R[c.i4(k, j, i, l)] + c.R[c.i4(j, i, k, l)]));
                    for (int m = 0; m < n; ++m) {
                        double w = c.dR[c.i5(i, k, j, l, m)];
                        r.d_antisym_ik =
                            std::max(r.d_antisym_ik, std::fabs(w + c.dR[c.i5(k, i, j, l, m)]));
                        r.d_antisym_jl =
                            std::max(r.d_antisym_jl, std::fabs(w + c.dR[c.i5(i, k, l, j, m)]));
                        r.d_pair = std::max(r.d_pair, std::fabs(w - c.dR[c.i5(j, l, i, k, m)]));
                        r.d_bianchi1 = std::max(
                            r.d_bianchi1, std::fabs(w + c.dR[c.i5(k, j, i, l, m)] +
                                                    c.dR[c.i5(j, i, k, l, m)]));
                    }
                }
    for (int t = 0; t < n; ++t) {
        double div = 0.0;
        for (int j = 0; j < n; ++j) div += c.dRic[(t * n + j) * n + j];
        r.bianchi2_trace = std::max(r.bianchi2_trace, std::fabs(div - 0.5 * c.dScal[t]));
    }
    CurvatureData ref = c;
    ref.recompute_traces();
    for (int k = 0; k < n * n; ++k)
        r.trace_consistency = std::max(r.trace_consistency, std::fabs(ref.Ric[k] - c.Ric[k]));
    r.trace_consistency = std::max(r.trace_consistency, std::fabs(ref.Scal - c.Scal));
    for (int k = 0; k < n * n * n; ++k)
        r.trace_consistency = std::max(r.trace_consistency, std::fabs(ref.dRic[k] - c.dRic[k]));
    for (int k = 0; k < n; ++k)
        r.trace_consistency = std::max(r.trace_consistency, std::fabs(ref.dScal[k] - c.dScal[k]));
    return r;
}

namespace detail {

/// Alternating projection onto the algebraic curvature symmetries.
template <typename Get, typename Set>
void symmetrize_r4(int n, Get get, Set set, int iters = 80) {
    for (int it = 0; it < iters; ++it) {
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l) {
                        double v = 0.5 * (get(i, k, j, l) - get(k, i, j, l));
                        set(i, k, j, l, v);
                        set(k, i, j, l, -v);
                    }
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l) {
                        double v = 0.5 * (get(i, k, j, l) - get(i, k, l, j));
                        set(i, k, j, l, v);
                        set(i, k, l, j, -v);
                    }
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l) {
                        double v = 0.5 * (get(i, k, j, l) + get(j, l, i, k));
                        set(i, k, j, l, v);
                        set(j, l, i, k, v);
                    }
        // Remove the totally antisymmetric (first-Bianchi-violating) part.
        std::vector<double> b(static_cast<std::size_t>(n) * n * n * n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        b[((static_cast<std::size_t>(i) * n + k) * n + j) * n + l] =
                            (get(i, k, j, l) + get(k, j, i, l) + get(j, i, k, l)) / 3.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        set(i, k, j, l,
                            get(i, k, j, l) -
                                b[((static_cast<std::size_t>(i) * n + k) * n + j) * n + l]);
    }
}

}  // namespace detail

/// Deterministic synthetic curvature data: seeded Gaussian tensors projected
/// onto the symmetry subspace, with the contracted second-Bianchi constraint
/// imposed and all traces recomputed from the projected tensors.
inline CurvatureData random_curvature(int n, std::uint64_t seed) {
    if (n < 3 || n > 8) throw std::invalid_argument("random_curvature: 3 <= n <= 8");
    CurvatureData c = CurvatureData::zero(n);
    Rng rng(seed * 0x5851f42d4c957f2dull + 0x14057b7ef767814full + n);
    for (auto& v : c.R) v = rng.gaussian();
    for (auto& v : c.dR) v = rng.gaussian();

    detail::symmetrize_r4(
        n, [&](int i, int k, int j, int l) { return c.R[c.i4(i, k, j, l)]; },
        [&](int i, int k, int j, int l, double v) { c.R[c.i4(i, k, j, l)] = v; });
    for (int m = 0; m < n; ++m)
        detail::symmetrize_r4(
            n, [&](int i, int k, int j, int l) { return c.dR[c.i5(i, k, j, l, m)]; },
            [&](int i, int k, int j, int l, double v) { c.dR[c.i5(i, k, j, l, m)] = v; });

    // Contracted second Bianchi: div Ric = (1/2) grad Scal, as n linear
    // constraints on dR. Project orthogonally within the symmetric subspace.
    const std::size_t sz = c.dR.size();
    std::vector<Vec> grads(n, Vec(sz, 0.0));
    for (int t = 0; t < n; ++t) {
        Vec raw(sz, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                raw[c.i5(i, t, j, i, j)] += 1.0;              // (div Ric)_t
                raw[c.i5(i, j, j, i, t)] -= 0.5;              // -(1/2) Scal_{,t}
            }
        // Symmetrized representative of the constraint gradient.
        for (int m = 0; m < n; ++m)
            detail::symmetrize_r4(
                n, [&](int i, int k, int j, int l) { return raw[c.i5(i, k, j, l, m)]; },
                [&](int i, int k, int j, int l, double v) { raw[c.i5(i, k, j, l, m)] = v; },
                40);
        grads[t] = std::move(raw);
    }
    auto constraint = [&](const Vec& dR) {
        Vec out(n, 0.0);
        for (int t = 0; t < n; ++t) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    s += dR[c.i5(i, t, j, i, j)] - 0.5 * dR[c.i5(i, j, j, i, t)];
            out[t] = s;
        }
        return out;
    };
    // Solve the small Gram system G x = C(dR), subtract sum x_t grad_t.
    Vec rhs = constraint(c.dR);
    std::vector<Vec> G(n, Vec(n, 0.0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G[a][b] = dot(grads[a], grads[b]);
    // Gaussian elimination.
    Vec x = rhs;
    {
        std::vector<Vec> A = G;
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int r = col + 1; r < n; ++r)
                if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
            std::swap(A[piv], A[col]);
            std::swap(x[piv], x[col]);
            for (int r = col + 1; r < n; ++r) {
                double f = A[r][col] / A[col][col];
                for (int cc = col; cc < n; ++cc) A[r][cc] -= f * A[col][cc];
                x[r] -= f * x[col];
            }
        }
        for (int col = n - 1; col >= 0; --col) {
            for (int cc = col + 1; cc < n; ++cc) x[col] -= A[col][cc] * x[cc];
            x[col] /= A[col][col];
        }
    }
    for (int t = 0; t < n; ++t)
        for (std::size_t idx = 0; idx < sz; ++idx) c.dR[idx] -= x[t] * grads[t][idx];

    c.recompute_traces();
    return c;
}

// ---------------------------------------------------------------------------
// Metric expansions in normal coordinates.
// ---------------------------------------------------------------------------

/// g_ij(x) = delta_ij + (1/3) R[i,k,j,l] x^k x^l + (1/6) R[i,k,j,l;m] x^k x^l x^m,
/// error O(|x|^4).
inline std::vector<Vec> metric_expansion(const CurvatureData& c, const Vec& x) {
    const int n = c.n;
    std::vector<Vec> g(n, Vec(n, 0.0));
    for (int i = 0; i < n; ++i) g[i][i] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double q = 0.0, cu = 0.0;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    q += c.R[c.i4(i, k, j, l)] * x[k] * x[l];
                    for (int m = 0; m < n; ++m)
                        cu += c.dR[c.i5(i, k, j, l, m)] * x[k] * x[l] * x[m];
                }
            g[i][j] += q / 3.0 + cu / 6.0;
        }
    return g;
}

/// Third-order expansions of the inverse metric and of log det g.
struct InverseLogDet {
    std::vector<Vec> ginv;
    double logdet = 0.0;
};

inline InverseLogDet inverse_logdet_expansion(const CurvatureData& c, const Vec& x) {
    const int n = c.n;
    InverseLogDet out;
    out.ginv.assign(n, Vec(n, 0.0));
    for (int i = 0; i < n; ++i) out.ginv[i][i] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double q = 0.0, cu = 0.0;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    q += c.R[c.i4(i, k, j, l)] * x[k] * x[l];
                    for (int m = 0; m < n; ++m)
                        cu += c.dR[c.i5(i, k, j, l, m)] * x[k] * x[l] * x[m];
                }
            out.ginv[i][j] -= q / 3.0 + cu / 6.0;
        }
    double q = 0.0, cu = 0.0;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            q += c.Ric[k * n + l] * x[k] * x[l];
            for (int m = 0; m < n; ++m) cu += c.dRic[(k * n + l) * n + m] * x[k] * x[l] * x[m];
        }
    out.logdet = -q / 3.0 - cu / 6.0;
    return out;
}

/// Exact gradients of the expansion coefficients (they are polynomials).
/// d/dx_t of ginv[i][j] and of logdet at x.
inline void expansion_derivatives(const CurvatureData& c, const Vec& x,
                                  std::vector<std::vector<Vec>>& dginv, Vec& dlogdet) {
    const int n = c.n;
    dginv.assign(n, std::vector<Vec>(n, Vec(n, 0.0)));
    dlogdet.assign(n, 0.0);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double q = 0.0, cu = 0.0;
                for (int k = 0; k < n; ++k) {
                    q += (c.R[c.i4(i, t, j, k)] + c.R[c.i4(i, k, j, t)]) * x[k];
                    for (int l = 0; l < n; ++l)
                        cu += (c.dR[c.i5(i, t, j, k, l)] + c.dR[c.i5(i, k, j, t, l)] +
                               c.dR[c.i5(i, k, j, l, t)]) *
                              x[k] * x[l];
                }
                dginv[t][i][j] = -(q / 3.0 + cu / 6.0);
            }
        double q = 0.0, cu = 0.0;
        for (int k = 0; k < n; ++k) {
            q += 2.0 * c.Ric[t * n + k] * x[k];
            for (int l = 0; l < n; ++l)
                cu += (2.0 * c.dRic[(t * n + k) * n + l] + c.dRic[(k * n + l) * n + t]) * x[k] *
                      x[l];
        }
        dlogdet[t] = -(q / 3.0 + cu / 6.0);
    }
}

// ---------------------------------------------------------------------------
// Model manifolds.
// ---------------------------------------------------------------------------

enum class ModelKind { Torus, DirichletBox, NeumannBox, Sphere };

struct ModelManifold {
    ModelKind kind = ModelKind::Torus;
    int n = 2;
    Vec lengths;          // periods (torus) or side lengths (box)
    double radius = 1.0;  // sphere only

    static ModelManifold torus(Vec periods) {
        ModelManifold m;
        m.kind = ModelKind::Torus;
        m.n = static_cast<int>(periods.size());
        m.lengths = std::move(periods);
        return m;
    }
    static ModelManifold dirichlet_box(Vec sides) {
        ModelManifold m;
        m.kind = ModelKind::DirichletBox;
        m.n = static_cast<int>(sides.size());
        m.lengths = std::move(sides);
        return m;
    }
    static ModelManifold neumann_box(Vec sides) {
        ModelManifold m;
        m.kind = ModelKind::NeumannBox;
        m.n = static_cast<int>(sides.size());
        m.lengths = std::move(sides);
        return m;
    }
    static ModelManifold sphere(int n, double radius) {
        ModelManifold m;
        m.kind = ModelKind::Sphere;
        m.n = n;
        m.radius = radius;
        return m;
    }

    bool flat() const { return kind != ModelKind::Sphere; }
    /// Dirichlet outer condition with nonconstant ground state.
    bool case1() const { return kind == ModelKind::DirichletBox; }

    double volume() const {
        if (kind == ModelKind::Sphere)
            return std::pow(radius, n) * sphere_volume(n + 1);
        double v = 1.0;
        for (double L : lengths) v *= L;
        return v;
    }

    double lambda0() const {
        if (!case1()) return 0.0;
        double s = 0.0;
        for (double L : lengths) s += sqr(pi / L);
        return s;
    }

    double phi0(const Vec& p) const {
        if (!case1()) return 1.0 / std::sqrt(volume());
        double v = 1.0;
        for (int i = 0; i < n; ++i) v *= std::sqrt(2.0 / lengths[i]) * std::sin(pi * p[i] / lengths[i]);
        return v;
    }

    Vec grad_phi0(const Vec& p) const {
        Vec g(n, 0.0);
        if (!case1()) return g;
        for (int i = 0; i < n; ++i) {
            double v = 1.0;
            for (int j = 0; j < n; ++j) {
                double f = std::sqrt(2.0 / lengths[j]);
                v *= (j == i) ? f * (pi / lengths[j]) * std::cos(pi * p[j] / lengths[j])
                              : f * std::sin(pi * p[j] / lengths[j]);
            }
            g[i] = v;
        }
        return g;
    }

    bool interior(const Vec& p) const {
        if (kind == ModelKind::DirichletBox || kind == ModelKind::NeumannBox) {
            for (int i = 0; i < n; ++i)
                if (!(p[i] > 0.0 && p[i] < lengths[i])) return false;
        }
        return true;
    }

    CurvatureData curvature_at(const Vec&) const {
        if (kind == ModelKind::Sphere)
            return CurvatureData::constant_curvature(n, 1.0 / sqr(radius));
        return CurvatureData::zero(n);
    }

    /// Default validity radius for normal-coordinate expansions.
    double validity_radius() const {
        if (kind == ModelKind::Sphere) return 0.1 * pi * radius;
        double m = lengths[0];
        for (double L : lengths) m = std::min(m, L);
        return 0.1 * (m / 2.0);
    }
};

struct ModelData {
    double phi0p = 0.0;
    Vec grad_phi0p;
    double lambda0 = 0.0;
    CurvatureData curv;
};

inline ModelData model_data(const ModelManifold& m, const Vec& p) {
    if (!m.interior(p)) throw std::invalid_argument("model_data: point not interior");
    ModelData d;
    d.phi0p = m.phi0(p);
    d.grad_phi0p = m.grad_phi0(p);
    d.lambda0 = m.lambda0();
    d.curv = m.curvature_at(p);
    return d;
}

}  // namespace exdom::geom
