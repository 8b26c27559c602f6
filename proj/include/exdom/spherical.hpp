#pragma once

// Spherical-harmonic analysis on S^{n-1}: exact monomial integrals, quadrature
// node sets, orthonormal harmonic bases and band-limited decomposition.
//
// Basis choice per dimension:
//   n = 2  : trigonometric harmonics cos(j t), sin(j t) (stable at high degree)
//   n = 3  : real spherical harmonics via normalized associated-Legendre
//            recurrences (stable at the degrees used here)
//   n >= 4 : orthonormalized polynomial harmonics built by Gram-Schmidt on
//            harmonic projections of monomials, with exact Gram matrices.
// All bases are restrictions of homogeneous harmonic polynomials, so the
// per-degree operator algebra downstream is basis independent.

#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "exdom/core.hpp"

namespace exdom::spherical {

using MultiIndex = std::vector<int>;

/// Eigenvalue of -Laplacian on S^{n-1} restricted to degree-j harmonics.
inline double harmonic_eigenvalue(int n, int j) {
    if (n < 2 || j < 0) throw std::invalid_argument("harmonic_eigenvalue: need n >= 2, j >= 0");
    return static_cast<double>(j) * (n - 2 + j);
}

/// Exact integral of x^alpha over S^{n-1}: zero if any exponent is odd, else
/// 2 * prod Gamma((a_i+1)/2) / Gamma(sum (a_i+1)/2).
inline double monomial_integral(int n, const MultiIndex& alpha) {
    if (static_cast<int>(alpha.size()) != n)
        throw std::invalid_argument("monomial_integral: |alpha| != n");
    double lg = 0.0;
    int s = 0;
    for (int a : alpha) {
        if (a < 0) throw std::invalid_argument("monomial_integral: negative exponent");
        if (a % 2 == 1) return 0.0;
        lg += std::lgamma(0.5 * (a + 1));
        s += a + 1;
    }
    return 2.0 * std::exp(lg - std::lgamma(0.5 * s));
}

/// Dimension of the space of degree-j spherical harmonics on S^{n-1}.
inline int harmonic_dimension(int n, int j) {
    if (j == 0) return 1;
    if (n == 2) return 2;
    auto binom = [](int a, int b) -> long long {
        if (b < 0 || b > a) return 0;
        long long r = 1;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    return static_cast<int>(binom(n + j - 1, j) - binom(n + j - 3, j - 2));
}

// ---------------------------------------------------------------------------
// Sparse polynomials in n variables (monomial map). Used for the n >= 4 basis
// and for exact sphere integration of polynomial integrands.
// ---------------------------------------------------------------------------

struct Poly {
    int n = 0;
    std::map<MultiIndex, double> terms;

    static Poly monomial(int n, MultiIndex a, double c = 1.0) {
        Poly p;
        p.n = n;
        p.terms[std::move(a)] = c;
        return p;
    }

    void add_term(const MultiIndex& a, double c) {
        if (c == 0.0) return;
        auto [it, fresh] = terms.emplace(a, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0.0) terms.erase(it);
        }
    }

    Poly& operator+=(const Poly& o) {
        for (auto& [a, c] : o.terms) add_term(a, c);
        return *this;
    }
    Poly& operator*=(double s) {
        if (s == 0.0) { terms.clear(); return *this; }
        for (auto& [a, c] : terms) c *= s;
        return *this;
    }

    double eval(const Vec& x) const {
        double v = 0.0;
        for (auto& [a, c] : terms) {
            double m = c;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < a[i]; ++k) m *= x[i];
            v += m;
        }
        return v;
    }

    Poly derivative(int i) const {
        Poly out;
        out.n = n;
        for (auto& [a, c] : terms)
            if (a[i] >= 1) {
                MultiIndex b = a;
                b[i] -= 1;
                out.add_term(b, c * a[i]);
            }
        return out;
    }

    Poly laplacian() const {
        Poly out;
        out.n = n;
        for (auto& [a, c] : terms)
            for (int i = 0; i < n; ++i)
                if (a[i] >= 2) {
                    MultiIndex b = a;
                    b[i] -= 2;
                    out.add_term(b, c * a[i] * (a[i] - 1));
                }
        return out;
    }

    /// Multiply by |x|^2.
    Poly times_r2() const {
        Poly out;
        out.n = n;
        for (auto& [a, c] : terms)
            for (int i = 0; i < n; ++i) {
                MultiIndex b = a;
                b[i] += 2;
                out.add_term(b, c);
            }
        return out;
    }

    double sphere_integral() const {
        double s = 0.0;
        for (auto& [a, c] : terms) s += c * monomial_integral(n, a);
        return s;
    }
};

/// L^2(S^{n-1}) pairing of two polynomials, exact.
inline double sphere_inner(const Poly& p, const Poly& q) {
    double s = 0.0;
    for (auto& [a, ca] : p.terms)
        for (auto& [b, cb] : q.terms) {
            MultiIndex ab(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) ab[i] = a[i] + b[i];
            s += ca * cb * monomial_integral(p.n, ab);
        }
    return s;
}

/// Harmonic component of a homogeneous polynomial of degree d:
/// h = sum_k c_k |x|^{2k} Lap^k q with c_0 = 1,
/// c_k = -c_{k-1} / (2k (2d + n - 2k - 2)).
inline Poly harmonic_projection(const Poly& q, int degree) {
    Poly h = q;
    Poly lap = q;
    double c = 1.0;
    for (int k = 1; 2 * k <= degree; ++k) {
        lap = lap.laplacian();
        if (lap.terms.empty()) break;
        c *= -1.0 / (2.0 * k * (2.0 * degree + q.n - 2.0 * k - 2.0));
        Poly t = lap;
        for (int r = 0; r < k; ++r) t = t.times_r2();
        t *= c;
        h += t;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Basis + quadrature
// ---------------------------------------------------------------------------

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int q, Vec& x, Vec& w) {
    x.assign(q, 0.0);
    w.assign(q, 0.0);
    for (int i = 0; i < q; ++i) {
        double t = std::cos(pi * (i + 0.75) / (q + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= q; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = q * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::fabs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= q; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = q * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

/// Fully normalized associated Legendre P̄_lm(x) for all l <= L at fixed m,
/// such that Y_l0 = P̄_l0 and Y_lm = sqrt(2) P̄_lm {cos,sin}(m phi) have unit
/// L^2(S^2) norm. Standard stable recurrence.
inline void legendre_normalized(int L, double x, std::vector<Vec>& P) {
    P.assign(L + 1, Vec(L + 1, 0.0));
    double sx = std::sqrt(std::max(0.0, 1.0 - x * x));
    P[0][0] = std::sqrt(1.0 / (4.0 * pi));
    for (int m = 1; m <= L; ++m)
        P[m][m] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sx * P[m - 1][m - 1];
    for (int m = 0; m < L; ++m)
        P[m + 1][m] = x * std::sqrt(2.0 * m + 3.0) * P[m][m];
    for (int m = 0; m <= L; ++m)
        for (int l = m + 2; l <= L; ++l) {
            double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
            P[l][m] = a * (x * P[l - 1][m] - b * P[l - 2][m]);
        }
}

}  // namespace detail

class Basis {
  public:
    Basis(int n, int L, std::uint64_t node_seed = 7u) : n_(n), L_(L) {
        if (n < 2) throw std::invalid_argument("Basis: n >= 2 required");
        if (L < 0) throw std::invalid_argument("Basis: L >= 0 required");
        degree_offset_.resize(L + 2, 0);
        for (int j = 0; j <= L; ++j)
            degree_offset_[j + 1] = degree_offset_[j] + harmonic_dimension(n, j);
        build_nodes(node_seed);
        if (n_ >= 4) build_polynomial_harmonics();
        tabulate();
    }

    int dim() const { return n_; }
    int max_degree() const { return L_; }
    int count() const { return degree_offset_[L_ + 1]; }
    int degree_offset(int j) const { return degree_offset_[j]; }
    int degree_count(int j) const { return degree_offset_[j + 1] - degree_offset_[j]; }
    /// Degree of basis function k.
    int degree_of(int k) const {
        int j = 0;
        while (degree_offset_[j + 1] <= k) ++j;
        return j;
    }

    const std::vector<Vec>& nodes() const { return nodes_; }
    const Vec& weights() const { return weights_; }
    /// Polynomial form of basis function k (available for n >= 4 only).
    const Poly& poly(int k) const {
        if (n_ < 4) throw std::invalid_argument("Basis::poly: polynomial form kept for n >= 4");
        return polys_[k];
    }
    std::size_t node_count() const { return nodes_.size(); }
    /// Tabulated value of basis function k at node i.
    double value_at_node(int k, std::size_t i) const { return table_[k][i]; }

    /// Evaluate basis function k at a unit vector u.
    double eval(int k, const Vec& u) const {
        if (n_ == 2) {
            if (k == 0) return 1.0 / std::sqrt(2.0 * pi);
            int j = (k + 1) / 2;
            double t = std::atan2(u[1], u[0]);
            return ((k % 2) ? std::cos(j * t) : std::sin(j * t)) / std::sqrt(pi);
        }
        if (n_ == 3) {
            std::vector<Vec> P;
            detail::legendre_normalized(L_, u[2], P);
            double phi = std::atan2(u[1], u[0]);
            return eval3(k, P, phi);
        }
        return polys_[k].eval(u);
    }

    /// All basis values at a unit vector (used by exterior evaluation).
    Vec eval_all(const Vec& u) const {
        Vec out(count());
        if (n_ == 3) {
            std::vector<Vec> P;
            detail::legendre_normalized(L_, u[2], P);
            double phi = std::atan2(u[1], u[0]);
            for (int k = 0; k < count(); ++k) out[k] = eval3(k, P, phi);
            return out;
        }
        for (int k = 0; k < count(); ++k) out[k] = eval(k, u);
        return out;
    }

    /// Shared, cached basis instances (built once, read concurrently).
    static std::shared_ptr<const Basis> get(int n, int L);

  private:
    void build_nodes(std::uint64_t seed) {
        if (n_ == 2) {
            int M = std::max(4 * L_ + 4, 16);
            for (int k = 0; k < M; ++k) {
                double t = 2.0 * pi * k / M;
                nodes_.push_back({std::cos(t), std::sin(t)});
                weights_.push_back(2.0 * pi / M);
            }
        } else if (n_ == 3) {
            int q = 2 * L_ + 2, M = 4 * L_ + 4;
            Vec gx, gw;
            detail::gauss_legendre(q, gx, gw);
            for (int i = 0; i < q; ++i) {
                double z = gx[i], s = std::sqrt(1.0 - z * z);
                for (int k = 0; k < M; ++k) {
                    double phi = 2.0 * pi * k / M;
                    nodes_.push_back({s * std::cos(phi), s * std::sin(phi), z});
                    weights_.push_back(gw[i] * 2.0 * pi / M);
                }
            }
        } else {
            // Symmetrized random directions; Monte Carlo accuracy, spot checks only.
            Rng rng(seed + 1000 * n_);
            int m0 = 48;
            int flips = 1 << n_;
            double w = sphere_volume(n_) / (m0 * flips);
            for (int i = 0; i < m0; ++i) {
                Vec u = unit(rng.gaussian_vec(n_));
                for (int f = 0; f < flips; ++f) {
                    Vec v = u;
                    for (int b = 0; b < n_; ++b)
                        if (f & (1 << b)) v[b] = -v[b];
                    nodes_.push_back(v);
                    weights_.push_back(w);
                }
            }
        }
    }

    double eval3(int k, const std::vector<Vec>& P, double phi) const {
        int l = degree_of(k);
        int r = k - degree_offset_[l];  // 0 -> m=0; then cos/sin pairs m=1..l
        if (r == 0) return P[l][0];
        int m = (r + 1) / 2;
        double base = std::sqrt(2.0) * P[l][m];
        return (r % 2) ? base * std::cos(m * phi) : base * std::sin(m * phi);
    }

    void build_polynomial_harmonics() {
        polys_.clear();
        for (int d = 0; d <= L_; ++d) {
            int want = harmonic_dimension(n_, d);
            // Candidate monomials of total degree d in lex order.
            std::vector<MultiIndex> cands;
            MultiIndex a(n_, 0);
            std::function<void(int, int)> rec = [&](int pos, int rem) {
                if (pos == n_ - 1) {
                    a[pos] = rem;
                    cands.push_back(a);
                    return;
                }
                for (int v = rem; v >= 0; --v) {
                    a[pos] = v;
                    rec(pos + 1, rem - v);
                }
            };
            rec(0, d);
            std::vector<Poly> accepted;
            for (const auto& c : cands) {
                if (static_cast<int>(accepted.size()) == want) break;
                Poly h = harmonic_projection(Poly::monomial(n_, c), d);
                // Two Gram-Schmidt passes against already accepted functions.
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto& b : accepted) {
                        Poly t = b;
                        t *= -sphere_inner(h, b);
                        h += t;
                    }
                double nrm2 = sphere_inner(h, h);
                if (nrm2 < 1e-20) continue;
                h *= 1.0 / std::sqrt(nrm2);
                accepted.push_back(std::move(h));
            }
            if (static_cast<int>(accepted.size()) != want)
                throw std::runtime_error("Basis: harmonic space not resolved at degree " +
                                         std::to_string(d));
            for (auto& p : accepted) polys_.push_back(std::move(p));
        }
    }

    void tabulate() {
        table_.assign(count(), Vec(nodes_.size(), 0.0));
        if (n_ == 3) {
            std::vector<Vec> P;
            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                detail::legendre_normalized(L_, nodes_[i][2], P);
                double phi = std::atan2(nodes_[i][1], nodes_[i][0]);
                for (int k = 0; k < count(); ++k) table_[k][i] = eval3(k, P, phi);
            }
        } else {
            for (int k = 0; k < count(); ++k)
                for (std::size_t i = 0; i < nodes_.size(); ++i)
                    table_[k][i] = eval(k, nodes_[i]);
        }
    }

    int n_, L_;
    std::vector<int> degree_offset_;
    std::vector<Vec> nodes_;
    Vec weights_;
    std::vector<Poly> polys_;        // n >= 4 only
    std::vector<Vec> table_;         // count() x node_count()
};

inline std::shared_ptr<const Basis> Basis::get(int n, int L) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const Basis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, L);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto b = std::make_shared<const Basis>(n, L);
    cache[key] = b;
    return b;
}

// ---------------------------------------------------------------------------
// SphereFn: samples on the basis node set, optional harmonic coefficients.
// ---------------------------------------------------------------------------

struct SphereFn {
    std::shared_ptr<const Basis> basis;
    Vec samples;
    std::optional<Vec> coeffs;

    int dim() const { return basis->dim(); }

    static SphereFn from_function(std::shared_ptr<const Basis> b,
                                  const std::function<double(const Vec&)>& f) {
        SphereFn s;
        s.basis = std::move(b);
        s.samples.resize(s.basis->node_count());
        for (std::size_t i = 0; i < s.samples.size(); ++i)
            s.samples[i] = f(s.basis->nodes()[i]);
        return s;
    }

    static SphereFn zero(std::shared_ptr<const Basis> b) {
        SphereFn s;
        s.basis = std::move(b);
        s.samples.assign(s.basis->node_count(), 0.0);
        s.coeffs = Vec(s.basis->count(), 0.0);
        return s;
    }

    /// Single basis function as a SphereFn.
    static SphereFn harmonic(std::shared_ptr<const Basis> b, int k) {
        SphereFn s = zero(b);
        (*s.coeffs)[k] = 1.0;
        for (std::size_t i = 0; i < s.samples.size(); ++i)
            s.samples[i] = s.basis->value_at_node(k, i);
        return s;
    }

    double quad_integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) s += basis->weights()[i] * samples[i];
        return s;
    }
    double mean() const { return quad_integral() / sphere_volume(dim()); }

    double l2_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i)
            s += basis->weights()[i] * samples[i] * samples[i];
        return std::sqrt(std::max(0.0, s));
    }

    double linf_norm() const {
        double m = 0.0;
        for (double v : samples) m = std::max(m, std::fabs(v));
        return m;
    }

    /// Evaluate at an arbitrary unit vector; requires coefficients.
    double eval(const Vec& u) const {
        if (!coeffs) throw std::invalid_argument("SphereFn::eval: undecomposed input");
        Vec vals = basis->eval_all(u);
        return dot(*coeffs, vals);
    }
};

/// L^2 projection onto harmonics of degree <= L; coefficients by quadrature.
inline SphereFn decompose(const SphereFn& f, int L) {
    if (L > f.basis->max_degree())
        throw std::invalid_argument("decompose: cutoff exceeds resolvable band of the node set");
    SphereFn out = f;
    Vec c(f.basis->count(), 0.0);
    int K = f.basis->degree_offset(L + 1);
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.samples.size(); ++i)
            s += f.basis->weights()[i] * f.samples[i] * f.basis->value_at_node(k, i);
        c[k] = s;
    }
    out.coeffs = std::move(c);
    return out;
}

/// Samples from coefficients.
inline SphereFn reconstruct(const SphereFn& f) {
    if (!f.coeffs) throw std::invalid_argument("reconstruct: no coefficients");
    SphereFn out = f;
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    for (int k = 0; k < f.basis->count(); ++k) {
        double c = (*f.coeffs)[k];
        if (c == 0.0) continue;
        for (std::size_t i = 0; i < out.samples.size(); ++i)
            out.samples[i] += c * f.basis->value_at_node(k, i);
    }
    return out;
}

/// Drop the degree-0 component (mean-zero projection).
inline SphereFn mean_zero(const SphereFn& f, int L) {
    SphereFn g = decompose(f, L);
    double c0 = (*g.coeffs)[0];
    (*g.coeffs)[0] = 0.0;
    double y0 = g.basis->value_at_node(0, 0);  // constant basis function value
    for (auto& v : g.samples) v -= c0 * y0;
    return g;
}

}  // namespace exdom::spherical
