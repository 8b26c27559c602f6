#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "exdom/appendix.hpp"
#include "exdom/spherical.hpp"

using namespace exdom;
using namespace exdom::spherical;

TEST_CASE("harmonic eigenvalues") {
    CHECK(harmonic_eigenvalue(3, 1) == doctest::Approx(2.0));
    CHECK(harmonic_eigenvalue(2, 0) == doctest::Approx(0.0));
    // Fourier modes on the circle have eigenvalue j^2.
    CHECK(harmonic_eigenvalue(2, 3) == doctest::Approx(9.0));
    CHECK(harmonic_eigenvalue(5, 2) == doctest::Approx(10.0));
}

TEST_CASE("monomial integrals: closed form and Monte Carlo oracle") {
    CHECK(monomial_integral(3, {2, 0, 0}) == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-13));
    CHECK(monomial_integral(4, {1, 0, 0, 0}) == 0.0);
    CHECK(monomial_integral(2, {0, 0}) == doctest::Approx(2.0 * pi).epsilon(1e-14));

    // Monte Carlo cross-check on S^2 with 10^6 samples.
    Rng rng(20240811u);
    const MultiIndex alpha{2, 2, 0};
    double sum = 0.0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) {
        Vec u = unit(rng.gaussian_vec(3));
        sum += u[0] * u[0] * u[1] * u[1];
    }
    double mc = sum / N * sphere_volume(3);
    CHECK(monomial_integral(3, alpha) == doctest::Approx(mc).epsilon(5e-3));
}

TEST_CASE("quadrature exactness against the Gamma formula") {
    for (int n : {2, 3}) {
        int L = (n == 2) ? 10 : 6;
        auto basis = Basis::get(n, L);
        // Node count and weights reproduce the sphere volume.
        double vol = 0.0;
        for (double w : basis->weights()) vol += w;
        CHECK(vol == doctest::Approx(sphere_volume(n)).epsilon(1e-12));

        // All monomials with |alpha| <= 2L.
        std::vector<MultiIndex> alphas;
        std::function<void(MultiIndex, int, int)> rec = [&](MultiIndex a, int pos, int rem) {
            if (pos == n - 1) {
                a[pos] = rem;
                alphas.push_back(a);
                return;
            }
            for (int v = 0; v <= rem; ++v) {
                a[pos] = v;
                rec(a, pos + 1, rem - v);
            }
        };
        for (int d = 0; d <= 2 * L; ++d) rec(MultiIndex(n, 0), 0, d);
        for (const auto& a : alphas) {
            double q = 0.0;
            for (std::size_t i = 0; i < basis->node_count(); ++i) {
                double m = basis->weights()[i];
                for (int c = 0; c < n; ++c)
                    for (int k = 0; k < a[c]; ++k) m *= basis->nodes()[i][c];
                q += m;
            }
            CHECK(q == doctest::Approx(monomial_integral(n, a)).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("basis orthonormality at the working degrees") {
    for (auto [n, L] : std::vector<std::pair<int, int>>{{2, 64}, {3, 16}}) {
        auto basis = Basis::get(n, L);
        double worst = 0.0;
        for (int k = 0; k < basis->count(); ++k)
            for (int l = k; l < basis->count(); ++l) {
                double s = 0.0;
                for (std::size_t i = 0; i < basis->node_count(); ++i)
                    s += basis->weights()[i] * basis->value_at_node(k, i) *
                         basis->value_at_node(l, i);
                worst = std::max(worst, std::fabs(s - (k == l ? 1.0 : 0.0)));
            }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("harmonic projection produces harmonic polynomials") {
    for (int n : {3, 4, 5, 6}) {
        for (int d : {2, 3, 4, 5}) {
            MultiIndex a(n, 0);
            a[0] = d - 1;
            a[1 % n] += 1;
            Poly h = harmonic_projection(Poly::monomial(n, a), d);
            Poly lap = h.laplacian();
            double worst = 0.0;
            for (auto& [idx, c] : lap.terms) worst = std::max(worst, std::fabs(c));
            CHECK(worst < 1e-12);
        }
    }
}

TEST_CASE("decompose: pinned component structure") {
    auto basis = Basis::get(3, 4);
    SUBCASE("restriction of x1 is a pure degree-1 harmonic") {
        auto f = SphereFn::from_function(basis, [](const Vec& u) { return u[0]; });
        auto g = decompose(f, 4);
        for (int k = 0; k < basis->count(); ++k) {
            int j = basis->degree_of(k);
            if (j != 1) CHECK(std::fabs((*g.coeffs)[k]) < 1e-12);
        }
        // Exactly one degree-1 coefficient is nonzero under the Legendre basis.
        double deg1 = 0.0;
        for (int k = basis->degree_offset(1); k < basis->degree_offset(2); ++k)
            deg1 += sqr((*g.coeffs)[k]);
        CHECK(std::sqrt(deg1) == doctest::Approx(std::sqrt(sphere_volume(3) / 3.0)).epsilon(1e-12));
    }
    SUBCASE("constants hit only degree zero") {
        auto f = SphereFn::from_function(basis, [](const Vec&) { return 1.0; });
        auto g = decompose(f, 4);
        for (int k = 1; k < basis->count(); ++k) CHECK(std::fabs((*g.coeffs)[k]) < 1e-12);
    }
    SUBCASE("x1^2 splits into degrees 0 and 2, with mean 1/3") {
        auto f = SphereFn::from_function(basis, [](const Vec& u) { return u[0] * u[0]; });
        auto g = decompose(f, 4);
        for (int k = 0; k < basis->count(); ++k) {
            int j = basis->degree_of(k);
            if (j != 0 && j != 2) CHECK(std::fabs((*g.coeffs)[k]) < 1e-12);
        }
        CHECK(g.mean() == doctest::Approx(monomial_integral(3, {2, 0, 0}) / sphere_volume(3))
                              .epsilon(1e-12));
        CHECK(g.mean() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("Parseval and round trip on band-limited functions") {
    for (auto [n, L] : std::vector<std::pair<int, int>>{{2, 12}, {3, 8}}) {
        auto basis = Basis::get(n, L);
        Rng rng(7u + n);
        SphereFn f = SphereFn::zero(basis);
        for (int k = 0; k < basis->count(); ++k) (*f.coeffs)[k] = rng.gaussian();
        f = reconstruct(f);
        auto g = decompose(f, L);
        // Round trip
        auto h = reconstruct(g);
        double worst = 0.0;
        for (std::size_t i = 0; i < f.samples.size(); ++i)
            worst = std::max(worst, std::fabs(h.samples[i] - f.samples[i]));
        CHECK(worst < 1e-10);
        // Parseval
        double coef2 = 0.0;
        for (double c : *g.coeffs) coef2 += c * c;
        CHECK(sqr(f.l2_norm()) == doctest::Approx(coef2).epsilon(1e-10));
    }
}

TEST_CASE("appendix identities on seeded curvature") {
    for (int n : {3, 4, 5}) {
        for (std::uint64_t seed : {1u, 2u}) {
            auto curv = geom::random_curvature(n, seed);
            auto res = verify_appendix(n, curv);
            for (const auto& r : res) CHECK(r.residual() < 1e-10);
        }
    }
}

TEST_CASE("appendix lemma 4 with unit scalar-curvature gradient") {
    // Combine three seeded tensors so that grad Scal = e1 exactly; all the
    // constraints are linear so the combination stays admissible.
    const int n = 3;
    auto c1 = geom::random_curvature(n, 11u);
    auto c2 = geom::random_curvature(n, 12u);
    auto c3 = geom::random_curvature(n, 13u);
    // Solve [dScal1 dScal2 dScal3] x = e1.
    std::vector<Vec> A{c1.dScal, c2.dScal, c3.dScal};
    Vec x(3, 0.0);
    {
        // 3x3 Gaussian elimination on columns A[j][i].
        double M[3][4];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) M[i][j] = A[j][i];
            M[i][3] = (i == 0) ? 1.0 : 0.0;
        }
        for (int c = 0; c < 3; ++c) {
            int p = c;
            for (int r = c + 1; r < 3; ++r)
                if (std::fabs(M[r][c]) > std::fabs(M[p][c])) p = r;
            std::swap(M[p], M[c]);
            for (int r = 0; r < 3; ++r) {
                if (r == c) continue;
                double f = M[r][c] / M[c][c];
                for (int cc = c; cc < 4; ++cc) M[r][cc] -= f * M[c][cc];
            }
        }
        for (int i = 0; i < 3; ++i) x[i] = M[i][3] / M[i][i];
    }
    auto curv = geom::CurvatureData::zero(n);
    curv.R = c1.R;
    for (std::size_t i = 0; i < curv.dR.size(); ++i)
        curv.dR[i] = x[0] * c1.dR[i] + x[1] * c2.dR[i] + x[2] * c3.dR[i];
    curv.recompute_traces();
    REQUIRE(std::fabs(curv.dScal[0] - 1.0) < 1e-10);
    REQUIRE(std::fabs(curv.dScal[1]) < 1e-10);

    auto res = verify_appendix(n, curv);
    for (const auto& r : res) {
        if (r.lemma == 4 && r.sigma == 0) {
            CHECK(r.computed == doctest::Approx(sphere_volume(3) / 3.0).epsilon(1e-10));
            CHECK(r.computed == doctest::Approx(4.18879).epsilon(1e-5));
        }
        CHECK(r.residual() < 1e-10);
    }
}

TEST_CASE("appendix identities are trivially zero for flat data") {
    auto curv = geom::CurvatureData::zero(4);
    auto res = verify_appendix(4, curv);
    for (const auto& r : res) {
        CHECK(r.computed == 0.0);
        CHECK(r.claimed == 0.0);
    }
}
