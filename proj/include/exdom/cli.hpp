#pragma once

// Experiment runner: each subcommand is a library function that validates
// its parameters, computes deterministically, and writes CSV rows (17
// significant digits) plus a manifest JSON recording the configuration hash,
// seed and version. Every row carries the parameters that produced it.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "exdom/ansatz.hpp"
#include "exdom/appendix.hpp"
#include "exdom/dtn.hpp"
#include "exdom/extremal.hpp"

namespace exdom::cli {

inline const char* version() { return "exdom 0.1.0"; }

struct RunContext {
    std::string out_prefix;  // files out_prefix.csv / out_prefix.json
    std::uint64_t seed = 1;
    std::vector<std::pair<std::string, std::string>> config;  // key, value

    void set(const std::string& k, const std::string& v) { config.emplace_back(k, v); }
    template <typename T>
    void set_num(const std::string& k, T v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        config.emplace_back(k, os.str());
    }
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& cols) {
        std::filesystem::path p(path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        f_.open(path);
        if (!f_) throw std::runtime_error("cannot open output file: " + path);
        for (std::size_t i = 0; i < cols.size(); ++i) f_ << (i ? "," : "") << cols[i];
        f_ << "\n";
        ncols_ = cols.size();
    }
    void row(const std::vector<double>& vals) {
        if (vals.size() != ncols_) throw std::logic_error("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) f_ << (i ? "," : "") << format_g17(vals[i]);
        f_ << "\n";
    }
    void row_mixed(const std::vector<std::string>& vals) {
        if (vals.size() != ncols_) throw std::logic_error("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) f_ << (i ? "," : "") << vals[i];
        f_ << "\n";
    }

  private:
    std::ofstream f_;
    std::size_t ncols_ = 0;
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_manifest(const RunContext& ctx, const std::string& subcommand,
                           const nlohmann::json& extra = {}) {
    auto cfg = ctx.config;
    std::sort(cfg.begin(), cfg.end());
    std::string canon;
    for (auto& [k, v] : cfg) canon += k + "=" + v + "\n";
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["version"] = version();
    j["seed"] = ctx.seed;
    char hb[24];
    std::snprintf(hb, sizeof hb, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    j["config_hash"] = hb;
    nlohmann::json jc;
    for (auto& [k, v] : cfg) jc[k] = v;
    j["config"] = jc;
    if (!extra.empty()) j["summary"] = extra;
    std::filesystem::path p(ctx.out_prefix + ".json");
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p);
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Model parsing.
// ---------------------------------------------------------------------------

inline geom::ModelManifold parse_model(const std::string& kind, const Vec& lengths,
                                       double radius) {
    auto dims = [&](int n) {
        Vec L = lengths;
        if (L.empty()) L.assign(n, 1.0);
        if (static_cast<int>(L.size()) != n)
            throw std::invalid_argument("model '" + kind + "': expected " + std::to_string(n) +
                                        " lengths");
        return L;
    };
    if (kind == "torus2") return geom::ModelManifold::torus(dims(2));
    if (kind == "torus3") return geom::ModelManifold::torus(dims(3));
    if (kind == "box2") return geom::ModelManifold::dirichlet_box(dims(2));
    if (kind == "box3") return geom::ModelManifold::dirichlet_box(dims(3));
    if (kind == "neumann-box2") return geom::ModelManifold::neumann_box(dims(2));
    if (kind == "sphere3") return geom::ModelManifold::sphere(3, radius);
    if (kind == "sphere4") return geom::ModelManifold::sphere(4, radius);
    throw std::invalid_argument("unknown model kind: " + kind);
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

/// Appendix identity table: lemma, n, sigma, computed, claimed, residual.
inline int run_verify_identities(int n_lo, int n_hi, int trials, RunContext ctx) {
    if (n_lo < 3 || n_hi > 8 || n_lo > n_hi)
        throw std::invalid_argument("verify-identities: need 3 <= n_lo <= n_hi <= 8");
    if (trials < 1) throw std::invalid_argument("verify-identities: trials >= 1");
    CsvWriter csv(ctx.out_prefix + ".csv",
                  {"lemma", "n", "trial", "sigma", "computed", "claimed", "residual"});
    double worst = 0.0;
    for (int n = n_lo; n <= n_hi; ++n)
        for (int t = 0; t < trials; ++t) {
            auto curv = geom::random_curvature(n, ctx.seed + 1000 * t + n);
            for (const auto& r : spherical::verify_appendix(n, curv)) {
                csv.row({static_cast<double>(r.lemma), static_cast<double>(n),
                         static_cast<double>(t), static_cast<double>(r.sigma), r.computed,
                         r.claimed, r.residual()});
                worst = std::max(worst, r.residual());
            }
        }
    write_manifest(ctx, "verify-identities", {{"worst_residual", worst}});
    return worst <= 1e-10 ? 0 : 2;
}

/// Multiplier table of the boundary operator.
inline int run_dtn_spectrum(int n, double phi0p, int jmax, RunContext ctx) {
    if (n < 2 || jmax < 1) throw std::invalid_argument("dtn-spectrum: n >= 2 and jmax >= 1");
    CsvWriter csv(ctx.out_prefix + ".csv", {"n", "phi0p", "j", "m_j"});
    for (int j = 0; j <= jmax; ++j)
        csv.row({static_cast<double>(n), phi0p, static_cast<double>(j),
                 dtn::multiplier(n, j, phi0p)});
    write_manifest(ctx, "dtn-spectrum");
    return 0;
}

/// Printed flux constants per dimension.
inline int run_green_constants(const std::vector<int>& ns, double phi0p, RunContext ctx) {
    CsvWriter csv(ctx.out_prefix + ".csv", {"n", "phi0p", "C1", "C2", "Cn"});
    for (int n : ns) {
        auto f = green::flux_constants(n, phi0p);
        csv.row({static_cast<double>(n), phi0p, f.C1, f.C2, f.Cn});
    }
    write_manifest(ctx, "green-constants");
    return 0;
}

/// Flux oracle vs closed forms, plus the combination report.
inline int run_green_flux(const std::vector<int>& ns, double eps, int trials, double phi0p,
                          RunContext ctx) {
    CsvWriter csv(ctx.out_prefix + ".csv",
                  {"n", "trial", "eps", "flux_measured", "flux_predicted", "rel_gap_c1",
                   "hpair_measured", "hpair_predicted", "rel_gap_c2", "combined_measured",
                   "combined_printed", "combination_ratio"});
    int status = 0;
    for (int n : ns) {
        if (n < 4) throw std::invalid_argument("green-flux: n >= 4");
        for (int t = 0; t < trials; ++t) {
            auto curv = geom::random_curvature(n, ctx.seed + 131 * t + n);
            auto g = green::local_expansion(curv, 0.0, n);
            Rng rng(ctx.seed + 977 * t + n);
            Vec a = rng.gaussian_vec(n);
            auto fc = green::flux_constants(n, phi0p);
            double scale = (n == 4) ? std::pow(eps, 3) * std::log(eps) : std::pow(eps, 3);
            double pairing = green::grad_scal_pairing(curv, a);
            double fmeas = phi0p * green::flux_integral(g, eps, a);
            double fpred = fc.C1 * scale * pairing;
            double hmeas = green::hpairing(g, eps, a, phi0p);
            double hpred = fc.C2 * scale * pairing;
            auto comb = green::combination_check(g, eps, a, phi0p);
            auto relgap = [](double m, double p) {
                double s = std::max({std::fabs(m), std::fabs(p), 1e-300});
                return std::fabs(m - p) / s;
            };
            csv.row({static_cast<double>(n), static_cast<double>(t), eps, fmeas, fpred,
                     relgap(fmeas, fpred), hmeas, hpred, relgap(hmeas, hpred), comb.measured,
                     comb.predicted, comb.ratio});
            if (relgap(fmeas, fpred) > 1e-3 || relgap(hmeas, hpred) > 1e-3) status = 2;
        }
    }
    write_manifest(ctx, "green-flux");
    return status;
}

/// Fixed-point ansatz fit across epsilons: eps, Lambda, |phi|, mu.
inline int run_ansatz_fit(const geom::ModelManifold& m, const Vec& p, const Vec& eps_list,
                          int cutoff, double validity, RunContext ctx) {
    auto basis = spherical::Basis::get(m.n, cutoff);
    CsvWriter csv(ctx.out_prefix + ".csv", {"eps", "Lambda", "phi_l2", "mu"});
    for (double eps : eps_list) {
        auto f = ansatz::fit(m, p, eps, basis, 1e-9, 80, validity);
        double muv = ansatz::mu(m, p, f.Lambda, f.phi, eps, validity);
        csv.row({eps, f.Lambda, f.phi.l2_norm(), muv});
    }
    write_manifest(ctx, "ansatz-fit");
    return 0;
}

/// Eigen solves over an eps list; optional Richardson over grid, grid/2.
/// Columns: eps, h, lambda, mu_hat, residual.
inline int run_eig_sweep(const geom::ModelManifold& m, const Vec& p, const Vec& eps_list,
                         int grid, bool richardson, RunContext ctx, double* mu_hat_out = nullptr,
                         bool fit_mu = true) {
    CsvWriter csv(ctx.out_prefix + ".csv", {"eps", "h", "lambda", "mu_hat", "residual"});
    Vec lambdas;
    double lambda0 = 0.0;
    {
        eig::HoleShape none{p, 0.0, 0.0, std::nullopt};
        auto l0 = eig::first_eigen(m, none, grid);
        lambda0 = l0.lambda;
        if (richardson && m.case1()) {
            auto l0c = eig::first_eigen(m, none, grid / 2);
            lambda0 = (4.0 * l0.lambda - l0c.lambda) / 3.0;
        }
    }
    for (double eps : eps_list) {
        eig::HoleShape hole{p, eps, 0.0, std::nullopt};
        eig::FirstEigenOptions opt;
        opt.cascadic = true;
        auto r = eig::first_eigen(m, hole, grid, opt);
        double lam = r.lambda;
        if (richardson) {
            auto rc = eig::first_eigen(m, hole, grid / 2, opt);
            lam = (4.0 * r.lambda - rc.lambda) / 3.0;
        }
        lambdas.push_back(lam);
        csv.row({eps, r.h, lam, 0.0, r.residual});
    }
    double mu_hat = 0.0;
    if (fit_mu && eps_list.size() >= 4) {
        auto f = eig::asymptotic_fit(m.n, lambda0, eps_list, lambdas);
        mu_hat = f.mu_hat;
        if (mu_hat_out) *mu_hat_out = mu_hat;
        write_manifest(ctx, "eig-sweep",
                       {{"mu_hat", mu_hat}, {"lambda0", lambda0}, {"aux", f.intercept_aux}});
    } else {
        write_manifest(ctx, "eig-sweep", {{"lambda0", lambda0}});
    }
    return 0;
}

/// Hadamard shape derivative against the finite-difference oracle for seeded
/// random normal-speed fields; plus one tangential field.
inline int run_shape_derivative(const geom::ModelManifold& m, const Vec& p, double eps, int grid,
                                int nfields, RunContext ctx, double* worst_out = nullptr) {
    auto basis = spherical::Basis::get(m.n, 8);
    eig::HoleShape hole{p, eps, 0.0, std::nullopt};
    auto res = eig::first_eigen(m, hole, grid);
    CsvWriter csv(ctx.out_prefix + ".csv",
                  {"field", "eps", "grid", "hadamard", "fd_oracle", "rel_err"});
    Rng rng(ctx.seed);
    double worst = 0.0;
    for (int t = 0; t < nfields; ++t) {
        // band-limited normal speed xi
        spherical::SphereFn xi = spherical::SphereFn::zero(basis);
        for (int k = 0; k < basis->degree_offset(4); ++k) (*xi.coeffs)[k] = rng.gaussian();
        double nm = norm2(*xi.coeffs);
        for (auto& c : *xi.coeffs) c /= nm;
        xi = spherical::reconstruct(xi);
        auto field = [&](const Vec& dir) {
            Vec nu = eig::hole_normal(hole, dir);
            double v = xi.eval(dir);
            for (auto& c : nu) c *= v;
            return nu;
        };
        double had = eig::shape_derivative(m, hole, field, grid, basis, &res);
        // FD oracle: radial graph moves by t xi (round hole: normal = radial)
        double dt = 0.25 * res.h;
        eig::HoleShape hp = hole, hm = hole;
        spherical::SphereFn vb = xi;
        for (auto& c : *vb.coeffs) c *= dt / eps;
        vb = spherical::reconstruct(vb);
        hp.vbar = vb;
        spherical::SphereFn vbm = vb;
        for (auto& c : *vbm.coeffs) c = -c;
        hm.vbar = spherical::reconstruct(vbm);
        double fd = (eig::first_eigen(m, hp, grid).lambda - eig::first_eigen(m, hm, grid).lambda) /
                    (2.0 * dt);
        double rel = std::fabs(had - fd) / std::max(std::fabs(fd), 1e-300);
        worst = std::max(worst, rel);
        csv.row({static_cast<double>(t), eps, static_cast<double>(grid), had, fd, rel});
    }
    // tangential field: rotate around the hole
    auto tang = [&](const Vec& dir) {
        Vec t(m.n, 0.0);
        t[0] = -dir[1];
        t[1] = dir[0];
        return t;
    };
    double dtan = eig::shape_derivative(m, hole, tang, grid, basis, &res);
    csv.row({-1.0, eps, static_cast<double>(grid), dtan, 0.0,
             std::fabs(dtan) / std::fabs(res.lambda)});
    if (worst_out) *worst_out = worst;
    write_manifest(ctx, "shape-derivative",
                   {{"worst_rel_err", worst}, {"tangential_over_lambda",
                                               std::fabs(dtan) / std::fabs(res.lambda)}});
    return worst <= 0.05 ? 0 : 2;
}

/// Full extremal solve: modified Newton plus relocation, JSON summary and
/// CSV residual history.
inline int run_extremal_solve(const geom::ModelManifold& m, double eps, const Vec& p0, int grid,
                              double tol, RunContext ctx) {
    auto basis = spherical::Basis::get(m.n, 8);
    auto out = extremal::relocate(m, eps, p0, grid, basis, tol, 10, tol);
    CsvWriter csv(ctx.out_prefix + ".csv", {"step", "residual", "a_norm"});
    const auto& hist = out.inner.residual_history;
    for (std::size_t i = 0; i < hist.size(); ++i)
        csv.row({static_cast<double>(i), hist[i],
                 i < out.a_norm_history.size() ? out.a_norm_history[i] : norm2(out.inner.a)});
    eig::HoleShape hole{out.p_eps, eps, out.inner.v0,
                        out.inner.vbar.l2_norm() > 0 ? std::optional<spherical::SphereFn>(out.inner.vbar)
                                                     : std::nullopt};
    auto rep = extremal::extremality_residual(m, hole, grid, basis);
    nlohmann::json j;
    j["p_eps"] = out.p_eps;
    j["a_norm_history"] = out.a_norm_history;
    j["vbar_norm"] = out.inner.vbar.l2_norm();
    j["extremality_residual"] = rep.flux_residual;
    j["max_shape_derivative"] = rep.max_shape_derivative;
    j["iterations"] = out.iterations;
    j["translation_invariant_family"] = out.translation_invariant_family;
    write_manifest(ctx, "extremal-solve", j);
    return 0;
}

}  // namespace exdom::cli
