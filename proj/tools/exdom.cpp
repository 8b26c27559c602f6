// Command-line experiment runner. Subcommands bind the library modules to
// reproducible file-based experiments; see README for usage.

#include <CLI11.hpp>

#include "exdom/cli.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

exdom::Vec parse_list(const std::string& s) {
    exdom::Vec out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw CLI::ValidationError("empty numeric list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace exdom;
    CLI::App app{"exdom: extremal-domain eigenvalue experiments"};
    app.require_subcommand(1);
    app.fallthrough(true);
    app.set_config("--config", "", "flat key=value configuration file");
    app.allow_config_extras(false);

    std::string out_prefix = "exdom_out/run";
    std::uint64_t seed = 1;
    int threads = 0;
    app.add_option("--out", out_prefix, "output prefix (.csv/.json appended)")->capture_default_str();
    app.add_option("--seed", seed, "seed for everything random")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (or env EXDOM_THREADS)");

    std::string model_kind = "torus2", p_str = "0.5,0.5", eps_str = "0.05", lengths_str;
    double radius = 1.0;
    auto add_model_opts = [&](CLI::App* c) {
        c->add_option("--model", model_kind, "torus2|torus3|box2|box3|neumann-box2|sphere3")
            ->capture_default_str();
        c->add_option("--p", p_str, "point coordinates, comma separated")->capture_default_str();
        c->add_option("--lengths", lengths_str, "periods or side lengths, comma separated");
        c->add_option("--radius", radius, "sphere radius")->capture_default_str();
    };

    // verify-identities
    int vi_nlo = 3, vi_nhi = 7, vi_trials = 20;
    auto* vi = app.add_subcommand("verify-identities", "appendix identity residual table");
    vi->add_option("--n-lo", vi_nlo)->capture_default_str();
    vi->add_option("--n-hi", vi_nhi)->capture_default_str();
    vi->add_option("--trials", vi_trials)->capture_default_str();

    // dtn-spectrum
    int dt_n = 3, dt_jmax = 16;
    double dt_phi0p = 1.0;
    auto* dt = app.add_subcommand("dtn-spectrum", "multiplier table (j, m_j)");
    dt->add_option("--n", dt_n)->capture_default_str();
    dt->add_option("--phi0p", dt_phi0p)->capture_default_str();
    dt->add_option("--jmax", dt_jmax)->capture_default_str();

    // green-constants
    std::string gc_ns = "4,5,6,7";
    double gc_phi0p = 1.0;
    auto* gc = app.add_subcommand("green-constants", "printed flux constants (n, C1, C2, Cn)");
    gc->add_option("--n", gc_ns, "dimension list")->capture_default_str();
    gc->add_option("--phi0p", gc_phi0p)->capture_default_str();

    // green-flux
    std::string gf_ns = "5,6,7";
    double gf_eps = 1e-3, gf_phi0p = 1.0;
    int gf_trials = 10;
    auto* gf = app.add_subcommand("green-flux", "oracle vs formula comparisons");
    gf->add_option("--n", gf_ns, "dimension list")->capture_default_str();
    gf->add_option("--eps", gf_eps)->capture_default_str();
    gf->add_option("--trials", gf_trials)->capture_default_str();
    gf->add_option("--phi0p", gf_phi0p)->capture_default_str();

    // ansatz-fit
    int af_cutoff = 6;
    double af_validity = 0.0;
    auto* af = app.add_subcommand("ansatz-fit", "(eps, Lambda, |phi|, mu) rows");
    add_model_opts(af);
    af->add_option("--eps", eps_str, "eps list")->capture_default_str();
    af->add_option("--cutoff", af_cutoff, "harmonic degree cutoff")->capture_default_str();
    af->add_option("--validity", af_validity, "validity radius override")->capture_default_str();

    // eig / eig-sweep
    int eg_grid = 128;
    bool eg_rich = false;
    auto* eg = app.add_subcommand("eig", "single eigenvalue run");
    add_model_opts(eg);
    eg->add_option("--eps", eps_str)->capture_default_str();
    eg->add_option("--grid", eg_grid, "nodes per unit length")->capture_default_str();
    eg->add_flag("--richardson", eg_rich, "extrapolate over grid and grid/2");

    auto* es = app.add_subcommand("eig-sweep", "sweep over eps and fit the asymptotic law");
    add_model_opts(es);
    es->add_option("--eps", eps_str, "eps list (>= 4 values to fit)")->capture_default_str();
    es->add_option("--grid", eg_grid)->capture_default_str();
    es->add_flag("--richardson", eg_rich);

    // shape-derivative
    int sd_grid = 256, sd_fields = 5;
    auto* sd = app.add_subcommand("shape-derivative", "Hadamard vs finite-difference oracle");
    add_model_opts(sd);
    sd->add_option("--eps", eps_str)->capture_default_str();
    sd->add_option("--grid", sd_grid)->capture_default_str();
    sd->add_option("--fields", sd_fields)->capture_default_str();

    // extremal-solve
    int xs_grid = 256;
    double xs_tol = 1e-8;
    auto* xs = app.add_subcommand("extremal-solve", "modified Newton + relocation");
    add_model_opts(xs);
    xs->add_option("--eps", eps_str)->capture_default_str();
    xs->add_option("--grid", xs_grid)->capture_default_str();
    xs->add_option("--tol", xs_tol)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // usage/config errors: CLI11 exit codes
    }

#ifdef _OPENMP
    if (const char* env = std::getenv("EXDOM_THREADS"); env && threads == 0)
        threads = std::atoi(env);
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        cli::RunContext ctx;
        ctx.out_prefix = out_prefix;
        ctx.seed = seed;
        ctx.set("out", out_prefix);
        ctx.set_num("seed", seed);

        auto model = [&]() {
            Vec lens = lengths_str.empty() ? Vec{} : parse_list(lengths_str);
            auto m = cli::parse_model(model_kind, lens, radius);
            ctx.set("model", model_kind);
            if (!lengths_str.empty()) ctx.set("lengths", lengths_str);
            return m;
        };
        auto point = [&](int n) {
            Vec p = parse_list(p_str);
            if (static_cast<int>(p.size()) != n)
                throw std::invalid_argument("--p: expected " + std::to_string(n) + " coordinates");
            ctx.set("p", p_str);
            return p;
        };

        if (*vi) {
            ctx.set_num("n_lo", vi_nlo);
            ctx.set_num("n_hi", vi_nhi);
            ctx.set_num("trials", vi_trials);
            return cli::run_verify_identities(vi_nlo, vi_nhi, vi_trials, ctx);
        }
        if (*dt) {
            ctx.set_num("n", dt_n);
            ctx.set_num("phi0p", dt_phi0p);
            ctx.set_num("jmax", dt_jmax);
            return cli::run_dtn_spectrum(dt_n, dt_phi0p, dt_jmax, ctx);
        }
        if (*gc) {
            std::vector<int> ns;
            for (double v : parse_list(gc_ns)) ns.push_back(static_cast<int>(v));
            ctx.set("n", gc_ns);
            ctx.set_num("phi0p", gc_phi0p);
            return cli::run_green_constants(ns, gc_phi0p, ctx);
        }
        if (*gf) {
            std::vector<int> ns;
            for (double v : parse_list(gf_ns)) ns.push_back(static_cast<int>(v));
            ctx.set("n", gf_ns);
            ctx.set_num("eps", gf_eps);
            ctx.set_num("trials", gf_trials);
            ctx.set_num("phi0p", gf_phi0p);
            return cli::run_green_flux(ns, gf_eps, gf_trials, gf_phi0p, ctx);
        }
        if (*af) {
            auto m = model();
            auto p = point(m.n);
            Vec eps = parse_list(eps_str);
            ctx.set("eps", eps_str);
            ctx.set_num("cutoff", af_cutoff);
            return cli::run_ansatz_fit(m, p, eps, af_cutoff, af_validity, ctx);
        }
        if (*eg || *es) {
            auto m = model();
            auto p = point(m.n);
            Vec eps = parse_list(eps_str);
            ctx.set("eps", eps_str);
            ctx.set_num("grid", eg_grid);
            ctx.set_num("richardson", eg_rich ? 1 : 0);
            return cli::run_eig_sweep(m, p, eps, eg_grid, eg_rich, ctx, nullptr,
                                      es->parsed());
        }
        if (*sd) {
            auto m = model();
            auto p = point(m.n);
            Vec eps = parse_list(eps_str);
            ctx.set("eps", eps_str);
            ctx.set_num("grid", sd_grid);
            ctx.set_num("fields", sd_fields);
            return cli::run_shape_derivative(m, p, eps.at(0), sd_grid, sd_fields, ctx);
        }
        if (*xs) {
            auto m = model();
            auto p = point(m.n);
            Vec eps = parse_list(eps_str);
            ctx.set("eps", eps_str);
            ctx.set_num("grid", xs_grid);
            ctx.set_num("tol", xs_tol);
            return cli::run_extremal_solve(m, eps.at(0), p, xs_grid, xs_tol, ctx);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;  // numeric/validation failure, distinct from usage errors
    }
    return 0;
}
