#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "exdom/cli.hpp"

using namespace exdom;

static std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TEST_CASE("verify-identities: residual table and determinism") {
    cli::RunContext ctx;
    ctx.out_prefix = "/tmp/exdom_test/vi_a";
    ctx.seed = 5;
    CHECK(cli::run_verify_identities(3, 4, 3, ctx) == 0);
    auto a = slurp("/tmp/exdom_test/vi_a.csv");
    CHECK(a.find("lemma,n,trial,sigma,computed,claimed,residual") == 0);

    cli::RunContext ctx2 = ctx;
    ctx2.out_prefix = "/tmp/exdom_test/vi_b";
    CHECK(cli::run_verify_identities(3, 4, 3, ctx2) == 0);
    CHECK(a == slurp("/tmp/exdom_test/vi_b.csv"));  // byte-identical reruns

    cli::RunContext ctx3 = ctx;
    ctx3.out_prefix = "/tmp/exdom_test/vi_c";
    ctx3.seed = 6;
    CHECK(cli::run_verify_identities(3, 4, 3, ctx3) == 0);
    CHECK(a != slurp("/tmp/exdom_test/vi_c.csv"));  // seed changes the data

    CHECK_THROWS(cli::run_verify_identities(1, 4, 3, ctx));
    CHECK_THROWS(cli::run_verify_identities(3, 4, 0, ctx));
}

TEST_CASE("manifest carries hash, seed, version") {
    cli::RunContext ctx;
    ctx.out_prefix = "/tmp/exdom_test/dtn";
    ctx.seed = 9;
    ctx.set("n", "3");
    CHECK(cli::run_dtn_spectrum(3, 1.0, 8, ctx) == 0);
    auto j = nlohmann::json::parse(slurp("/tmp/exdom_test/dtn.json"));
    CHECK(j["subcommand"] == "dtn-spectrum");
    CHECK(j["seed"] == 9);
    CHECK(std::string(j["version"]).find("exdom") == 0);
    CHECK(j["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("green constants and flux tables") {
    cli::RunContext ctx;
    ctx.out_prefix = "/tmp/exdom_test/gc";
    CHECK(cli::run_green_constants({4, 5, 6}, 1.0, ctx) == 0);
    auto s = slurp("/tmp/exdom_test/gc.csv");
    CHECK(s.find("n,phi0p,C1,C2,Cn") == 0);

    cli::RunContext ctx2;
    ctx2.out_prefix = "/tmp/exdom_test/gf";
    ctx2.seed = 3;
    CHECK(cli::run_green_flux({5, 6}, 1e-3, 2, 1.0, ctx2) == 0);
    auto t = slurp("/tmp/exdom_test/gf.csv");
    CHECK(t.find("combination_ratio") != std::string::npos);
}

TEST_CASE("eig sweep rows carry their parameters") {
    cli::RunContext ctx;
    ctx.out_prefix = "/tmp/exdom_test/eig";
    auto torus = cli::parse_model("torus2", {}, 1.0);
    CHECK(cli::run_eig_sweep(torus, {0.5, 0.5}, {0.06}, 64, false, ctx, nullptr, false) == 0);
    auto s = slurp("/tmp/exdom_test/eig.csv");
    CHECK(s.find("eps,h,lambda,mu_hat,residual") == 0);
    // first column reproduces eps at full 17-digit precision
    auto line = s.substr(s.find('\n') + 1);
    CHECK(std::stod(line.substr(0, line.find(','))) == doctest::Approx(0.06).epsilon(1e-16));
}

TEST_CASE("model parsing validates inputs") {
    CHECK_THROWS(cli::parse_model("klein-bottle", {}, 1.0));
    CHECK_THROWS(cli::parse_model("torus2", {1.0, 2.0, 3.0}, 1.0));
    auto m = cli::parse_model("box2", {1.0, 2.0}, 1.0);
    CHECK(m.kind == geom::ModelKind::DirichletBox);
}

TEST_CASE("binary: usage exit code differs from numeric failure") {
    const char* bin = std::getenv("EXDOM_CLI");
    if (!bin) return;  // available only under ctest
    std::string b(bin);
    int usage = std::system((b + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(usage) != 0);
    int ok = std::system(
        (b + " dtn-spectrum --n 3 --jmax 4 --out /tmp/exdom_test/bin_dtn >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(ok) == 0);
    // numeric/validation failure inside a subcommand exits with 3
    int bad = std::system(
        (b + " green-flux --n 3 --out /tmp/exdom_test/bin_bad >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(bad) == 3);
    CHECK(WEXITSTATUS(usage) != WEXITSTATUS(bad));
    // unknown keys in a config file are rejected
    {
        std::ofstream f("/tmp/exdom_test/bad.cfg");
        f << "definitely-not-a-key=1\n";
    }
    int cfg = std::system(
        (b + " dtn-spectrum --config /tmp/exdom_test/bad.cfg >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(cfg) != 0);
}
