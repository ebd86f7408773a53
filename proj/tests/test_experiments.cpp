#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "opcalc/errors.hpp"
#include "opcalc/experiments.hpp"

using namespace opcalc;

TEST_CASE("config parsing") {
    std::istringstream is(
        "# comment\n"
        "[experiment]\n"
        "name = thm35\n"
        "seed = 42\n"
        "tol = 1e-3\n"
        "\n"
        "[grid]\n"
        "tau = 0.1 0.5 1 # trailing comment\n");
    const Config cfg = Config::parse(is);
    CHECK(cfg.get("experiment", "name") == "thm35");
    CHECK(cfg.get_long("experiment", "seed", 0) == 42);
    CHECK(cfg.get_double("experiment", "tol", 0) == doctest::Approx(1e-3));
    const auto taus = cfg.get_doubles("grid", "tau");
    REQUIRE(taus.size() == 3);
    CHECK(taus[1] == doctest::Approx(0.5));
    CHECK(cfg.get("grid", "missing", "fallback") == "fallback");

    std::istringstream bad("key_without_equals\n");
    CHECK_THROWS_AS((void)Config::parse(bad), NumericError);
}

TEST_CASE("operator recipes") {
    Rng rng(7);
    const OperatorModel d = make_operator("diag:1,0;2,-0.5", rng);
    CHECK(d.kind() == OperatorKind::Diagonal);
    CHECK(d.dim() == 2);
    CHECK(d.eigenvalues()(1) == cd(2.0, -0.5));

    const OperatorModel j = make_operator("jordan:0.5,0:3", rng);
    CHECK(j.kind() == OperatorKind::Jordan);
    CHECK(j.dim() == 3);

    // random normal: eigenvalues inside the configured strip
    Rng rngA(11);
    const OperatorModel nrm = make_operator("normal:4", rngA, 0.05);
    CHECK(nrm.dim() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(nrm.eigenvalues()(i).real() >= 0.05 - 1e-12);
        CHECK(nrm.eigenvalues()(i).real() <= 5.05 + 1e-12);
        CHECK(std::abs(nrm.eigenvalues()(i).imag()) <= 50.0 + 1e-12);
    }
    // normality: A A* = A* A
    const Matrix a = nrm.matrix();
    CHECK(operator_norm(Matrix(a * a.adjoint() - a.adjoint() * a)) < 1e-10);

    // jordan perturbation respects the conditioning cap
    Rng rngB(13);
    const OperatorModel jp = make_operator("jpert:3", rngB);
    CHECK(jp.dim() == 3);
    if (jp.eig_usable()) CHECK(jp.eig_condition() <= 1e4);

    // determinism: same seed, same matrix
    Rng r1(99), r2(99);
    const OperatorModel m1 = make_operator("normal:3", r1);
    const OperatorModel m2 = make_operator("normal:3", r2);
    CHECK(operator_norm(Matrix(m1.matrix() - m2.matrix())) == 0.0);

    CHECK_THROWS_AS((void)make_operator("frobnicate:2", rng), NumericError);
}

TEST_CASE("named function family") {
    for (const auto& name : default_function_names()) {
        const HalfPlaneFunction f = named_function(name, -0.5);
        CHECK(boundedness_check(f) == Boundedness::Bounded);
        (void)evaluate(f, cd(1.0, 2.0));
    }
    CHECK_THROWS_AS((void)named_function("nope", 0.0), NumericError);
}

TEST_CASE("eta integrand helpers") {
    CHECK(eta_log_band_constant(2.0) > 0.0);
    for (double t : {1e-6, 1e-3, 0.1, 1.0, 4.0}) {
        const double up = eta_upper_integrand(1.0, t, 2.0);
        CHECK(up >= eta_lower_bound(1.0, t, 2.0).value - 1e-12);
        CHECK(std::isfinite(up));
    }
    const double c = smoothing_bound_constant(0.5, -1.0, 0.5);
    CHECK(c > 0.0);
    CHECK(std::isfinite(c));
    // larger alpha integrates less of the log-singular head
    CHECK(smoothing_bound_constant(1.0, -1.0, 0.5) < c * 4.0);
}

TEST_CASE("csv schema and determinism of a full run") {
    Config cfg = Config::load("configs/demo_thm44.cfg");
    RunContext ctx = make_context(cfg);
    ctx.outDir = "/tmp/opcalc_test_out";

    const auto rows1 = run_thm44(ctx);
    const auto rows2 = run_thm44(ctx);
    std::ostringstream os1, os2;
    write_csv(os1, rows1);
    write_csv(os2, rows2);
    CHECK(os1.str() == os2.str());
    CHECK(os1.str().rfind("experiment,param:operator,param:f,param:omega,param:m,"
                          "param:quantity,measured,bound,ratio,pass\n",
                          0) == 0);

    size_t mOneRows = 0;
    for (const auto& r : rows1) {
        CHECK(r.ratio == doctest::Approx(r.measured / r.bound));
        if (!r.params.empty() && r.params.back().second == "m_bounded" &&
            r.params[3].second == "1")
            ++mOneRows;
    }
    CHECK(mOneRows >= 50);
}

TEST_CASE("emission writes csv and svg") {
    Config cfg = Config::load("configs/demo_stability.cfg");
    RunContext ctx = make_context(cfg);
    ctx.outDir = "/tmp/opcalc_test_emit";
    bool allPass = false;
    const auto rows = run_and_emit("stability", ctx, &allPass);
    CHECK(allPass);
    CHECK(!rows.empty());
    CHECK(std::filesystem::exists(ctx.outDir + "/stability.csv"));
    CHECK(std::filesystem::exists(ctx.outDir + "/stability.svg"));
    // header-only csv for an empty table
    write_csv_file(ctx.outDir + "/empty.csv", {});
    std::ifstream f(ctx.outDir + "/empty.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "experiment,measured,bound,ratio,pass");
    CHECK(!std::getline(f, line));

    // unknown emit format is a usage error
    CHECK_THROWS_AS(emit_rows("html", ctx.outDir + "/x.html", rows), NumericError);
}

TEST_CASE("monotone bound diagnostics in the thm35 table") {
    Config cfg = Config::load("configs/demo_thm35.cfg");
    RunContext ctx = make_context(cfg);
    const auto rows = run_thm35(ctx);
    // for fixed (operator, f, omega): bound nonincreasing in tau in the
    // exponential regime, growing as tau decreases in the log regime
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    for (const auto& r : rows) {
        if (r.params.back().second != "norm_vs_eta_bound") continue;
        const std::string key = r.params[0].second + "|" + r.params[1].second + "|" +
                                r.params[2].second;
        curves[key].push_back({std::stod(r.params[3].second), r.bound});
    }
    const double omegaTauBoundary = 0.5; // q = 2 regime split
    for (auto& [key, pts] : curves) {
        std::sort(pts.begin(), pts.end());
        const double omega = std::stod(key.substr(key.rfind('|') + 1));
        for (size_t i = 0; i + 1 < pts.size(); ++i) {
            const double at1 = omega * pts[i].first, at2 = omega * pts[i + 1].first;
            if (at1 > omegaTauBoundary && at2 > omegaTauBoundary)
                CHECK(pts[i + 1].second <= pts[i].second * (1.0 + 1e-9));
            if (at2 < 0.2) // well inside the log regime: larger bound at smaller tau
                CHECK(pts[i].second >= pts[i + 1].second * (1.0 - 1e-9));
        }
    }
}
