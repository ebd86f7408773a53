#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/factorization.hpp"
#include "opcalc/report.hpp"
#include "opcalc/transference.hpp"

namespace opcalc {

// Deterministic generator: splitmix64 underneath so identical seeds give
// byte-identical experiment tables on a fixed platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}
    uint64_t next();
    double uniform();            // [0, 1)
    double normal();             // Box-Muller
    cd complex_normal();

private:
    uint64_t state_;
};

// Operator recipes:
//   diag:re,im;re,im;...        fixed diagonal
//   dense:path                  flat text file
//   jordan:re,im:size           single Jordan block
//   normal:dim                  random normal, eigenvalues in the configured strip
//   jpert:dim                   random Jordan-type perturbation, cond(V) <= 1e4
//   stability_bundle            the fixed non-normal stability test matrix
OperatorModel make_operator(const std::string& recipe, Rng& rng,
                            double stripReMin = 0.05);

// Named bounded functions on R_line used across the experiments; poles sit at
// line - 1 and line - 2.
HalfPlaneFunction named_function(const std::string& name, double line);
std::vector<std::string> default_function_names();

struct RunContext {
    Config cfg;
    uint64_t seed = 1;
    double tol = 1e-3;
    std::string outDir = "out";
    std::string configName; // experiment name from the config
};

RunContext make_context(const Config& cfg);

std::vector<ResultRow> run_thm35(const RunContext& ctx);
std::vector<ResultRow> run_cor310(const RunContext& ctx);
std::vector<ResultRow> run_thm44(const RunContext& ctx);
std::vector<ResultRow> run_stability(const RunContext& ctx);
std::vector<ResultRow> run_eta_sweep(const RunContext& ctx);

// Runs the named experiment, writes <out>/<name>.csv (and .svg), returns the
// rows. allPass reflects every pass flag in the table.
std::vector<ResultRow> run_and_emit(const std::string& name, const RunContext& ctx,
                                    bool* allPass);

// Smoothing-bound constant of the fractional-power composition: the explicit
// quadrature constant C(alpha, lambda, omega) built from eta upper bounds.
double smoothing_bound_constant(double alpha, double lambdaRe, double omega);

// Measured band constant sup value/|log(alpha t)| of the log-regime
// certificates over the computable window (cached per q).
double eta_log_band_constant(double q);

// eta upper value usable inside integrals over t (closed forms, tabulated log
// certificates, band-constant extension below the computable window).
double eta_upper_integrand(double omega, double t, double q);

} // namespace opcalc
