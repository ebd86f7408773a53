#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opcalc/quadrature.hpp"

namespace opcalc {

class WeightedMeasure; // measures.hpp

// Expression tree for closed-form bounded holomorphic functions on a right
// half-plane R_w = { Re z > w }. Primitives:
//   Constant c, Var z, ExpDecay e^{-tau z} (tau >= 0),
//   ResolventPower (z-lambda)^{-alpha} (principal branch, Re lambda < w),
//   Shift f(z+eps), Sum, Product, IntPower f^n.
struct FuncExpr {
    enum class Tag { Constant, Var, ExpDecay, ResolventPower, Shift, Sum, Product, IntPower };

    Tag tag;
    cd value{};     // Constant: the value; ResolventPower: lambda
    cd exponent{};  // ResolventPower: alpha (Re alpha > 0)
    double tau = 0; // ExpDecay rate; Shift offset
    int power = 0;  // IntPower exponent (>= 0)
    std::vector<std::shared_ptr<const FuncExpr>> kids;
};

using FuncPtr = std::shared_ptr<const FuncExpr>;

FuncPtr fe_constant(cd c);
FuncPtr fe_var();
FuncPtr fe_exp_decay(double tau);
FuncPtr fe_resolvent_power(cd lambda, cd alpha);
FuncPtr fe_shift(FuncPtr f, cd eps);
FuncPtr fe_sum(std::vector<FuncPtr> kids);
FuncPtr fe_product(std::vector<FuncPtr> kids);
FuncPtr fe_int_power(FuncPtr f, int n);
FuncPtr fe_scale(cd c, FuncPtr f);

// A function together with its declared half-plane of definition.
class HalfPlaneFunction {
public:
    HalfPlaneFunction() = default;
    HalfPlaneFunction(FuncPtr expr, double abscissa);

    const FuncPtr& expr() const { return expr_; }
    double abscissa() const { return abscissa_; }

    // Same expression viewed on a larger half-plane (w' >= current poles allow).
    HalfPlaneFunction on(double abscissa) const { return {expr_, abscissa}; }

    std::optional<double> cached_sup() const { return cachedSup_; }
    void cache_sup(double v) const { if (!cachedSup_) cachedSup_ = v; }

private:
    FuncPtr expr_;
    double abscissa_ = 0.0;
    mutable std::optional<double> cachedSup_; // write-once
};

enum class Boundedness { Bounded, Unverified };

// Conservative syntactic check: polynomial growth degree at infinity must be
// <= 0. Products of bounded primitives pass; a bare z passes only against a
// (z-lambda)^{-alpha} with enough decay.
Boundedness boundedness_check(const HalfPlaneFunction& f);
double growth_degree(const FuncPtr& e);

cd evaluate(const HalfPlaneFunction& f, cd z);
cd evaluate_expr(const FuncPtr& e, cd z);

// Exact symbolic m-th derivative (with light simplification).
HalfPlaneFunction derivative(const HalfPlaneFunction& f, int m);

struct SupNormReport {
    double value = 0.0;
    double argS = 0.0;    // boundary parameter where the max was found
    int samples = 0;
};

// sup over R_omega of |f| computed as the boundary sup on Re z = omega:
// coarse grid, log-spaced tails with decay analysis, golden-section polish.
double sup_norm(const HalfPlaneFunction& f, double omega, SupNormReport* report = nullptr);

struct MikhlinNorm {
    double value = 0.0;
    double supF = 0.0;
    double supDerivTerm = 0.0;
    SupNormReport gridF, gridDeriv;
};

// || f ||_{H^infty_1(R_omega)} = sup |f(z)| + sup |(z-omega) f'(z)|.
MikhlinNorm mikhlin_norm(const HalfPlaneFunction& f, double omega);

// Boundary trace of a function on the line omega + i s, uniform grid in s.
struct BoundaryTrace {
    double omega = 0.0;
    double s0 = 0.0;
    double ds = 0.0;
    std::vector<cd> values;
};

BoundaryTrace sample_trace(const HalfPlaneFunction& f, double omega,
                           double sMax, int count);

struct PoissonResult {
    cd value{};
    double kernelTailMass = 0.0; // Poisson mass outside the sampled trace window
};

// Harmonic extension: convolve the trace on Re z = omega with the Poisson
// kernel of the strip width omegaPrime - omega, evaluated at omegaPrime + i s.
PoissonResult poisson_extend(const BoundaryTrace& trace, double omegaPrime, double s,
                             double tailTol = 1e-6);

// n-th derivative at beta + i s from boundary values on Re z = alpha < beta,
// via the Cauchy integral along the vertical line.
cd cauchy_derivative_line(const HalfPlaneFunction& f, double alpha, double beta,
                          int n, double s, QuadReport* report = nullptr);

struct PaleyWienerOptions {
    int fftLogSize = 21;      // number of samples = 2^fftLogSize
    double boundaryCutoff = 8192.0; // trace sampled on |s| <= cutoff
    double gridStep = 1.0 / 1024.0; // step of the returned density grid
    double horizon = 40.0;          // support cap of the returned density
    double causalityTol = 2e-2;     // relative mass allowed at negative times
};

// Recover the L^1-weighted inverse transform of h(z) = f(z) (z-lambda)^{-alpha}
// on Re z > 0 and return e_{-omega0} g as a density measure with weight 0,
// so its Laplace transform reproduces h(. + omega0).
WeightedMeasure paley_wiener_factor(const HalfPlaneFunction& f, double alpha,
                                    cd lambda, double omega0,
                                    const PaleyWienerOptions& opts = {});

// Prefix grammar parser, e.g. "mul(exp(-1 z), rpow(add(z,1), -0.5))".
// See README for the grammar.
FuncPtr parse_function(const std::string& text);
std::string format_function(const FuncPtr& e);

} // namespace opcalc
