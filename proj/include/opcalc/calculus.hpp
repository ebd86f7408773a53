#pragma once

#include <optional>
#include <span>
#include <vector>

#include "opcalc/functions.hpp"
#include "opcalc/measures.hpp"
#include "opcalc/operators.hpp"

namespace opcalc {

enum class CalcRoute { Primary, Regularized, SpectralOracle };

struct CalculusResult {
    Matrix matrix;
    CalcRoute route = CalcRoute::Primary;
    QuadReport quad;
    double normValue = 0.0;
    // relative deviation against the spectral oracle, when it was computed
    double oracleDeviation = -1.0;
};

// Syntactic Laplace recognition: exp/rational building blocks map to atoms
// and exponential-polynomial densities. Empty when the tree has a piece with
// no catalog transform.
std::optional<WeightedMeasure> recognize_measure(const FuncPtr& expr);

// T_mu = sum a_i T(t_i) + int T(s) g(s) ds by operator-valued quadrature.
CalculusResult apply_measure(const OperatorModel& op, const WeightedMeasure& mu);

// f(A): recognized transforms go through the measure route; everything else
// through regularization with (z - lambda)^{-1} and a boundary-transform
// recovery. Cross-checked against the spectral oracle.
CalculusResult apply_function(const OperatorModel& op, const HalfPlaneFunction& f,
                              bool crossCheck = true);

// (e_{-tau} f)(A) = f(A) T(tau).
CalculusResult apply_with_semigroup(const OperatorModel& op, const HalfPlaneFunction& f,
                                    double tau);

// f(A)(A-lambda)^{-alpha} as the strong integral
// 1/Gamma(alpha) int t^{alpha-1} e^{lambda t} f(A)T(t) dt.
CalculusResult apply_smoothed(const OperatorModel& op, const HalfPlaneFunction& f,
                              cd lambda, cd alpha);

// f^{(m)}(A), symbolic route; for recognized f also the moment route
// T_{(-t)^m mu} with the two cross-checked.
CalculusResult apply_derivative(const OperatorModel& op, const HalfPlaneFunction& f,
                                int m);

struct ConvergenceCell {
    double k = 0.0;
    double eps = 0.0;
    double error = 0.0;      // || f_{k,eps}(A) - f(A) ||
    double applied = 0.0;    // || f_{k,eps}(A) ||
};

struct ConvergenceReport {
    std::vector<ConvergenceCell> cells; // row-major over (k, eps) grids
    double referenceNorm = 0.0;         // || f(A) ||
    double finalError = 0.0;            // error at the finest corner
    double supApplied = 0.0;
    bool monotoneAlongDiagonal = false;
};

// Approximants f_{k,eps}(z) = f(z+eps) k/(z+eps-omega+k) tabulated against f(A).
ConvergenceReport convergence_limit(const OperatorModel& op, const HalfPlaneFunction& f,
                                    std::span<const double> kGrid,
                                    std::span<const double> epsGrid);

} // namespace opcalc
