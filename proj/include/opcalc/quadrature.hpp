#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace opcalc {

using cd = std::complex<double>;

// Gauss-Legendre rule on [-1,1]. Nodes/weights are cached per order.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int order);

// Integrate a scalar-valued function over consecutive panels
// [breaks[0],breaks[1]], [breaks[1],breaks[2]], ... with a fixed-order rule.
cd integrate_panels(const std::function<cd(double)>& f,
                    std::span<const double> breaks, int order = 16);

double integrate_panels_real(const std::function<double(double)>& f,
                             std::span<const double> breaks, int order = 16);

// Panel layouts.
std::vector<double> uniform_breaks(double a, double b, int panels);
// Dyadically graded toward `a`: [a, a+(b-a)/2^k, ..., b].
std::vector<double> graded_breaks(double a, double b, int levels);

// Golden-section maximization of a unimodal-ish function on [a,b].
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol = 1e-12, int maxIter = 200);

struct QuadReport {
    double truncationPoint = 0.0;  // where the tail was cut
    double tailEstimate = 0.0;     // bound on the discarded tail mass
    double stepHint = 0.0;         // finest panel width used
    int evaluations = 0;
    double crossCheckError = 0.0;  // deviation against an independent route, when computed
};

} // namespace opcalc
