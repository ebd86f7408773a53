#pragma once

#include <span>
#include <string>
#include <vector>

#include "opcalc/factorization.hpp"
#include "opcalc/measures.hpp"
#include "opcalc/operators.hpp"

namespace opcalc {

// Vector-valued function on a uniform grid over [-L, L]; the discrete carrier
// of the factorization T_mu = P o L_{e_omega mu} o iota.
struct GridSignal {
    double L = 0.0;
    double h = 0.0;
    double p = 2.0; // L^p bookkeeping
    Eigen::MatrixXcd values; // dim x nodes, node k sits at -L + k h
    // one-sided jump nodes: at a "left edge" the function lives to the left
    // of the node (right limit zero), at a "right edge" to the right. The
    // stored sample is the one-sided value; integrators respect the side.
    std::vector<int> leftEdges;
    std::vector<int> rightEdges;

    int nodes() const { return static_cast<int>(values.cols()); }
    double sAt(int k) const { return -L + h * static_cast<double>(k); }
    double lp_norm() const;
};

// iota(x)(s) = psi(-s) T(-s) x for s <= 0.
GridSignal embed(const Vector& x, const FactorFunction& psi, const OperatorModel& op,
                 double L, double h, double p = 2.0);

struct ConvolveDiagnostics {
    bool offGridAtoms = false;
    double interpolationError = 0.0; // crude bound from cubic interpolation
};

// L_mu(f) = mu * f on the grid; atoms shift (exactly when on-grid), the
// density part convolves by aligned trapezoid quadrature.
GridSignal convolve_operator(const GridSignal& sig, const WeightedMeasure& mu,
                             ConvolveDiagnostics* diag = nullptr);

// P f = int_0^infty phi(t) T(t) f(t) dt.
Vector project(const GridSignal& sig, const FactorFunction& phi,
               const OperatorModel& op);

// Discretized scalar convolution-operator norm on l^2 by power iteration on
// the composition with the adjoint.
double convolution_operator_norm(const WeightedMeasure& mu, double L, double h,
                                 int maxIters = 200, double relTol = 1e-6);

struct FactorizationCheckRow {
    double directNorm = 0.0;
    double factorNorm = 0.0;
    double relError = 0.0;
};

struct FactorizationCheckReport {
    std::vector<FactorizationCheckRow> rows;
    double tMuNorm = 0.0;       // ||T_mu|| measured directly
    double convNorm = 0.0;      // ||L_{e_omega mu}|| on the grid
    double bound = 0.0;         // M^2 cert.value ||L||  (or the moment constant)
    double M = 1.0;
    double iotaNormBound = 0.0; // M ||psi||_p
    double projNormBound = 0.0; // M ||phi||_{p'}
    bool identityOk = false;
    bool estimateOk = false;
    double maxRelError = 0.0;
};

// Verifies T_mu x = P(L_{e_omega mu}(iota x)) for each x and the transference
// estimate ||T_mu|| <= M^2 eta ||L||. Requires supp(mu) in [cert.t, inf).
FactorizationCheckReport factorization_check(const OperatorModel& op,
                                             const WeightedMeasure& mu,
                                             const FactorizationCertificate& cert,
                                             std::span<const Vector> xs,
                                             double identityTol = 1e-5);

// Prop-4.3-style check with psi = phi = 1_{R_+} e_omega (omega < 0):
// T_{t mu} = P o L_{e_{-omega} mu} o iota with constant
// M^2/|omega| p^{-1/p} (p')^{-1/p'}.
FactorizationCheckReport moment_factorization_check(const OperatorModel& op,
                                                    const WeightedMeasure& mu,
                                                    double omega,
                                                    std::span<const Vector> xs,
                                                    double p = 2.0,
                                                    double identityTol = 1e-5);

struct ResultRow; // report.hpp

// Render a check report in the experiment CSV schema: one identity row per
// test vector plus the norm-estimate row.
std::vector<ResultRow> factorization_report_rows(const std::string& experiment,
                                                 const FactorizationCheckReport& rep,
                                                 double identityTol = 1e-5);

} // namespace opcalc
