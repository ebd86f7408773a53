#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "opcalc/quadrature.hpp"

namespace opcalc {

// Piecewise-constant-times-exponential function on R_+:
//   f(s) = e^{rate s} * heights[floor(s/step)] on [0, step*heights.size()),
//   f(s) = e^{rate s} * tailHeight afterwards.
struct FactorFunction {
    double rate = 0.0;
    double step = 1.0;
    std::vector<double> heights;
    double tailHeight = 0.0;

    double at(double s) const;
    double stepHeight(long i) const {
        if (i < 0) return 0.0;
        return i < static_cast<long>(heights.size()) ? heights[i] : tailHeight;
    }
    // L^q norm, q in [1, inf]; infinite-tail parts need q*rate < 0
    double lp_norm(double q) const;
};

// Exact pointwise convolution (psi * phi)(r).
double factor_convolution_at(const FactorFunction& psi, const FactorFunction& phi,
                             double r);

// A verified (psi, phi, q) triple witnessing psi * phi == e_{-alpha} on
// [t, infinity) and hence an upper bound ||psi||_q ||phi||_{q'} on eta.
struct FactorizationCertificate {
    FactorFunction psi; // finite L^q norm
    FactorFunction phi; // finite L^{q'} norm
    double q = 2.0;
    double alpha = 1.0;
    double t = 1.0;
    double value = 0.0;    // ||psi||_q ||phi||_{q'}
    double residual = 0.0; // max |(psi*phi)(r) - e^{-alpha r}| on [t, T_ver]
    std::string kind;      // trivial / log / exponential / refined
    bool stalled = false;  // refinement made no progress within budget

    void save(std::ostream& os) const;
    static FactorizationCertificate load(std::istream& is);
};

double holder_conjugate(double q);

// max over a verification grid on [t, t + 30/alpha].
double verify_residual(const FactorFunction& psi, const FactorFunction& phi,
                       double alpha, double t);

// psi = 1_{[0,t]} e_{-alpha}, phi = (1/t) e_{-alpha}.
FactorizationCertificate trivial_certificate(double alpha, double t, double q);

// Step-function pair with ramp convolution, O(|log(alpha t)|) value.
// Requires alpha t <= min(1/q, 1/q').
FactorizationCertificate log_certificate(double alpha, double t, double q);

// Closed-form value (e^{alpha' q} - 1)^{-1/q}; requires alpha t > min(1/q, 1/q').
FactorizationCertificate exponential_certificate(double alpha, double t, double q);

struct EtaLowerBound {
    double value = 0.0;
    std::string source; // "hilbert-log" or "pointwise-exponential"
};

EtaLowerBound eta_lower_bound(double alpha, double t, double q);

// Coordinate descent over step heights (plus an exponential tilt), re-solving
// phi from psi by forward-substitution deconvolution after each proposal.
FactorizationCertificate refine_certificate(const FactorizationCertificate& seed,
                                            int budget);

// eta(alpha, t, q) = eta(alpha t, 1, q): push the certificate to a new t.
FactorizationCertificate rescale_certificate(const FactorizationCertificate& cert,
                                             double tNew);
// swap (psi, phi) and q <-> q'.
FactorizationCertificate conjugate_certificate(const FactorizationCertificate& cert);

struct EtaEnvelope {
    double upper = 0.0;
    std::string upperSource;
    double lower = 0.0;
    std::string lowerSource;
    std::string regime; // "log" or "exponential", boundary at alpha t = min(1/q,1/q')
    FactorizationCertificate best;
};

EtaEnvelope eta_envelope(double alpha, double t, double q, bool refine = false,
                         int refineBudget = 400);

// closed-form-only upper bound, cheap enough for use inside quadratures
double eta_upper_cheap(double alpha, double t, double q);

} // namespace opcalc
