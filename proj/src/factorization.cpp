#include "opcalc/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

constexpr size_t kLogTermCap = 1 << 23;
constexpr size_t kForwardSubstitutionLimit = 4096;

double exp_integral(double rate, double a, double b) {
    // int_a^b e^{rate s} ds
    if (std::abs(rate) < 1e-14) return b - a;
    return (std::exp(rate * b) - std::exp(rate * a)) / rate;
}

} // namespace

double holder_conjugate(double q) {
    if (q < 1.0) fail(ErrorKind::Precondition, "q must be >= 1");
    if (q == 1.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(q)) return 1.0;
    return q / (q - 1.0);
}

double FactorFunction::at(double s) const {
    if (s < 0) return 0.0;
    const auto i = static_cast<long>(std::floor(s / step));
    return stepHeight(i) * std::exp(rate * s);
}

double FactorFunction::lp_norm(double q) const {
    if (std::isinf(q)) {
        // sup |h_i| e^{rate s} over the cell
        double best = 0.0;
        for (size_t i = 0; i < heights.size(); ++i) {
            const double a = step * static_cast<double>(i), b = a + step;
            best = std::max(best, std::abs(heights[i]) *
                                      std::exp(rate * (rate > 0 ? b : a)));
        }
        if (tailHeight != 0.0) {
            if (rate > 0)
                fail(ErrorKind::Divergence, "sup norm of a growing tail is infinite");
            best = std::max(best, std::abs(tailHeight) *
                                      std::exp(rate * step * static_cast<double>(heights.size())));
        }
        return best;
    }
    if (q < 1.0) fail(ErrorKind::Precondition, "q must be >= 1");
    double acc = 0.0;
    for (size_t i = 0; i < heights.size(); ++i) {
        if (heights[i] == 0.0) continue;
        const double a = step * static_cast<double>(i), b = a + step;
        acc += std::pow(std::abs(heights[i]), q) * exp_integral(q * rate, a, b);
    }
    if (tailHeight != 0.0) {
        if (q * rate >= 0)
            fail(ErrorKind::Divergence, "L^q norm of a non-decaying tail diverges");
        const double a = step * static_cast<double>(heights.size());
        acc += std::pow(std::abs(tailHeight), q) * (-std::exp(q * rate * a) / (q * rate));
    }
    return std::pow(acc, 1.0 / q);
}

namespace {

// same-rate, same-step fast path: (psi*phi)(r) = e^{rate r} (u*v)(r) with the
// step convolution interpolated linearly between nodes
double step_conv_fast(const FactorFunction& psi, const FactorFunction& phi, double r) {
    const double d = psi.step;
    const auto k = static_cast<long>(std::floor(r / d));
    const double theta = r / d - static_cast<double>(k);
    auto c = [&](long kk) -> double {
        if (kk < 0) return 0.0;
        double acc = 0.0;
        const long sizeU = static_cast<long>(psi.heights.size());
        const long sizeV = static_cast<long>(phi.heights.size());
        long iLo = 0, iHi = kk;
        if (psi.tailHeight == 0.0) iHi = std::min(iHi, sizeU - 1);
        if (phi.tailHeight == 0.0) iLo = std::max(iLo, kk - sizeV + 1);
        for (long i = iLo; i <= iHi; ++i)
            acc += psi.stepHeight(i) * phi.stepHeight(kk - i);
        return acc;
    };
    const double ck = c(k), ckm = c(k - 1);
    return std::exp(psi.rate * r) * d * (theta * ck + (1.0 - theta) * ckm);
}

// generic exact path: split [0, r] at cell boundaries of both factors
double conv_generic(const FactorFunction& psi, const FactorFunction& phi, double r) {
    std::vector<double> cuts{0.0, r};
    auto addCuts = [&](double stepW, size_t cells, bool fromRight) {
        for (size_t i = 1; i <= cells + 1; ++i) {
            const double s = fromRight ? r - stepW * static_cast<double>(i)
                                       : stepW * static_cast<double>(i);
            if (s > 0 && s < r) cuts.push_back(s);
        }
    };
    addCuts(phi.step, phi.heights.size(), false);
    addCuts(psi.step, psi.heights.size(), true);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               cuts.end());
    double acc = 0.0;
    for (size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p], b = cuts[p + 1];
        const double mid = 0.5 * (a + b);
        const auto iPhi = static_cast<long>(std::floor(mid / phi.step));
        const auto iPsi = static_cast<long>(std::floor((r - mid) / psi.step));
        const double hPhi = phi.stepHeight(iPhi);
        const double hPsi = psi.stepHeight(iPsi);
        if (hPhi == 0.0 || hPsi == 0.0) continue;
        // integrand hPsi hPhi e^{ratePsi (r-s)} e^{ratePhi s}
        const double diff = phi.rate - psi.rate;
        acc += hPsi * hPhi * std::exp(psi.rate * r) * exp_integral(diff, a, b);
    }
    return acc;
}

} // namespace

double factor_convolution_at(const FactorFunction& psi, const FactorFunction& phi,
                             double r) {
    if (r <= 0) return 0.0;
    const bool fast = psi.rate == phi.rate && psi.step == phi.step &&
                      psi.tailHeight == 0.0 && phi.tailHeight == 0.0;
    if (fast) return step_conv_fast(psi, phi, r);
    return conv_generic(psi, phi, r);
}

double verify_residual(const FactorFunction& psi, const FactorFunction& phi,
                       double alpha, double t) {
    const double tVer = t + 30.0 / alpha;
    // the pointwise convolution costs O(cells within [0, r]); thin out the
    // verification grid when the horizon spans very many cells
    const double cells = tVer / std::min(psi.step, phi.step);
    const int nLin = cells > 1e5 ? 24 : 64;
    const int nLog = cells > 1e5 ? 48 : 192;
    std::vector<double> pts;
    for (int i = 0; i <= nLin; ++i)
        pts.push_back(t + (std::min(2.0 * t, tVer) - t) * i / nLin);
    for (int i = 0; i <= nLog; ++i)
        pts.push_back(t * std::pow(tVer / t, static_cast<double>(i) / nLog));
    std::sort(pts.begin(), pts.end());
    double worst = 0.0;
    for (double r : pts) {
        if (r < t || r > tVer) continue;
        const double c = factor_convolution_at(psi, phi, r);
        worst = std::max(worst, std::abs(c - std::exp(-alpha * r)));
    }
    return worst;
}

FactorizationCertificate trivial_certificate(double alpha, double t, double q) {
    if (alpha <= 0 || t <= 0) fail(ErrorKind::Precondition, "alpha, t must be > 0");
    if (!(q > 1.0) || std::isinf(q)) fail(ErrorKind::Precondition, "q must be in (1, inf)");
    const double qp = holder_conjugate(q);
    FactorizationCertificate cert;
    cert.kind = "trivial";
    cert.q = q;
    cert.alpha = alpha;
    cert.t = t;
    cert.psi = FactorFunction{-alpha, t, {1.0}, 0.0};
    cert.phi = FactorFunction{-alpha, 1.0, {}, 1.0 / t};
    const double psiNorm = std::pow((1.0 - std::exp(-alpha * q * t)) / (alpha * q), 1.0 / q);
    const double phiNorm = (1.0 / t) * std::pow(1.0 / (alpha * qp), 1.0 / qp);
    cert.value = psiNorm * phiNorm;
    cert.residual = verify_residual(cert.psi, cert.phi, alpha, t);
    return cert;
}

namespace {

// binomial-series coefficients of (1-x)^{-a}: b_0 = 1, b_{j+1} = b_j (j+a)/(j+1)
std::vector<double> binomial_series(double a, size_t n) {
    std::vector<double> b(n);
    b[0] = 1.0;
    for (size_t j = 0; j + 1 < n; ++j)
        b[j + 1] = b[j] * (static_cast<double>(j) + a) / (static_cast<double>(j) + 1.0);
    return b;
}

// solve sum_{i+j=k} beta_i betaP_j = 1 for betaP by forward substitution
std::vector<double> forward_substitute(const std::vector<double>& beta) {
    const size_t n = beta.size();
    std::vector<double> bp(n);
    bp[0] = 1.0 / beta[0];
    for (size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (size_t i = 1; i <= k; ++i) s += beta[i] * bp[k - i];
        bp[k] = (1.0 - s) / beta[0];
    }
    return bp;
}

double step_exp_lq_norm(const std::vector<double>& h, double rate, double q) {
    double acc = 0.0;
    for (size_t j = 0; j < h.size(); ++j)
        acc += std::pow(std::abs(h[j]), q) *
               exp_integral(q * rate, static_cast<double>(j), static_cast<double>(j) + 1.0);
    return std::pow(acc, 1.0 / q);
}

FactorizationCertificate rescale_from_unit(FactorizationCertificate cert, double t) {
    // cert is stated at (alpha*t, 1, q); push it to (alpha, t, q)
    if (t == 1.0) return cert;
    return rescale_certificate(std::move(cert), t);
}

} // namespace

FactorizationCertificate log_certificate(double alpha, double t, double q) {
    if (alpha <= 0 || t <= 0) fail(ErrorKind::Precondition, "alpha, t must be > 0");
    if (!(q > 1.0) || std::isinf(q)) fail(ErrorKind::Precondition, "q must be in (1, inf)");
    const double qp = holder_conjugate(q);
    const double ap = alpha * t; // rescaled decay at t = 1
    if (ap > std::min(1.0 / q, 1.0 / qp) + 1e-12)
        fail(ErrorKind::Precondition,
             "log construction requires alpha t <= min(1/q, 1/q')");

    // support must cover the verification horizon 1 + 30/alpha'
    const double need = 3.0 + 30.0 / ap;
    if (need > static_cast<double>(kLogTermCap))
        fail(ErrorKind::Truncation,
             "log construction would need " + std::to_string(need) +
                 " terms, beyond the cap");
    const auto terms = static_cast<size_t>(std::ceil(need));

    std::vector<double> beta = binomial_series(1.0 / qp, terms);
    std::vector<double> betaP;
    if (terms <= kForwardSubstitutionLimit) {
        betaP = forward_substitute(beta);
    } else {
        // the triangular system's unique solution is the conjugate binomial
        // series; spot-verified below
        betaP = binomial_series(1.0 / q, terms);
    }
    // verify the convolution system on a prefix and at spot indices
    {
        const size_t kCheck = std::min<size_t>(terms, 512);
        for (size_t k = 0; k < kCheck; ++k) {
            double s = 0.0;
            for (size_t i = 0; i <= k; ++i) s += beta[i] * betaP[k - i];
            if (std::abs(s - 1.0) > 1e-9)
                fail(ErrorKind::Precondition, "ramp coefficient system violated");
        }
        for (size_t k = kCheck; k < terms; k = k * 2 + 7) {
            double s = 0.0;
            for (size_t i = 0; i <= k; ++i) s += beta[i] * betaP[k - i];
            if (std::abs(s - 1.0) > 1e-8)
                fail(ErrorKind::Precondition, "ramp coefficient system violated (tail)");
        }
    }

    FactorizationCertificate cert;
    cert.kind = "log";
    cert.q = q;
    cert.alpha = ap;
    cert.t = 1.0;
    cert.psi = FactorFunction{-ap, 1.0, beta, 0.0};
    cert.phi = FactorFunction{-ap, 1.0, betaP, 0.0};
    cert.value = step_exp_lq_norm(beta, -ap, q) * step_exp_lq_norm(betaP, -ap, qp);
    cert.residual = verify_residual(cert.psi, cert.phi, ap, 1.0);
    return rescale_from_unit(std::move(cert), t);
}

FactorizationCertificate exponential_certificate(double alpha, double t, double q) {
    if (alpha <= 0 || t <= 0) fail(ErrorKind::Precondition, "alpha, t must be > 0");
    if (!(q > 1.0) || std::isinf(q)) fail(ErrorKind::Precondition, "q must be in (1, inf)");
    const double qp = holder_conjugate(q);
    const double ap = alpha * t;
    if (ap <= std::min(1.0 / q, 1.0 / qp))
        fail(ErrorKind::Precondition,
             "exponential construction requires alpha t > min(1/q, 1/q')");

    // the pair (with exponent qe)
    //   psi_e = alpha qe / (e^{alpha qe} - 1) 1_{R_+} e_{-alpha}   (L^{qe})
    //   phi_e = 1_{[0,1]} e_{alpha (qe - 1)}                        (L^{qe'})
    // certifies eta for both qe = q and qe = q' (swap the factors); take the
    // better branch so the construction is conjugation-symmetric
    auto closedValue = [&](double qe) {
        return std::pow(std::exp(ap * qe) - 1.0, -1.0 / qe);
    };
    const double qe = closedValue(q) <= closedValue(qp) ? q : qp;

    const double c = ap * qe / (std::exp(ap * qe) - 1.0);
    FactorFunction psiE{-ap, 1.0, {}, c};
    FactorFunction phiE{ap * (qe - 1.0), 1.0, {1.0}, 0.0};

    FactorizationCertificate cert;
    cert.kind = "exponential";
    cert.q = q;
    cert.alpha = ap;
    cert.t = 1.0;
    if (qe == q) {
        cert.psi = psiE;
        cert.phi = phiE;
    } else {
        cert.psi = phiE; // ||phi_e||_{qe'} = ||phi_e||_q
        cert.phi = psiE;
    }
    cert.value = closedValue(qe);
    if (cert.value > 2.0 * std::exp(-ap) + 1e-12)
        fail(ErrorKind::Precondition, "exponential certificate exceeds 2 e^{-alpha t}");
    cert.residual = verify_residual(cert.psi, cert.phi, ap, 1.0);
    return rescale_from_unit(std::move(cert), t);
}

EtaLowerBound eta_lower_bound(double alpha, double t, double q) {
    if (alpha <= 0 || t <= 0) fail(ErrorKind::Precondition, "alpha, t must be > 0");
    const double ap = alpha * t;
    EtaLowerBound out;
    out.value = std::exp(-ap);
    out.source = "pointwise-exponential";
    if (ap < 1.0 && q > 1.0 && !std::isinf(q)) {
        const double hil = std::sin(M_PI / q) / (std::exp(1.0) * M_PI) * std::abs(std::log(ap));
        if (hil > out.value) {
            out.value = hil;
            out.source = "hilbert-log";
        }
    }
    return out;
}

FactorizationCertificate rescale_certificate(const FactorizationCertificate& cert,
                                             double tNew) {
    if (tNew <= 0) fail(ErrorKind::Precondition, "tNew must be > 0");
    const double sigma = tNew / cert.t;
    if (sigma == 1.0) return cert;
    const double qp = holder_conjugate(cert.q);
    FactorizationCertificate out = cert;
    out.t = tNew;
    out.alpha = cert.alpha / sigma;
    auto push = [&](FactorFunction& f, double qq) {
        f.rate /= sigma;
        f.step *= sigma;
        const double scale = std::pow(sigma, -1.0 / qq);
        for (auto& h : f.heights) h *= scale;
        f.tailHeight *= scale;
    };
    push(out.psi, cert.q);
    push(out.phi, qp);
    // value is scale invariant; recompute as a consistency check
    out.value = out.psi.lp_norm(cert.q) * out.phi.lp_norm(qp);
    out.residual = verify_residual(out.psi, out.phi, out.alpha, out.t);
    return out;
}

FactorizationCertificate conjugate_certificate(const FactorizationCertificate& cert) {
    FactorizationCertificate out = cert;
    std::swap(out.psi, out.phi);
    out.q = holder_conjugate(cert.q);
    return out;
}

// ---------------------------------------------------------------------------
// refinement

namespace {

struct RefineState {
    double ap = 1.0; // rescaled decay (t = 1 internally, integer-step cells)
    double q = 2.0, qp = 2.0;
    long cells = 0;        // psi/phi support in unit cells, covers T_ver
    std::vector<double> u; // psi heights (de-exponentialized)
    double tilt = 0.0;

    // outputs of project()
    std::vector<double> v;
    bool ok = false;
    double value = 0.0;
};

// Solve sum_{i+j=k-1} uEff_i v_j = 1 for k = 1..cells by forward substitution.
void project(RefineState& st) {
    st.ok = false;
    std::vector<double> uEff(st.u.size());
    for (size_t i = 0; i < st.u.size(); ++i)
        uEff[i] = st.u[i] * std::exp(-st.tilt * static_cast<double>(i));
    if (std::abs(uEff[0]) < 1e-8) return;
    const auto K = static_cast<size_t>(st.cells);
    st.v.assign(K, 0.0);
    for (size_t k = 1; k <= K; ++k) {
        double s = 0.0;
        const size_t iHi = std::min(k - 1, uEff.size() - 1);
        for (size_t i = 1; i <= iHi; ++i) s += uEff[i] * st.v[k - 1 - i];
        const double vk = (1.0 - s) / uEff[0];
        if (!std::isfinite(vk) || std::abs(vk) > 1e9) return;
        st.v[k - 1] = vk;
    }
    // value with exact per-cell integrals of |h|^q e^{-ap q s}
    double nu = 0.0;
    for (size_t i = 0; i < uEff.size(); ++i) {
        if (uEff[i] == 0.0) continue;
        const auto a = static_cast<double>(i);
        nu += std::pow(std::abs(uEff[i]), st.q) * exp_integral(-st.ap * st.q, a, a + 1.0);
    }
    double nv = 0.0;
    for (size_t j = 0; j < st.v.size(); ++j) {
        if (st.v[j] == 0.0) continue;
        const auto a = static_cast<double>(j);
        nv += std::pow(std::abs(st.v[j]), st.qp) * exp_integral(-st.ap * st.qp, a, a + 1.0);
    }
    st.value = std::pow(nu, 1.0 / st.q) * std::pow(nv, 1.0 / st.qp);
    st.ok = std::isfinite(st.value);
}

FactorizationCertificate materialize(const RefineState& st,
                                     const FactorizationCertificate& seed) {
    FactorizationCertificate cert;
    cert.kind = "refined";
    cert.q = seed.q;
    cert.alpha = st.ap;
    cert.t = 1.0;
    std::vector<double> uEff(st.u.size());
    for (size_t i = 0; i < st.u.size(); ++i)
        uEff[i] = st.u[i] * std::exp(-st.tilt * static_cast<double>(i));
    cert.psi = FactorFunction{-st.ap, 1.0, uEff, 0.0};
    cert.phi = FactorFunction{-st.ap, 1.0, st.v, 0.0};
    cert.value = st.value;
    cert.residual = verify_residual(cert.psi, cert.phi, st.ap, 1.0);
    return cert;
}

} // namespace

FactorizationCertificate refine_certificate(const FactorizationCertificate& seed,
                                            int budget) {
    const double ap = seed.alpha * seed.t;
    if (ap < 5e-3) {
        // the deconvolution horizon 30/alpha' is too long for descent
        FactorizationCertificate out = seed;
        out.stalled = true;
        return out;
    }
    RefineState st;
    st.ap = ap;
    st.q = seed.q;
    st.qp = holder_conjugate(seed.q);
    st.cells = static_cast<long>(std::ceil(1.0 + 30.0 / ap)) + 2;

    // seed heights in de-exponentialized coordinates at t = 1; for step-1
    // constructions this reproduces the seed exactly
    FactorizationCertificate unitSeed =
        seed.t == 1.0 ? seed : rescale_certificate(seed, 1.0);
    st.u.assign(static_cast<size_t>(st.cells), 0.0);
    for (long i = 0; i < st.cells; ++i) {
        const double s = static_cast<double>(i) + 0.5;
        st.u[static_cast<size_t>(i)] = unitSeed.psi.at(s) * std::exp(ap * s);
    }

    project(st);
    double bestValue = unitSeed.value;
    bool improvedEver = false;
    RefineState best = st;
    if (st.ok && st.value < bestValue * (1.0 - 1e-12)) {
        bestValue = st.value;
        improvedEver = true;
    }

    // coordinate descent over the leading step heights plus the tilt
    const size_t nHeights = std::min<size_t>(st.u.size(), 48);
    const size_t nParams = nHeights + 1;
    double stepRel = 0.25;
    int spent = 0;
    while (spent < budget && stepRel > 1e-4) {
        bool sweepImproved = false;
        for (size_t pi = 0; pi < nParams && spent < budget; ++pi) {
            for (double sgn : {+1.0, -1.0}) {
                if (spent >= budget) break;
                RefineState trial = best;
                if (pi < nHeights) {
                    double& x = trial.u[pi];
                    const double d = std::abs(x) > 1e-6 ? std::abs(x) * stepRel : stepRel;
                    x += sgn * d;
                } else {
                    trial.tilt += sgn * stepRel * ap;
                }
                project(trial);
                ++spent;
                if (trial.ok && trial.value < bestValue * (1.0 - 1e-12)) {
                    bestValue = trial.value;
                    best = trial;
                    improvedEver = true;
                    sweepImproved = true;
                    break;
                }
            }
        }
        if (!sweepImproved) stepRel *= 0.5;
    }

    const double improvement = (unitSeed.value - bestValue) / unitSeed.value;
    if (!improvedEver || improvement < 1e-4) {
        FactorizationCertificate out = seed;
        out.stalled = true; // no improvement >= 0.01% within budget
        return out;
    }
    FactorizationCertificate cert = materialize(best, unitSeed);
    cert.stalled = false;
    if (seed.t != 1.0) cert = rescale_certificate(cert, seed.t);
    return cert;
}

EtaEnvelope eta_envelope(double alpha, double t, double q, bool refine,
                         int refineBudget) {
    const double qp = holder_conjugate(q);
    const double ap = alpha * t;
    EtaEnvelope env;
    env.regime = ap <= std::min(1.0 / q, 1.0 / qp) ? "log" : "exponential";

    FactorizationCertificate best = trivial_certificate(alpha, t, q);
    env.upperSource = "trivial";
    auto consider = [&](FactorizationCertificate cand, const std::string& name) {
        if (cand.value < best.value) {
            best = std::move(cand);
            env.upperSource = name;
        }
    };
    // both orientations of the trivial pair, so envelopes for q and q' agree
    consider(conjugate_certificate(trivial_certificate(alpha, t, qp)),
             "trivial-conjugate");
    if (env.regime == "log") {
        consider(log_certificate(alpha, t, q), "log");
    } else {
        consider(exponential_certificate(alpha, t, q), "exponential");
    }
    if (refine) {
        FactorizationCertificate r = refine_certificate(best, refineBudget);
        if (!r.stalled) consider(std::move(r), "refined");
    }
    env.best = std::move(best);
    env.upper = env.best.value;
    const EtaLowerBound lb = eta_lower_bound(alpha, t, q);
    env.lower = lb.value;
    env.lowerSource = lb.source;
    return env;
}

double eta_upper_cheap(double alpha, double t, double q) {
    const double qp = holder_conjugate(q);
    const double ap = alpha * t;
    const double trivialValue =
        std::pow((1.0 - std::exp(-ap * q)) / (ap * q), 1.0 / q) *
        std::pow(1.0 / (ap * qp), 1.0 / qp);
    double best = trivialValue;
    if (ap > std::min(1.0 / q, 1.0 / qp)) {
        const double qe = ap > 1.0 / q ? q : qp;
        best = std::min(best, std::pow(std::exp(ap * qe) - 1.0, -1.0 / qe));
    }
    return best;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

void put(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

void save_factor(std::ostream& os, const char* name, const FactorFunction& f) {
    os << name << " ";
    put(os, f.rate);
    os << " ";
    put(os, f.step);
    os << " ";
    put(os, f.tailHeight);
    os << " " << f.heights.size();
    for (double h : f.heights) {
        os << " ";
        put(os, h);
    }
    os << "\n";
}

FactorFunction load_factor(std::istream& is, const std::string& expectName) {
    std::string name;
    FactorFunction f;
    size_t n = 0;
    if (!(is >> name >> f.rate >> f.step >> f.tailHeight >> n) || name != expectName)
        fail(ErrorKind::Parse, "bad factor line in certificate");
    f.heights.resize(n);
    for (size_t i = 0; i < n; ++i) is >> f.heights[i];
    return f;
}

} // namespace

void FactorizationCertificate::save(std::ostream& os) const {
    os << "certificate " << kind << " ";
    put(os, q);
    os << " ";
    put(os, alpha);
    os << " ";
    put(os, t);
    os << " ";
    put(os, value);
    os << " ";
    put(os, residual);
    os << "\n";
    save_factor(os, "psi", psi);
    save_factor(os, "phi", phi);
    os << "end\n";
}

FactorizationCertificate FactorizationCertificate::load(std::istream& is) {
    std::string tag;
    FactorizationCertificate c;
    if (!(is >> tag >> c.kind >> c.q >> c.alpha >> c.t >> c.value >> c.residual) ||
        tag != "certificate")
        fail(ErrorKind::Parse, "bad certificate header");
    c.psi = load_factor(is, "psi");
    c.phi = load_factor(is, "phi");
    is >> tag;
    if (tag != "end") fail(ErrorKind::Parse, "bad certificate trailer");
    return c;
}

} // namespace opcalc
