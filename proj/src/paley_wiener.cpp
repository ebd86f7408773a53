#include <algorithm>
#include <cmath>
#include <vector>

#include "opcalc/errors.hpp"
#include "opcalc/functions.hpp"
#include "opcalc/measures.hpp"
#include "opcalc/operators.hpp"

namespace opcalc {

namespace {

constexpr size_t kMaxSummands = 256;
constexpr size_t kMaxGridNodes = 1 << 14;

// in-place radix-2 FFT, sign = +1 for e^{+2pi i jk/N}
void fft(std::vector<cd>& a, int sign) {
    const size_t n = a.size();
    if ((n & (n - 1)) != 0) fail(ErrorKind::Precondition, "fft size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const cd wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cd w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cd u = a[i + k];
                const cd v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// one summand of the distributed expression: coef * e^{-tau z} * rational(z)
struct Summand {
    cd coef{1.0, 0.0};
    double tau = 0.0;
    std::vector<FuncPtr> rationalFactors; // Var / ResolventPower pieces
};

void distribute(const FuncPtr& e, Summand current, std::vector<Summand>& out);

void distribute_product(const std::vector<FuncPtr>& kids, size_t idx, Summand current,
                        std::vector<Summand>& out) {
    if (idx == kids.size()) {
        out.push_back(std::move(current));
        if (out.size() > kMaxSummands)
            fail(ErrorKind::Recognition, "expression expands into too many summands");
        return;
    }
    const FuncPtr& k = kids[idx];
    if (k->tag == FuncExpr::Tag::Sum) {
        for (const auto& kk : k->kids) {
            std::vector<Summand> sub;
            distribute(kk, Summand{}, sub);
            for (auto& s : sub) {
                Summand merged = current;
                merged.coef *= s.coef;
                merged.tau += s.tau;
                merged.rationalFactors.insert(merged.rationalFactors.end(),
                                              s.rationalFactors.begin(),
                                              s.rationalFactors.end());
                distribute_product(kids, idx + 1, std::move(merged), out);
            }
        }
        return;
    }
    std::vector<Summand> sub;
    distribute(k, Summand{}, sub);
    for (auto& s : sub) {
        Summand merged = current;
        merged.coef *= s.coef;
        merged.tau += s.tau;
        merged.rationalFactors.insert(merged.rationalFactors.end(),
                                      s.rationalFactors.begin(),
                                      s.rationalFactors.end());
        distribute_product(kids, idx + 1, std::move(merged), out);
    }
}

void distribute(const FuncPtr& e, Summand current, std::vector<Summand>& out) {
    switch (e->tag) {
        case FuncExpr::Tag::Constant:
            current.coef *= e->value;
            out.push_back(std::move(current));
            return;
        case FuncExpr::Tag::ExpDecay:
            current.tau += e->tau;
            out.push_back(std::move(current));
            return;
        case FuncExpr::Tag::Var:
        case FuncExpr::Tag::ResolventPower:
            current.rationalFactors.push_back(e);
            out.push_back(std::move(current));
            return;
        case FuncExpr::Tag::Sum:
            for (const auto& k : e->kids) {
                std::vector<Summand> sub;
                distribute(k, Summand{}, sub);
                for (auto& s : sub) {
                    Summand merged = current;
                    merged.coef *= s.coef;
                    merged.tau += s.tau;
                    merged.rationalFactors.insert(merged.rationalFactors.end(),
                                                  s.rationalFactors.begin(),
                                                  s.rationalFactors.end());
                    out.push_back(std::move(merged));
                    if (out.size() > kMaxSummands)
                        fail(ErrorKind::Recognition,
                             "expression expands into too many summands");
                }
            }
            return;
        case FuncExpr::Tag::Product:
            distribute_product(e->kids, 0, std::move(current), out);
            return;
        case FuncExpr::Tag::IntPower: {
            std::vector<FuncPtr> kids(static_cast<size_t>(e->power), e->kids[0]);
            distribute_product(kids, 0, std::move(current), out);
            return;
        }
        case FuncExpr::Tag::Shift:
            fail(ErrorKind::Precondition, "shift nodes should have been normalized away");
    }
}

cd eval_rational(const std::vector<FuncPtr>& factors, cd z) {
    cd acc = 1.0;
    for (const auto& f : factors) acc *= evaluate_expr(f, z);
    return acc;
}

double rational_degree(const std::vector<FuncPtr>& factors) {
    double deg = 0.0;
    for (const auto& f : factors) deg += growth_degree(f);
    return deg;
}

} // namespace

WeightedMeasure paley_wiener_factor(const HalfPlaneFunction& f, double alpha,
                                    cd lambda, double omega0,
                                    const PaleyWienerOptions& opts) {
    if (alpha < 0.5 - 1e-12)
        fail(ErrorKind::Precondition, "paley_wiener_factor needs alpha >= 1/2");
    if (lambda.real() >= 0)
        fail(ErrorKind::Precondition, "paley_wiener_factor needs Re lambda < 0");
    if (omega0 <= 0) fail(ErrorKind::Precondition, "paley_wiener_factor needs omega0 > 0");
    if (f.abscissa() > 1e-12)
        fail(ErrorKind::Precondition, "function must live on (at least) Re z > 0");
    if (boundedness_check(f) != Boundedness::Bounded)
        fail(ErrorKind::Unbounded, "boundedness of f on C_+ could not be verified");

    // split into coef * e^{-tau z} * rational pieces
    std::vector<Summand> summands;
    distribute(f.expr(), Summand{}, summands);

    // per summand: limit of the rational part along the real axis; the limit
    // part inverts in closed form, the rest decays fast enough to transform
    std::vector<ExpPolyTerm> analytic;
    std::vector<cd> limits(summands.size());
    for (size_t i = 0; i < summands.size(); ++i) {
        const auto& s = summands[i];
        if (rational_degree(s.rationalFactors) > 1e-9)
            fail(ErrorKind::Recognition,
                 "a distributed summand grows at infinity; rewrite the expression");
        const double r1 = 1e7, r2 = 4e7;
        const cd v1 = eval_rational(s.rationalFactors, cd(r1, 0.0));
        const cd v2 = eval_rational(s.rationalFactors, cd(r2, 0.0));
        const cd cInf = (4.0 * v2 - v1) / 3.0; // Richardson for c + a/R
        limits[i] = cInf;
        if (s.coef * cInf != 0.0) {
            // coef cInf e^{-tau z} (z-lambda)^{-alpha}
            //   = L[ coef cInf (t-tau)^{alpha-1} e^{lambda (t-tau)} / Gamma(alpha) ]
            analytic.push_back({s.coef * cInf * std::exp(-omega0 * s.tau) /
                                    complex_gamma(cd(alpha, 0.0)),
                                alpha - 1.0, lambda - omega0, s.tau});
        }
    }

    // residual boundary values H(is) = h(is) - sum_i analyticHead_i(is)
    const size_t n = size_t{1} << opts.fftLogSize;
    const double S = opts.boundaryCutoff;
    const double ds = 2.0 * S / static_cast<double>(n);
    std::vector<cd> h(n);
    bool residualNonzero = false;
    for (size_t j = 0; j < n; ++j) {
        const double s = (static_cast<double>(j) - static_cast<double>(n) / 2.0) * ds;
        const cd z(0.0, s);
        const cd pw = std::pow(z - lambda, cd(-alpha, 0.0));
        cd acc = 0.0;
        for (size_t i = 0; i < summands.size(); ++i) {
            const auto& sm = summands[i];
            const cd rat = eval_rational(sm.rationalFactors, z) - limits[i];
            if (rat == 0.0) continue;
            acc += sm.coef * std::exp(-sm.tau * z) * rat * pw;
        }
        h[j] = acc;
        if (acc != 0.0) residualNonzero = true;
    }

    std::optional<DensityGrid> residualGrid;
    if (residualNonzero) {
        // g(t_k) = ds/(2 pi) (-1)^k sum_j h_j e^{2 pi i j k / n}
        std::vector<cd> ft = h;
        fft(ft, +1);
        const double dt = 2.0 * M_PI / (ds * static_cast<double>(n));
        std::vector<cd> g(n);
        for (size_t k = 0; k < n; ++k) {
            const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
            g[k] = (ds / (2.0 * M_PI)) * sgn * ft[k];
        }
        // causality: indices n/2..n-1 are negative times
        double negMass = 0.0, posMass = 0.0;
        for (size_t k = 0; k < n / 2; ++k) posMass += std::abs(g[k]) * dt;
        for (size_t k = n / 2; k < n; ++k) negMass += std::abs(g[k]) * dt;
        if (negMass > opts.causalityTol * (posMass + 1e-12))
            fail(ErrorKind::Causality,
                 "recovered transform has non-negligible mass at negative times");

        // reweight by e_{-omega0} and box-resample onto the coarse grid
        const double tFineMax = dt * static_cast<double>(n / 2 - 1);
        double horizon = std::min({opts.horizon, tFineMax, 40.0 / std::max(omega0, 0.05)});
        double step = opts.gridStep;
        if (horizon / step + 1 > static_cast<double>(kMaxGridNodes))
            step = horizon / static_cast<double>(kMaxGridNodes - 1);
        DensityGrid grid;
        grid.t0 = 0.0;
        grid.h = step;
        const auto nodes = static_cast<size_t>(std::floor(horizon / step)) + 1;
        grid.values.resize(nodes);
        const auto box = std::max<long>(1, std::lround(step / dt / 2.0));
        for (size_t k = 0; k < nodes; ++k) {
            const double t = step * static_cast<double>(k);
            const auto center = static_cast<long>(std::lround(t / dt));
            cd acc = 0.0;
            long cnt = 0;
            for (long j = center - box; j <= center + box; ++j) {
                if (j < 0 || j >= static_cast<long>(n / 2)) continue;
                acc += g[static_cast<size_t>(j)] *
                       std::exp(-omega0 * dt * static_cast<double>(j));
                ++cnt;
            }
            grid.values[k] = cnt > 0 ? acc / static_cast<double>(cnt) : cd(0.0);
        }
        residualGrid = std::move(grid);
    }

    return WeightedMeasure::from_parts({}, std::move(analytic), std::move(residualGrid),
                                       0.0);
}

} // namespace opcalc
