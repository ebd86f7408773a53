#include "opcalc/transference.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "opcalc/calculus.hpp"
#include "opcalc/errors.hpp"
#include "opcalc/report.hpp"

namespace opcalc {

namespace {

// cache of semigroup samples along a fixed grid
class SemigroupTable {
public:
    SemigroupTable(const OperatorModel& op, double h) : op_(op), h_(h) {}

    const Matrix& at(int k) {
        auto it = cache_.find(k);
        if (it == cache_.end())
            it = cache_.emplace(k, semigroup_at(op_, h_ * static_cast<double>(k))).first;
        return it->second;
    }

private:
    const OperatorModel& op_;
    double h_;
    std::unordered_map<int, Matrix> cache_;
};

} // namespace

double GridSignal::lp_norm() const {
    if (std::isinf(p)) {
        double best = 0.0;
        for (int k = 0; k < nodes(); ++k) best = std::max(best, values.col(k).norm());
        return best;
    }
    double acc = 0.0;
    for (int k = 0; k < nodes(); ++k) acc += std::pow(values.col(k).norm(), p);
    return std::pow(h * acc, 1.0 / p);
}

GridSignal embed(const Vector& x, const FactorFunction& psi, const OperatorModel& op,
                 double L, double h, double p) {
    GridSignal sig;
    sig.L = L;
    sig.h = h;
    sig.p = p;
    const int n = static_cast<int>(std::lround(2.0 * L / h)) + 1;
    sig.values = Eigen::MatrixXcd::Zero(op.dim(), n);
    SemigroupTable table(op, h);
    const double delta = 1e-9 * std::max(h, 1e-6);
    const double suppEnd =
        psi.tailHeight == 0.0
            ? psi.step * static_cast<double>(psi.heights.size())
            : std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double s = sig.sAt(k);
        if (s > 1e-12) continue;
        double w;
        if (std::abs(s) < 0.5 * h) {
            // the carrier ends here; store the one-sided value
            sig.leftEdges.push_back(k);
            w = psi.at(delta);
        } else if (std::abs(-s - suppEnd) < 0.5 * h) {
            w = psi.at(-s - delta); // one-sided value at the support end
        } else {
            // interior jumps of stepped factors are stored as two-sided
            // averages: mass-preserving under the PL interpretation
            w = 0.5 * (psi.at(-s - delta) + psi.at(-s + delta));
        }
        if (w == 0.0) continue;
        const int steps = static_cast<int>(std::lround(-s / h));
        sig.values.col(k) = w * (table.at(steps) * x);
    }
    // finite support of psi puts a right-opening edge at s = -E
    if (psi.tailHeight == 0.0) {
        const double e = psi.step * static_cast<double>(psi.heights.size());
        const int idx = static_cast<int>(std::lround((L - e) / h));
        if (e < L && idx >= 0 && idx < n &&
            std::abs(sig.sAt(idx) + e) < 1e-9 * std::max(1.0, e))
            sig.rightEdges.push_back(idx);
    }
    return sig;
}

GridSignal convolve_operator(const GridSignal& sig, const WeightedMeasure& mu,
                             ConvolveDiagnostics* diag) {
    GridSignal out = sig;
    out.values.setZero();
    out.leftEdges.clear();
    out.rightEdges.clear();
    const int n = sig.nodes();
    const auto dim = sig.values.rows();
    auto pushEdge = [&](std::vector<int>& dst, int k) {
        if (k >= 0 && k < n && std::find(dst.begin(), dst.end(), k) == dst.end())
            dst.push_back(k);
    };

    for (const auto& a : mu.atoms()) {
        const double shift = a.t / sig.h;
        const auto base = static_cast<int>(std::floor(shift));
        const double frac = shift - base;
        if (frac < 1e-9 || frac > 1.0 - 1e-9) {
            const int d = static_cast<int>(std::lround(shift));
            const int kLo = std::max(0, d), kHi = std::min(n, n + d);
            for (int k = kLo; k < kHi; ++k)
                out.values.col(k) += a.weight * sig.values.col(k - d);
            for (int e : sig.leftEdges) pushEdge(out.leftEdges, e + d);
            for (int e : sig.rightEdges) pushEdge(out.rightEdges, e + d);
        } else {
            // off-grid atom: cubic interpolation between neighbouring samples
            if (diag) diag->offGridAtoms = true;
            auto sample = [&](int k) -> Eigen::VectorXcd {
                if (k < 0 || k >= n) return Eigen::VectorXcd::Zero(dim);
                return sig.values.col(k);
            };
            for (int k = 0; k < n; ++k) {
                const Eigen::VectorXcd m1 = sample(k - base + 1);
                const Eigen::VectorXcd p0 = sample(k - base);
                const Eigen::VectorXcd p1 = sample(k - base - 1);
                const Eigen::VectorXcd p2 = sample(k - base - 2);
                const double u = frac;
                // Catmull-Rom in u between p0 (u=0) and p1 (u=1)
                Eigen::VectorXcd v =
                    0.5 * ((2.0 * p0) + (-m1 + p1) * u +
                           (2.0 * m1 - 5.0 * p0 + 4.0 * p1 - p2) * (u * u) +
                           (-m1 + 3.0 * p0 - 3.0 * p1 + p2) * (u * u * u));
                out.values.col(k) += a.weight * v;
            }
            if (diag) diag->interpolationError += std::abs(a.weight) * sig.h * sig.h;
        }
    }

    if (mu.has_density()) {
        // resample the density on the signal lattice once, then correlate
        const auto [lo, hi] = mu.density_extent();
        const auto mLo = static_cast<int>(std::floor(lo / sig.h));
        const auto mHi = static_cast<int>(std::ceil(hi / sig.h));
        std::vector<cd> dens(static_cast<size_t>(mHi - mLo) + 1);
        for (int m = mLo; m <= mHi; ++m) {
            const double w = (m == mLo || m == mHi) ? 0.5 : 1.0;
            dens[static_cast<size_t>(m - mLo)] = sig.h * w * mu.density_at(sig.h * m);
        }
        std::vector<double> tapScale(static_cast<size_t>(n), 1.0);
        for (int e : sig.leftEdges) tapScale[static_cast<size_t>(e)] = 0.5;
        for (int e : sig.rightEdges) tapScale[static_cast<size_t>(e)] = 0.5;
        for (int k = 0; k < n; ++k) {
            auto acc = out.values.col(k);
            const int mA = std::max(mLo, k - (n - 1));
            const int mB = std::min(mHi, k);
            for (int m = mA; m <= mB; ++m) {
                const cd g = dens[static_cast<size_t>(m - mLo)];
                if (g == 0.0) continue;
                // one-sided jump samples carry half weight under the
                // trapezoid in r
                acc.noalias() += (tapScale[static_cast<size_t>(k - m)] * g) *
                                 sig.values.col(k - m);
            }
        }
    }
    return out;
}

Vector project(const GridSignal& sig, const FactorFunction& phi,
               const OperatorModel& op) {
    Vector acc = Vector::Zero(op.dim());
    SemigroupTable table(op, sig.h);
    const int n = sig.nodes();
    int kFirst = n, kLast = -1;
    for (int k = 0; k < n; ++k) {
        if (sig.sAt(k) >= -1e-12) {
            kFirst = std::min(kFirst, k);
            kLast = k;
        }
    }
    // per-cell trapezoid with one-sided phi limits, so the step cells of the
    // factor function integrate exactly; signal jump nodes contribute only on
    // their support side
    const double delta = 1e-9 * sig.h;
    auto isIn = [](const std::vector<int>& v, int k) {
        return std::find(v.begin(), v.end(), k) != v.end();
    };
    auto term = [&](int k, double w, bool cellOnRight) -> Vector {
        if (w == 0.0) return Vector::Zero(op.dim());
        if (cellOnRight ? isIn(sig.leftEdges, k) : isIn(sig.rightEdges, k))
            return Vector::Zero(op.dim()); // zero side of the jump
        const double t = std::max(0.0, sig.sAt(k));
        const int steps = static_cast<int>(std::lround(t / sig.h));
        return w * (table.at(steps) * sig.values.col(k));
    };
    for (int k = kFirst; k < kLast; ++k) {
        const double tA = std::max(0.0, sig.sAt(k));
        const double tB = std::max(0.0, sig.sAt(k + 1));
        const double wA = phi.at(tA + delta);
        const double wB = phi.at(tB - delta);
        if (wA == 0.0 && wB == 0.0) continue;
        acc += (0.5 * sig.h) * (term(k, wA, true) + term(k + 1, wB, false));
    }
    return acc;
}

double convolution_operator_norm(const WeightedMeasure& mu, double L, double h,
                                 int maxIters, double relTol) {
    const int n = static_cast<int>(std::lround(2.0 * L / h)) + 1;

    // precomputed kernel: atom node shifts plus trapezoid-weighted density
    // samples on the lattice
    struct Tap {
        int shift;
        cd weight;
    };
    std::vector<Tap> taps;
    for (const auto& a : mu.atoms())
        taps.push_back({static_cast<int>(std::lround(a.t / h)), a.weight});
    int mLo = 0;
    std::vector<cd> dens;
    if (mu.has_density()) {
        const auto [lo, hi] = mu.density_extent();
        mLo = static_cast<int>(std::floor(lo / h));
        const auto mHi = static_cast<int>(std::ceil(hi / h));
        dens.resize(static_cast<size_t>(mHi - mLo) + 1);
        for (int m = mLo; m <= mHi; ++m) {
            const double w = (m == mLo || m == mHi) ? 0.5 : 1.0;
            dens[static_cast<size_t>(m - mLo)] = h * w * mu.density_at(h * m);
        }
    }

    auto applyL = [&](const std::vector<cd>& x, std::vector<cd>& y, bool adjoint) {
        std::fill(y.begin(), y.end(), cd(0.0));
        for (const auto& tap : taps) {
            const cd w = adjoint ? std::conj(tap.weight) : tap.weight;
            const int d = adjoint ? -tap.shift : tap.shift;
            const int kLo = std::max(0, d), kHi = std::min(n, n + d);
            for (int k = kLo; k < kHi; ++k) y[k] += w * x[k - d];
        }
        const int m0 = mLo;
        for (size_t j = 0; j < dens.size(); ++j) {
            const cd w = adjoint ? std::conj(dens[j]) : dens[j];
            if (w == 0.0) continue;
            const int d = adjoint ? -(m0 + static_cast<int>(j))
                                  : m0 + static_cast<int>(j);
            const int kLo = std::max(0, d), kHi = std::min(n, n + d);
            for (int k = kLo; k < kHi; ++k) y[k] += w * x[k - d];
        }
    };

    std::vector<cd> x(n), lx(n), bx(n);
    for (int k = 0; k < n; ++k) x[k] = cd(std::sin(0.37 * k + 0.2), std::cos(0.11 * k));
    auto norm2of = [&](const std::vector<cd>& v) {
        double acc = 0.0;
        for (const cd& c : v) acc += std::norm(c);
        return h * acc;
    };

    double lambda = 0.0, prev = 0.0;
    for (int it = 0; it < maxIters; ++it) {
        const double nx = std::sqrt(norm2of(x));
        if (nx == 0.0) return 0.0;
        for (auto& c : x) c /= nx;
        applyL(x, lx, false);
        applyL(lx, bx, true);
        lambda = std::sqrt(norm2of(bx)); // || L* L x ||, an estimate of ||L||^2
        x.swap(bx);
        if (it > 4 && std::abs(lambda - prev) < relTol * lambda) break;
        prev = lambda;
    }
    return std::sqrt(lambda);
}

FactorizationCheckReport factorization_check(const OperatorModel& op,
                                             const WeightedMeasure& mu,
                                             const FactorizationCertificate& cert,
                                             std::span<const Vector> xs,
                                             double identityTol) {
    const double omega = cert.alpha;
    const double tau = cert.t;
    if (mu.support_low() < tau - 1e-9)
        fail(ErrorKind::SupportViolation,
             "measure support starts below the certificate threshold");

    // e_omega mu must be a plain finite measure
    WeightedMeasure muW = measure_exp_reweight(mu, cd(-omega, 0.0)).with_weight(0.0);
    (void)tv_norm(muW);

    // grid: resolve the fastest exponential with >= 64 nodes per e-folding
    double h = 1.0 / (64.0 * std::max(omega, 0.5));
    if (tau > 0) h = tau / std::max(1.0, std::round(tau / h));
    const double L = std::max(tau, 1.0) + 30.0 / omega;

    FactorizationCheckReport rep;
    const SemigroupType type = certify_type(op, 0.0);
    rep.M = type.M;

    const CalculusResult direct = apply_measure(op, mu);
    rep.tMuNorm = direct.normValue;
    rep.convNorm = convolution_operator_norm(muW, L, h);
    rep.bound = rep.M * rep.M * cert.value * rep.convNorm;
    rep.estimateOk = rep.tMuNorm <= rep.bound * (1.0 + 1e-3);
    rep.iotaNormBound = rep.M * cert.psi.lp_norm(2.0);
    rep.projNormBound = rep.M * cert.phi.lp_norm(holder_conjugate(2.0));

    // the convolution is linear in the measure: running each atom (and the
    // density part) separately keeps their support edges from landing on a
    // shared node, where one-sided bookkeeping could not tell them apart
    std::vector<WeightedMeasure> pieces;
    for (const auto& a : muW.atoms())
        pieces.push_back(WeightedMeasure::point_mass(a.t, a.weight, 0.0));
    if (muW.has_density())
        pieces.push_back(WeightedMeasure::from_parts({}, muW.analytic_terms(),
                                                     muW.grid(), 0.0));

    rep.identityOk = true;
    for (const auto& x : xs) {
        auto route = [&](double hh) {
            const GridSignal ix = embed(x, cert.psi, op, L, hh);
            Vector acc = Vector::Zero(op.dim());
            for (const auto& piece : pieces)
                acc += project(convolve_operator(ix, piece), cert.phi, op);
            return acc;
        };
        // trapezoid error is O(h^2); Richardson with h/2 removes it
        const Vector coarse = route(h);
        const Vector fine = route(h / 2.0);
        const Vector px = (4.0 * fine - coarse) / 3.0;
        const Vector dx = direct.matrix * x;
        FactorizationCheckRow row;
        row.directNorm = dx.norm();
        row.factorNorm = px.norm();
        row.relError = (px - dx).norm() / std::max(1e-300, dx.norm());
        rep.maxRelError = std::max(rep.maxRelError, row.relError);
        if (row.relError > identityTol) rep.identityOk = false;
        rep.rows.push_back(row);
    }
    return rep;
}

FactorizationCheckReport moment_factorization_check(const OperatorModel& op,
                                                    const WeightedMeasure& mu,
                                                    double omega,
                                                    std::span<const Vector> xs,
                                                    double p,
                                                    double identityTol) {
    if (omega >= 0) fail(ErrorKind::Precondition, "moment check needs omega < 0");
    const double pPrime = holder_conjugate(p);

    // psi = phi = 1_{R_+} e_omega; psi * phi (t) = t e^{omega t}
    FactorFunction psi{omega, 1.0, {}, 1.0};
    {
        // exact convolution identity on a coarse grid
        for (double t : {0.5, 1.0, 2.0, 5.0, 17.0}) {
            const double c = factor_convolution_at(psi, psi, t);
            if (std::abs(c - t * std::exp(omega * t)) > 1e-10)
                fail(ErrorKind::Precondition, "exponential pair convolution identity failed");
        }
    }

    WeightedMeasure tMu = measure_scale(-1.0, measure_moment(mu, 1)).with_weight(mu.weight_exponent());
    WeightedMeasure muW = measure_exp_reweight(mu, cd(omega, 0.0)).with_weight(0.0);
    (void)tv_norm(muW);

    const double h = std::min(1.0 / 64.0, 1.0 / (64.0 * std::abs(omega)));
    const double L = 1.0 + 30.0 / std::min(1.0, std::abs(omega));

    FactorizationCheckReport rep;
    const SemigroupType type = certify_type(op, 0.0);
    rep.M = type.M;

    const CalculusResult direct = apply_measure(op, tMu);
    rep.tMuNorm = direct.normValue;
    rep.convNorm = convolution_operator_norm(muW, L, h);
    const double holderConst =
        std::pow(p, -1.0 / p) * (std::isinf(pPrime) ? 1.0 : std::pow(pPrime, -1.0 / pPrime));
    rep.bound = rep.M * rep.M / std::abs(omega) * holderConst * rep.convNorm;
    rep.estimateOk = rep.tMuNorm <= rep.bound * (1.0 + 1e-3);
    rep.iotaNormBound = rep.M * psi.lp_norm(p);
    rep.projNormBound = rep.M * psi.lp_norm(pPrime);

    std::vector<WeightedMeasure> pieces;
    for (const auto& a : muW.atoms())
        pieces.push_back(WeightedMeasure::point_mass(a.t, a.weight, 0.0));
    if (muW.has_density())
        pieces.push_back(WeightedMeasure::from_parts({}, muW.analytic_terms(),
                                                     muW.grid(), 0.0));

    rep.identityOk = true;
    for (const auto& x : xs) {
        auto route = [&](double hh) {
            const GridSignal ix = embed(x, psi, op, L, hh, p);
            Vector acc = Vector::Zero(op.dim());
            for (const auto& piece : pieces)
                acc += project(convolve_operator(ix, piece), psi, op);
            return acc;
        };
        const Vector coarse = route(h);
        const Vector fine = route(h / 2.0);
        const Vector px = (4.0 * fine - coarse) / 3.0;
        const Vector dx = direct.matrix * x;
        FactorizationCheckRow row;
        row.directNorm = dx.norm();
        row.factorNorm = px.norm();
        row.relError = (px - dx).norm() / std::max(1e-300, dx.norm());
        rep.maxRelError = std::max(rep.maxRelError, row.relError);
        if (row.relError > identityTol) rep.identityOk = false;
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<ResultRow> factorization_report_rows(const std::string& experiment,
                                                 const FactorizationCheckReport& rep,
                                                 double identityTol) {
    std::vector<ResultRow> rows;
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        rows.push_back(make_row(experiment,
                                {{"x", std::to_string(i)},
                                 {"quantity", "identity_rel_error"}},
                                rep.rows[i].relError, identityTol, 0.0));
    }
    rows.push_back(make_row(experiment, {{"x", "-"}, {"quantity", "norm_estimate"}},
                            rep.tMuNorm, rep.bound, 1e-3));
    return rows;
}

Am1Report am1_norm_identity_check(const WeightedMeasure& mu, int p) {
    if (p != 1 && p != 2 && p != 0x7fffffff)
        fail(ErrorKind::Precondition, "am1 check supports p in {1, 2, inf}");
    Am1Report rep;
    rep.p = p;
    rep.tvNorm = tv_norm(mu);
    rep.boundarySup = boundary_transform_sup(mu);
    rep.contractiveEmbedding = rep.boundarySup <= rep.tvNorm + 1e-8;

    const double omega = mu.weight_exponent();
    WeightedMeasure muW =
        omega == 0.0 ? mu : measure_exp_reweight(mu, cd(-omega, 0.0)).with_weight(0.0);

    double end = 4.0;
    for (const auto& a : muW.atoms()) end = std::max(end, a.t);
    if (muW.has_density()) end = std::max(end, muW.density_extent().second);
    const double L = end + 8.0;
    const double h = 1.0 / 128.0;

    if (p == 2) {
        rep.discreteOperatorNorm = convolution_operator_norm(muW, L, h);
        rep.relGapDiscrete = std::abs(rep.discreteOperatorNorm - rep.boundarySup) /
                             std::max(1e-300, rep.boundarySup);
    } else {
        // L^1 (and by duality L^infty) operator norm approached by narrow hats
        const int n = static_cast<int>(std::lround(2.0 * L / h)) + 1;
        GridSignal hat;
        hat.L = L;
        hat.h = h;
        hat.p = 1.0;
        hat.values = Eigen::MatrixXcd::Zero(1, n);
        hat.values(0, n / 2) = 1.0 / h;
        const GridSignal resp = convolve_operator(hat, muW);
        rep.discreteOperatorNorm = resp.lp_norm() / hat.lp_norm();
        rep.relGapDiscrete = std::abs(rep.discreteOperatorNorm - rep.tvNorm) /
                             std::max(1e-300, rep.tvNorm);
    }
    return rep;
}

} // namespace opcalc
