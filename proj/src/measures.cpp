#include "opcalc/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

constexpr double kAtomMergeTol = 1e-12;
constexpr size_t kMaxGridNodes = 1 << 14;

double gamma_p1(double p) { return std::exp(std::lgamma(p + 1.0)); }

bool rates_equal(cd a, cd b) {
    return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b));
}

bool is_nonneg_integer(double p) {
    return p >= -1e-12 && std::abs(p - std::round(p)) < 1e-12;
}

} // namespace

cd DensityGrid::at(double s) const {
    if (values.empty() || h <= 0) return 0.0;
    const double u = (s - t0) / h;
    if (u < 0.0 || u > static_cast<double>(values.size() - 1)) return 0.0;
    auto i = static_cast<size_t>(std::floor(u));
    if (i + 1 >= values.size()) return values.back();
    const double w = u - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

WeightedMeasure WeightedMeasure::zero(double omega) {
    WeightedMeasure m;
    m.omega_ = omega;
    return m;
}

WeightedMeasure WeightedMeasure::point_mass(double t, cd a, double omega) {
    if (t < 0) fail(ErrorKind::Precondition, "atom location must be >= 0");
    WeightedMeasure m;
    m.omega_ = omega;
    m.atoms_.push_back({t, a});
    m.refresh_support();
    return m;
}

WeightedMeasure WeightedMeasure::from_atoms(std::vector<Atom> atoms, double omega) {
    WeightedMeasure m;
    m.omega_ = omega;
    m.atoms_ = std::move(atoms);
    for (const auto& a : m.atoms_)
        if (a.t < 0) fail(ErrorKind::Precondition, "atom location must be >= 0");
    std::sort(m.atoms_.begin(), m.atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.t < y.t; });
    m.refresh_support();
    return m;
}

WeightedMeasure WeightedMeasure::exp_poly_density(std::vector<ExpPolyTerm> terms,
                                                  double omega) {
    WeightedMeasure m;
    m.omega_ = omega;
    for (const auto& t : terms) {
        if (t.power <= -1.0) fail(ErrorKind::Precondition, "density power must be > -1");
        if (t.offset < 0) fail(ErrorKind::Precondition, "density offset must be >= 0");
    }
    m.analytic_ = std::move(terms);
    m.refresh_support();
    return m;
}

WeightedMeasure WeightedMeasure::from_grid(DensityGrid grid, double omega) {
    if (grid.t0 < 0) fail(ErrorKind::Precondition, "density start must be >= 0");
    if (grid.h <= 0) fail(ErrorKind::Precondition, "density step must be > 0");
    WeightedMeasure m;
    m.omega_ = omega;
    m.grid_ = std::move(grid);
    m.refresh_support();
    return m;
}

WeightedMeasure WeightedMeasure::from_parts(std::vector<Atom> atoms,
                                            std::vector<ExpPolyTerm> terms,
                                            std::optional<DensityGrid> grid,
                                            double omega) {
    WeightedMeasure m;
    m.omega_ = omega;
    m.atoms_ = std::move(atoms);
    m.analytic_ = std::move(terms);
    m.grid_ = std::move(grid);
    std::sort(m.atoms_.begin(), m.atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.t < y.t; });
    m.refresh_support();
    return m;
}

WeightedMeasure WeightedMeasure::with_weight(double omega) const {
    WeightedMeasure m = *this;
    m.omega_ = omega;
    return m;
}

cd WeightedMeasure::density_at(double s) const {
    cd acc = 0.0;
    for (const auto& t : analytic_) {
        const double u = s - t.offset;
        if (u < 0) continue;
        if (u == 0.0 && t.power < 0) continue; // singular endpoint
        acc += t.coef * std::pow(u, t.power) * std::exp(t.rate * u);
    }
    if (grid_) acc += grid_->at(s);
    return acc;
}

std::pair<double, double> WeightedMeasure::density_extent() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& t : analytic_) {
        lo = std::min(lo, t.offset);
        const double decay = -t.rate.real();
        hi = std::max(hi, t.offset + (decay > 1e-3 ? 40.0 / decay : 4096.0));
    }
    if (grid_ && !grid_->values.empty()) {
        lo = std::min(lo, grid_->t0);
        hi = std::max(hi, grid_->tEnd());
    }
    if (!std::isfinite(lo)) lo = 0.0;
    return {lo, std::min(hi, 4096.0)};
}

DensityGrid WeightedMeasure::materialized_grid(double hHint) const {
    DensityGrid g;
    if (!has_density()) return g;
    const auto [lo, hi] = density_extent();
    double h = hHint > 0 ? hHint : (grid_ ? grid_->h : 0.0);
    if (h <= 0) h = std::max((hi - lo) / static_cast<double>(kMaxGridNodes - 1), 1.0 / 256.0);
    g.t0 = 0.0;
    g.h = h;
    const auto n = std::min<size_t>(static_cast<size_t>(std::ceil(hi / h)) + 1, kMaxGridNodes);
    g.values.resize(n);
    for (size_t i = 0; i < n; ++i) g.values[i] = density_at(g.t0 + h * static_cast<double>(i));
    // preserve first-cell masses of singular analytic heads
    for (const auto& t : analytic_) {
        if (t.power >= 0) continue;
        const auto i0 = static_cast<size_t>(std::floor(t.offset / h));
        if (i0 + 1 >= g.values.size()) continue;
        auto breaks = graded_breaks(t.offset, g.t0 + h * static_cast<double>(i0 + 1), 48);
        const cd mass = integrate_panels(
            [&](double s) {
                const double u = s - t.offset;
                return u <= 0 ? cd(0.0)
                              : t.coef * std::pow(u, t.power) * std::exp(t.rate * u);
            },
            breaks, 8);
        const cd rest = g.values[i0] -
                        (t.offset <= g.t0 + h * static_cast<double>(i0)
                             ? t.coef * std::pow(g.t0 + h * i0 - t.offset, t.power) *
                                   std::exp(t.rate * (g.t0 + h * i0 - t.offset))
                             : cd(0.0));
        // trapezoid mass of the cell must match: (v0+v1) h/2 == mass + smooth part
        g.values[i0] = 2.0 * mass / h - g.values[i0 + 1] + rest;
    }
    return g;
}

void WeightedMeasure::refresh_support() {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms_) lo = std::min(lo, a.t);
    for (const auto& t : analytic_) lo = std::min(lo, t.offset);
    if (grid_ && !grid_->values.empty()) {
        size_t first = 0;
        while (first < grid_->values.size() && grid_->values[first] == 0.0) ++first;
        if (first < grid_->values.size())
            lo = std::min(lo, grid_->t0 + (first > 0 ? first - 1 : 0) * grid_->h);
    }
    supportLow_ = std::isfinite(lo) ? lo : 0.0;
}

// ---------------------------------------------------------------------------

double tv_norm(const WeightedMeasure& mu, double* tailReport) {
    const double omega = mu.weight_exponent();
    double acc = 0.0;
    for (const auto& a : mu.atoms()) acc += std::abs(a.weight) * std::exp(-omega * a.t);
    double tail = 0.0;
    if (mu.has_density()) {
        for (const auto& t : mu.analytic_terms()) {
            if (t.rate.real() - omega >= -1e-12)
                fail(ErrorKind::Divergence,
                     "weighted density does not decay: Re(rate) >= omega");
        }
        auto weighted = [&](double s) {
            return std::abs(mu.density_at(s)) * std::exp(-omega * s);
        };
        const auto [lo, hi] = mu.density_extent();
        // graded panels near singular offsets, then unit panels with tail test
        std::vector<double> anchors{lo};
        for (const auto& t : mu.analytic_terms())
            if (t.power < 0) anchors.push_back(t.offset);
        std::sort(anchors.begin(), anchors.end());
        anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
        double prev = anchors.front();
        for (double a : anchors) {
            if (a > prev)
                acc += integrate_panels_real(
                    weighted, uniform_breaks(prev, a, std::max(4, static_cast<int>(a - prev))), 8);
            auto head = graded_breaks(a, a + 1.0, 48);
            acc += integrate_panels_real(weighted, head, 8);
            prev = a + 1.0;
        }
        double at = prev;
        int quiet = 0;
        while (at < hi + 1.0) {
            const double len = std::max(1.0, 0.05 * at);
            const double c =
                integrate_panels_real(weighted, uniform_breaks(at, at + len, 4), 8);
            acc += c;
            at += len;
            quiet = (c < 1e-15 * (1.0 + acc)) ? quiet + 1 : 0;
            if (quiet >= 2) break;
        }
        tail = weighted(std::min(at, hi));
        if (tail > 1e-6 * std::max(1.0, acc) && at >= hi)
            fail(ErrorKind::Divergence,
                 "weighted density tail " + std::to_string(tail) +
                     " fails the truncation criterion at the representable end");
    }
    if (tailReport) *tailReport = tail;
    return acc;
}

// ---------------------------------------------------------------------------
// convolution

namespace {

// convolution of two analytic terms, when a closed form exists
std::optional<std::vector<ExpPolyTerm>> convolve_terms(const ExpPolyTerm& x,
                                                       const ExpPolyTerm& y) {
    const double off = x.offset + y.offset;
    if (rates_equal(x.rate, y.rate)) {
        // u^p e^{ru} * u^q e^{ru} = B(p+1,q+1) u^{p+q+1} e^{ru}
        const double b = std::exp(std::lgamma(x.power + 1.0) + std::lgamma(y.power + 1.0) -
                                  std::lgamma(x.power + y.power + 2.0));
        return std::vector<ExpPolyTerm>{
            {x.coef * y.coef * b, x.power + y.power + 1.0, x.rate, off}};
    }
    if (!is_nonneg_integer(x.power) || !is_nonneg_integer(y.power)) return std::nullopt;
    // partial fractions of m! n! / ((z-r1)^{m+1} (z-r2)^{n+1})
    const int m = static_cast<int>(std::round(x.power));
    const int n = static_cast<int>(std::round(y.power));
    const cd r1 = x.rate, r2 = y.rate;
    const cd scale = x.coef * y.coef;
    double mf = 1.0, nf = 1.0;
    for (int i = 2; i <= m; ++i) mf *= i;
    for (int i = 2; i <= n; ++i) nf *= i;
    std::vector<ExpPolyTerm> out;
    auto emit = [&](cd pfCoef, int j, cd rate) {
        // pfCoef / (z - rate)^j  ->  pfCoef u^{j-1} e^{rate u} / (j-1)!
        double jf = 1.0;
        for (int i = 2; i <= j - 1; ++i) jf *= i;
        out.push_back({scale * pfCoef / jf, static_cast<double>(j - 1), rate, off});
    };
    {
        cd binom = 1.0;
        for (int i = 0; i <= m; ++i) {
            const cd a = mf * nf * (i % 2 == 0 ? 1.0 : -1.0) * binom *
                         std::pow(r1 - r2, cd(-(n + 1.0 + i)));
            emit(a, m + 1 - i, r1);
            binom *= cd(n + 1.0 + i) / cd(i + 1.0);
        }
    }
    {
        cd binom = 1.0;
        for (int i = 0; i <= n; ++i) {
            const cd b2 = mf * nf * (i % 2 == 0 ? 1.0 : -1.0) * binom *
                          std::pow(r2 - r1, cd(-(m + 1.0 + i)));
            emit(b2, n + 1 - i, r2);
            binom *= cd(m + 1.0 + i) / cd(i + 1.0);
        }
    }
    return out;
}

DensityGrid convolve_grids(const DensityGrid& f, const DensityGrid& g) {
    // exact convolution of the two piecewise-linear representatives at nodes
    const double h = f.h;
    const size_t nf = f.values.size(), ng = g.values.size();
    DensityGrid out;
    out.t0 = f.t0 + g.t0;
    out.h = h;
    size_t nOut = nf + ng - 1;
    if (nOut > kMaxGridNodes) nOut = kMaxGridNodes;
    out.values.assign(nOut, cd(0.0));
    for (size_t k = 0; k < nOut; ++k) {
        cd acc = 0.0;
        const size_t jLo = k >= nf ? k - nf + 1 : 0;
        const size_t jHi = std::min(ng >= 2 ? ng - 2 : 0, k >= 1 ? k - 1 : 0);
        for (size_t j = jLo; j <= jHi && j + 1 < ng; ++j) {
            const size_t i = k - j;
            if (i == 0 || i >= nf) continue;
            const cd fa = f.values[i], fb = f.values[i - 1];
            const cd ga = g.values[j], gb = g.values[j + 1];
            acc += (h / 6.0) * (2.0 * fa * ga + fa * gb + fb * ga + 2.0 * fb * gb);
        }
        out.values[k] = acc;
    }
    return out;
}

DensityGrid resample(const DensityGrid& g, double h) {
    if (std::abs(g.h - h) < 1e-15) return g;
    DensityGrid out;
    out.t0 = g.t0;
    out.h = h;
    const auto n = static_cast<size_t>(std::ceil((g.tEnd() - g.t0) / h)) + 1;
    out.values.resize(std::min(n, kMaxGridNodes));
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = g.at(out.t0 + h * static_cast<double>(i));
    return out;
}

DensityGrid add_grids(const DensityGrid& a, const DensityGrid& b) {
    if (a.values.empty()) return b;
    if (b.values.empty()) return a;
    const double h = std::min(a.h, b.h);
    DensityGrid x = resample(a, h), y = resample(b, h);
    DensityGrid out;
    out.h = h;
    out.t0 = std::min(x.t0, y.t0);
    const double tEnd = std::max(x.tEnd(), y.tEnd());
    auto n = static_cast<size_t>(std::round((tEnd - out.t0) / h)) + 1;
    out.values.assign(std::min(n, kMaxGridNodes), cd(0.0));
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double s = out.t0 + h * static_cast<double>(i);
        out.values[i] = x.at(s) + y.at(s);
    }
    return out;
}

DensityGrid shift_scale_grid(const DensityGrid& g, double shift, cd scale) {
    DensityGrid out = g;
    out.t0 += shift;
    for (auto& v : out.values) v *= scale;
    return out;
}

} // namespace

WeightedMeasure convolve(const WeightedMeasure& mu, const WeightedMeasure& nu) {
    if (std::abs(mu.weight_exponent() - nu.weight_exponent()) > 1e-12)
        fail(ErrorKind::Precondition, "convolution requires a common weight exponent");
    WeightedMeasure out;
    out.omega_ = mu.weight_exponent();

    for (const auto& a : mu.atoms()) {
        for (const auto& b : nu.atoms()) {
            const double t = a.t + b.t;
            const cd w = a.weight * b.weight;
            bool merged = false;
            for (auto& c : out.atoms_) {
                if (std::abs(c.t - t) < kAtomMergeTol) {
                    c.weight += w;
                    merged = true;
                    break;
                }
            }
            if (!merged) out.atoms_.push_back({t, w});
        }
    }
    std::sort(out.atoms_.begin(), out.atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.t < y.t; });

    const bool muPure = !mu.grid().has_value();
    const bool nuPure = !nu.grid().has_value();

    bool analyticOk = muPure && nuPure;
    std::vector<ExpPolyTerm> terms;
    if (analyticOk) {
        auto addAtomDensity = [&](const std::vector<Atom>& atoms,
                                  const std::vector<ExpPolyTerm>& dens) {
            for (const auto& a : atoms)
                for (const auto& t : dens)
                    if (a.weight != 0.0)
                        terms.push_back({a.weight * t.coef, t.power, t.rate, t.offset + a.t});
        };
        addAtomDensity(mu.atoms(), nu.analytic_terms());
        addAtomDensity(nu.atoms(), mu.analytic_terms());
        for (const auto& x : mu.analytic_terms()) {
            for (const auto& y : nu.analytic_terms()) {
                auto c = convolve_terms(x, y);
                if (!c) {
                    analyticOk = false;
                    break;
                }
                terms.insert(terms.end(), c->begin(), c->end());
            }
            if (!analyticOk) break;
        }
    }

    if (analyticOk) {
        out.analytic_ = std::move(terms);
    } else if (mu.has_density() || nu.has_density()) {
        // gridded fallback on the PL views
        const DensityGrid gm = mu.materialized_grid();
        const DensityGrid gn = nu.materialized_grid();
        std::optional<DensityGrid> acc;
        auto accumulate = [&](const DensityGrid& g) { acc = acc ? add_grids(*acc, g) : g; };
        if (!gm.values.empty() && !gn.values.empty()) {
            const double h = std::min(gm.h, gn.h);
            accumulate(convolve_grids(resample(gm, h), resample(gn, h)));
        }
        if (!gm.values.empty())
            for (const auto& b : nu.atoms())
                if (b.weight != 0.0) accumulate(shift_scale_grid(gm, b.t, b.weight));
        if (!gn.values.empty())
            for (const auto& a : mu.atoms())
                if (a.weight != 0.0) accumulate(shift_scale_grid(gn, a.t, a.weight));
        if (acc) {
            if (acc->values.size() >= kMaxGridNodes) {
                const double tailVal = std::abs(acc->values.back());
                double peak = 0.0;
                for (const auto& v : acc->values) peak = std::max(peak, std::abs(v));
                if (tailVal > 1e-6 * peak)
                    fail(ErrorKind::GridResolution,
                         "convolution result truncated with non-negligible mass");
            }
            out.grid_ = std::move(acc);
        }
    }

    out.refresh_support();
    out.supportLow_ = std::max(out.supportLow_, mu.support_low() + nu.support_low());
    return out;
}

WeightedMeasure measure_add(const WeightedMeasure& mu, const WeightedMeasure& nu) {
    if (std::abs(mu.weight_exponent() - nu.weight_exponent()) > 1e-12)
        fail(ErrorKind::Precondition, "sum requires a common weight exponent");
    WeightedMeasure out;
    out.omega_ = mu.weight_exponent();
    out.atoms_ = mu.atoms();
    for (const auto& b : nu.atoms()) {
        bool merged = false;
        for (auto& a : out.atoms_) {
            if (std::abs(a.t - b.t) < kAtomMergeTol) {
                a.weight += b.weight;
                merged = true;
                break;
            }
        }
        if (!merged) out.atoms_.push_back(b);
    }
    std::sort(out.atoms_.begin(), out.atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.t < y.t; });

    out.analytic_ = mu.analytic_terms();
    out.analytic_.insert(out.analytic_.end(), nu.analytic_terms().begin(),
                         nu.analytic_terms().end());
    if (mu.grid() && nu.grid()) {
        out.grid_ = add_grids(*mu.grid(), *nu.grid());
    } else if (mu.grid()) {
        out.grid_ = mu.grid();
    } else if (nu.grid()) {
        out.grid_ = nu.grid();
    }
    out.refresh_support();
    return out;
}

WeightedMeasure measure_scale(cd c, const WeightedMeasure& mu) {
    WeightedMeasure out = mu;
    for (auto& a : out.atoms_) a.weight *= c;
    for (auto& t : out.analytic_) t.coef *= c;
    if (out.grid_)
        for (auto& v : out.grid_->values) v *= c;
    return out;
}

WeightedMeasure measure_moment(const WeightedMeasure& mu, int m) {
    if (m < 0) fail(ErrorKind::Precondition, "moment order must be >= 0");
    WeightedMeasure out = mu;
    for (auto& a : out.atoms_) a.weight *= std::pow(-a.t, m);
    if (!out.analytic_.empty()) {
        // (-s)^m = (-1)^m ((s-o) + o)^m expanded binomially
        std::vector<ExpPolyTerm> terms;
        for (const auto& t : out.analytic_) {
            double binom = 1.0;
            for (int j = 0; j <= m; ++j) {
                ExpPolyTerm nt = t;
                nt.coef *= (m % 2 == 0 ? 1.0 : -1.0) * binom *
                           std::pow(t.offset, static_cast<double>(m - j));
                nt.power = t.power + j;
                terms.push_back(nt);
                binom *= static_cast<double>(m - j) / static_cast<double>(j + 1);
            }
        }
        out.analytic_ = std::move(terms);
    }
    if (out.grid_) {
        for (size_t i = 0; i < out.grid_->values.size(); ++i) {
            const double s = out.grid_->t0 + out.grid_->h * static_cast<double>(i);
            out.grid_->values[i] *= std::pow(-s, m);
        }
    }
    out.refresh_support();
    return out;
}

WeightedMeasure measure_exp_reweight(const WeightedMeasure& mu, cd eps) {
    WeightedMeasure out = mu;
    for (auto& a : out.atoms_) a.weight *= std::exp(-eps * a.t);
    for (auto& t : out.analytic_) {
        t.coef *= std::exp(-eps * t.offset);
        t.rate -= eps;
    }
    if (out.grid_) {
        for (size_t i = 0; i < out.grid_->values.size(); ++i) {
            const double s = out.grid_->t0 + out.grid_->h * static_cast<double>(i);
            out.grid_->values[i] *= std::exp(-eps * s);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// int_a^{a+h} (c0 + c1 (s-a)) e^{-z s} ds, stable for small |z| h
cd cell_laplace(cd z, double a, double h, cd c0, cd c1) {
    const cd zh = z * h;
    cd phi0, phi1;
    if (std::abs(zh) < 1e-4) {
        phi0 = h * (1.0 - zh / 2.0 + zh * zh / 6.0 - zh * zh * zh / 24.0);
        phi1 = h * h * (0.5 - zh / 3.0 + zh * zh / 8.0 - zh * zh * zh / 30.0);
    } else {
        const cd e = std::exp(-zh);
        phi0 = (1.0 - e) / z;
        phi1 = (1.0 - e * (1.0 + zh)) / (z * z);
    }
    return std::exp(-z * a) * (c0 * phi0 + c1 * phi1);
}

} // namespace

cd laplace_transform(const WeightedMeasure& mu, cd z) {
    const double omega = mu.weight_exponent();
    if (z.real() < omega - 1e-12)
        fail(ErrorKind::Domain, "Laplace transform evaluated left of the weight line");
    cd acc = 0.0;
    for (const auto& a : mu.atoms()) acc += a.weight * std::exp(-z * a.t);
    for (const auto& t : mu.analytic_terms()) {
        // int_0^inf u^p e^{(rate - z) u} du = Gamma(p+1) (z - rate)^{-p-1}
        acc += t.coef * std::exp(-z * t.offset) * gamma_p1(t.power) *
               std::pow(z - t.rate, cd(-(t.power + 1.0)));
    }
    if (mu.grid()) {
        const auto& g = *mu.grid();
        for (size_t i = 0; i + 1 < g.values.size(); ++i) {
            if (g.values[i] == 0.0 && g.values[i + 1] == 0.0) continue;
            const double a = g.t0 + g.h * static_cast<double>(i);
            const cd c0 = g.values[i];
            const cd c1 = (g.values[i + 1] - g.values[i]) / g.h;
            acc += cell_laplace(z, a, g.h, c0, c1);
        }
    }
    return acc;
}

double boundary_transform_sup(const WeightedMeasure& mu, double* argS) {
    const double omega = mu.weight_exponent();
    auto mod = [&](double s) { return std::abs(laplace_transform(mu, cd(omega, s))); };
    const double S0 = 200.0;
    std::vector<double> ss;
    const int N = 4001;
    for (int i = 0; i < N; ++i) ss.push_back(-S0 + 2 * S0 * i / (N - 1));
    for (int dec = 0; dec < 7; ++dec) {
        for (int j = 0; j < 12; ++j) {
            const double s = S0 * std::pow(10.0, dec + j / 12.0);
            ss.push_back(s);
            ss.push_back(-s);
        }
    }
    std::sort(ss.begin(), ss.end());
    std::vector<double> vv(ss.size());
    for (size_t i = 0; i < ss.size(); ++i) vv[i] = mod(ss[i]);
    double best = 0.0, bestS = 0.0;
    for (size_t i = 0; i < ss.size(); ++i)
        if (vv[i] > best) {
            best = vv[i];
            bestS = ss[i];
        }
    std::vector<size_t> peaks;
    for (size_t i = 1; i + 1 < ss.size(); ++i)
        if (vv[i] >= vv[i - 1] && vv[i] >= vv[i + 1] && vv[i] > 0.8 * best) peaks.push_back(i);
    std::sort(peaks.begin(), peaks.end(), [&](size_t a, size_t b) { return vv[a] > vv[b]; });
    if (peaks.size() > 8) peaks.resize(8);
    for (size_t idx : peaks) {
        const double sStar = golden_max(mod, ss[idx - 1], ss[idx + 1]);
        const double v = mod(sStar);
        if (v > best) {
            best = v;
            bestS = sStar;
        }
    }
    if (argS) *argS = bestS;
    return best;
}

// ---------------------------------------------------------------------------
// serialization: decimal text, %.17g round-trips doubles exactly

namespace {

void put(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

} // namespace

void WeightedMeasure::save(std::ostream& os) const {
    os << "measure v1\n";
    os << "weight ";
    put(os, omega_);
    os << "\nsupport ";
    put(os, supportLow_);
    os << "\n";
    for (const auto& a : atoms_) {
        os << "atom ";
        put(os, a.t);
        os << " ";
        put(os, a.weight.real());
        os << " ";
        put(os, a.weight.imag());
        os << "\n";
    }
    if (has_density()) {
        const DensityGrid g = analytic_.empty() && grid_ ? *grid_ : materialized_grid();
        if (!g.values.empty()) {
            os << "density ";
            put(os, g.t0);
            os << " ";
            put(os, g.h);
            for (const auto& v : g.values) {
                os << " ";
                put(os, v.real());
                os << " ";
                put(os, v.imag());
            }
            os << "\n";
        }
    }
    os << "end\n";
}

WeightedMeasure WeightedMeasure::load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("measure", 0) != 0)
        fail(ErrorKind::Parse, "expected 'measure v1' header");
    WeightedMeasure m;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "end") break;
        if (tag == "weight") {
            ls >> m.omega_;
        } else if (tag == "support") {
            ls >> m.supportLow_;
        } else if (tag == "atom") {
            Atom a;
            double re = 0, im = 0;
            ls >> a.t >> re >> im;
            a.weight = {re, im};
            m.atoms_.push_back(a);
        } else if (tag == "density") {
            DensityGrid g;
            ls >> g.t0 >> g.h;
            double re, im;
            while (ls >> re >> im) g.values.emplace_back(re, im);
            m.grid_ = std::move(g);
        } else if (!tag.empty()) {
            fail(ErrorKind::Parse, "unknown measure line tag '" + tag + "'");
        }
    }
    return m;
}

} // namespace opcalc
