#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "opcalc/quadrature.hpp"

namespace opcalc {

// Point mass a * delta_t.
struct Atom {
    double t = 0.0;
    cd weight{};
};

// Piecewise-linear density on a uniform grid starting at t0.
struct DensityGrid {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<cd> values;

    double tEnd() const { return values.empty() ? t0 : t0 + h * (values.size() - 1); }
    cd at(double s) const;
};

// coef * (s - offset)^power * e^{rate (s - offset)} on [offset, inf).
// Terms carry exact Laplace transforms and (where closed forms exist) exact
// convolutions; singular heads (power < 0) stay exact instead of being smeared
// onto a grid.
struct ExpPolyTerm {
    cd coef{};
    double power = 0.0; // > -1
    cd rate{};
    double offset = 0.0;
};

// Element of the convolution algebra M_omega(R_+): atoms plus a density with
// exponential-weight bookkeeping exponent omega. The density is the sum of an
// analytic part (exp-poly terms) and a gridded residual; either may be empty.
class WeightedMeasure {
public:
    WeightedMeasure() = default;

    static WeightedMeasure zero(double omega = 0.0);
    static WeightedMeasure point_mass(double t, cd a, double omega = 0.0);
    static WeightedMeasure from_atoms(std::vector<Atom> atoms, double omega = 0.0);
    static WeightedMeasure exp_poly_density(std::vector<ExpPolyTerm> terms,
                                            double omega = 0.0);
    static WeightedMeasure from_grid(DensityGrid grid, double omega = 0.0);
    static WeightedMeasure from_parts(std::vector<Atom> atoms,
                                      std::vector<ExpPolyTerm> terms,
                                      std::optional<DensityGrid> grid, double omega);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::optional<DensityGrid>& grid() const { return grid_; } // residual part
    const std::vector<ExpPolyTerm>& analytic_terms() const { return analytic_; }
    bool has_density() const { return grid_.has_value() || !analytic_.empty(); }
    bool density_pure_analytic() const { return !analytic_.empty() && !grid_; }

    double weight_exponent() const { return omega_; }
    double support_low() const { return supportLow_; }

    WeightedMeasure with_weight(double omega) const;
    cd density_at(double s) const; // analytic part plus residual
    // support interval of the density (analytic reach is where the weighted
    // tail falls below ~1e-14)
    std::pair<double, double> density_extent() const;
    // PL view of the whole density (used by fallbacks and serialization)
    DensityGrid materialized_grid(double hHint = 0.0) const;

    void save(std::ostream& os) const;
    static WeightedMeasure load(std::istream& is);

private:
    friend WeightedMeasure convolve(const WeightedMeasure&, const WeightedMeasure&);
    friend WeightedMeasure measure_add(const WeightedMeasure&, const WeightedMeasure&);
    friend WeightedMeasure measure_moment(const WeightedMeasure&, int);
    friend WeightedMeasure measure_scale(cd, const WeightedMeasure&);
    friend WeightedMeasure measure_exp_reweight(const WeightedMeasure&, cd);

    void refresh_support();

    std::vector<Atom> atoms_;
    std::optional<DensityGrid> grid_;
    std::vector<ExpPolyTerm> analytic_;
    double omega_ = 0.0;
    double supportLow_ = 0.0;
};

// || e_{-omega} mu ||_{M(R_+)}; divergence error if the weighted density does
// not decay by the end of its representable support.
double tv_norm(const WeightedMeasure& mu, double* tailReport = nullptr);

WeightedMeasure convolve(const WeightedMeasure& mu, const WeightedMeasure& nu);
WeightedMeasure measure_add(const WeightedMeasure& mu, const WeightedMeasure& nu);
WeightedMeasure measure_scale(cd c, const WeightedMeasure& mu);
// mu(ds) -> (-s)^m mu(ds)
WeightedMeasure measure_moment(const WeightedMeasure& mu, int m);
// mu(ds) -> e^{-eps s} mu(ds)
WeightedMeasure measure_exp_reweight(const WeightedMeasure& mu, cd eps);

// Laplace-Stieltjes transform; Re z >= omega (boundary trace included).
cd laplace_transform(const WeightedMeasure& mu, cd z);

// sup over s of |mu_hat(omega + i s)| by staged grid maximization.
double boundary_transform_sup(const WeightedMeasure& mu, double* argS = nullptr);

struct Am1Report {
    int p = 2;
    double tvNorm = 0.0;               // the AM_1 (= M_omega) norm
    double boundarySup = 0.0;          // sup |mu_hat| on the boundary line
    double discreteOperatorNorm = 0.0; // measured on the transference grid
    double relGapDiscrete = 0.0;       // |discrete - reference| / reference
    bool contractiveEmbedding = false; // boundarySup <= tvNorm + tol
};

// Defined in transference.cpp (compares against the discretized convolution
// operator); declared here because it reports on a measure.
Am1Report am1_norm_identity_check(const WeightedMeasure& mu, int p);

} // namespace opcalc
