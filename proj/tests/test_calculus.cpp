#include <doctest.h>

#include <cmath>
#include <random>

#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/factorization.hpp"
#include "opcalc/errors.hpp"

using namespace opcalc;

namespace {

OperatorModel diag12() { return OperatorModel::diagonal({cd(1.0, 0.0), cd(2.0, 0.0)}); }

HalfPlaneFunction inv1(double abscissa = -0.5) {
    return {fe_resolvent_power(cd(-1.0, 0.0), 1.0), abscissa};
}

} // namespace

TEST_CASE("apply_measure on atoms and densities") {
    const OperatorModel d = diag12();

    // delta_tau -> T(tau)
    const CalculusResult r1 = apply_measure(d, WeightedMeasure::point_mass(0.8, 1.0));
    CHECK(operator_norm(Matrix(r1.matrix - semigroup_at(d, 0.8))) < 1e-13);

    // e^{-s} ds -> diag(1/2, 1/3)
    const CalculusResult r2 =
        apply_measure(d, WeightedMeasure::exp_poly_density({{1.0, 0.0, cd(-1.0, 0.0), 0.0}}));
    CHECK(std::abs(r2.matrix(0, 0) - 0.5) < 1e-10);
    CHECK(std::abs(r2.matrix(1, 1) - 1.0 / 3.0) < 1e-10);

    // delta_0 -> identity
    const CalculusResult r3 = apply_measure(d, WeightedMeasure::point_mass(0.0, 1.0));
    CHECK(operator_norm(Matrix(r3.matrix - Matrix::Identity(2, 2))) == 0.0);

    // density that decays too slowly for the semigroup diverges
    const OperatorModel slow = OperatorModel::diagonal({cd(0.2, 0.0)});
    CHECK_THROWS_AS(
        (void)apply_measure(slow, WeightedMeasure::exp_poly_density(
                                      {{1.0, 0.0, cd(0.3, 0.0), 0.0}})),
        NumericError);
}

TEST_CASE("homomorphism: T_{mu * nu} = T_mu T_nu") {
    const OperatorModel j = OperatorModel::jordan(cd(1.0, 0.0), 3);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> loc(0.0, 2.0), w(-1.0, 1.0);
    for (int iter = 0; iter < 6; ++iter) {
        WeightedMeasure mu = measure_add(
            WeightedMeasure::point_mass(loc(rng), cd(w(rng), w(rng))),
            WeightedMeasure::exp_poly_density({{cd(w(rng), 0.0), 0.0, cd(-1.5, 0.0), 0.0}}));
        WeightedMeasure nu = WeightedMeasure::point_mass(loc(rng), cd(w(rng), 0.0));
        const Matrix lhs = apply_measure(j, convolve(mu, nu)).matrix;
        const Matrix rhs = Matrix(apply_measure(j, mu).matrix * apply_measure(j, nu).matrix);
        CHECK(operator_norm(Matrix(lhs - rhs)) < 1e-9 * (1.0 + operator_norm(rhs)));
    }
}

TEST_CASE("apply_function routes") {
    const OperatorModel d = diag12();

    // e^{-tau z} -> T(tau)
    HalfPlaneFunction et(fe_exp_decay(0.6), -1.0);
    const CalculusResult r1 = apply_function(d, et);
    CHECK(r1.route == CalcRoute::Primary);
    CHECK(operator_norm(Matrix(r1.matrix - semigroup_at(d, 0.6))) < 1e-12);
    CHECK(r1.oracleDeviation < 1e-12);

    // 1/(1+z) -> diag(1/2, 1/3)
    const CalculusResult r2 = apply_function(d, inv1());
    CHECK(std::abs(r2.matrix(0, 0) - 0.5) < 1e-10);
    CHECK(std::abs(r2.matrix(1, 1) - 1.0 / 3.0) < 1e-10);

    // e^{-z}/(1+z) on a jordan block: both routes agree
    const OperatorModel j = OperatorModel::jordan(cd(1.0, 0.0), 2);
    HalfPlaneFunction mix(fe_product({fe_exp_decay(1.0), inv1().expr()}), -0.5);
    const CalculusResult r3 = apply_function(j, mix);
    CHECK(r3.route == CalcRoute::Primary);
    CHECK(r3.oracleDeviation < 1e-9);
}

TEST_CASE("regularized route for non-recognized symbols") {
    // z/(1+z) has no syntactic transform; falls back to regularization
    const OperatorModel d = diag12();
    HalfPlaneFunction f(fe_product({fe_var(), fe_resolvent_power(cd(-1.0, 0.0), 1.0)}),
                        -0.5);
    CHECK_FALSE(recognize_measure(f.expr()).has_value());
    const CalculusResult r = apply_function(d, f);
    CHECK(r.route == CalcRoute::Regularized);
    // oracle: f applied to the eigenvalues
    CHECK(std::abs(r.matrix(0, 0) - 0.5) < 1e-5);
    CHECK(std::abs(r.matrix(1, 1) - 2.0 / 3.0) < 1e-5);
    CHECK(r.oracleDeviation < 1e-5);

    // a function with unverifiable boundedness is rejected with a
    // recognition error
    HalfPlaneFunction bad(fe_product({fe_var(), fe_exp_decay(1.0)}), -0.5);
    CHECK_THROWS_AS((void)apply_function(d, bad), NumericError);

    // exponential factor and sums ride through the same route
    HalfPlaneFunction f2(
        fe_product({fe_exp_decay(0.5), fe_var(), fe_resolvent_power(cd(-1.0, 0.0), 1.0)}),
        -0.5);
    const CalculusResult r2 = apply_function(d, f2);
    CHECK(r2.route == CalcRoute::Regularized);
    CHECK(r2.oracleDeviation < 1e-5);

    HalfPlaneFunction f3(
        fe_sum({fe_scale(0.5, fe_product({fe_var(), fe_resolvent_power(cd(-2.0, 0.0), 1.0)})),
                fe_scale(0.5, fe_resolvent_power(cd(-1.0, 0.0), 1.0))}),
        -0.5);
    const CalculusResult r3 = apply_function(d, f3);
    CHECK(r3.route == CalcRoute::Regularized);
    CHECK(r3.oracleDeviation < 1e-5);

    // jordan operator through the regularized route
    const OperatorModel j = OperatorModel::jordan(cd(1.0, 0.0), 2);
    const CalculusResult r4 = apply_function(j, f);
    CHECK(r4.oracleDeviation < 1e-5);
}

TEST_CASE("apply_with_semigroup") {
    const OperatorModel d = diag12();

    // f == 1 -> T(tau)
    HalfPlaneFunction one(fe_constant(1.0), -1.0);
    const CalculusResult r1 = apply_with_semigroup(d, one, 0.9);
    CHECK(operator_norm(Matrix(r1.matrix - semigroup_at(d, 0.9))) < 1e-13);

    // f = 1/(1+z), tau = 1 -> diag(e^{-1}/2, e^{-2}/3)
    const CalculusResult r2 = apply_with_semigroup(d, inv1(), 1.0);
    CHECK(std::abs(r2.matrix(0, 0) - std::exp(-1.0) / 2.0) < 1e-10);
    CHECK(std::abs(r2.matrix(1, 1) - std::exp(-2.0) / 3.0) < 1e-10);

    // equals apply_function(f) * T(tau) on a jordan block
    const OperatorModel j = OperatorModel::jordan(cd(1.0, 0.0), 3);
    HalfPlaneFunction f(fe_sum({fe_scale(0.5, inv1().expr()),
                                fe_scale(0.5, fe_resolvent_power(cd(-2.0, 0.0), 2.0))}),
                        -0.5);
    const Matrix lhs = apply_with_semigroup(j, f, 0.7).matrix;
    const Matrix rhs = Matrix(apply_function(j, f).matrix * semigroup_at(j, 0.7));
    CHECK(operator_norm(Matrix(lhs - rhs)) < 1e-9);
}

TEST_CASE("apply_smoothed") {
    const OperatorModel d = diag12();

    // f == 1, alpha = 1 -> (A - lambda)^{-1}
    HalfPlaneFunction one(fe_constant(1.0), -0.25);
    const CalculusResult r1 = apply_smoothed(d, one, cd(-1.0, 0.0), cd(1.0, 0.0));
    CHECK(std::abs(r1.matrix(0, 0) - 0.5) < 1e-8);
    CHECK(std::abs(r1.matrix(1, 1) - 1.0 / 3.0) < 1e-8);
    CHECK(r1.oracleDeviation < 1e-8);

    // f = e^{-z}, lambda = -1, alpha = 1/2 -> diag(e^{-1} 2^{-1/2}, e^{-2} 3^{-1/2})
    HalfPlaneFunction et(fe_exp_decay(1.0), -0.25);
    const CalculusResult r2 = apply_smoothed(d, et, cd(-1.0, 0.0), cd(0.5, 0.0));
    CHECK(std::abs(r2.matrix(0, 0) - std::exp(-1.0) * std::pow(2.0, -0.5)) < 1e-7);
    CHECK(std::abs(r2.matrix(1, 1) - std::exp(-2.0) * std::pow(3.0, -0.5)) < 1e-7);
    CHECK(r2.oracleDeviation < 1e-6);

    // Re alpha = 0 is rejected
    CHECK_THROWS_AS((void)apply_smoothed(d, one, cd(-1.0, 0.0), cd(0.0, 0.5)),
                    NumericError);
}

TEST_CASE("apply_derivative") {
    const OperatorModel d = diag12();

    // (e_{-t0})'(A) = -t0 T(t0)
    const double t0 = 0.75;
    HalfPlaneFunction et(fe_exp_decay(t0), -1.0);
    const CalculusResult r1 = apply_derivative(d, et, 1);
    CHECK(operator_norm(Matrix(r1.matrix + t0 * semigroup_at(d, t0))) < 1e-12);

    // f = 1/(1+z), m=1: diag(-1/4, -1/9)
    const CalculusResult r2 = apply_derivative(d, inv1(-0.5), 1);
    CHECK(std::abs(r2.matrix(0, 0) + 0.25) < 1e-10);
    CHECK(std::abs(r2.matrix(1, 1) + 1.0 / 9.0) < 1e-10);

    // moment route vs symbolic route on delta_tau * e^{-s} ds
    HalfPlaneFunction conv(fe_product({fe_exp_decay(0.5), inv1().expr()}), -0.5);
    const CalculusResult r3 = apply_derivative(d, conv, 1);
    CHECK(r3.quad.crossCheckError < 1e-8);
    const CalculusResult r4 = apply_derivative(d, conv, 2);
    CHECK(r4.quad.crossCheckError < 1e-8);
}

TEST_CASE("homomorphism: (f g)(A) = f(A) g(A) on catalog pairs") {
    const OperatorModel j = OperatorModel::jordan(cd(1.0, 0.0), 3);
    const std::vector<FuncPtr> exprs = {
        fe_exp_decay(0.4),
        fe_resolvent_power(cd(-1.0, 0.0), 1.0),
        fe_resolvent_power(cd(-2.0, 0.0), 0.5),
        fe_sum({fe_scale(0.5, fe_exp_decay(0.2)),
                fe_scale(0.5, fe_resolvent_power(cd(-1.5, 0.0), 2.0))}),
    };
    for (size_t a = 0; a < exprs.size(); ++a) {
        for (size_t b = a; b < exprs.size(); ++b) {
            HalfPlaneFunction f(exprs[a], -0.5), g(exprs[b], -0.5);
            HalfPlaneFunction fg(fe_product({exprs[a], exprs[b]}), -0.5);
            const Matrix lhs = apply_function(j, fg, false).matrix;
            const Matrix rhs = Matrix(apply_function(j, f, false).matrix *
                                      apply_function(j, g, false).matrix);
            CHECK(operator_norm(Matrix(lhs - rhs)) <
                  1e-8 * (1.0 + operator_norm(rhs)));
        }
    }
}

TEST_CASE("shift rule f(A + omega) = (f(omega + z))(A)") {
    const OperatorModel base = OperatorModel::jordan(cd(1.0, 0.0), 2);
    const double omega = 0.4;
    const OperatorModel shifted = OperatorModel::shifted(base, cd(omega, 0.0));
    HalfPlaneFunction f(fe_product({fe_exp_decay(0.5), inv1(-0.25).expr()}), -0.25);
    const Matrix lhs = apply_function(shifted, f).matrix;
    HalfPlaneFunction g(fe_shift(f.expr(), cd(omega, 0.0)), f.abscissa() - omega);
    const Matrix rhs = apply_function(base, g).matrix;
    CHECK(operator_norm(Matrix(lhs - rhs)) < 1e-10);
}

TEST_CASE("bound realization against the factorization envelope") {
    // || (e_{-tau} f)(A) || <= M^2 eta_up(omega, tau, 2) || e_{-tau} f ||_inf
    const std::vector<OperatorModel> ops = {
        diag12(), OperatorModel::jordan(cd(0.5, 0.0), 2),
        OperatorModel::diagonal({cd(0.0, 2.0), cd(0.0, -2.0), cd(1.0, 0.0)})};
    for (const auto& op : ops) {
        const double M = certify_type(op, 0.0).M;
        for (double omega : {0.5, 1.0}) {
            HalfPlaneFunction g(fe_resolvent_power(cd(-omega - 1.0, 0.0), 1.0), -omega);
            const double supG = sup_norm(g, -omega);
            for (double tau : {0.1, 1.0}) {
                const double eta = eta_envelope(omega, tau, 2.0).upper;
                const double measured = apply_with_semigroup(op, g, tau).normValue;
                const double bound = M * M * eta * std::exp(omega * tau) * supG;
                CHECK(measured <= bound * (1.0 + 1e-3));
            }
        }
    }
}

TEST_CASE("convergence limit") {
    const OperatorModel d = diag12();

    // f == 1: f_{k,eps}(A) -> I with error <= 2 ||A - omega|| / k
    HalfPlaneFunction one(fe_constant(1.0), -1.0);
    const std::vector<double> ks{10.0, 100.0, 1000.0};
    const std::vector<double> eps{1e-1, 1e-2, 1e-3};
    const ConvergenceReport rep = convergence_limit(d, one, ks, eps);
    CHECK(rep.monotoneAlongDiagonal);
    const double normScale =
        operator_norm(Matrix(d.matrix() + Matrix::Identity(2, 2)));
    for (const auto& cell : rep.cells) {
        if (cell.k >= 10.0)
            CHECK(cell.error <= 2.0 * normScale / cell.k + 1e-9);
    }

    // f = e^{-z}: error at (k, eps) = (1e3, 1e-3) below 1e-2
    HalfPlaneFunction et(fe_exp_decay(1.0), -1.0);
    const ConvergenceReport rep2 = convergence_limit(d, et, ks, eps);
    CHECK(rep2.monotoneAlongDiagonal);
    CHECK(rep2.finalError <= 1e-2 * std::max(1.0, rep2.referenceNorm));
    // uniform boundedness of the approximant family near the target norm
    CHECK(rep2.supApplied <= 1.05 * rep2.referenceNorm + 0.05);
}
