#include <doctest.h>

#include <cmath>
#include <sstream>
#include <random>
#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/errors.hpp"
#include "opcalc/report.hpp"
#include "opcalc/transference.hpp"

using namespace opcalc;

namespace {

std::vector<Vector> test_vectors(int dim, int count, unsigned seedVal) {
    std::mt19937 rng(seedVal);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> xs;
    for (int k = 0; k < count; ++k) {
        Vector x(dim);
        for (int i = 0; i < dim; ++i) x(i) = cd(u(rng), u(rng));
        xs.push_back(x.normalized());
    }
    return xs;
}

} // namespace

TEST_CASE("embed") {
    const OperatorModel zero = OperatorModel::dense(Matrix::Zero(2, 2)); // T(t) = I
    FactorFunction psi{0.0, 1.0, {1.0}, 0.0};                            // 1_{[0,1]}

    // x = 0 -> zero signal
    const GridSignal z = embed(Vector::Zero(2), psi, zero, 4.0, 1.0 / 32.0);
    CHECK(z.lp_norm() == 0.0);

    // identity semigroup: signal is x on [-1, 0], zero elsewhere; the support
    // boundary nodes carry the one-sided values and are flagged as edges
    Vector x(2);
    x << cd(1.0, 0.0), cd(0.0, -2.0);
    const GridSignal s = embed(x, psi, zero, 4.0, 1.0 / 32.0);
    for (int k = 0; k < s.nodes(); ++k) {
        const double t = s.sAt(k);
        const double expect = (t <= 0.0 && t >= -1.0) ? 1.0 : 0.0;
        CHECK((s.values.col(k) - expect * x).norm() < 1e-14);
    }
    REQUIRE(s.leftEdges.size() == 1);
    REQUIRE(s.rightEdges.size() == 1);
    CHECK(s.sAt(s.leftEdges[0]) == doctest::Approx(0.0));
    CHECK(s.sAt(s.rightEdges[0]) == doctest::Approx(-1.0));

    // norm bound ||iota x|| <= M ||psi||_p ||x|| for a certificate factor
    const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(2.0, 0.0)});
    const FactorizationCertificate cert = trivial_certificate(0.5, 1.0, 2.0);
    const GridSignal e = embed(x, cert.psi, d, 40.0, 1.0 / 64.0);
    const double M = certify_type(d, 0.0).M;
    CHECK(e.lp_norm() <= M * cert.psi.lp_norm(2.0) * x.norm() + 1e-9);
}

TEST_CASE("convolve_operator on signals") {
    GridSignal sig;
    sig.L = 8.0;
    sig.h = 1.0 / 16.0;
    sig.p = 2.0;
    const int n = static_cast<int>(std::lround(2 * sig.L / sig.h)) + 1;
    sig.values = Eigen::MatrixXcd::Zero(1, n);
    for (int k = 0; k < n; ++k)
        sig.values(0, k) = std::exp(-sig.sAt(k) * sig.sAt(k));

    // delta_0 acts as the identity
    const GridSignal same = convolve_operator(sig, WeightedMeasure::point_mass(0.0, 1.0));
    CHECK((same.values - sig.values).cwiseAbs().maxCoeff() < 1e-15);

    // delta_{kh} shifts exactly by k nodes
    const GridSignal shifted =
        convolve_operator(sig, WeightedMeasure::point_mass(5.0 * sig.h, 1.0));
    for (int k = 5; k < n; ++k)
        CHECK(std::abs(shifted.values(0, k) - sig.values(0, k - 5)) < 1e-15);

    // off-grid atoms interpolate and report
    ConvolveDiagnostics diag;
    (void)convolve_operator(sig, WeightedMeasure::point_mass(5.5 * sig.h, 1.0), &diag);
    CHECK(diag.offGridAtoms);
}

TEST_CASE("power iteration matches the boundary transform sup (p = 2 scalar)") {
    // mu = delta_1 - delta_2: sup |mu_hat(is)| = 2
    const WeightedMeasure diff = measure_add(WeightedMeasure::point_mass(1.0, 1.0),
                                             WeightedMeasure::point_mass(2.0, -1.0));
    const double norm = convolution_operator_norm(diff, 40.0, 1.0 / 32.0);
    CHECK(norm == doctest::Approx(2.0).epsilon(0.01));

    // mu = e^{-s} ds: sup = 1
    const WeightedMeasure dens =
        WeightedMeasure::exp_poly_density({{1.0, 0.0, cd(-1.0, 0.0), 0.0}});
    const double norm2 = convolution_operator_norm(dens, 60.0, 1.0 / 32.0);
    CHECK(norm2 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("project") {
    const OperatorModel zero = OperatorModel::dense(Matrix::Zero(2, 2));
    FactorFunction phi{0.0, 1.0, {1.0}, 0.0}; // 1_{[0,1]}

    GridSignal sig;
    sig.L = 4.0;
    sig.h = 1.0 / 64.0;
    sig.p = 2.0;
    const int n = static_cast<int>(std::lround(2 * sig.L / sig.h)) + 1;
    sig.values = Eigen::MatrixXcd::Zero(2, n);

    // zero signal -> zero vector
    CHECK(project(sig, phi, zero).norm() == 0.0);

    // signal constant x on [0, 1] with unit-mass phi -> x
    Vector x(2);
    x << cd(0.5, 0.0), cd(0.0, 1.0);
    for (int k = 0; k < n; ++k)
        if (sig.sAt(k) >= 0.0 && sig.sAt(k) <= 1.0) sig.values.col(k) = x;
    const Vector out = project(sig, phi, zero);
    CHECK((out - x).norm() < 1e-10);

    // Hoelder bound on random signals
    const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(0.5, 0.0)});
    const double M = certify_type(d, 0.0).M;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        GridSignal r = sig;
        for (int k = 0; k < n; ++k)
            r.values.col(k) = Vector::NullaryExpr(2, [&](Eigen::Index) {
                return cd(u(rng), u(rng));
            });
        const Vector p = project(r, phi, d);
        CHECK(p.norm() <= M * phi.lp_norm(2.0) * r.lp_norm() + 1e-6);
    }
}

TEST_CASE("factorization identity: T_mu = P L_{e_omega mu} iota") {
    const double omega = 1.0, tau = 1.0;
    const FactorizationCertificate cert = trivial_certificate(omega, tau, 2.0);

    SUBCASE("mu = delta_tau reproduces T(tau)") {
        const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(2.0, 0.0)});
        const WeightedMeasure mu = WeightedMeasure::point_mass(tau, 1.0, -omega);
        const auto xs = test_vectors(2, 3, 11);
        const auto rep = factorization_check(d, mu, cert, xs, 1e-5);
        CHECK(rep.identityOk);
        CHECK(rep.maxRelError < 1e-6);
        CHECK(rep.estimateOk);
        CHECK(rep.tMuNorm <= rep.bound * (1.0 + 1e-3));
    }

    SUBCASE("support below the threshold is rejected") {
        const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0)});
        const WeightedMeasure mu = WeightedMeasure::point_mass(0.5 * tau, 1.0, -omega);
        const auto xs = test_vectors(1, 1, 3);
        CHECK_THROWS_AS((void)factorization_check(d, mu, cert, xs), NumericError);
    }

    SUBCASE("jordan operator with a shifted density") {
        const OperatorModel j = OperatorModel::jordan(cd(0.8, 0.0), 2);
        // mu = delta_tau * e^{-2 s} ds, supported in [tau, inf)
        const WeightedMeasure mu =
            convolve(WeightedMeasure::point_mass(tau, 1.0, -omega),
                     WeightedMeasure::exp_poly_density({{1.0, 0.0, cd(-2.0, 0.0), 0.0}},
                                                       -omega));
        const auto xs = test_vectors(2, 3, 17);
        const auto rep = factorization_check(j, mu, cert, xs, 1e-4);
        CHECK(rep.maxRelError < 1e-4);
        CHECK(rep.estimateOk);
    }
}

TEST_CASE("norm chain on the grid") {
    const double omega = 1.0, tau = 1.0;
    const FactorizationCertificate cert = trivial_certificate(omega, tau, 2.0);
    const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(2.0, 0.0)});
    const WeightedMeasure mu = WeightedMeasure::point_mass(tau, 1.0, -omega);
    const auto xs = test_vectors(2, 2, 23);
    const auto rep = factorization_check(d, mu, cert, xs);
    // measured pieces obey || iota || <= M ||psi||, || P || <= M ||phi||
    CHECK(rep.iotaNormBound == doctest::Approx(rep.M * cert.psi.lp_norm(2.0)));
    CHECK(rep.projNormBound == doctest::Approx(rep.M * cert.phi.lp_norm(2.0)));
    CHECK(rep.tMuNorm <= rep.iotaNormBound * rep.projNormBound * rep.convNorm /
                             (rep.M * rep.M) * rep.M * rep.M +
                             1e-6);
}

TEST_CASE("moment factorization (exponential pair)") {
    const double omega = -1.0;

    SUBCASE("psi * phi (t) = t e^{omega t} on a grid") {
        FactorFunction psi{omega, 1.0, {}, 1.0};
        for (double t : {0.25, 1.0, 4.0, 9.0})
            CHECK(std::abs(factor_convolution_at(psi, psi, t) - t * std::exp(omega * t)) <
                  1e-10);
    }

    SUBCASE("constant p^{-1/p} (p')^{-1/p'} = 1/2 at p = 2") {
        CHECK(std::pow(2.0, -0.5) * std::pow(2.0, -0.5) == doctest::Approx(0.5));
    }

    SUBCASE("T_{t mu} = (A - lambda)^{-2} for mu = e^{lambda s} ds") {
        const cd lambda(-2.0, 0.0);
        const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(0.5, 0.0)});
        const WeightedMeasure mu =
            WeightedMeasure::exp_poly_density({{1.0, 0.0, lambda, 0.0}}, omega);
        const auto xs = test_vectors(2, 3, 29);
        const auto rep = moment_factorization_check(d, mu, omega, xs, 2.0, 1e-5);
        CHECK(rep.identityOk);
        CHECK(rep.maxRelError < 1e-5);
        CHECK(rep.estimateOk);
        // closed form: T_{t mu} x = (A - lambda)^{-2} x
        const Matrix expect =
            Matrix((d.matrix() - lambda * Matrix::Identity(2, 2)).inverse());
        const Matrix sq = Matrix(expect * expect);
        const CalculusResult tMu =
            apply_measure(d, measure_scale(-1.0, measure_moment(mu, 1)));
        CHECK(operator_norm(Matrix(tMu.matrix - sq)) < 1e-8);
    }

    SUBCASE("omega must be negative") {
        const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0)});
        const WeightedMeasure mu =
            WeightedMeasure::exp_poly_density({{1.0, 0.0, cd(-2.0, 0.0), 0.0}}, 0.5);
        const auto xs = test_vectors(1, 1, 31);
        CHECK_THROWS_AS((void)moment_factorization_check(d, mu, 0.5, xs), NumericError);
    }
}

TEST_CASE("check reports render in the experiment CSV schema") {
    const double omega = 1.0, tau = 1.0;
    const FactorizationCertificate cert = trivial_certificate(omega, tau, 2.0);
    const OperatorModel d = OperatorModel::diagonal({cd(1.0, 0.0), cd(2.0, 0.0)});
    const WeightedMeasure mu = WeightedMeasure::point_mass(tau, 1.0, -omega);
    const auto xs = test_vectors(2, 2, 41);
    const auto rep = factorization_check(d, mu, cert, xs);
    const auto rows = factorization_report_rows("transference", rep);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(r.pass);
    std::ostringstream os;
    write_csv(os, rows);
    CHECK(os.str().rfind("experiment,param:x,param:quantity,measured,bound,ratio,pass\n",
                         0) == 0);
}

TEST_CASE("am1 norm identity report") {
    // delta_tau at p = 1: AM_1 norm 1, boundary sup 1
    {
        const Am1Report rep =
            am1_norm_identity_check(WeightedMeasure::point_mass(1.0, 1.0), 1);
        CHECK(rep.tvNorm == doctest::Approx(1.0));
        CHECK(rep.boundarySup == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(rep.contractiveEmbedding);
        CHECK(rep.discreteOperatorNorm == doctest::Approx(1.0).epsilon(0.01));
    }
    // e^{-s} ds at p = 2: boundary sup 1 equals TV 1
    {
        const Am1Report rep = am1_norm_identity_check(
            WeightedMeasure::exp_poly_density({{1.0, 0.0, cd(-1.0, 0.0), 0.0}}), 2);
        CHECK(rep.tvNorm == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(rep.boundarySup == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(rep.relGapDiscrete < 0.01);
        CHECK(rep.contractiveEmbedding);
    }
    // delta_1 - delta_2 at p = 2: sup = 2 = TV
    {
        const WeightedMeasure diff = measure_add(WeightedMeasure::point_mass(1.0, 1.0),
                                                 WeightedMeasure::point_mass(2.0, -1.0));
        const Am1Report rep = am1_norm_identity_check(diff, 2);
        CHECK(rep.boundarySup == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(rep.tvNorm == doctest::Approx(2.0));
        CHECK(rep.relGapDiscrete < 0.01);
    }
    // p = infinity coincides with the p = 1 norm identity
    {
        const Am1Report rep =
            am1_norm_identity_check(WeightedMeasure::point_mass(0.5, 2.0), 0x7fffffff);
        CHECK(rep.tvNorm == doctest::Approx(2.0));
        CHECK(rep.discreteOperatorNorm == doctest::Approx(2.0).epsilon(0.01));
    }
    CHECK_THROWS_AS(
        (void)am1_norm_identity_check(WeightedMeasure::point_mass(0.5, 1.0), 3),
        NumericError);
}
