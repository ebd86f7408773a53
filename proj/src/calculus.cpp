#include "opcalc/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

// int_off^{off+eps} (s-off)^p e^{rate (s-off)} T(s) ds
//   = T(off) sum_k (rate I - A)^k / k! * eps^{p+1+k} / (p+1+k)
Matrix operator_head_integral(const OperatorModel& op, double p, cd rate, double off,
                              double eps) {
    const int n = op.dim();
    const Matrix gen = rate * Matrix::Identity(n, n) - op.matrix();
    Matrix acc = Matrix::Zero(n, n);
    Matrix pow = Matrix::Identity(n, n);
    double fact = 1.0;
    for (int k = 0; k < 90; ++k) {
        if (k > 0) {
            pow = Matrix(pow * gen);
            fact *= k;
        }
        const double e = std::pow(eps, p + 1.0 + k) / (p + 1.0 + k);
        const Matrix term = (e / fact) * pow;
        acc += term;
        if (k > 4 && term.cwiseAbs().maxCoeff() <
                         1e-18 * (1.0 + acc.cwiseAbs().maxCoeff()))
            break;
    }
    if (off > 0) acc = Matrix(semigroup_at(op, off) * acc);
    return acc;
}

// operator integral of a single analytic density term against T(s)
Matrix term_operator_integral(const OperatorModel& op, const ExpPolyTerm& term,
                              QuadReport* report) {
    const int n = op.dim();
    const double gap = op.half_plane_abscissa() - term.rate.real();
    if (gap <= 1e-9)
        fail(ErrorKind::Divergence,
             "absolute-convergence tail test fails: density decays too slowly "
             "for this semigroup");
    const double normGen = operator_norm(
        Matrix(term.rate * Matrix::Identity(n, n) - op.matrix()));
    const double eps = std::min(0.5, 0.1 / (1.0 + normGen));

    Matrix acc = term.coef * operator_head_integral(op, term.power, term.rate,
                                                    term.offset, eps);
    const GaussRule& rule = gauss_legendre(16);
    auto value = [&](double s) -> Matrix {
        const double u = s - term.offset;
        return Matrix((term.coef * std::pow(u, term.power) * std::exp(term.rate * u)) *
                      semigroup_at(op, s));
    };
    double a = term.offset + eps;
    const double tCap = term.offset + std::max(60.0, (80.0 + 20.0 * n) / gap);
    int quiet = 0;
    int evals = 0;
    while (a < tCap) {
        const double len = (a - term.offset) < 1.0 ? (a - term.offset) : std::max(1.0, 0.2 * (a - term.offset));
        const double b = std::min(tCap, a + len);
        Matrix s = Matrix::Zero(n, n);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < 16; ++i) {
            s += rule.weights[i] * value(mid + half * rule.nodes[i]);
            ++evals;
        }
        const Matrix c = Matrix(half * s);
        acc += c;
        quiet = c.cwiseAbs().maxCoeff() < 1e-16 * (1.0 + acc.cwiseAbs().maxCoeff())
                    ? quiet + 1
                    : 0;
        a = b;
        if (quiet >= 3) break;
    }
    if (report) {
        report->truncationPoint = std::max(report->truncationPoint, a);
        report->evaluations += evals;
    }
    return acc;
}

Matrix grid_operator_integral(const OperatorModel& op, const DensityGrid& g,
                              QuadReport* report) {
    const int n = op.dim();
    Matrix acc = Matrix::Zero(n, n);
    const GaussRule& rule = gauss_legendre(4);
    int evals = 0;
    for (size_t i = 0; i + 1 < g.values.size(); ++i) {
        const double a = g.t0 + g.h * static_cast<double>(i);
        const double b = a + g.h;
        if (g.values[i] == 0.0 && g.values[i + 1] == 0.0) continue;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int k = 0; k < 4; ++k) {
            const double s = mid + half * rule.nodes[k];
            acc += (half * rule.weights[k]) * Matrix(g.at(s) * semigroup_at(op, s));
            ++evals;
        }
    }
    if (report) {
        report->evaluations += evals;
        report->truncationPoint = std::max(report->truncationPoint, g.tEnd());
        report->stepHint = g.h;
    }
    return acc;
}

} // namespace

std::optional<WeightedMeasure> recognize_measure(const FuncPtr& expr) {
    switch (expr->tag) {
        case FuncExpr::Tag::Constant:
            return WeightedMeasure::point_mass(0.0, expr->value);
        case FuncExpr::Tag::ExpDecay:
            return WeightedMeasure::point_mass(expr->tau, 1.0);
        case FuncExpr::Tag::ResolventPower: {
            if (std::abs(expr->exponent.imag()) > 1e-14) return std::nullopt;
            const double alpha = expr->exponent.real();
            // (z-lambda)^{-alpha} = L[ s^{alpha-1} e^{lambda s} / Gamma(alpha) ]
            const cd coef = 1.0 / complex_gamma(alpha);
            return WeightedMeasure::exp_poly_density(
                {{coef, alpha - 1.0, expr->value, 0.0}});
        }
        case FuncExpr::Tag::Var:
        case FuncExpr::Tag::Shift:
            return std::nullopt;
        case FuncExpr::Tag::Sum: {
            std::optional<WeightedMeasure> acc;
            for (const auto& k : expr->kids) {
                auto m = recognize_measure(k);
                if (!m) return std::nullopt;
                acc = acc ? measure_add(*acc, *m) : *m;
            }
            return acc;
        }
        case FuncExpr::Tag::Product: {
            std::optional<WeightedMeasure> acc;
            for (const auto& k : expr->kids) {
                auto m = recognize_measure(k);
                if (!m) return std::nullopt;
                acc = acc ? convolve(*acc, *m) : *m;
            }
            return acc;
        }
        case FuncExpr::Tag::IntPower: {
            auto base = recognize_measure(expr->kids[0]);
            if (!base) return std::nullopt;
            WeightedMeasure acc = *base;
            for (int i = 1; i < expr->power; ++i) acc = convolve(acc, *base);
            return acc;
        }
    }
    return std::nullopt;
}

CalculusResult apply_measure(const OperatorModel& op, const WeightedMeasure& mu) {
    const int n = op.dim();
    CalculusResult out;
    out.route = CalcRoute::Primary;
    out.matrix = Matrix::Zero(n, n);

    for (const auto& a : mu.atoms())
        if (a.weight != 0.0) out.matrix += a.weight * semigroup_at(op, a.t);

    for (const auto& term : mu.analytic_terms())
        out.matrix += term_operator_integral(op, term, &out.quad);
    if (mu.grid()) {
        // tail test: the represented measure must decay against ||T||
        const auto& g = *mu.grid();
        const double gap = op.half_plane_abscissa();
        const double tailVal =
            std::abs(g.values.empty() ? cd(0.0) : g.values.back()) *
            std::exp(-std::max(0.0, gap) * g.tEnd());
        double peak = 1e-300;
        for (const auto& v : g.values) peak = std::max(peak, std::abs(v));
        if (tailVal > 1e-5 * peak)
            fail(ErrorKind::Divergence,
                 "absolute-convergence tail test fails at the density grid end");
        out.matrix += grid_operator_integral(op, g, &out.quad);
    }

    out.normValue = operator_norm(out.matrix);
    return out;
}

namespace {

CalculusResult apply_regularized(const OperatorModel& op, const HalfPlaneFunction& f) {
    if (boundedness_check(f) != Boundedness::Bounded)
        fail(ErrorKind::Recognition,
             "function admits neither the recognized nor the regularized route "
             "(boundedness unverified)");
    const double omega = f.abscissa();
    const double omega0 = op.half_plane_abscissa();
    if (omega >= omega0)
        fail(ErrorKind::Recognition,
             "regularized route needs the function's half-plane to contain the "
             "spectrum strictly");
    // default regularizer pole: lambda = omega - 1
    const double omega0Prime = 0.5 * (omega0 - omega);
    const double sigmaTot = omega + omega0Prime;

    // recover the measure of h(z) = f(z) (z - (omega-1))^{-1}, shifted so the
    // recovery runs on Re z > 0
    HalfPlaneFunction shiftedF(fe_shift(f.expr(), cd(omega, 0.0)), 0.0);
    WeightedMeasure m = paley_wiener_factor(shiftedF, 1.0, cd(-1.0, 0.0), omega0Prime);

    OperatorModel b = OperatorModel::shifted(op, cd(-sigmaTot, 0.0));
    CalculusResult hA = apply_measure(b, m);

    CalculusResult out;
    out.route = CalcRoute::Regularized;
    out.quad = hA.quad;
    const Matrix reg =
        op.matrix() - cd(omega - 1.0, 0.0) * Matrix::Identity(op.dim(), op.dim());
    out.matrix = Matrix(reg * hA.matrix);
    out.normValue = operator_norm(out.matrix);
    return out;
}

} // namespace

CalculusResult apply_function(const OperatorModel& op, const HalfPlaneFunction& f,
                              bool crossCheck) {
    CalculusResult out;
    auto mu = recognize_measure(f.expr());
    if (mu) {
        out = apply_measure(op, *mu);
    } else {
        out = apply_regularized(op, f);
    }
    if (crossCheck) {
        const Matrix oracle = spectral_oracle(op, f);
        out.oracleDeviation = operator_norm(Matrix(out.matrix - oracle)) /
                              (1.0 + operator_norm(oracle));
    }
    return out;
}

CalculusResult apply_with_semigroup(const OperatorModel& op, const HalfPlaneFunction& f,
                                    double tau) {
    if (tau < 0) fail(ErrorKind::Precondition, "apply_with_semigroup needs tau >= 0");
    HalfPlaneFunction g(fe_product({fe_exp_decay(tau), f.expr()}), f.abscissa());
    return apply_function(op, g);
}

CalculusResult apply_smoothed(const OperatorModel& op, const HalfPlaneFunction& f,
                              cd lambda, cd alpha) {
    if (!(lambda.real() < 0.0))
        fail(ErrorKind::Precondition, "apply_smoothed needs Re lambda < 0");
    if (!(alpha.real() > 0.0))
        fail(ErrorKind::Precondition, "apply_smoothed needs Re alpha > 0");
    if (op.half_plane_abscissa() < -1e-12)
        fail(ErrorKind::Precondition,
             "apply_smoothed assumes a bounded semigroup (spectrum in Re z >= 0)");

    const int n = op.dim();
    // head: int_0^eps t^{alpha-1} e^{lambda t} f(A) T(t) dt
    //     = f(A) sum_k (lambda I - A)^k / k! eps^{alpha+k}/(alpha+k)
    CalculusResult fA = apply_function(op, f, false);
    const Matrix gen = lambda * Matrix::Identity(n, n) - op.matrix();
    const double eps = std::min(0.5, 0.1 / (1.0 + operator_norm(gen)));
    Matrix head = Matrix::Zero(n, n);
    {
        Matrix pow = Matrix::Identity(n, n);
        double fact = 1.0;
        for (int k = 0; k < 90; ++k) {
            if (k > 0) {
                pow = Matrix(pow * gen);
                fact *= k;
            }
            const cd e = std::exp((alpha + static_cast<double>(k)) * std::log(eps)) /
                         (alpha + static_cast<double>(k));
            const Matrix term = (e / fact) * pow;
            head += term;
            if (k > 4 &&
                term.cwiseAbs().maxCoeff() < 1e-18 * (1.0 + head.cwiseAbs().maxCoeff()))
                break;
        }
    }
    Matrix acc = Matrix(fA.matrix * head);

    CalculusResult out;
    out.route = fA.route;
    const double gap = op.half_plane_abscissa() - lambda.real();
    const double tCap = std::max(60.0, (80.0 + 20.0 * n) / gap);
    const GaussRule& rule = gauss_legendre(16);
    double a = eps;
    int quiet = 0;
    while (a < tCap) {
        const double b = std::min(tCap, a < 1.0 ? 2.0 * a : a + std::max(1.0, 0.25 * a));
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        Matrix s = Matrix::Zero(n, n);
        for (int i = 0; i < 16; ++i) {
            const double t = mid + half * rule.nodes[i];
            const CalculusResult ft = apply_with_semigroup(op, f, t);
            s += rule.weights[i] *
                 Matrix(std::exp((alpha - 1.0) * std::log(t) + lambda * t) * ft.matrix);
            ++out.quad.evaluations;
        }
        const Matrix c = Matrix(half * s);
        acc += c;
        quiet = c.cwiseAbs().maxCoeff() < 1e-15 * (1.0 + acc.cwiseAbs().maxCoeff())
                    ? quiet + 1
                    : 0;
        a = b;
        if (quiet >= 3) break;
    }
    if (a >= tCap) {
        const double tail = std::exp(-gap * tCap) * std::pow(tCap, alpha.real() - 1.0);
        if (tail > 1e-9)
            fail(ErrorKind::Divergence, "smoothing integral tail test failed");
    }
    out.quad.truncationPoint = a;
    out.matrix = acc / complex_gamma(alpha);
    out.normValue = operator_norm(out.matrix);

    HalfPlaneFunction target(
        fe_product({f.expr(), fe_resolvent_power(lambda, alpha)}),
        std::max(f.abscissa(), 0.5 * lambda.real()));
    const Matrix oracle = spectral_oracle(op, target);
    out.oracleDeviation =
        operator_norm(Matrix(out.matrix - oracle)) / (1.0 + operator_norm(oracle));
    return out;
}

CalculusResult apply_derivative(const OperatorModel& op, const HalfPlaneFunction& f,
                                int m) {
    if (m < 1) fail(ErrorKind::Precondition, "derivative order must be >= 1");
    HalfPlaneFunction g = derivative(f, m);
    CalculusResult symbolic = apply_function(op, g);

    auto mu = recognize_measure(f.expr());
    if (mu) {
        const WeightedMeasure moment = measure_moment(*mu, m);
        const CalculusResult viaMoment = apply_measure(op, moment);
        symbolic.quad.crossCheckError =
            operator_norm(Matrix(symbolic.matrix - viaMoment.matrix)) /
            (1.0 + symbolic.normValue);
    }
    return symbolic;
}

ConvergenceReport convergence_limit(const OperatorModel& op, const HalfPlaneFunction& f,
                                    std::span<const double> kGrid,
                                    std::span<const double> epsGrid) {
    ConvergenceReport rep;
    const CalculusResult ref = apply_function(op, f, false);
    rep.referenceNorm = operator_norm(ref.matrix);
    const double omega = f.abscissa();

    for (double k : kGrid) {
        for (double eps : epsGrid) {
            // f_{k,eps}(z) = f(z+eps) g_k(z+eps), g_k(z) = k/(z-omega+k)
            FuncPtr gk = fe_scale(k, fe_resolvent_power(cd(omega - k, 0.0), 1.0));
            FuncPtr fk = fe_shift(fe_product({f.expr(), gk}), cd(eps, 0.0));
            HalfPlaneFunction fke(fk, omega);
            const CalculusResult r = apply_function(op, fke, false);
            ConvergenceCell cell;
            cell.k = k;
            cell.eps = eps;
            cell.error = operator_norm(Matrix(r.matrix - ref.matrix));
            cell.applied = r.normValue;
            rep.cells.push_back(cell);
            rep.supApplied = std::max(rep.supApplied, cell.applied);
        }
    }

    // diagonal of the sorted grids: coarsest-to-finest
    std::vector<double> ks(kGrid.begin(), kGrid.end());
    std::vector<double> es(epsGrid.begin(), epsGrid.end());
    std::sort(ks.begin(), ks.end());
    std::sort(es.begin(), es.end(), std::greater<>());
    const size_t diag = std::min(ks.size(), es.size());
    rep.monotoneAlongDiagonal = true;
    double prev = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < diag; ++i) {
        for (const auto& c : rep.cells) {
            if (c.k == ks[i] && c.eps == es[i]) {
                if (c.error > prev * (1.0 + 1e-9)) rep.monotoneAlongDiagonal = false;
                prev = c.error;
                rep.finalError = c.error;
            }
        }
    }
    return rep;
}

} // namespace opcalc
