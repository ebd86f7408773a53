#include "opcalc/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "opcalc/errors.hpp"

namespace opcalc {

// Quadratures hit the same sample times over and over (atoms, panel nodes);
// copies of a model share one memo.
struct SemigroupCache {
    std::mutex mutex;
    std::unordered_map<uint64_t, Matrix> samples;
};

namespace {

constexpr double kEigCondLimit = 1e6;

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite() || m.cwiseAbs().maxCoeff() > 1e300)
        fail(ErrorKind::Overflow, std::string(what) + ": entries left the representable range");
}

// Higham's scaling-and-squaring with the [13/13] Pade approximant.
Matrix expm_pade(const Matrix& a) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0,
                               7771770303897600.0,  1187353796428800.0,
                               129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,
                               1323241920.0,        40840800.0,
                               960960.0,            16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    Matrix as = a;
    if (norm1 > theta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
        as = a / std::pow(2.0, squarings);
    }
    const auto n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;
    Matrix u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                     b[5] * a4 + b[3] * a2 + b[1] * ident);
    Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
               b[2] * a2 + b[0] * ident;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

Matrix jordan_exponential(cd eig, int n, double t) {
    // e^{-tJ} is upper triangular with (-t)^k / k! e^{-t eig} on superdiagonal k
    Matrix m = Matrix::Zero(n, n);
    const cd scale = std::exp(-t * eig);
    double fact = 1.0;
    cd pow = 1.0;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            fact *= k;
            pow *= -t;
        }
        const cd entry = scale * pow / fact;
        for (int i = 0; i + k < n; ++i) m(i, i + k) = entry;
    }
    return m;
}

} // namespace

void OperatorModel::finalize() {
    semigroupCache_ = std::make_shared<SemigroupCache>();
    omega0_ = eigenvalues_.real().minCoeff();
    if (kind_ == OperatorKind::Dense) {
        Eigen::ComplexEigenSolver<Matrix> solver(matrix_);
        if (solver.info() == Eigen::Success) {
            eigenvalues_ = solver.eigenvalues();
            omega0_ = eigenvalues_.real().minCoeff();
            const Matrix v = solver.eigenvectors();
            Eigen::JacobiSVD<Matrix> svd(v);
            const double smin = svd.singularValues().minCoeff();
            const double smax = svd.singularValues().maxCoeff();
            eigCondition_ = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
            if (eigCondition_ < kEigCondLimit) {
                eigUsable_ = true;
                eigV_ = v;
                eigVinv_ = v.partialPivLu().solve(Matrix::Identity(v.rows(), v.cols()));
            }
        }
    }
}

OperatorModel OperatorModel::diagonal(std::vector<cd> eigenvalues) {
    if (eigenvalues.empty()) fail(ErrorKind::Precondition, "empty diagonal");
    OperatorModel op;
    op.kind_ = OperatorKind::Diagonal;
    const auto n = static_cast<Eigen::Index>(eigenvalues.size());
    op.matrix_ = Matrix::Zero(n, n);
    op.eigenvalues_ = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        op.matrix_(i, i) = eigenvalues[i];
        op.eigenvalues_(i) = eigenvalues[i];
    }
    op.finalize();
    return op;
}

OperatorModel OperatorModel::dense(Matrix a) {
    if (a.rows() != a.cols() || a.rows() == 0)
        fail(ErrorKind::Precondition, "dense operator must be square");
    OperatorModel op;
    op.kind_ = OperatorKind::Dense;
    op.matrix_ = std::move(a);
    op.eigenvalues_ = Vector::Zero(op.matrix_.rows());
    op.finalize();
    return op;
}

OperatorModel OperatorModel::jordan(cd eigenvalue, int blockSize) {
    if (blockSize < 1) fail(ErrorKind::Precondition, "jordan block size must be >= 1");
    OperatorModel op;
    op.kind_ = OperatorKind::Jordan;
    op.jordanEig_ = eigenvalue;
    op.matrix_ = Matrix::Zero(blockSize, blockSize);
    for (int i = 0; i < blockSize; ++i) {
        op.matrix_(i, i) = eigenvalue;
        if (i + 1 < blockSize) op.matrix_(i, i + 1) = 1.0;
    }
    op.eigenvalues_ = Vector::Constant(blockSize, eigenvalue);
    op.finalize();
    return op;
}

OperatorModel OperatorModel::shifted(OperatorModel base, cd shift) {
    OperatorModel op;
    op.kind_ = OperatorKind::Shifted;
    op.base_ = std::make_shared<const OperatorModel>(std::move(base));
    op.shift_ = shift;
    op.matrix_ = op.base_->matrix() +
                 shift * Matrix::Identity(op.base_->dim(), op.base_->dim());
    op.eigenvalues_ = op.base_->eigenvalues().array() + shift;
    op.finalize();
    return op;
}

Matrix semigroup_at(const OperatorModel& op, double t) {
    if (t < 0) fail(ErrorKind::Precondition, "semigroup_at needs t >= 0");
    const int n = op.dim();
    const uint64_t key = std::bit_cast<uint64_t>(t);
    if (op.semigroupCache_) {
        std::lock_guard<std::mutex> lock(op.semigroupCache_->mutex);
        auto it = op.semigroupCache_->samples.find(key);
        if (it != op.semigroupCache_->samples.end()) return it->second;
    }
    Matrix result;
    switch (op.kind()) {
        case OperatorKind::Diagonal: {
            result = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i) result(i, i) = std::exp(-t * op.eigenvalues()(i));
            break;
        }
        case OperatorKind::Jordan:
            result = jordan_exponential(op.jordan_eigenvalue(), n, t);
            break;
        case OperatorKind::Shifted:
            result = std::exp(-t * op.shift()) * semigroup_at(op.base(), t);
            break;
        case OperatorKind::Dense: {
            if (op.eig_usable()) {
                Vector d(n);
                for (int i = 0; i < n; ++i) d(i) = std::exp(-t * op.eigenvalues()(i));
                result = op.eig_vectors() * d.asDiagonal() * op.eig_vectors_inv();
            } else {
                result = expm_pade(Matrix(-t * op.matrix()));
            }
            break;
        }
    }
    check_finite(result, "semigroup_at");
    if (op.semigroupCache_) {
        std::lock_guard<std::mutex> lock(op.semigroupCache_->mutex);
        auto& samples = op.semigroupCache_->samples;
        if (samples.size() > 20000) samples.clear();
        samples.emplace(key, result);
    }
    return result;
}

SemigroupType certify_type(const OperatorModel& op, double omega,
                           std::vector<double> tGrid) {
    auto h = [&](double t) { return operator_norm(semigroup_at(op, t)) * std::exp(-omega * t); };

    if (tGrid.empty()) {
        const double gap = omega + op.half_plane_abscissa();
        const double tMax =
            gap > 1e-3 ? std::max(10.0, (20.0 + 5.0 * op.dim()) / gap) : 40.0 * op.dim();
        const int n = 257;
        tGrid.resize(n);
        for (int i = 0; i < n; ++i) tGrid[i] = tMax * i / (n - 1);
    }
    std::sort(tGrid.begin(), tGrid.end());

    std::vector<double> vals(tGrid.size());
    for (size_t i = 0; i < tGrid.size(); ++i) vals[i] = h(tGrid[i]);

    // refine until adjacent-node variation is below 1% near the max
    for (int round = 0; round < 6; ++round) {
        std::vector<double> ng, nv;
        bool changed = false;
        for (size_t i = 0; i < tGrid.size(); ++i) {
            ng.push_back(tGrid[i]);
            nv.push_back(vals[i]);
            if (i + 1 < tGrid.size()) {
                const double rel = std::abs(vals[i + 1] - vals[i]) /
                                   std::max(1e-300, std::max(vals[i], vals[i + 1]));
                if (rel > 0.01) {
                    const double mid = 0.5 * (tGrid[i] + tGrid[i + 1]);
                    ng.push_back(mid);
                    nv.push_back(h(mid));
                    changed = true;
                }
            }
        }
        tGrid.swap(ng);
        vals.swap(nv);
        if (!changed) break;
    }

    size_t arg = 0;
    for (size_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[arg]) arg = i;

    if (arg + 1 == vals.size() && vals.size() >= 2 &&
        vals[arg] > vals[arg - 1] * (1.0 + 1e-9)) {
        fail(ErrorKind::Divergence,
             "||T(t)|| e^{-omega t} still grows at the grid end; omega too small");
    }

    // golden polish around the achieved node, iterate until < 0.1% change
    double m = vals[arg], at = tGrid[arg];
    const double lo = arg > 0 ? tGrid[arg - 1] : tGrid[arg];
    const double hi = arg + 1 < tGrid.size() ? tGrid[arg + 1] : tGrid[arg];
    if (hi > lo) {
        for (int it = 0; it < 4; ++it) {
            const double tStar = golden_max(h, lo, hi, 1e-10);
            const double v = h(tStar);
            const double change = std::abs(v - m) / std::max(1e-300, m);
            if (v > m) {
                m = v;
                at = tStar;
            }
            if (change < 1e-3) break;
        }
    }

    SemigroupType out;
    out.M = std::max(1.0, m);
    out.omega = omega;
    out.achievedAt = at;
    out.timeGrid = std::move(tGrid);
    return out;
}

Matrix resolvent(const OperatorModel& op, cd z) {
    double dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < op.eigenvalues().size(); ++i)
        dist = std::min(dist, std::abs(z - op.eigenvalues()(i)));
    if (dist < 1e-12 * (1.0 + std::abs(z)))
        fail(ErrorKind::Singularity, "resolvent evaluated at (or too near) the spectrum");
    const int n = op.dim();
    const Matrix zi = z * Matrix::Identity(n, n) - op.matrix();
    return zi.partialPivLu().solve(Matrix::Identity(n, n));
}

Matrix fractional_resolvent_power(const OperatorModel& op, cd lambda, cd alpha,
                                  QuadReport* report) {
    if (alpha.real() <= 0)
        fail(ErrorKind::Precondition, "fractional power needs Re alpha > 0");
    const double omega0 = op.half_plane_abscissa();
    if (lambda.real() >= omega0)
        fail(ErrorKind::Precondition,
             "Re lambda must lie strictly below the semigroup abscissa");

    const int n = op.dim();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix lam = lambda * ident - op.matrix();
    const double normLam = operator_norm(lam);

    // head by series: int_0^eps t^{alpha-1} e^{t(lambda - A)} dt
    const double eps = std::min(0.5, 0.1 / (1.0 + normLam));
    Matrix acc = Matrix::Zero(n, n);
    {
        Matrix pow = ident;
        double fact = 1.0;
        for (int k = 0; k < 80; ++k) {
            if (k > 0) {
                pow = Matrix(pow * lam);
                fact *= k;
            }
            const cd ek = std::exp((alpha + static_cast<double>(k)) * std::log(eps)) /
                          (alpha + static_cast<double>(k));
            const Matrix term = (ek / fact) * pow;
            acc += term;
            if (term.cwiseAbs().maxCoeff() < 1e-18 * (1.0 + acc.cwiseAbs().maxCoeff()) && k > 4)
                break;
        }
    }

    // body and tail by panels; contributions decay like e^{(Re lambda - omega0) t}
    const double gap = omega0 - lambda.real();
    const double tCap = std::max(50.0, (80.0 + 20.0 * n) / gap);
    int evals = 0;
    auto integrand = [&](double t) -> Matrix {
        ++evals;
        return std::exp((alpha - 1.0) * std::log(t) + lambda * t) * semigroup_at(op, t);
    };
    auto panel = [&](double a, double b) {
        const GaussRule& rule = gauss_legendre(16);
        Matrix s = Matrix::Zero(n, n);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < 16; ++i)
            s += rule.weights[i] * integrand(mid + half * rule.nodes[i]);
        return Matrix(half * s);
    };
    double a = eps;
    double quiet = 0;
    bool converged = false;
    while (a < tCap) {
        const double b = std::min(tCap, a < 1.0 ? 2.0 * a : a + std::max(1.0, 0.25 * a));
        const Matrix c = panel(a, b);
        acc += c;
        const double rel = c.cwiseAbs().maxCoeff() / (1.0 + acc.cwiseAbs().maxCoeff());
        quiet = rel < 1e-16 ? quiet + 1 : 0;
        a = b;
        if (quiet >= 3) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        // the tail estimate at the truncation point must be negligible
        const double tailBound = std::exp(-gap * tCap) * std::pow(tCap, alpha.real() - 1.0) *
                                 (1.0 + 10.0 / gap);
        if (tailBound > 1e-10)
            fail(ErrorKind::Divergence,
                 "tail estimate exceeds tolerance at the truncation point");
    }

    Matrix result = acc / complex_gamma(alpha);

    if (report) {
        report->truncationPoint = a;
        report->evaluations = evals;
        report->stepHint = eps;
        // spectral cross-check
        Matrix oracle;
        const double absf = 0.5 * (lambda.real() + omega0);
        HalfPlaneFunction f(fe_resolvent_power(lambda, alpha), absf);
        oracle = spectral_oracle(op, f);
        report->crossCheckError =
            operator_norm(Matrix(result - oracle)) / (1.0 + operator_norm(oracle));
    }
    return result;
}

namespace {

Matrix jordan_oracle(const OperatorModel& op, const HalfPlaneFunction& f) {
    const int n = op.dim();
    const cd eig = op.jordan_eigenvalue();
    Matrix m = Matrix::Zero(n, n);
    double fact = 1.0;
    HalfPlaneFunction g = f;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            fact *= k;
            g = derivative(g, 1);
        }
        const cd entry = evaluate(g, eig) / fact;
        for (int i = 0; i + k < n; ++i) m(i, i + k) = entry;
    }
    return m;
}

Matrix contour_oracle(const OperatorModel& op, const HalfPlaneFunction& f) {
    const int n = op.dim();
    cd center = 0.0;
    for (Eigen::Index i = 0; i < op.eigenvalues().size(); ++i) center += op.eigenvalues()(i);
    center /= static_cast<double>(n);
    double spread = 0.0;
    for (Eigen::Index i = 0; i < op.eigenvalues().size(); ++i)
        spread = std::max(spread, std::abs(op.eigenvalues()(i) - center));
    double radius = 1.5 * spread + 0.5;
    const double allowed = center.real() - f.abscissa() - 1e-9;
    if (allowed < 1.02 * spread)
        fail(ErrorKind::Conditioning,
             "cannot enclose the spectrum inside the function's half-plane");
    radius = std::min(radius, allowed);
    const int N = 512;
    Matrix acc = Matrix::Zero(n, n);
    const Matrix ident = Matrix::Identity(n, n);
    for (int k = 0; k < N; ++k) {
        const double th = 2.0 * M_PI * k / N;
        const cd z = center + radius * std::exp(cd(0.0, th));
        const Matrix r = (z * ident - op.matrix()).partialPivLu().solve(ident);
        acc += evaluate(f, z) * r * (z - center);
    }
    return acc / static_cast<double>(N);
}

} // namespace

Matrix spectral_oracle(const OperatorModel& op, const HalfPlaneFunction& f) {
    for (Eigen::Index i = 0; i < op.eigenvalues().size(); ++i)
        if (op.eigenvalues()(i).real() <= f.abscissa() - 1e-12)
            fail(ErrorKind::Domain,
                 "spectrum not contained in the function's half-plane");
    const int n = op.dim();
    switch (op.kind()) {
        case OperatorKind::Diagonal: {
            Matrix m = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i) m(i, i) = evaluate(f, op.eigenvalues()(i));
            return m;
        }
        case OperatorKind::Jordan:
            return jordan_oracle(op, f);
        case OperatorKind::Shifted: {
            HalfPlaneFunction g(fe_shift(f.expr(), op.shift()),
                                f.abscissa() - op.shift().real());
            return spectral_oracle(op.base(), g);
        }
        case OperatorKind::Dense: {
            if (op.eig_usable()) {
                Vector d(n);
                for (int i = 0; i < n; ++i) d(i) = evaluate(f, op.eigenvalues()(i));
                return op.eig_vectors() * d.asDiagonal() * op.eig_vectors_inv();
            }
            return contour_oracle(op, f);
        }
    }
    fail(ErrorKind::Precondition, "unknown operator kind");
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

cd complex_gamma(cd z) {
    // Lanczos, g = 7
    static const double p[] = {0.99999999999980993,   676.5203681218851,
                               -1259.1392167224028,   771.32342877765313,
                               -176.61502916214059,   12.507343278686905,
                               -0.13857109526572012,  9.9843695780195716e-6,
                               1.5056327351493116e-7};
    if (z.real() < 0.5) return M_PI / (std::sin(M_PI * z) * complex_gamma(1.0 - z));
    z -= 1.0;
    cd x = p[0];
    for (int i = 1; i < 9; ++i) x += p[i] / (z + static_cast<double>(i));
    const cd t = z + 7.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

// ---------------------------------------------------------------------------
// flat text format: "kind dim" header, then rows of re,im entries

namespace {

void put(std::ostream& os, cd v) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", v.real(), v.imag());
    os << buf;
}

cd parse_entry(const std::string& tok) {
    const auto comma = tok.find(',');
    if (comma == std::string::npos)
        fail(ErrorKind::Parse, "operator entry must be re,im");
    return {std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1))};
}

} // namespace

void OperatorModel::save(std::ostream& os) const {
    switch (kind_) {
        case OperatorKind::Diagonal: {
            os << "diag " << dim() << "\n";
            for (int i = 0; i < dim(); ++i) {
                if (i) os << " ";
                put(os, eigenvalues_(i));
            }
            os << "\n";
            return;
        }
        case OperatorKind::Dense: {
            os << "dense " << dim() << "\n";
            for (int i = 0; i < dim(); ++i) {
                for (int j = 0; j < dim(); ++j) {
                    if (j) os << " ";
                    put(os, matrix_(i, j));
                }
                os << "\n";
            }
            return;
        }
        case OperatorKind::Jordan: {
            os << "jordan " << dim() << "\n";
            put(os, jordanEig_);
            os << "\n";
            return;
        }
        case OperatorKind::Shifted: {
            os << "shifted " << dim() << "\n";
            put(os, shift_);
            os << "\n";
            base_->save(os);
            return;
        }
    }
}

OperatorModel OperatorModel::load(std::istream& is) {
    std::string kind;
    int n = 0;
    if (!(is >> kind >> n) || n <= 0)
        fail(ErrorKind::Parse, "expected operator header 'kind dim'");
    if (kind == "diag") {
        std::vector<cd> eigs(n);
        std::string tok;
        for (int i = 0; i < n; ++i) {
            if (!(is >> tok)) fail(ErrorKind::Parse, "missing diagonal entry");
            eigs[i] = parse_entry(tok);
        }
        return diagonal(std::move(eigs));
    }
    if (kind == "dense") {
        Matrix a(n, n);
        std::string tok;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (!(is >> tok)) fail(ErrorKind::Parse, "missing matrix entry");
                a(i, j) = parse_entry(tok);
            }
        return dense(std::move(a));
    }
    if (kind == "jordan") {
        std::string tok;
        if (!(is >> tok)) fail(ErrorKind::Parse, "missing jordan eigenvalue");
        return jordan(parse_entry(tok), n);
    }
    if (kind == "shifted") {
        std::string tok;
        if (!(is >> tok)) fail(ErrorKind::Parse, "missing shift");
        const cd s = parse_entry(tok);
        OperatorModel base = load(is);
        if (base.dim() != n) fail(ErrorKind::Parse, "shifted base dimension mismatch");
        return shifted(std::move(base), s);
    }
    fail(ErrorKind::Parse, "unknown operator kind '" + kind + "'");
}

} // namespace opcalc
