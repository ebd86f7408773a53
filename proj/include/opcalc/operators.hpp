#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <vector>

#include "opcalc/functions.hpp"
#include "opcalc/quadrature.hpp"

namespace opcalc {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class OperatorKind { Diagonal, Dense, Jordan, Shifted };

struct SemigroupCache; // memo of e^{-tA} samples shared by quadratures

// A finite-dimensional stand-in for a half-plane-type generator: the semigroup
// is T(t) = e^{-tA} and sigma(A) lies in the closed half-plane Re z >= omega0.
class OperatorModel {
public:
    static OperatorModel diagonal(std::vector<cd> eigenvalues);
    static OperatorModel dense(Matrix a);
    static OperatorModel jordan(cd eigenvalue, int blockSize);
    static OperatorModel shifted(OperatorModel base, cd shift); // A = base + shift I

    OperatorKind kind() const { return kind_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Matrix& matrix() const { return matrix_; }
    const Vector& eigenvalues() const { return eigenvalues_; }
    double half_plane_abscissa() const { return omega0_; } // min Re sigma(A)

    // Jordan data (valid when kind == Jordan)
    cd jordan_eigenvalue() const { return jordanEig_; }

    // Shifted data (valid when kind == Shifted)
    const OperatorModel& base() const { return *base_; }
    cd shift() const { return shift_; }

    // eigendecomposition cache for the dense path
    bool eig_usable() const { return eigUsable_; }
    double eig_condition() const { return eigCondition_; }
    const Matrix& eig_vectors() const { return eigV_; }
    const Matrix& eig_vectors_inv() const { return eigVinv_; }

    void save(std::ostream& os) const;
    static OperatorModel load(std::istream& is);

private:
    OperatorModel() = default;
    void finalize();

    OperatorKind kind_ = OperatorKind::Dense;
    Matrix matrix_;
    Vector eigenvalues_;
    double omega0_ = 0.0;
    cd jordanEig_{};
    std::shared_ptr<const OperatorModel> base_;
    cd shift_{};

    bool eigUsable_ = false;
    double eigCondition_ = 0.0;
    Matrix eigV_, eigVinv_;

    friend Matrix semigroup_at(const OperatorModel& op, double t);
    std::shared_ptr<SemigroupCache> semigroupCache_;
};

struct SemigroupType {
    double M = 1.0;
    double omega = 0.0;
    double achievedAt = 0.0;       // grid time realizing the max
    std::vector<double> timeGrid;  // certification grid (post refinement)
};

// e^{-tA}; overflow error when entries leave the representable range.
Matrix semigroup_at(const OperatorModel& op, double t);

// Empirical type constant: M = max over the (adaptively refined) grid of
// ||T(t)|| e^{-omega t}. A grid maximum can only under-estimate the true sup.
SemigroupType certify_type(const OperatorModel& op, double omega,
                           std::vector<double> tGrid = {});

Matrix resolvent(const OperatorModel& op, cd z);

// (A - lambda)^{-alpha} through the weighted semigroup integral, cross-checked
// against the spectral route. Re lambda < omega0, Re alpha > 0.
Matrix fractional_resolvent_power(const OperatorModel& op, cd lambda, cd alpha,
                                  QuadReport* report = nullptr);

// Ground truth for f(A): eigenvalue evaluation (diagonal / diagonalizable),
// the Jordan--Taylor form, or a contour-integral fallback when the
// eigenvector basis is too ill-conditioned.
Matrix spectral_oracle(const OperatorModel& op, const HalfPlaneFunction& f);

double operator_norm(const Matrix& m);

// Lanczos approximation of the Gamma function on C.
cd complex_gamma(cd z);

} // namespace opcalc
