#ifndef SPARROW_NUMERICS_HPP
#define SPARROW_NUMERICS_HPP

#include <complex>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <sparrow/errors.hpp>

namespace sparrow
{

using Index   = Eigen::Index;
using Complex = std::complex<double>;

using RealVector    = Eigen::VectorXd;
using RealMatrix    = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Dense Hermitian (or real symmetric) matrix. The type is an alias; the
/// invariant is checked by the routines that rely on it.
using HermitianMatrix = ComplexMatrix;

/// Relative departure from (conjugate) symmetry, ||H - H^H||_F / max(||H||_F, 1e-14).
template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& h)
{
    const double scale = std::max(h.norm(), 1e-14);
    return (h - h.adjoint()).norm() / scale;
}

/// Throws InvalidArgument unless `h` is square and conjugate symmetric to `tol`.
template <typename Derived>
void require_hermitian(const Eigen::MatrixBase<Derived>& h, const char* what,
                       double tol = 1e-12)
{
    if (h.rows() != h.cols()) {
        throw InvalidArgument(std::string(what) + ": matrix is not square");
    }
    if (!h.allFinite()) {
        throw InvalidArgument(std::string(what) + ": non-finite entries");
    }
    if (hermitian_defect(h) > tol) {
        throw InvalidArgument(std::string(what) + ": matrix is not Hermitian");
    }
}

template <typename Scalar>
struct HermitianEigen
{
    using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
    Eigen::Matrix<RealScalar, Eigen::Dynamic, 1> values;          ///< descending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors; ///< columns match `values`
};

///
/// Eigen-decomposition H = V diag(values) V^H with eigenvalues in descending
/// order. Works for real symmetric and complex Hermitian input.
///
template <typename Derived>
HermitianEigen<typename Derived::Scalar>
hermitian_eig(const Eigen::MatrixBase<Derived>& h)
{
    using Scalar  = typename Derived::Scalar;
    using Matrix  = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require_hermitian(h, "hermitian_eig", 1e-10);

    const Matrix sym = (h + h.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("hermitian_eig: eigenvalue iteration did not converge");
    }
    HermitianEigen<Scalar> out;
    out.values  = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

/// Eigenvalues only, descending.
template <typename Derived>
Eigen::Matrix<typename Eigen::NumTraits<typename Derived::Scalar>::Real, Eigen::Dynamic, 1>
hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& h)
{
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix sym = (h + h.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("hermitian_eigenvalues: eigenvalue iteration did not converge");
    }
    return solver.eigenvalues().reverse();
}

///
/// Solves H X = B for Hermitian positive definite H by Cholesky factorization.
/// Throws NotPositiveDefinite when the factorization breaks down.
///
template <typename DerivedH, typename DerivedB>
Eigen::Matrix<typename DerivedB::Scalar, Eigen::Dynamic, Eigen::Dynamic>
solve_hpd(const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedB>& b)
{
    using Matrix = Eigen::Matrix<typename DerivedH::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require_hermitian(h, "solve_hpd", 1e-10);
    if (b.rows() != h.rows()) {
        throw InvalidArgument("solve_hpd: right-hand side has wrong row count");
    }
    const Matrix sym = (h + h.adjoint()) / 2;
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("solve_hpd: matrix is not positive definite");
    }
    // LLT accepts matrices with tiny negative pivots clipped; check the diagonal.
    const auto diag = llt.matrixLLT().diagonal().real();
    if (diag.size() > 0 && !(diag.minCoeff() > 0.0)) {
        throw NotPositiveDefinite("solve_hpd: matrix is not positive definite");
    }
    return llt.solve(b);
}

///
/// Roots of p(z) = c[0] z^n + c[1] z^(n-1) + ... + c[n] (coefficients in
/// descending powers). Uses the eigenvalues of the balanced companion matrix
/// followed by a guarded Newton polish. A degree-0 polynomial has no roots.
///
ComplexVector poly_roots(const ComplexVector& coeffs);

/// Evaluates the polynomial with descending coefficients at z (Horner).
Complex poly_eval(const ComplexVector& coeffs, Complex z);

} // namespace sparrow

#endif // SPARROW_NUMERICS_HPP
