#include <sparrow/numerics.hpp>

#include <cmath>

namespace sparrow
{

Complex poly_eval(const ComplexVector& coeffs, Complex z)
{
    Complex acc{0.0, 0.0};
    for (Index i = 0; i < coeffs.size(); ++i) {
        acc = acc * z + coeffs(i);
    }
    return acc;
}

namespace
{

// Parlett-Reinsch diagonal similarity balancing (radix 2) in place.
void balance(ComplexMatrix& a)
{
    const Index n     = a.rows();
    const double radix = 2.0;
    bool converged     = false;
    while (!converged) {
        converged = true;
        for (Index i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (Index j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) {
                continue;
            }
            double g       = r / radix;
            double f       = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                converged = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

Complex poly_derivative_eval(const ComplexVector& coeffs, Complex z)
{
    const Index n = coeffs.size() - 1;
    Complex acc{0.0, 0.0};
    for (Index i = 0; i < n; ++i) {
        acc = acc * z + coeffs(i) * static_cast<double>(n - i);
    }
    return acc;
}

} // namespace

ComplexVector poly_roots(const ComplexVector& coeffs)
{
    if (coeffs.size() == 0) {
        throw InvalidArgument("poly_roots: empty coefficient vector");
    }
    if (coeffs(0) == Complex(0.0, 0.0)) {
        throw InvalidArgument("poly_roots: leading coefficient must be nonzero");
    }
    const Index degree = coeffs.size() - 1;
    if (degree == 0) {
        return ComplexVector(0);
    }

    // Roots at the origin are split off exactly.
    Index zeros = 0;
    while (zeros < degree && coeffs(degree - zeros) == Complex(0.0, 0.0)) {
        ++zeros;
    }
    const Index reduced = degree - zeros;
    ComplexVector roots = ComplexVector::Zero(degree);
    if (reduced == 0) {
        return roots;
    }

    const ComplexVector monic = coeffs.head(reduced + 1) / coeffs(0);
    ComplexMatrix companion   = ComplexMatrix::Zero(reduced, reduced);
    for (Index j = 0; j < reduced; ++j) {
        companion(0, j) = -monic(j + 1);
    }
    for (Index i = 1; i < reduced; ++i) {
        companion(i, i - 1) = 1.0;
    }
    balance(companion);

    Eigen::ComplexEigenSolver<ComplexMatrix> solver(companion, false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("poly_roots: companion eigenvalue iteration did not converge");
    }

    for (Index i = 0; i < reduced; ++i) {
        Complex z          = solver.eigenvalues()(i);
        double residual    = std::abs(poly_eval(monic, z));
        for (int iter = 0; iter < 3 && residual > 0.0; ++iter) {
            const Complex dp = poly_derivative_eval(monic, z);
            if (dp == Complex(0.0, 0.0)) {
                break;
            }
            const Complex candidate = z - poly_eval(monic, z) / dp;
            const double cand_res   = std::abs(poly_eval(monic, candidate));
            if (!(cand_res < residual)) {
                break;
            }
            z        = candidate;
            residual = cand_res;
        }
        roots(i) = z;
    }
    return roots;
}

} // namespace sparrow
