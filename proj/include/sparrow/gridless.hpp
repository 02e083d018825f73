#ifndef SPARROW_GRIDLESS_HPP
#define SPARROW_GRIDLESS_HPP

#include <string>

#include <sparrow/conic.hpp>
#include <sparrow/model.hpp>

namespace sparrow
{

/// First column u of the Hermitian Toeplitz matrix Toep(u); u_0 is real.
struct ToeplitzParam
{
    ComplexVector u;

    Index dim() const { return u.size(); }
    /// Toep(u)(p, q) = u_{p-q} for p >= q, conj(u_{q-p}) otherwise.
    HermitianMatrix matrix() const;
};

struct AtomicDecomposition
{
    RealVector frequencies; ///< in [-1, 1)
    RealVector magnitudes;

    Index rank() const { return frequencies.size(); }
};

struct GridlessSolution
{
    ToeplitzParam u;
    double objective = 0.0;
    int iterations   = 0;
    bool converged   = true;
};

struct AnmSolution
{
    ToeplitzParam v;
    HermitianMatrix v_n;
    ComplexMatrix y0;
    double atomic_norm = 0.0; ///< (Tr V_N + Tr Toep(v)/M) / 2
    double objective   = 0.0; ///< 1/2 ||Y - Y0||_F^2 + lambda sqrt(N) atomic_norm
    int iterations     = 0;
    bool converged     = true;
};

struct EquivalenceReport
{
    double u_deviation         = 0.0; ///< ||u - v / sqrt(N)||_inf
    double objective_deviation = 0.0; ///< relative gap between scaled objectives
    bool passed                = false;
};

/// u = sum_k s_k a(nu_k), i.e. the first column of sum_k s_k a(nu_k) a(nu_k)^H.
ToeplitzParam toeplitz_from_atoms(const RealVector& freqs, const RealVector& mags, Index m);

/// min Tr(U_N)/N + Tr(Toep(u))/M  s.t. [[U_N, Y^H], [Y, Toep(u) + lambda I]] >= 0, Toep(u) >= 0.
GridlessSolution gl_sparrow_snapshot(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                                     const conic::Options& opts = {1e-11, 200});

/// min Tr(U_M R) + Tr(Toep(u))/M  s.t. [[U_M, I], [I, Toep(u) + lambda I]] >= 0, Toep(u) >= 0.
GridlessSolution gl_sparrow_covariance(const ArrayGeometry& g, const SampleCovariance& r,
                                       double lambda, const conic::Options& opts = {1e-11, 200});

/// Snapshot form when N <= M, covariance form otherwise.
GridlessSolution gl_sparrow(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                            const conic::Options& opts = {1e-11, 200});

/// Number of eigenvalues of Toep(u) above eps_rank * max eigenvalue.
Index estimate_model_order(const ToeplitzParam& u, double eps_rank = 1e-6);

///
/// Toep(u) = sum_l s_l a(nu_l) a(nu_l)^H with l = 1..rank. Frequencies from
/// the shift invariance of the dominant eigenvectors, magnitudes from the
/// least squares fit A(nu) s = u.
///
AtomicDecomposition vandermonde_decomposition(const ToeplitzParam& u, Index rank);

/// min 1/2 ||Y - Y0||_F^2 + (lambda sqrt(N) / 2)(Tr V_N + Tr Toep(v)/M)
///   s.t. [[V_N, Y0^H], [Y0, Toep(v)]] >= 0.
AnmSolution anm_sdp(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                    const conic::Options& opts = {1e-11, 200});

/// Checks u = v / sqrt(N) and objective(GL, snapshot form) * lambda N / 2 = objective(ANM).
EquivalenceReport check_anm_equivalence(const GridlessSolution& gl, const AnmSolution& anm, Index n,
                                        double lambda, double tol);

} // namespace sparrow

#endif // SPARROW_GRIDLESS_HPP
