#ifndef SPARROW_SPARROW_HPP
#define SPARROW_SPARROW_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <sparrow/conic.hpp>
#include <sparrow/model.hpp>

namespace sparrow
{

struct Dictionary
{
    ArrayGeometry geometry;
    FrequencyGrid grid;
    ComplexMatrix a; ///< M x K, column k = a(grid_k)

    Dictionary() = default;
    Dictionary(ArrayGeometry g, FrequencyGrid grid);

    Index sensors() const { return a.rows(); }
    Index size() const { return a.cols(); }
};

enum class SparrowMethod
{
    cd,
    sdp_snapshot,
    sdp_covariance
};

std::string to_string(SparrowMethod m);

struct SparrowSolution
{
    RealVector s;
    double objective = 0.0;
    std::optional<ComplexMatrix> x_hat;
    std::vector<Index> support;
    SparrowMethod solver = SparrowMethod::cd;
    int sweeps           = 0;    ///< CD sweeps, or interior point iterations
    bool converged       = true;
};

struct CdOptions
{
    int max_sweeps       = 1000000; ///< coherent fine grids converge slowly; pruning keeps sweeps cheap
    double tol           = 1e-10;
    bool prune_zeros     = true;
    int refactor_every   = 50;
    /// Called after every single-coordinate update with (sweep, k, s).
    std::function<void(int, Index, const RealVector&)> on_update;
};

/// sqrt(sigma2 * M * ln M)
double select_lambda(double sigma2, Index m);

/// Tr((A S A^H + lambda I)^{-1} R) + Tr(S)
double sparrow_objective(const RealVector& s, const Dictionary& d, const SampleCovariance& r,
                         double lambda);

SparrowSolution sparrow_cd(const Dictionary& d, const SampleCovariance& r, double lambda,
                           const CdOptions& opts = {});

/// min Tr(U_N)/N + Tr(S)  s.t. [[U_N, Y^H], [Y, A S A^H + lambda I]] >= 0, S >= 0 diagonal.
SparrowSolution sparrow_sdp_snapshot(const Dictionary& d, const MmvBatch& y, double lambda,
                                     const conic::Options& opts = {1e-11, 200});

/// min Tr(U_M R) + Tr(S)  s.t. [[U_M, I], [I, A S A^H + lambda I]] >= 0, S >= 0 diagonal.
SparrowSolution sparrow_sdp_covariance(const Dictionary& d, const SampleCovariance& r, double lambda,
                                       const conic::Options& opts = {1e-11, 200});

/// Snapshot form when N <= M, covariance form otherwise.
SparrowSolution sparrow_sdp(const Dictionary& d, const MmvBatch& y, double lambda,
                            const conic::Options& opts = {1e-11, 200});

/// X = S A^H (A S A^H + lambda I)^{-1} Y
ComplexMatrix reconstruct_signal(const RealVector& s, const Dictionary& d, const MmvBatch& y,
                                 double lambda);

struct Support
{
    std::vector<Index> indices;
    RealVector frequencies;
};

/// Grid points with s_k > delta_rel * max(s).
Support support_from_s(const RealVector& s, const FrequencyGrid& grid, double delta_rel = 1e-3);

/// Local maxima of s (circularly over the grid) inside the support; used as
/// point estimates when several adjacent grid points are active.
Support peaks_from_s(const RealVector& s, const FrequencyGrid& grid, double delta_rel = 1e-3);

} // namespace sparrow

#endif // SPARROW_SPARROW_HPP
