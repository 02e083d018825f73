#ifndef SPARROW_BASELINES_HPP
#define SPARROW_BASELINES_HPP

#include <string>

#include <sparrow/conic.hpp>
#include <sparrow/sparrow.hpp>

namespace sparrow
{

struct L21Options
{
    double tol      = 1e-10; ///< relative objective decrease
    double move_tol = 1e-7;  ///< relative iterate change
    int max_iter    = 200000;
};

struct L21Solution
{
    ComplexMatrix x; ///< K x N
    double objective = 0.0;
    int iterations   = 0;
    bool converged   = false;
};

/// 1/2 ||A X - Y||_F^2 + lambda sqrt(N) sum_k ||x_k||_2
double l21_objective(const ComplexMatrix& x, const Dictionary& d, const MmvBatch& y, double lambda);

/// Accelerated proximal gradient with row-wise group soft thresholding and
/// function-value restart.
L21Solution l21_solve(const Dictionary& d, const MmvBatch& y, double lambda, const L21Options& opts = {});

struct MusicResult
{
    RealVector spectrum; ///< 1 / ||E_n^H a(nu_k)||^2 over the grid
    RealVector peaks;    ///< up to L local maxima, strongest first
};

MusicResult music_spectrum(const SampleCovariance& r, Index l, const FrequencyGrid& grid,
                           const ArrayGeometry& g);

struct RootMusicResult
{
    RealVector frequencies; ///< sorted ascending, exactly L values
    bool low_confidence = false;
};

RootMusicResult root_music(const SampleCovariance& r, Index l, const ArrayGeometry& g);

enum class SpiceVariant
{
    undersampled,
    oversampled
};

std::string to_string(SpiceVariant v);

struct SpiceSolution
{
    RealVector p;
    double epsilon   = 0.0;
    double objective = 0.0;
    SpiceVariant variant = SpiceVariant::undersampled;
    int iterations   = 0;
    bool converged   = true;
};

/// Direct evaluation of the covariance fitting criterion with R0 = A P A^H + eps I:
///   undersampled  Tr(R0^{-1} R^2) + Tr(R0) - 2 Tr(R)
///   oversampled   Tr(R0^{-1} R) + Tr(R0 R^{-1}) - 2M
double spice_objective(SpiceVariant v, const RealVector& p, double eps, const Dictionary& d,
                       const SampleCovariance& r);

SpiceSolution spice_undersampled(const Dictionary& d, const SampleCovariance& r,
                                 const conic::Options& opts = {1e-10, 200});
SpiceSolution spice_oversampled(const Dictionary& d, const SampleCovariance& r,
                                const conic::Options& opts = {1e-10, 200});

///
/// Stochastic (unconditional) Cramer-Rao bound on the spatial frequencies,
/// sigma2 / (2N) [Re{(D^H P_A^perp D) .* (P A^H R^{-1} A P)^T}]^{-1}.
///
RealMatrix stochastic_crb(const SourceScene& scene, double sigma2, Index n, const ArrayGeometry& g);

} // namespace sparrow

#endif // SPARROW_BASELINES_HPP
