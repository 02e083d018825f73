#ifndef SPARROW_MODEL_HPP
#define SPARROW_MODEL_HPP

#include <cstdint>
#include <optional>

#include <sparrow/numerics.hpp>

namespace sparrow
{

/// Sensor positions in half-wavelength units, first sensor at the origin.
struct ArrayGeometry
{
    RealVector positions;

    static ArrayGeometry ula(Index m);

    Index size() const { return positions.size(); }
    /// True when positions are 0, 1, ..., M-1.
    bool is_ula() const;
    /// Throws InvalidArgument when M < 2, positions[0] != 0 or not increasing.
    void validate() const;
};

struct SourceScene
{
    RealVector frequencies;                    ///< spatial frequencies in [-1, 1)
    RealVector powers;                         ///< nonnegative source powers
    std::optional<HermitianMatrix> correlation; ///< unit-diagonal correlation, identity if unset

    Index size() const { return frequencies.size(); }
    void validate() const;
    /// Source covariance diag(sqrt p) C diag(sqrt p).
    HermitianMatrix source_covariance() const;
};

struct MmvBatch
{
    ComplexMatrix y;                    ///< M x N
    std::optional<double> noise_power; ///< sigma^2 used to simulate, if known

    Index sensors() const { return y.rows(); }
    Index snapshots() const { return y.cols(); }
};

struct SampleCovariance
{
    HermitianMatrix r;
    Index snapshots = 0;

    Index dim() const { return r.rows(); }
};

struct FrequencyGrid
{
    RealVector points;

    Index size() const { return points.size(); }
};

ComplexVector steering_vector(const ArrayGeometry& g, double nu);
ComplexMatrix steering_matrix(const ArrayGeometry& g, const RealVector& freqs);

///
/// Y = A(mu) Psi + noise. Source rows of Psi are circular Gaussian with the
/// scene's source covariance, noise is i.i.d. CN(0, sigma2). Draws come from
/// a generator keyed by (seed, trial), so trials are order independent.
///
MmvBatch simulate_mmv(const ArrayGeometry& g, const SourceScene& scene, Index n, double sigma2,
                      std::uint64_t seed, std::uint64_t trial = 0);

SampleCovariance sample_covariance(const MmvBatch& b);

/// nu_k = -1 + 2k/K, k = 0..K-1.
FrequencyGrid uniform_grid(Index k);

/// Maps any real frequency into [-1, 1).
double wrap_frequency(double nu);

/// mu = cos(theta), theta in radians.
double angle_to_frequency(double theta);
double frequency_to_angle(double mu);

} // namespace sparrow

#endif // SPARROW_MODEL_HPP
