#include <sparrow/model.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace sparrow
{

ArrayGeometry ArrayGeometry::ula(Index m)
{
    if (m < 2) {
        throw InvalidArgument("ArrayGeometry::ula: need at least two sensors");
    }
    ArrayGeometry g;
    g.positions = RealVector::LinSpaced(m, 0.0, static_cast<double>(m - 1));
    return g;
}

bool ArrayGeometry::is_ula() const
{
    for (Index i = 0; i < positions.size(); ++i) {
        if (positions(i) != static_cast<double>(i)) {
            return false;
        }
    }
    return true;
}

void ArrayGeometry::validate() const
{
    if (positions.size() < 2) {
        throw InvalidArgument("ArrayGeometry: need at least two sensors");
    }
    if (!positions.allFinite()) {
        throw InvalidArgument("ArrayGeometry: non-finite position");
    }
    if (positions(0) != 0.0) {
        throw InvalidArgument("ArrayGeometry: first sensor must sit at position 0");
    }
    for (Index i = 1; i < positions.size(); ++i) {
        if (!(positions(i) > positions(i - 1))) {
            throw InvalidArgument("ArrayGeometry: positions must be strictly increasing");
        }
    }
}

void SourceScene::validate() const
{
    const Index l = frequencies.size();
    if (powers.size() != l) {
        throw InvalidArgument("SourceScene: frequencies and powers differ in length");
    }
    for (Index i = 0; i < l; ++i) {
        if (!std::isfinite(frequencies(i)) || frequencies(i) < -1.0 || frequencies(i) >= 1.0) {
            throw InvalidArgument("SourceScene: frequency outside [-1, 1)");
        }
        if (!std::isfinite(powers(i)) || powers(i) < 0.0) {
            throw InvalidArgument("SourceScene: powers must be nonnegative");
        }
        for (Index j = 0; j < i; ++j) {
            if (frequencies(i) == frequencies(j)) {
                throw InvalidArgument("SourceScene: frequencies must be distinct");
            }
        }
    }
    if (correlation) {
        const auto& c = *correlation;
        if (c.rows() != l || c.cols() != l) {
            throw InvalidArgument("SourceScene: correlation has wrong shape");
        }
        require_hermitian(c, "SourceScene correlation", 1e-10);
        if (l > 0) {
            const RealVector ev = hermitian_eigenvalues(c);
            if (ev(l - 1) < -1e-10 * std::max(1.0, ev(0))) {
                throw InvalidArgument("SourceScene: correlation is not positive semidefinite");
            }
        }
    }
}

HermitianMatrix SourceScene::source_covariance() const
{
    const Index l            = frequencies.size();
    const ComplexVector root = powers.cwiseSqrt().cast<Complex>();
    HermitianMatrix c        = correlation ? *correlation : HermitianMatrix::Identity(l, l);
    return root.asDiagonal() * c * root.asDiagonal();
}

ComplexVector steering_vector(const ArrayGeometry& g, double nu)
{
    const Index m = g.size();
    ComplexVector a(m);
    for (Index i = 0; i < m; ++i) {
        a(i) = std::polar(1.0, -std::numbers::pi * nu * g.positions(i));
    }
    return a;
}

ComplexMatrix steering_matrix(const ArrayGeometry& g, const RealVector& freqs)
{
    ComplexMatrix a(g.size(), freqs.size());
    for (Index k = 0; k < freqs.size(); ++k) {
        a.col(k) = steering_vector(g, freqs(k));
    }
    return a;
}

MmvBatch simulate_mmv(const ArrayGeometry& g, const SourceScene& scene, Index n, double sigma2,
                      std::uint64_t seed, std::uint64_t trial)
{
    g.validate();
    scene.validate();
    if (n < 1) {
        throw InvalidArgument("simulate_mmv: need at least one snapshot");
    }
    if (!(sigma2 >= 0.0)) {
        throw InvalidArgument("simulate_mmv: noise power must be nonnegative");
    }
    const Index m = g.size();
    const Index l = scene.size();

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    auto cn = [&]() {
        const double re = normal(rng);
        const double im = normal(rng);
        return Complex(re, im);
    };

    MmvBatch out;
    out.y           = ComplexMatrix::Zero(m, n);
    out.noise_power = sigma2;
    if (l > 0) {
        // Psi = C^{1/2} W with W i.i.d. CN(0, 1).
        const auto eig        = hermitian_eig(scene.source_covariance());
        const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
        const ComplexMatrix c_half = eig.vectors * root.cast<Complex>().asDiagonal();
        ComplexMatrix w(l, n);
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < l; ++i) {
                w(i, j) = cn();
            }
        }
        out.y = steering_matrix(g, scene.frequencies) * (c_half * w);
    }
    const double sd = std::sqrt(sigma2);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            out.y(i, j) += sd * cn();
        }
    }
    return out;
}

SampleCovariance sample_covariance(const MmvBatch& b)
{
    if (b.snapshots() < 1) {
        throw InvalidArgument("sample_covariance: empty batch");
    }
    SampleCovariance out;
    out.snapshots = b.snapshots();
    out.r         = b.y * b.y.adjoint() / static_cast<double>(b.snapshots());
    out.r         = (out.r + out.r.adjoint()) / 2;
    return out;
}

FrequencyGrid uniform_grid(Index k)
{
    if (k < 1) {
        throw InvalidArgument("uniform_grid: need at least one point");
    }
    FrequencyGrid grid;
    grid.points.resize(k);
    for (Index i = 0; i < k; ++i) {
        grid.points(i) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(k);
    }
    return grid;
}

double wrap_frequency(double nu)
{
    double w = std::fmod(nu + 1.0, 2.0);
    if (w < 0.0) {
        w += 2.0;
    }
    w -= 1.0;
    return w >= 1.0 ? -1.0 : w;
}

double angle_to_frequency(double theta) { return std::cos(theta); }

double frequency_to_angle(double mu)
{
    if (mu < -1.0 || mu > 1.0) {
        throw InvalidArgument("frequency_to_angle: frequency outside [-1, 1]");
    }
    return std::acos(mu);
}

} // namespace sparrow
