#include <doctest.h>

#include <cmath>
#include <random>

#include <sparrow/baselines.hpp>
#include <sparrow/bench.hpp>

using namespace sparrow;

namespace
{

SampleCovariance noise_free(const RealVector& freqs, Index m)
{
    const ComplexMatrix a = steering_matrix(ArrayGeometry::ula(m), freqs);
    return SampleCovariance{a * a.adjoint(), 1};
}

MmvBatch scene_batch(std::uint64_t seed, Index n, double sigma2, Index m = 6)
{
    SourceScene sc;
    sc.frequencies = (RealVector(2) << -0.4, 0.3).finished();
    sc.powers      = RealVector::Ones(2);
    return simulate_mmv(ArrayGeometry::ula(m), sc, n, sigma2, seed);
}

} // namespace

TEST_CASE("l21: trivial minimizers")
{
    Dictionary d(ArrayGeometry::ula(4), uniform_grid(16));
    MmvBatch zero;
    zero.y = ComplexMatrix::Zero(4, 3);
    CHECK(l21_solve(d, zero, 0.5).x.norm() == 0.0);

    const MmvBatch y = scene_batch(2, 5, 0.2, 4);
    const double lam_max = (d.a.adjoint() * y.y).rowwise().norm().maxCoeff() / std::sqrt(5.0);
    const auto above     = l21_solve(d, y, 1.01 * lam_max);
    CHECK(above.x.norm() == 0.0);
    // first-order optimality of zero: every row gradient inside the lambda sqrt(N) ball
    CHECK((d.a.adjoint() * y.y).rowwise().norm().maxCoeff() <= 1.01 * lam_max * std::sqrt(5.0));
    CHECK(l21_solve(d, y, 0.9 * lam_max).x.norm() > 0.0);
}

TEST_CASE("l21: objective evaluation and agreement with SPARROW")
{
    Dictionary d(ArrayGeometry::ula(6), uniform_grid(24));
    const MmvBatch y  = scene_batch(5, 5, 0.3);
    const double lam  = select_lambda(0.3, 6);
    const auto sol    = l21_solve(d, y, lam);
    CHECK(sol.converged);
    CHECK(sol.objective == doctest::Approx(l21_objective(sol.x, d, y, lam)));
    const double direct = 0.5 * (d.a * sol.x - y.y).squaredNorm() + lam * std::sqrt(5.0) * sol.x.rowwise().norm().sum();
    CHECK(sol.objective == doctest::Approx(direct));
    const auto cd = sparrow_cd(d, sample_covariance(y), lam);
    CHECK((sol.x.rowwise().norm() / std::sqrt(5.0) - cd.s).cwiseAbs().maxCoeff() < 1e-4);
    // the SPARROW optimum maps to lambda N / 2 times its objective
    CHECK(sol.objective >= lam * 5.0 / 2.0 * cd.objective * (1.0 - 1e-6));
    CHECK(sol.objective <= lam * 5.0 / 2.0 * cd.objective * (1.0 + 1e-6));
}

TEST_CASE("MUSIC spectrum")
{
    const auto g = ArrayGeometry::ula(6);
    const FrequencyGrid grid = uniform_grid(400);
    const auto one = music_spectrum(noise_free(RealVector::Constant(1, 0.25), 6), 1, grid, g);
    REQUIRE(one.peaks.size() == 1);
    CHECK(one.peaks(0) == doctest::Approx(0.25));

    const auto flat = music_spectrum(SampleCovariance{ComplexMatrix::Identity(6, 6), 1}, 2, grid, g);
    CHECK(flat.spectrum.maxCoeff() - flat.spectrum.minCoeff() < 1e-9 * flat.spectrum.maxCoeff());
    const auto flat2 = music_spectrum(SampleCovariance{ComplexMatrix::Identity(6, 6), 1}, 2, grid, g);
    CHECK(flat.peaks == flat2.peaks);

    const auto two = music_spectrum(noise_free((RealVector(2) << -0.4, 0.3).finished(), 6), 2, grid, g);
    REQUIRE(two.peaks.size() == 2);
    RealVector pk = two.peaks;
    std::sort(pk.begin(), pk.end());
    CHECK(pk(0) == doctest::Approx(-0.4));
    CHECK(pk(1) == doctest::Approx(0.3));

    const auto r      = sample_covariance(scene_batch(3, 40, 0.5));
    const auto base   = music_spectrum(r, 2, grid, g);
    SampleCovariance scaled{r.r * 7.0, r.snapshots};
    const auto scaled_spec = music_spectrum(scaled, 2, grid, g);
    CHECK(base.peaks == scaled_spec.peaks);
    CHECK((scaled_spec.spectrum - base.spectrum).norm() < 1e-9 * base.spectrum.norm());
}

TEST_CASE("root-MUSIC")
{
    const auto g4 = ArrayGeometry::ula(4);
    const auto one = root_music(noise_free(RealVector::Constant(1, 0.25), 4), 1, g4);
    REQUIRE(one.frequencies.size() == 1);
    CHECK(std::abs(one.frequencies(0) - 0.25) < 1e-10);
    CHECK_FALSE(one.low_confidence);

    const auto g6 = ArrayGeometry::ula(6);
    const auto two = root_music(noise_free((RealVector(2) << -0.3, 0.3).finished(), 6), 2, g6);
    REQUIRE(two.frequencies.size() == 2);
    CHECK(std::abs(two.frequencies(0) + 0.3) < 1e-10);
    CHECK(std::abs(two.frequencies(1) - 0.3) < 1e-10);

    const auto white = root_music(SampleCovariance{ComplexMatrix::Identity(6, 6), 1}, 2, g6);
    CHECK(white.frequencies.size() == 2);
    CHECK(white.low_confidence);

    ArrayGeometry sparse;
    sparse.positions = (RealVector(3) << 0, 1, 3).finished();
    CHECK_THROWS_AS(root_music(SampleCovariance{ComplexMatrix::Identity(3, 3), 1}, 1, sparse), UnsupportedGeometry);
    CHECK_THROWS_AS(root_music(SampleCovariance{ComplexMatrix::Identity(6, 6), 1}, 6, g6), InvalidArgument);
}

TEST_CASE("SPICE, undersampled")
{
    Dictionary d(ArrayGeometry::ula(4), uniform_grid(16));
    const auto zero = spice_undersampled(d, SampleCovariance{ComplexMatrix::Zero(4, 4), 1});
    CHECK(zero.p.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(zero.epsilon) < 1e-6);

    // with a uniform grid A A^H is a multiple of I, so p = 0 is one optimum among many;
    // every optimum reproduces the isotropic covariance exactly
    const SampleCovariance half{0.5 * ComplexMatrix::Identity(4, 4), 1};
    const auto iso = spice_undersampled(d, half);
    CHECK(std::abs(iso.objective) < 1e-7);
    const ComplexMatrix r0_iso = d.a * iso.p.cast<Complex>().asDiagonal() * d.a.adjoint() +
                                 iso.epsilon * ComplexMatrix::Identity(4, 4);
    CHECK((r0_iso - half.r).norm() < 1e-5);
    for (double e : {0.3, 0.45, 0.5, 0.55, 0.8}) {
        CHECK(spice_objective(SpiceVariant::undersampled, RealVector::Zero(16), e, d, half) >= iso.objective - 1e-8);
    }
    CHECK(spice_objective(SpiceVariant::undersampled, RealVector::Zero(16), 0.5, d, half) == doctest::Approx(0.0));

    const auto r   = sample_covariance(scene_batch(4, 3, 0.3, 4));
    const auto sol = spice_undersampled(d, r);
    CHECK(sol.p.minCoeff() >= -1e-9);
    CHECK(sol.epsilon >= -1e-9);
    CHECK(sol.objective == doctest::Approx(spice_objective(SpiceVariant::undersampled, sol.p, sol.epsilon, d, r)).epsilon(1e-8));
    // trace penalty identity Tr(R0) = M (eps + sum p) on a ULA
    const ComplexMatrix r0 = d.a * sol.p.cast<Complex>().asDiagonal() * d.a.adjoint() +
                             sol.epsilon * ComplexMatrix::Identity(4, 4);
    CHECK(r0.trace().real() == doctest::Approx(4.0 * (sol.epsilon + sol.p.sum())));
}

TEST_CASE("SPICE, oversampled")
{
    Dictionary d(ArrayGeometry::ula(6), uniform_grid(60));
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, d.grid.points(41));
    sc.powers      = RealVector::Constant(1, 10.0);
    const auto r   = sample_covariance(simulate_mmv(d.geometry, sc, 500, 0.1, 6));
    const auto sol = spice_oversampled(d, r);
    Index arg      = 0;
    sol.p.maxCoeff(&arg);
    CHECK(arg == 41);
    CHECK(sol.objective == doctest::Approx(spice_objective(SpiceVariant::oversampled, sol.p, sol.epsilon, d, r)).epsilon(1e-8));

    // identity covariance: all weights a^H R^{-1} a equal M
    const ComplexMatrix rinv = ComplexMatrix::Identity(6, 6);
    for (Index k = 0; k < d.size(); ++k) {
        CHECK((d.a.col(k).adjoint() * rinv * d.a.col(k))(0).real() == doctest::Approx(6.0));
    }
    CHECK_THROWS_AS(spice_oversampled(d, SampleCovariance{ComplexMatrix::Zero(6, 6), 1}), InvalidArgument);
    CHECK(to_string(SpiceVariant::oversampled) == "oversampled");
}

TEST_CASE("stochastic CRB")
{
    SourceScene sc;
    sc.frequencies = (RealVector(2) << 0.35, 0.5).finished();
    sc.powers      = RealVector::Ones(2);
    const auto g   = ArrayGeometry::ula(6);
    const double s2 = std::pow(10.0, -0.3);
    const RealMatrix c100 = stochastic_crb(sc, s2, 100, g);
    const RealMatrix c200 = stochastic_crb(sc, s2, 200, g);
    CHECK((c100 - 2.0 * c200).norm() < 1e-12 * c100.norm());
    CHECK(std::sqrt(c100.trace() / 2.0) == doctest::Approx(0.01169).epsilon(0.01));
    CHECK(std::sqrt(stochastic_crb(sc, s2, 10000, g).trace() / 2.0) == doctest::Approx(0.001169).epsilon(0.01));
    CHECK(hermitian_eigenvalues(c100).minCoeff() > 0.0);
}
