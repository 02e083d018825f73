#include <doctest.h>

#include <cmath>

#include <sparrow/model.hpp>

using namespace sparrow;

TEST_CASE("geometry validation")
{
    CHECK(ArrayGeometry::ula(4).is_ula());
    CHECK_THROWS_AS(ArrayGeometry::ula(1), InvalidArgument);
    ArrayGeometry g;
    g.positions = (RealVector(3) << 0.0, 2.0, 1.0).finished();
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g.positions = (RealVector(3) << 0.5, 1.0, 2.0).finished();
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g.positions = (RealVector(3) << 0.0, 1.0, 3.0).finished();
    CHECK_NOTHROW(g.validate());
    CHECK_FALSE(g.is_ula());
}

TEST_CASE("steering vectors")
{
    const auto g = ArrayGeometry::ula(3);
    CHECK((steering_vector(g, 0.0) - ComplexVector::Ones(3)).norm() < 1e-15);
    ComplexVector expect(3);
    expect << 1.0, Complex(0, -1), -1.0;
    CHECK((steering_vector(g, 0.5) - expect).norm() < 1e-15);

    ArrayGeometry sparse;
    sparse.positions = (RealVector(4) << 0.0, 1.0, 3.5, 7.0).finished();
    for (double nu : {-1.0, -0.3, 0.123, 0.9}) {
        const ComplexVector a = steering_vector(sparse, nu);
        CHECK(a.squaredNorm() == doctest::Approx(4.0));
        CHECK(a.cwiseAbs().minCoeff() == doctest::Approx(1.0));
        CHECK(a.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    }
}

TEST_CASE("steering matrices")
{
    const auto g = ArrayGeometry::ula(2);
    const ComplexMatrix one = steering_matrix(g, RealVector::Constant(1, 0.4));
    CHECK(one.cols() == 1);
    const ComplexMatrix a = steering_matrix(g, uniform_grid(4).points);
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 4);
    CHECK((a.row(0) - ComplexVector::Ones(4).transpose()).norm() < 1e-15);

    const ComplexMatrix v = steering_matrix(ArrayGeometry::ula(6), (RealVector(3) << -0.5, 0.1, 0.7).finished());
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(v);
    CHECK(qr.rank() == 3);
}

TEST_CASE("uniform grid")
{
    CHECK((uniform_grid(4).points - (RealVector(4) << -1, -0.5, 0, 0.5).finished()).norm() < 1e-15);
    CHECK((uniform_grid(2).points - (RealVector(2) << -1, 0).finished()).norm() < 1e-15);
    const auto big = uniform_grid(1000).points;
    CHECK(big(1) - big(0) == doctest::Approx(0.002));
    CHECK(big.maxCoeff() == doctest::Approx(0.998));
    CHECK_THROWS_AS(uniform_grid(0), InvalidArgument);
}

TEST_CASE("frequency helpers")
{
    CHECK(wrap_frequency(1.0) == doctest::Approx(-1.0));
    CHECK(wrap_frequency(1.25) == doctest::Approx(-0.75));
    CHECK(wrap_frequency(-1.25) == doctest::Approx(0.75));
    CHECK(wrap_frequency(0.3) == doctest::Approx(0.3));
    CHECK(angle_to_frequency(0.0) == doctest::Approx(1.0));
    CHECK(frequency_to_angle(angle_to_frequency(1.1)) == doctest::Approx(1.1));
}

TEST_CASE("noise-free single source gives rank one data")
{
    const auto g = ArrayGeometry::ula(5);
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, 0.25);
    sc.powers      = RealVector::Ones(1);
    const MmvBatch b = simulate_mmv(g, sc, 20, 0.0, 4);
    const ComplexVector a = steering_vector(g, 0.25);
    for (Index t = 0; t < b.snapshots(); ++t) {
        const Complex c = a.dot(b.y.col(t)) / 5.0;
        CHECK((b.y.col(t) - c * a).norm() < 1e-12 * (1.0 + b.y.col(t).norm()));
    }
    const RealVector ev = hermitian_eigenvalues(sample_covariance(b).r);
    CHECK(ev(1) < 1e-12 * ev(0));
}

TEST_CASE("simulation is deterministic and trial keyed")
{
    const auto g = ArrayGeometry::ula(4);
    SourceScene sc;
    sc.frequencies = (RealVector(2) << 0.1, -0.4).finished();
    sc.powers      = RealVector::Ones(2);
    const auto a = simulate_mmv(g, sc, 8, 0.3, 17, 2);
    const auto b = simulate_mmv(g, sc, 8, 0.3, 17, 2);
    const auto c = simulate_mmv(g, sc, 8, 0.3, 17, 3);
    CHECK(a.y == b.y);
    CHECK((a.y - c.y).norm() > 1e-3);
    REQUIRE(a.noise_power.has_value());
    CHECK(*a.noise_power == 0.3);
}

TEST_CASE("zero-power scene is pure noise with the requested power")
{
    const auto g = ArrayGeometry::ula(8);
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, 0.0);
    sc.powers      = RealVector::Zero(1);
    const MmvBatch b = simulate_mmv(g, sc, 2000, 0.7, 1);
    const double mean = b.y.squaredNorm() / static_cast<double>(b.y.size());
    CHECK(std::abs(mean - 0.7) < 0.05 * 0.7);
}

TEST_CASE("sample covariance")
{
    MmvBatch b;
    b.y = ComplexMatrix::Ones(2, 2);
    CHECK((sample_covariance(b).r - ComplexMatrix::Ones(2, 2)).norm() < 1e-15);

    b.y = std::sqrt(3.0) * ComplexMatrix::Identity(3, 3);
    CHECK(sample_covariance(b).r.trace().real() == doctest::Approx(3.0));

    SourceScene sc;
    sc.frequencies = (RealVector(2) << 0.2, 0.6).finished();
    sc.powers      = RealVector::Ones(2);
    const MmvBatch r = simulate_mmv(ArrayGeometry::ula(6), sc, 3, 0.5, 8);
    const auto cov   = sample_covariance(r);
    CHECK(cov.snapshots == 3);
    CHECK(hermitian_defect(cov.r) < 1e-15);
    CHECK(hermitian_eigenvalues(cov.r).minCoeff() > -1e-12);
}

TEST_CASE("sample covariance error decays with snapshots")
{
    const auto g = ArrayGeometry::ula(4);
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, 0.0);
    sc.powers      = RealVector::Zero(1);
    const ComplexMatrix id = ComplexMatrix::Identity(4, 4);
    auto err = [&](Index n) {
        double acc = 0.0;
        for (std::uint64_t t = 0; t < 20; ++t) {
            acc += (sample_covariance(simulate_mmv(g, sc, n, 1.0, 5, t)).r - id).norm() / id.norm();
        }
        return acc / 20.0;
    };
    const double e100   = err(100);
    const double e10000 = err(10000);
    // O(1/sqrt(N)) predicts a factor of 10
    CHECK(e100 / e10000 > 7.0);
    CHECK(e100 / e10000 < 14.0);
}

TEST_CASE("scene validation")
{
    SourceScene sc;
    sc.frequencies = (RealVector(2) << 0.2, 0.2).finished();
    sc.powers      = RealVector::Ones(2);
    CHECK_THROWS_AS(sc.validate(), InvalidArgument);
    sc.frequencies(1) = 0.3;
    sc.powers(0)      = -1.0;
    CHECK_THROWS_AS(sc.validate(), InvalidArgument);
    sc.powers(0) = 2.0;
    sc.powers(1) = 0.5;
    const HermitianMatrix c = sc.source_covariance();
    CHECK(c(0, 0).real() == doctest::Approx(2.0));
    CHECK(std::abs(c(0, 1)) < 1e-15);
    CHECK_THROWS_AS(simulate_mmv(ArrayGeometry::ula(3), sc, 0, 1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(simulate_mmv(ArrayGeometry::ula(3), sc, 5, -1.0, 1), InvalidArgument);
}
