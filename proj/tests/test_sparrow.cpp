#include <doctest.h>

#include <cmath>
#include <random>

#include <sparrow/baselines.hpp>
#include <sparrow/sparrow.hpp>

using namespace sparrow;

namespace
{

struct Instance
{
    Dictionary d;
    MmvBatch y;
    SampleCovariance r;
    double lambda;
};

Instance random_instance(std::uint64_t seed, Index m, Index k, Index n)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, k - 1);
    Instance in;
    in.d = Dictionary(ArrayGeometry::ula(m), uniform_grid(k));
    SourceScene sc;
    Index i = pick(rng), j = pick(rng);
    while (j == i) {
        j = pick(rng);
    }
    sc.frequencies = (RealVector(2) << in.d.grid.points(i), in.d.grid.points(j)).finished();
    sc.powers      = RealVector::Ones(2);
    in.y           = simulate_mmv(in.d.geometry, sc, n, 0.3, seed);
    in.r           = sample_covariance(in.y);
    in.lambda      = select_lambda(0.3, m);
    return in;
}

double dense_objective(const RealVector& s, const Dictionary& d, const SampleCovariance& r, double lambda)
{
    const ComplexMatrix u = d.a * s.cast<Complex>().asDiagonal() * d.a.adjoint() +
                            lambda * ComplexMatrix::Identity(d.sensors(), d.sensors());
    return (u.inverse() * r.r).trace().real() + s.sum();
}

} // namespace

TEST_CASE("lambda heuristic uses the natural log")
{
    CHECK(select_lambda(0.0, 6) == 0.0);
    CHECK(select_lambda(1.0, 6) == doctest::Approx(std::sqrt(6.0 * std::log(6.0))));
    CHECK(select_lambda(1.0, 6) == doctest::Approx(3.2787).epsilon(1e-4));
    CHECK(select_lambda(4.0, 6) == doctest::Approx(2.0 * select_lambda(1.0, 6)));
    CHECK_THROWS_AS(select_lambda(-1.0, 6), InvalidArgument);
}

TEST_CASE("objective closed forms and dense oracle")
{
    const auto in = random_instance(3, 5, 16, 7);
    CHECK(sparrow_objective(RealVector::Zero(16), in.d, in.r, 0.7) ==
          doctest::Approx(in.r.r.trace().real() / 0.7));
    SampleCovariance zero{ComplexMatrix::Zero(5, 5), 1};
    RealVector s = RealVector::LinSpaced(16, 0.0, 1.5);
    CHECK(sparrow_objective(s, in.d, zero, 0.7) == doctest::Approx(s.sum()));
    CHECK(sparrow_objective(s, in.d, in.r, 0.7) == doctest::Approx(dense_objective(s, in.d, in.r, 0.7)));
    s(3) = -1.0;
    CHECK_THROWS_AS(sparrow_objective(s, in.d, in.r, 0.7), InvalidArgument);
}

TEST_CASE("coordinate descent one-dimensional closed form")
{
    Dictionary d(ArrayGeometry::ula(2), FrequencyGrid{RealVector::Zero(1)});
    SampleCovariance r{ComplexMatrix::Identity(2, 2), 1};
    auto sol = sparrow_cd(d, r, 1.0);
    CHECK(sol.s(0) == doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0).epsilon(1e-10));
    sol = sparrow_cd(d, r, std::sqrt(2.0) + 0.1);
    CHECK(sol.s(0) == 0.0);
}

TEST_CASE("coordinate descent is monotone at every update")
{
    const auto in = random_instance(21, 6, 24, 5);
    CdOptions opts;
    double last  = sparrow_objective(RealVector::Zero(24), in.d, in.r, in.lambda);
    double worst = 0.0;
    int updates  = 0;
    opts.on_update = [&](int, Index, const RealVector& s) {
        const double f = sparrow_objective(s, in.d, in.r, in.lambda);
        worst          = std::max(worst, (f - last) / (1.0 + std::abs(last)));
        last           = f;
        ++updates;
    };
    const auto sol = sparrow_cd(in.d, in.r, in.lambda, opts);
    CHECK(sol.converged);
    CHECK(updates > 24);
    CHECK(worst <= 1e-12);
}

TEST_CASE("CD, covariance SDP and snapshot SDP agree")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Index n = seed == 1 ? 3 : 12;
        const auto in = random_instance(seed, 6, 20, n);
        const auto cd  = sparrow_cd(in.d, in.r, in.lambda);
        const auto cov = sparrow_sdp_covariance(in.d, in.r, in.lambda);
        const auto snp = sparrow_sdp_snapshot(in.d, in.y, in.lambda);
        CHECK(std::abs(cd.objective - cov.objective) <= 1e-6 * (1.0 + cov.objective));
        CHECK(std::abs(snp.objective - cov.objective) <= 1e-6 * (1.0 + cov.objective));
        CHECK((cd.s - cov.s).cwiseAbs().maxCoeff() <= 1e-4);
        CHECK((snp.s - cov.s).cwiseAbs().maxCoeff() <= 1e-5);
        CHECK(cov.s.minCoeff() >= 0.0);
        CHECK(sparrow_sdp(in.d, in.y, in.lambda).solver ==
              (n <= 6 ? SparrowMethod::sdp_snapshot : SparrowMethod::sdp_covariance));
    }
}

TEST_CASE("zero data gives zero row norms")
{
    Dictionary d(ArrayGeometry::ula(4), uniform_grid(12));
    MmvBatch y;
    y.y = ComplexMatrix::Zero(4, 3);
    CHECK(sparrow_cd(d, sample_covariance(y), 0.5).s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sparrow_sdp_snapshot(d, y, 0.5).s.cwiseAbs().maxCoeff() < 1e-7);
    CHECK(sparrow_sdp_covariance(d, sample_covariance(y), 0.5).s.cwiseAbs().maxCoeff() < 1e-7);
    CHECK(reconstruct_signal(RealVector::Zero(12), d, y, 0.5).norm() == 0.0);
}

TEST_CASE("covariance form only sees the sample covariance")
{
    const auto in = random_instance(7, 5, 16, 4);
    SampleCovariance big = in.r;
    big.snapshots        = 1000;
    const auto a = sparrow_sdp_covariance(in.d, in.r, in.lambda);
    const auto b = sparrow_sdp_covariance(in.d, big, in.lambda);
    CHECK((a.s - b.s).norm() == 0.0);
}

TEST_CASE("reconstruction satisfies the row-norm identity and matches the l21 minimizer")
{
    const auto in  = random_instance(11, 6, 24, 5);
    const auto cd  = sparrow_cd(in.d, in.r, in.lambda);
    const ComplexMatrix x = reconstruct_signal(cd.s, in.d, in.y, in.lambda);
    const RealVector rows = x.rowwise().norm() / std::sqrt(5.0);
    for (Index k = 0; k < 24; ++k) {
        CHECK(std::abs(rows(k) - cd.s(k)) <= 1e-6 * std::max(cd.s(k), 1e-3));
    }
    const auto l21 = l21_solve(in.d, in.y, in.lambda);
    CHECK((x - l21.x).norm() / l21.x.norm() < 1e-3);
    CHECK((l21.x.rowwise().norm() / std::sqrt(5.0) - cd.s).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("solutions scale with the data and lambda")
{
    const auto in = random_instance(13, 6, 20, 6);
    MmvBatch scaled = in.y;
    scaled.y *= 3.0;
    const auto a = sparrow_cd(in.d, in.r, in.lambda);
    const auto b = sparrow_cd(in.d, sample_covariance(scaled), 3.0 * in.lambda);
    CHECK((b.s - 3.0 * a.s).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + 3.0 * a.s.maxCoeff()));
    const ComplexMatrix xa = reconstruct_signal(a.s, in.d, in.y, in.lambda);
    const ComplexMatrix xb = reconstruct_signal(b.s, in.d, scaled, 3.0 * in.lambda);
    CHECK((xb - 3.0 * xa).norm() <= 1e-8 * (1.0 + xb.norm()));
}

TEST_CASE("noise-free on-grid source is recovered exactly")
{
    Dictionary d(ArrayGeometry::ula(6), uniform_grid(32));
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, d.grid.points(20));
    sc.powers      = RealVector::Ones(1);
    const MmvBatch y = simulate_mmv(d.geometry, sc, 4, 0.0, 2);
    const auto snp   = sparrow_sdp_snapshot(d, y, 1e-3);
    CHECK(support_from_s(snp.s, d.grid).indices == std::vector<Index>{20});
    const auto cd = sparrow_cd(d, sample_covariance(y), 1e-3);
    CHECK(support_from_s(cd.s, d.grid).indices == std::vector<Index>{20});
}

TEST_CASE("support and peak extraction")
{
    const FrequencyGrid grid = uniform_grid(8);
    CHECK(support_from_s(RealVector::Zero(8), grid).indices.empty());
    RealVector s = RealVector::Constant(8, 1e-9);
    s(5)         = 1.0;
    CHECK(support_from_s(s, grid, 1e-3).indices == std::vector<Index>{5});
    s(2) = 1.0;
    const auto sup = support_from_s(s, grid);
    CHECK(sup.indices == std::vector<Index>{2, 5});
    CHECK(sup.frequencies(0) == doctest::Approx(grid.points(2)));

    RealVector p = RealVector::Zero(8);
    p(0) = 0.5;
    p(1) = 0.2;
    p(7) = 0.3; // wraps around to index 0
    p(4) = 0.4;
    CHECK(peaks_from_s(p, grid).indices == std::vector<Index>{0, 4});
}

TEST_CASE("argument checks")
{
    const auto in = random_instance(5, 4, 8, 3);
    CHECK_THROWS_AS(sparrow_cd(in.d, in.r, 0.0), InvalidArgument);
    SampleCovariance wrong{ComplexMatrix::Identity(3, 3), 1};
    CHECK_THROWS_AS(sparrow_cd(in.d, wrong, 1.0), InvalidArgument);
    CdOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(sparrow_cd(in.d, in.r, 1.0, bad), InvalidArgument);
    CHECK(to_string(SparrowMethod::sdp_covariance) == "sdp_covariance");
}
