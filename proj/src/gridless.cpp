#include <sparrow/gridless.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

namespace sparrow
{

HermitianMatrix ToeplitzParam::matrix() const
{
    const Index m = u.size();
    HermitianMatrix t(m, m);
    for (Index q = 0; q < m; ++q) {
        for (Index p = q; p < m; ++p) {
            t(p, q) = u(p - q);
            t(q, p) = std::conj(u(p - q));
        }
    }
    for (Index p = 0; p < m; ++p) {
        t(p, p) = u(0).real();
    }
    return t;
}

ToeplitzParam toeplitz_from_atoms(const RealVector& freqs, const RealVector& mags, Index m)
{
    if (freqs.size() != mags.size()) {
        throw InvalidArgument("toeplitz_from_atoms: frequencies and magnitudes differ in length");
    }
    if (m < 1) {
        throw InvalidArgument("toeplitz_from_atoms: need M >= 1");
    }
    if ((mags.array() < 0.0).any()) {
        throw InvalidArgument("toeplitz_from_atoms: magnitudes must be nonnegative");
    }
    const ArrayGeometry g = ArrayGeometry::ula(std::max<Index>(m, 2));
    ToeplitzParam out;
    out.u = (steering_matrix(g, freqs) * mags.cast<Complex>()).head(m);
    out.u(0) = out.u(0).real();
    return out;
}

namespace
{

void require_ula(const ArrayGeometry& g, const char* what)
{
    g.validate();
    if (!g.is_ula()) {
        throw UnsupportedGeometry(std::string(what) + ": gridless solvers need a uniform linear array");
    }
}

// Variables: 0 -> Re u_0, 2m-1 -> Re u_m, 2m -> Im u_m.
void add_toeplitz_terms(conic::LmiBlock& blk, const conic::HermitianEmbedding& emb, Index offset,
                        Index m, Index first_var)
{
    for (Index p = 0; p < m; ++p) {
        emb.add_entry(blk.term(first_var), offset + p, offset + p, 1.0);
    }
    for (Index lag = 1; lag < m; ++lag) {
        for (Index q = 0; q + lag < m; ++q) {
            emb.add_entry(blk.term(first_var + 2 * lag - 1), offset + q + lag, offset + q, Complex(1.0, 0.0));
            emb.add_entry(blk.term(first_var + 2 * lag), offset + q + lag, offset + q, Complex(0.0, 1.0));
        }
    }
}

ToeplitzParam toeplitz_from_variables(const RealVector& x, Index m, Index first_var)
{
    ToeplitzParam out;
    out.u.resize(m);
    out.u(0) = x(first_var);
    for (Index lag = 1; lag < m; ++lag) {
        out.u(lag) = Complex(x(first_var + 2 * lag - 1), x(first_var + 2 * lag));
    }
    return out;
}

conic::LmiBlock toeplitz_psd_block(Index m)
{
    const conic::HermitianEmbedding emb(m);
    conic::LmiBlock blk(emb.real_dim());
    add_toeplitz_terms(blk, emb, 0, m, 0);
    return blk;
}

GridlessSolution solve_gridless(Index m, Index top, const ComplexMatrix& corner, double lambda,
                                double free_weight, const conic::Options& opts)
{
    if (!(lambda > 0.0)) {
        throw InvalidArgument("gl_sparrow: lambda must be positive");
    }
    const conic::HermitianEmbedding emb(top + m);
    conic::ConicProblem p;
    p.objective    = RealVector::Zero(2 * m - 1);
    p.objective(0) = 1.0; // Tr(Toep(u)) / M = u_0

    conic::LmiBlock blk(emb.real_dim());
    emb.add_dense(blk.constant, corner, top, 0);
    emb.add_dense(blk.constant, corner.adjoint(), 0, top);
    emb.add_dense(blk.constant, lambda * ComplexMatrix::Identity(m, m), top, top);
    add_toeplitz_terms(blk, emb, top, m, 0);
    blk.free_rows         = emb.rows(0, top);
    blk.free_trace_weight = free_weight;
    p.blocks.push_back(std::move(blk));
    p.blocks.push_back(toeplitz_psd_block(m));

    const auto sol = conic::solve_sdp(p, opts);
    if (!sol.usable(std::max(opts.tol * 1e3, 1e-6))) {
        throw NumericalError("gl_sparrow: conic solver failed (" + conic::to_string(sol.status) + ")");
    }
    GridlessSolution out;
    out.u          = toeplitz_from_variables(sol.x, m, 0);
    out.objective  = sol.objective_value;
    out.iterations = sol.iterations;
    out.converged  = sol.status == conic::Status::optimal;
    return out;
}

HermitianMatrix psd_sqrt(const HermitianMatrix& r)
{
    const auto eig        = hermitian_eig(r);
    const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
    HermitianMatrix out   = eig.vectors * root.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    return (out + out.adjoint()) / 2;
}

} // namespace

GridlessSolution gl_sparrow_snapshot(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                                     const conic::Options& opts)
{
    require_ula(g, "gl_sparrow_snapshot");
    if (y.sensors() != g.size()) {
        throw InvalidArgument("gl_sparrow_snapshot: batch does not match geometry");
    }
    const Index n = y.snapshots();
    return solve_gridless(g.size(), n, y.y, lambda, 0.5 / static_cast<double>(n), opts);
}

GridlessSolution gl_sparrow_covariance(const ArrayGeometry& g, const SampleCovariance& r,
                                       double lambda, const conic::Options& opts)
{
    require_ula(g, "gl_sparrow_covariance");
    if (r.dim() != g.size()) {
        throw InvalidArgument("gl_sparrow_covariance: covariance does not match geometry");
    }
    require_hermitian(r.r, "gl_sparrow_covariance", 1e-10);
    return solve_gridless(g.size(), g.size(), psd_sqrt(r.r), lambda, 0.5, opts);
}

GridlessSolution gl_sparrow(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                            const conic::Options& opts)
{
    if (y.snapshots() <= y.sensors()) {
        return gl_sparrow_snapshot(g, y, lambda, opts);
    }
    return gl_sparrow_covariance(g, sample_covariance(y), lambda, opts);
}

Index estimate_model_order(const ToeplitzParam& u, double eps_rank)
{
    if (u.dim() == 0) {
        return 0;
    }
    const RealVector ev = hermitian_eigenvalues(u.matrix());
    if (!(ev(0) > 0.0)) {
        return 0;
    }
    return (ev.array() > eps_rank * ev(0)).count();
}

AtomicDecomposition vandermonde_decomposition(const ToeplitzParam& u, Index rank)
{
    const Index m = u.dim();
    if (rank < 1) {
        throw InvalidArgument("vandermonde_decomposition: rank must be at least 1");
    }
    if (rank >= m) {
        throw DecompositionError("vandermonde_decomposition: rank M decomposition is not unique");
    }
    const HermitianMatrix t = u.matrix();
    const auto eig          = hermitian_eig(t);
    const ComplexMatrix e   = eig.vectors.leftCols(rank);

    // a(nu) rows obey a_{p+1} = z a_p with z = exp(-j pi nu).
    const ComplexMatrix e1  = e.topRows(m - 1);
    const ComplexMatrix e2  = e.bottomRows(m - 1);
    const ComplexMatrix phi = e1.colPivHouseholderQr().solve(e2);
    Eigen::ComplexEigenSolver<ComplexMatrix> ces(phi, false);
    if (ces.info() != Eigen::Success) {
        throw DecompositionError("vandermonde_decomposition: eigenvalue iteration failed");
    }
    RealVector freqs(rank);
    for (Index l = 0; l < rank; ++l) {
        freqs(l) = wrap_frequency(-std::arg(ces.eigenvalues()(l)) / std::numbers::pi);
    }
    std::sort(freqs.begin(), freqs.end());
    for (Index l = 1; l < rank; ++l) {
        if (freqs(l) == freqs(l - 1)) {
            throw DecompositionError("vandermonde_decomposition: repeated frequency");
        }
    }

    // Real magnitudes from the stacked system [Re A; Im A] s = [Re u; Im u].
    const ComplexMatrix a = steering_matrix(ArrayGeometry::ula(m), freqs);
    RealMatrix lhs(2 * m, rank);
    RealVector rhs(2 * m);
    lhs.topRows(m)    = a.real();
    lhs.bottomRows(m) = a.imag();
    rhs.head(m)       = u.u.real();
    rhs.tail(m)       = u.u.imag();
    RealVector mags   = lhs.colPivHouseholderQr().solve(rhs);

    const double scale = std::max(u.u.cwiseAbs().maxCoeff(), 1e-300);
    if (mags.minCoeff() < -1e-8 * scale) {
        throw DecompositionError("vandermonde_decomposition: negative magnitude");
    }
    const ToeplitzParam synth = toeplitz_from_atoms(freqs, mags.cwiseMax(0.0), m);
    const double residual     = (synth.matrix() - t).norm();
    if (residual > 1e-6 * std::max(t.norm(), 1e-300)) {
        throw DecompositionError("vandermonde_decomposition: Toeplitz matrix is not rank " +
                                 std::to_string(rank));
    }

    AtomicDecomposition out;
    out.frequencies = freqs;
    out.magnitudes  = mags.cwiseMax(0.0);
    return out;
}

AnmSolution anm_sdp(const ArrayGeometry& g, const MmvBatch& y, double lambda,
                    const conic::Options& opts)
{
    require_ula(g, "anm_sdp");
    if (!(lambda > 0.0)) {
        throw InvalidArgument("anm_sdp: lambda must be positive");
    }
    if (y.sensors() != g.size()) {
        throw InvalidArgument("anm_sdp: batch does not match geometry");
    }
    const Index m      = g.size();
    const Index n      = y.snapshots();
    const Index nv     = 2 * m - 1;
    const Index ny     = 2 * m * n;
    const Index t_var  = nv + ny;
    const double scale = lambda * std::sqrt(static_cast<double>(n)) / 2.0;
    auto y0_var        = [&](Index p, Index j) { return nv + 2 * (j * m + p); };

    conic::ConicProblem prob;
    prob.objective        = RealVector::Zero(nv + ny + 1);
    prob.objective(0)     = scale;
    prob.objective(t_var) = 1.0;

    // [[V_N, Y0^H], [Y0, Toep(v)]] >= 0
    const conic::HermitianEmbedding emb(n + m);
    conic::LmiBlock main(emb.real_dim());
    add_toeplitz_terms(main, emb, n, m, 0);
    for (Index j = 0; j < n; ++j) {
        for (Index p = 0; p < m; ++p) {
            emb.add_entry(main.term(y0_var(p, j)), n + p, j, Complex(1.0, 0.0));
            emb.add_entry(main.term(y0_var(p, j) + 1), n + p, j, Complex(0.0, 1.0));
        }
    }
    main.free_rows         = emb.rows(0, n);
    main.free_trace_weight = scale / 2.0;
    prob.blocks.push_back(std::move(main));

    // t >= ||Y - Y0||_F^2 / 2  as  [[t, r^T], [r, 2I]] >= 0
    conic::LmiBlock epi(ny + 1);
    epi.term(t_var).add_entry(0, 0, 1.0);
    for (Index j = 0; j < n; ++j) {
        for (Index p = 0; p < m; ++p) {
            const Index r = 1 + 2 * (j * m + p);
            epi.constant(0, r)     = epi.constant(r, 0)         = y.y(p, j).real();
            epi.constant(0, r + 1) = epi.constant(r + 1, 0)     = y.y(p, j).imag();
            epi.constant(r, r)     = epi.constant(r + 1, r + 1) = 2.0;
            epi.term(y0_var(p, j)).add_entry(0, r, -1.0);
            epi.term(y0_var(p, j) + 1).add_entry(0, r + 1, -1.0);
        }
    }
    prob.blocks.push_back(std::move(epi));

    const auto sol = conic::solve_sdp(prob, opts);
    if (!sol.usable(std::max(opts.tol * 1e3, 1e-6))) {
        throw NumericalError("anm_sdp: conic solver failed (" + conic::to_string(sol.status) + ")");
    }
    AnmSolution out;
    out.v = toeplitz_from_variables(sol.x, m, 0);
    out.y0.resize(m, n);
    for (Index j = 0; j < n; ++j) {
        for (Index p = 0; p < m; ++p) {
            out.y0(p, j) = Complex(sol.x(y0_var(p, j)), sol.x(y0_var(p, j) + 1));
        }
    }
    out.v_n         = conic::unembed_hermitian(sol.free_blocks[0]);
    out.atomic_norm = (out.v_n.trace().real() + out.v.u(0).real()) / 2.0;
    out.objective   = 0.5 * (y.y - out.y0).squaredNorm() + lambda * std::sqrt(static_cast<double>(n)) * out.atomic_norm;
    out.iterations  = sol.iterations;
    out.converged   = sol.status == conic::Status::optimal;
    return out;
}

EquivalenceReport check_anm_equivalence(const GridlessSolution& gl, const AnmSolution& anm, Index n,
                                        double lambda, double tol)
{
    if (n < 1) {
        throw InvalidArgument("check_anm_equivalence: need N >= 1");
    }
    if (gl.u.dim() != anm.v.dim()) {
        throw InvalidArgument("check_anm_equivalence: dimension mismatch");
    }
    const double root = std::sqrt(static_cast<double>(n));
    EquivalenceReport rep;
    rep.u_deviation = (gl.u.u - anm.v.u / root).cwiseAbs().maxCoeff();
    const double scaled = gl.objective * lambda * static_cast<double>(n) / 2.0;
    const double denom  = std::max({std::abs(scaled), std::abs(anm.objective), 1e-14});
    rep.objective_deviation = std::abs(scaled - anm.objective) / denom;
    rep.passed              = rep.u_deviation <= tol && rep.objective_deviation <= tol;
    return rep;
}

} // namespace sparrow
