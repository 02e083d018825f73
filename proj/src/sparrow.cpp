#include <sparrow/sparrow.hpp>

#include <algorithm>
#include <cmath>

namespace sparrow
{

Dictionary::Dictionary(ArrayGeometry g, FrequencyGrid gr) : geometry(std::move(g)), grid(std::move(gr))
{
    geometry.validate();
    if (grid.size() < 1) {
        throw InvalidArgument("Dictionary: empty grid");
    }
    a = steering_matrix(geometry, grid.points);
}

std::string to_string(SparrowMethod m)
{
    switch (m) {
    case SparrowMethod::cd:
        return "cd";
    case SparrowMethod::sdp_snapshot:
        return "sdp_snapshot";
    case SparrowMethod::sdp_covariance:
        return "sdp_covariance";
    }
    return "unknown";
}

double select_lambda(double sigma2, Index m)
{
    if (!(sigma2 >= 0.0)) {
        throw InvalidArgument("select_lambda: noise power must be nonnegative");
    }
    if (m < 2) {
        throw InvalidArgument("select_lambda: need M >= 2");
    }
    const double md = static_cast<double>(m);
    return std::sqrt(sigma2 * md * std::log(md));
}

namespace
{

void check_inputs(const Dictionary& d, const HermitianMatrix& r, double lambda, const char* what)
{
    if (!(lambda > 0.0)) {
        throw InvalidArgument(std::string(what) + ": lambda must be positive");
    }
    if (r.rows() != d.sensors() || r.cols() != d.sensors()) {
        throw InvalidArgument(std::string(what) + ": covariance does not match dictionary");
    }
}

HermitianMatrix model_covariance(const RealVector& s, const ComplexMatrix& a, double lambda)
{
    HermitianMatrix u = a * s.cast<Complex>().asDiagonal() * a.adjoint();
    u.diagonal().array() += lambda;
    return (u + u.adjoint()) / 2;
}

ComplexMatrix inverse_hpd(const HermitianMatrix& u)
{
    return solve_hpd(u, ComplexMatrix::Identity(u.rows(), u.cols()));
}

// Nonnegative square root of a PSD Hermitian matrix.
HermitianMatrix psd_sqrt(const HermitianMatrix& r)
{
    const auto eig        = hermitian_eig(r);
    const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
    HermitianMatrix out   = eig.vectors * root.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    return (out + out.adjoint()) / 2;
}

SparrowSolution finish_sdp(const conic::ConicSolution& sol, const Dictionary& d, SparrowMethod m,
                           double tol)
{
    if (!sol.usable(std::max(tol * 1e3, 1e-6))) {
        throw NumericalError("SPARROW SDP: conic solver failed (" + conic::to_string(sol.status) + ")");
    }
    SparrowSolution out;
    out.solver    = m;
    out.s         = sol.x.head(d.size()).cwiseMax(0.0);
    out.objective = sol.objective_value;
    out.sweeps    = sol.iterations;
    out.converged = sol.status == conic::Status::optimal;
    out.support   = support_from_s(out.s, d.grid).indices;
    return out;
}

// Common part of both SDP forms: block of complex size top + M with the free
// block on the first `top` rows and A S A^H + lambda I in the lower corner.
conic::ConicProblem build_grid_sdp(const Dictionary& d, Index top, const ComplexMatrix& corner,
                                   double lambda, double free_weight)
{
    const Index m = d.sensors();
    const Index k = d.size();
    const conic::HermitianEmbedding emb(top + m);

    conic::ConicProblem p;
    p.objective = RealVector::Ones(k);
    conic::LmiBlock blk(emb.real_dim());
    emb.add_dense(blk.constant, corner, top, 0);
    emb.add_dense(blk.constant, corner.adjoint(), 0, top);
    emb.add_dense(blk.constant, lambda * ComplexMatrix::Identity(m, m), top, top);
    for (Index i = 0; i < k; ++i) {
        emb.add_outer(blk.term(i), d.a.col(i), top, 1.0);
        p.nonneg.push_back(i);
    }
    blk.free_rows         = emb.rows(0, top);
    blk.free_trace_weight = free_weight;
    p.blocks.push_back(std::move(blk));
    return p;
}

} // namespace

double sparrow_objective(const RealVector& s, const Dictionary& d, const SampleCovariance& r,
                         double lambda)
{
    check_inputs(d, r.r, lambda, "sparrow_objective");
    if (s.size() != d.size()) {
        throw InvalidArgument("sparrow_objective: s has wrong length");
    }
    if (s.size() > 0 && !(s.minCoeff() >= 0.0)) {
        throw InvalidArgument("sparrow_objective: s must be nonnegative");
    }
    const HermitianMatrix u = model_covariance(s, d.a, lambda);
    const ComplexMatrix x   = solve_hpd(u, r.r);
    return x.trace().real() + s.sum();
}

SparrowSolution sparrow_cd(const Dictionary& d, const SampleCovariance& r, double lambda,
                           const CdOptions& opts)
{
    check_inputs(d, r.r, lambda, "sparrow_cd");
    if (!(opts.tol > 0.0)) {
        throw InvalidArgument("sparrow_cd: tol must be positive");
    }
    const Index m = d.sensors();
    const Index k = d.size();

    RealVector s         = RealVector::Zero(k);
    ComplexMatrix u_inv  = ComplexMatrix::Identity(m, m) / lambda;
    std::vector<int> idle(k, 0);
    bool full_check      = false;
    bool converged       = false;
    int sweep            = 0;

    while (sweep < opts.max_sweeps) {
        ++sweep;
        const bool full = !opts.prune_zeros || full_check;
        double max_change = 0.0;
        for (Index i = 0; i < k; ++i) {
            if (!full && idle[i] >= 3) {
                continue;
            }
            const auto a           = d.a.col(i);
            const ComplexVector q  = u_inv * a;
            const double b         = a.dot(q).real();
            const double c         = std::max(q.dot(r.r * q).real(), 0.0);
            const double step      = std::max((std::sqrt(c) - 1.0) / b, -s(i));
            if (step != 0.0) {
                u_inv -= (step / (1.0 + step * b)) * (q * q.adjoint());
                s(i) += step;
                if (s(i) < 0.0) {
                    s(i) = 0.0;
                }
                max_change = std::max(max_change, std::abs(step));
            }
            idle[i] = s(i) == 0.0 ? idle[i] + 1 : 0;
            if (opts.on_update) {
                opts.on_update(sweep, i, s);
            }
        }
        if (opts.refactor_every > 0 && sweep % opts.refactor_every == 0) {
            u_inv = inverse_hpd(model_covariance(s, d.a, lambda));
        }
        const double threshold = opts.tol * (1.0 + s.maxCoeff());
        if (max_change < threshold) {
            if (full) {
                converged = true;
                break;
            }
            full_check = true;
            continue;
        }
        if (full_check) {
            std::fill(idle.begin(), idle.end(), 0);
        }
        full_check = false;
    }

    SparrowSolution out;
    out.solver    = SparrowMethod::cd;
    out.s         = s;
    out.objective = sparrow_objective(s, d, r, lambda);
    out.sweeps    = sweep;
    out.converged = converged;
    out.support   = support_from_s(s, d.grid).indices;
    return out;
}

SparrowSolution sparrow_sdp_snapshot(const Dictionary& d, const MmvBatch& y, double lambda,
                                     const conic::Options& opts)
{
    if (!(lambda > 0.0)) {
        throw InvalidArgument("sparrow_sdp_snapshot: lambda must be positive");
    }
    if (y.sensors() != d.sensors()) {
        throw InvalidArgument("sparrow_sdp_snapshot: batch does not match dictionary");
    }
    const Index n = y.snapshots();
    // The embedded free block carries each complex trace twice.
    const auto p = build_grid_sdp(d, n, y.y, lambda, 0.5 / static_cast<double>(n));
    return finish_sdp(conic::solve_sdp(p, opts), d, SparrowMethod::sdp_snapshot, opts.tol);
}

SparrowSolution sparrow_sdp_covariance(const Dictionary& d, const SampleCovariance& r, double lambda,
                                       const conic::Options& opts)
{
    check_inputs(d, r.r, lambda, "sparrow_sdp_covariance");
    require_hermitian(r.r, "sparrow_sdp_covariance", 1e-10);
    // Tr(U R) over U >= (A S A^H + lambda I)^{-1} equals Tr(W) over
    // [[W, R^{1/2}], [R^{1/2}, A S A^H + lambda I]] >= 0.
    const auto p = build_grid_sdp(d, d.sensors(), psd_sqrt(r.r), lambda, 0.5);
    return finish_sdp(conic::solve_sdp(p, opts), d, SparrowMethod::sdp_covariance, opts.tol);
}

SparrowSolution sparrow_sdp(const Dictionary& d, const MmvBatch& y, double lambda,
                            const conic::Options& opts)
{
    if (y.snapshots() <= y.sensors()) {
        return sparrow_sdp_snapshot(d, y, lambda, opts);
    }
    return sparrow_sdp_covariance(d, sample_covariance(y), lambda, opts);
}

ComplexMatrix reconstruct_signal(const RealVector& s, const Dictionary& d, const MmvBatch& y,
                                 double lambda)
{
    if (!(lambda > 0.0)) {
        throw InvalidArgument("reconstruct_signal: lambda must be positive");
    }
    if (s.size() != d.size() || y.sensors() != d.sensors()) {
        throw InvalidArgument("reconstruct_signal: dimension mismatch");
    }
    if ((s.array() < 0.0).any()) {
        throw InvalidArgument("reconstruct_signal: s must be nonnegative");
    }
    const ComplexMatrix z = solve_hpd(model_covariance(s, d.a, lambda), y.y);
    return s.cast<Complex>().asDiagonal() * (d.a.adjoint() * z);
}

Support support_from_s(const RealVector& s, const FrequencyGrid& grid, double delta_rel)
{
    if (!(delta_rel > 0.0 && delta_rel < 1.0)) {
        throw InvalidArgument("support_from_s: delta_rel must lie in (0, 1)");
    }
    if (s.size() != grid.size()) {
        throw InvalidArgument("support_from_s: s and grid differ in length");
    }
    Support out;
    if (s.size() == 0) {
        return out;
    }
    const double top = s.maxCoeff();
    if (!(top > 0.0)) {
        out.frequencies.resize(0);
        return out;
    }
    for (Index k = 0; k < s.size(); ++k) {
        if (s(k) > delta_rel * top) {
            out.indices.push_back(k);
        }
    }
    out.frequencies = grid.points(out.indices);
    return out;
}

Support peaks_from_s(const RealVector& s, const FrequencyGrid& grid, double delta_rel)
{
    const Support all = support_from_s(s, grid, delta_rel);
    Support out;
    const Index k = s.size();
    for (Index i : all.indices) {
        const double left  = s((i + k - 1) % k);
        const double right = s((i + 1) % k);
        // ties on a plateau go to the leftmost point
        if (s(i) > left && s(i) >= right) {
            out.indices.push_back(i);
        } else if (k == 1) {
            out.indices.push_back(i);
        }
    }
    out.frequencies = grid.points(out.indices);
    return out;
}

} // namespace sparrow
