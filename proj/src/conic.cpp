#include <sparrow/conic.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparrow::conic
{

// --------------------------------------------------------------------------
// SymmetricTerm / LmiBlock / ConicProblem
// --------------------------------------------------------------------------

void SymmetricTerm::add_entry(Index row, Index col, double value)
{
    if (value == 0.0) {
        return;
    }
    if (row > col) {
        std::swap(row, col);
    }
    entries.push_back({row, col, value});
}

void SymmetricTerm::add_rank_one(const RealVector& v, double weight)
{
    const Index r = factors.cols();
    if (r == 0) {
        factors.resize(v.size(), 1);
        weights.resize(1);
    } else {
        if (factors.rows() != v.size()) {
            throw InvalidArgument("SymmetricTerm::add_rank_one: vector length mismatch");
        }
        factors.conservativeResize(Eigen::NoChange, r + 1);
        weights.conservativeResize(r + 1);
    }
    factors.col(r) = v;
    weights(r)     = weight;
}

void SymmetricTerm::accumulate(RealMatrix& out, double scale) const
{
    for (const auto& e : entries) {
        out(e.row, e.col) += scale * e.value;
        if (e.row != e.col) {
            out(e.col, e.row) += scale * e.value;
        }
    }
    if (factors.cols() > 0) {
        out.noalias() += scale * factors * weights.asDiagonal() * factors.transpose();
    }
}

double SymmetricTerm::inner(const RealMatrix& x) const
{
    double acc = 0.0;
    for (const auto& e : entries) {
        acc += (e.row == e.col ? 1.0 : 2.0) * e.value * x(e.row, e.col);
    }
    for (Index r = 0; r < factors.cols(); ++r) {
        acc += weights(r) * factors.col(r).dot(x * factors.col(r));
    }
    return acc;
}

SymmetricTerm& LmiBlock::term(Index variable)
{
    for (auto& t : terms) {
        if (t.variable == variable) {
            return t;
        }
    }
    terms.emplace_back();
    terms.back().variable = variable;
    return terms.back();
}

void ConicProblem::validate() const
{
    const Index m = num_variables();
    for (const auto& blk : blocks) {
        if (blk.constant.rows() != blk.dim || blk.constant.cols() != blk.dim) {
            throw InvalidArgument("ConicProblem: block constant has wrong shape");
        }
        if ((blk.constant - blk.constant.transpose()).norm() >
            1e-12 * std::max(1.0, blk.constant.norm())) {
            throw InvalidArgument("ConicProblem: block constant is not symmetric");
        }
        for (const auto& t : blk.terms) {
            if (t.variable < 0 || t.variable >= m) {
                throw InvalidArgument("ConicProblem: term refers to unknown variable");
            }
            for (const auto& e : t.entries) {
                if (e.row < 0 || e.col < 0 || e.row >= blk.dim || e.col >= blk.dim) {
                    throw InvalidArgument("ConicProblem: term entry out of range");
                }
            }
            if (t.factors.cols() > 0 && t.factors.rows() != blk.dim) {
                throw InvalidArgument("ConicProblem: low-rank factor has wrong length");
            }
            if (t.factors.cols() != t.weights.size()) {
                throw InvalidArgument("ConicProblem: low-rank weights mismatch");
            }
        }
        std::vector<Index> sorted = blk.free_rows;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw InvalidArgument("ConicProblem: duplicate free rows");
        }
        for (Index r : sorted) {
            if (r < 0 || r >= blk.dim) {
                throw InvalidArgument("ConicProblem: free row out of range");
            }
        }
    }
    for (Index i : nonneg) {
        if (i < 0 || i >= m) {
            throw InvalidArgument("ConicProblem: nonneg index out of range");
        }
    }
}

std::string to_string(Status s)
{
    switch (s) {
    case Status::optimal:
        return "optimal";
    case Status::max_iter:
        return "max_iter";
    case Status::infeasible:
        return "infeasible";
    }
    return "unknown";
}

bool ConicSolution::usable(double tol) const
{
    if (status == Status::infeasible) {
        return false;
    }
    return status == Status::optimal ||
           (duality_gap <= tol && primal_infeasibility <= tol && dual_infeasibility <= tol);
}

RealMatrix evaluate_block(const LmiBlock& block, const RealVector& x, const RealMatrix& free_block)
{
    RealMatrix out = block.constant;
    for (const auto& t : block.terms) {
        t.accumulate(out, x(t.variable));
    }
    if (!block.free_rows.empty() && free_block.size() > 0) {
        out(block.free_rows, block.free_rows) += free_block;
    }
    return out;
}

// --------------------------------------------------------------------------
// Hermitian embedding
// --------------------------------------------------------------------------

RealMatrix embed_hermitian(const HermitianMatrix& h)
{
    require_hermitian(h, "embed_hermitian", 1e-10);
    const Index n  = h.rows();
    RealMatrix out(2 * n, 2 * n);
    out.topLeftCorner(n, n)     = h.real();
    out.topRightCorner(n, n)    = -h.imag();
    out.bottomLeftCorner(n, n)  = h.imag();
    out.bottomRightCorner(n, n) = h.real();
    return out;
}

HermitianMatrix unembed_hermitian(const RealMatrix& e)
{
    const Index n = e.rows() / 2;
    const RealMatrix re = (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n)) / 2;
    const RealMatrix im = (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n)) / 2;
    HermitianMatrix h(n, n);
    h.real() = re;
    h.imag() = im;
    return (h + h.adjoint()) / 2;
}

void HermitianEmbedding::add_entry(SymmetricTerm& term, Index p, Index q, Complex h) const
{
    if (p == q) {
        term.add_entry(p, p, h.real());
        term.add_entry(n_ + p, n_ + p, h.real());
        return;
    }
    // Each call below sets a symmetric pair of real entries.
    term.add_entry(p, q, h.real());
    term.add_entry(n_ + p, n_ + q, h.real());
    term.add_entry(n_ + p, q, h.imag());
    term.add_entry(p, n_ + q, -h.imag());
}

void HermitianEmbedding::add_outer(SymmetricTerm& term, const ComplexVector& a, Index offset,
                                   double weight) const
{
    RealVector u = RealVector::Zero(2 * n_);
    RealVector w = RealVector::Zero(2 * n_);
    const Index len = a.size();
    u.segment(offset, len)      = a.real();
    u.segment(n_ + offset, len) = a.imag();
    w.segment(offset, len)      = -a.imag();
    w.segment(n_ + offset, len) = a.real();
    term.add_rank_one(u, weight);
    term.add_rank_one(w, weight);
}

void HermitianEmbedding::add_dense(RealMatrix& out, const ComplexMatrix& h, Index row_offset,
                                   Index col_offset) const
{
    const Index r = h.rows();
    const Index c = h.cols();
    out.block(row_offset, col_offset, r, c) += h.real();
    out.block(n_ + row_offset, n_ + col_offset, r, c) += h.real();
    out.block(n_ + row_offset, col_offset, r, c) += h.imag();
    out.block(row_offset, n_ + col_offset, r, c) -= h.imag();
}

std::vector<Index> HermitianEmbedding::rows(Index offset, Index count) const
{
    std::vector<Index> out;
    out.reserve(2 * count);
    for (Index i = 0; i < count; ++i) {
        out.push_back(offset + i);
    }
    for (Index i = 0; i < count; ++i) {
        out.push_back(n_ + offset + i);
    }
    return out;
}

// --------------------------------------------------------------------------
// Interior point solver
// --------------------------------------------------------------------------

namespace
{

struct FullEntry
{
    Index row;
    Index col;
    double value;
};

struct SparseTerm
{
    Index variable;
    std::vector<FullEntry> entries; // both triangles
};

// Per-block static data derived from the problem.
struct BlockData
{
    const LmiBlock* block = nullptr;
    std::vector<Index> free_rows;
    std::vector<Index> rest_rows;
    std::vector<SparseTerm> sparse;
    RealMatrix lowrank;            // n x R
    std::vector<Index> lowrank_var; // owner variable per column
    RealVector lowrank_weight;

    bool has_free() const { return !free_rows.empty(); }
    Index dim() const { return block->dim; }
};

BlockData prepare(const LmiBlock& blk)
{
    BlockData bd;
    bd.block     = &blk;
    bd.free_rows = blk.free_rows;
    std::sort(bd.free_rows.begin(), bd.free_rows.end());
    std::vector<bool> is_free(blk.dim, false);
    for (Index r : bd.free_rows) {
        is_free[r] = true;
    }
    for (Index r = 0; r < blk.dim; ++r) {
        if (!is_free[r]) {
            bd.rest_rows.push_back(r);
        }
    }
    Index total_rank = 0;
    for (const auto& t : blk.terms) {
        total_rank += t.factors.cols();
    }
    bd.lowrank.resize(blk.dim, total_rank);
    bd.lowrank_weight.resize(total_rank);
    Index col = 0;
    for (const auto& t : blk.terms) {
        if (!t.entries.empty()) {
            SparseTerm st;
            st.variable = t.variable;
            for (const auto& e : t.entries) {
                st.entries.push_back({e.row, e.col, e.value});
                if (e.row != e.col) {
                    st.entries.push_back({e.col, e.row, e.value});
                }
            }
            bd.sparse.push_back(std::move(st));
        }
        for (Index r = 0; r < t.factors.cols(); ++r) {
            bd.lowrank.col(col)     = t.factors.col(r);
            bd.lowrank_weight(col)  = t.weights(r);
            bd.lowrank_var.push_back(t.variable);
            ++col;
        }
    }
    return bd;
}

// H(i, l) += tr(A_i X A_l Y) over all term pairs of the block.
void accumulate_trace_products(RealMatrix& h, const BlockData& bd, const RealMatrix& x,
                               const RealMatrix& y)
{
    const Index rank = bd.lowrank.cols();
    RealMatrix xv;
    RealMatrix yv;
    if (rank > 0) {
        xv.noalias() = x * bd.lowrank;
        yv.noalias() = y * bd.lowrank;
        RealMatrix px;
        RealMatrix py;
        px.noalias() = bd.lowrank.transpose() * xv;
        py.noalias() = bd.lowrank.transpose() * yv;
        for (Index s = 0; s < rank; ++s) {
            const Index vs = bd.lowrank_var[s];
            const double ws = bd.lowrank_weight(s);
            for (Index r = 0; r < rank; ++r) {
                h(bd.lowrank_var[r], vs) += bd.lowrank_weight(r) * ws * px(r, s) * py(s, r);
            }
        }
    }
    for (const auto& a : bd.sparse) {
        // sparse x low-rank, both orders
        for (Index s = 0; s < rank; ++s) {
            double as = 0.0;
            double sa = 0.0;
            for (const auto& e : a.entries) {
                as += e.value * yv(e.row, s) * xv(e.col, s);
                sa += e.value * xv(e.row, s) * yv(e.col, s);
            }
            const double ws = bd.lowrank_weight(s);
            h(a.variable, bd.lowrank_var[s]) += ws * as;
            h(bd.lowrank_var[s], a.variable) += ws * sa;
        }
        // sparse x sparse
        for (const auto& b : bd.sparse) {
            double acc = 0.0;
            for (const auto& e : a.entries) {
                for (const auto& f : b.entries) {
                    acc += e.value * f.value * x(e.col, f.row) * y(f.col, e.row);
                }
            }
            h(a.variable, b.variable) += acc;
        }
    }
}

double inner_full(const SparseTerm& t, const RealMatrix& x)
{
    double acc = 0.0;
    for (const auto& e : t.entries) {
        acc += e.value * x(e.row, e.col);
    }
    return acc;
}

// <A_i, X> for every variable, accumulated into out.
void accumulate_inner(RealVector& out, const BlockData& bd, const RealMatrix& x)
{
    for (const auto& t : bd.sparse) {
        out(t.variable) += inner_full(t, x);
    }
    const Index rank = bd.lowrank.cols();
    if (rank > 0) {
        const RealMatrix xv = x * bd.lowrank;
        for (Index r = 0; r < rank; ++r) {
            out(bd.lowrank_var[r]) += bd.lowrank_weight(r) * bd.lowrank.col(r).dot(xv.col(r));
        }
    }
}

// sum_i dx_i A_i as a dense matrix.
RealMatrix combine(const BlockData& bd, const RealVector& dx)
{
    const Index n = bd.dim();
    RealMatrix out = RealMatrix::Zero(n, n);
    for (const auto& t : bd.sparse) {
        const double v = dx(t.variable);
        if (v == 0.0) {
            continue;
        }
        for (const auto& e : t.entries) {
            out(e.row, e.col) += v * e.value;
        }
    }
    const Index rank = bd.lowrank.cols();
    if (rank > 0) {
        RealVector w(rank);
        for (Index r = 0; r < rank; ++r) {
            w(r) = bd.lowrank_weight(r) * dx(bd.lowrank_var[r]);
        }
        out.noalias() += bd.lowrank * w.asDiagonal() * bd.lowrank.transpose();
    }
    return out;
}

RealMatrix symmetrize(const RealMatrix& a) { return (a + a.transpose()) / 2; }

// Largest step alpha with X + alpha dX >= 0, given the scaled representation
// Xs = diag(lambda) and dXs (already transformed into the scaled frame).
double max_step(const RealVector& lambda, const RealMatrix& d_scaled)
{
    const RealVector inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
    const RealMatrix t        = inv_sqrt.asDiagonal() * d_scaled * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetrize(t), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (!(min_eig < 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return -1.0 / min_eig;
}

// NT scaling state of one block.
struct Scaling
{
    RealVector lambda; // eigenvalues of scaled S (= scaled Z)
    RealMatrix g;      // G with G^T Z G = diag(lambda) = G^{-1} S G^{-T}
    RealMatrix ginv;
    RealMatrix m; // W^{-1} = G^{-T} G^{-1}
    // free block elimination
    RealMatrix mff_inv;
    RealMatrix e; // M - K, supported on rest rows only
    RealMatrix k; // M[:,F] Mff^{-1} M[F,:]
};

bool compute_scaling(const BlockData& bd, const RealMatrix& s, const RealMatrix& z, Scaling& out)
{
    const Index n = bd.dim();
    Eigen::LLT<RealMatrix> llt(s);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    const RealMatrix ls = llt.matrixL();
    RealMatrix lzl      = ls.transpose() * z * ls;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetrize(lzl));
    if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
        return false;
    }
    out.lambda             = es.eigenvalues().cwiseSqrt();
    const RealMatrix& q    = es.eigenvectors();
    const RealVector isq   = out.lambda.cwiseSqrt().cwiseInverse();
    const RealVector sq    = out.lambda.cwiseSqrt();
    out.g                  = ls * q * isq.asDiagonal();
    const RealMatrix lsinv = ls.triangularView<Eigen::Lower>().solve(RealMatrix::Identity(n, n));
    out.ginv               = sq.asDiagonal() * q.transpose() * lsinv;
    out.m                  = symmetrize(out.ginv.transpose() * out.ginv);

    if (bd.has_free()) {
        const auto& f      = bd.free_rows;
        const auto& r      = bd.rest_rows;
        const RealMatrix mff = out.m(f, f);
        Eigen::LLT<RealMatrix> lf(mff);
        if (lf.info() != Eigen::Success) {
            return false;
        }
        out.mff_inv = symmetrize(lf.solve(RealMatrix::Identity(f.size(), f.size())));
        const RealMatrix mfa = out.m(f, Eigen::all); // |F| x n
        out.k = symmetrize(mfa.transpose() * out.mff_inv * mfa);
        out.e = RealMatrix::Zero(n, n);
        if (!r.empty()) {
            const RealMatrix mrr = out.m(r, r);
            const RealMatrix mfr = out.m(f, r);
            out.e(r, r)          = symmetrize(mrr - mfr.transpose() * out.mff_inv * mfr);
        }
    }
    return true;
}

struct Iterate
{
    RealVector x;
    std::vector<RealMatrix> d;
    std::vector<RealMatrix> s;
    std::vector<RealMatrix> z;
    RealVector s_lp;
    RealVector z_lp;
};

struct Residuals
{
    std::vector<RealMatrix> rp; // B + sum x A + P D P^T - S
    std::vector<RealMatrix> rf; // gamma I - Z_FF
    RealVector rd;              // c - sum <A,Z> - z_lp
    RealVector rlp;             // x_nonneg - s_lp
    double pobj = 0.0;
    double dobj = 0.0;
    double pinf = 0.0;
    double dinf = 0.0;
    double gap  = 0.0;
    double mu   = 0.0;
};

} // namespace

ConicSolution solve_sdp(const ConicProblem& problem, double tol)
{
    Options opts;
    opts.tol = tol;
    return solve_sdp(problem, opts);
}

ConicSolution solve_sdp(const ConicProblem& problem, const Options& options)
{
    problem.validate();
    const Index m      = problem.num_variables();
    const Index nblk   = static_cast<Index>(problem.blocks.size());
    const Index nlp    = static_cast<Index>(problem.nonneg.size());
    const RealVector& c = problem.objective;

    std::vector<BlockData> data;
    data.reserve(nblk);
    for (const auto& blk : problem.blocks) {
        data.push_back(prepare(blk));
    }

    // Problem scale used for the starting point and the stopping test.
    double norm_b   = 0.0;
    double max_a    = 0.0;
    double nu       = static_cast<double>(nlp);
    double max_dim  = 1.0;
    RealVector a_norm = RealVector::Zero(m);
    for (const auto& bd : data) {
        norm_b = std::max(norm_b, bd.block->constant.norm());
        nu += static_cast<double>(bd.dim());
        max_dim = std::max(max_dim, static_cast<double>(bd.dim()));
        for (const auto& t : bd.block->terms) {
            RealMatrix dense = RealMatrix::Zero(bd.dim(), bd.dim());
            t.accumulate(dense, 1.0);
            const double nrm = dense.norm();
            a_norm(t.variable) += nrm * nrm;
        }
    }
    for (Index i : problem.nonneg) {
        a_norm(i) += 1.0;
    }
    a_norm = a_norm.cwiseSqrt();
    max_a  = m > 0 ? a_norm.maxCoeff() : 0.0;
    double norm_c = c.norm();
    double gamma_max = 0.0;
    for (const auto& bd : data) {
        gamma_max = std::max(gamma_max, std::abs(bd.block->free_trace_weight));
    }

    double xi_z = std::max(10.0, std::sqrt(max_dim));
    for (Index i = 0; i < m; ++i) {
        xi_z = std::max(xi_z, max_dim * (1.0 + std::abs(c(i))) / (1.0 + a_norm(i)));
    }
    xi_z = std::max(xi_z, max_dim * (1.0 + gamma_max) / 2.0);
    const double xi_s = std::max({10.0, std::sqrt(max_dim), norm_b, max_a});

    Iterate it;
    it.x = RealVector::Zero(m);
    for (const auto& bd : data) {
        const Index n  = bd.dim();
        const Index nf = static_cast<Index>(bd.free_rows.size());
        it.d.push_back(RealMatrix::Zero(nf, nf));
        it.s.push_back(xi_s * RealMatrix::Identity(n, n));
        it.z.push_back(xi_z * RealMatrix::Identity(n, n));
    }
    it.s_lp = RealVector::Constant(nlp, xi_s);
    it.z_lp = RealVector::Constant(nlp, xi_z);

    const double scale_p = 1.0 + norm_b;
    const double scale_d = 1.0 + norm_c + gamma_max;

    auto residuals = [&](const Iterate& cur) {
        Residuals r;
        r.rd   = c;
        r.pobj = c.dot(cur.x);
        double pinf2 = 0.0;
        double dinf2 = 0.0;
        double comp  = 0.0;
        for (Index j = 0; j < nblk; ++j) {
            const auto& bd  = data[j];
            const auto& blk = *bd.block;
            RealMatrix model = evaluate_block(blk, cur.x, cur.d[j]);
            r.rp.push_back(model - cur.s[j]);
            pinf2 += r.rp.back().squaredNorm();
            RealVector az = RealVector::Zero(m);
            accumulate_inner(az, bd, cur.z[j]);
            r.rd -= az;
            if (bd.has_free()) {
                const Index nf = static_cast<Index>(bd.free_rows.size());
                r.rf.push_back(blk.free_trace_weight * RealMatrix::Identity(nf, nf) -
                               RealMatrix(cur.z[j](bd.free_rows, bd.free_rows)));
                dinf2 += r.rf.back().squaredNorm();
                r.pobj += blk.free_trace_weight * cur.d[j].trace();
            } else {
                r.rf.emplace_back();
            }
            r.dobj -= blk.constant.cwiseProduct(cur.z[j]).sum();
            comp += cur.s[j].cwiseProduct(cur.z[j]).sum();
        }
        r.rlp.resize(nlp);
        for (Index k = 0; k < nlp; ++k) {
            const Index i = problem.nonneg[k];
            r.rd(i) -= cur.z_lp(k);
            r.rlp(k) = cur.x(i) - cur.s_lp(k);
            comp += cur.s_lp(k) * cur.z_lp(k);
        }
        pinf2 += r.rlp.squaredNorm();
        dinf2 += r.rd.squaredNorm();
        r.pinf = std::sqrt(pinf2) / scale_p;
        r.dinf = std::sqrt(dinf2) / scale_d;
        r.gap  = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));
        r.mu   = nu > 0 ? comp / nu : 0.0;
        return r;
    };

    ConicSolution best;
    double best_merit = std::numeric_limits<double>::infinity();
    auto record = [&](const Iterate& cur, const Residuals& r, int iter) {
        const double merit = std::max({r.gap, r.pinf, r.dinf});
        if (merit < best_merit) {
            best_merit                = merit;
            best.x                    = cur.x;
            best.free_blocks          = cur.d;
            best.slacks               = cur.s;
            best.duals                = cur.z;
            best.objective_value      = r.pobj;
            best.dual_objective       = r.dobj;
            best.duality_gap          = r.gap;
            best.primal_infeasibility = r.pinf;
            best.dual_infeasibility   = r.dinf;
            best.iterations           = iter;
        }
    };

    double prev_step = 1.0;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        const Residuals res = residuals(it);
        record(it, res, iter);
        if (res.gap <= options.tol && res.pinf <= options.tol && res.dinf <= options.tol) {
            best.status     = Status::optimal;
            best.iterations = iter;
            return best;
        }
        if (iter == options.max_iter) {
            break;
        }
        // Divergence of the iterates signals an infeasible or unbounded problem.
        double size = it.x.size() > 0 ? it.x.cwiseAbs().maxCoeff() : 0.0;
        for (Index j = 0; j < nblk; ++j) {
            size = std::max(size, it.z[j].trace());
            size = std::max(size, it.s[j].trace());
        }
        if (!std::isfinite(size) || size > 1e12 * (1.0 + norm_b + norm_c)) {
            best.status = Status::infeasible;
            return best;
        }

        // Scaling and reduced Newton matrix.
        std::vector<Scaling> sc(nblk);
        bool ok = true;
        for (Index j = 0; j < nblk && ok; ++j) {
            ok = compute_scaling(data[j], it.s[j], it.z[j], sc[j]);
        }
        if (!ok) {
            break;
        }

        RealMatrix h = RealMatrix::Zero(m, m);
        for (Index j = 0; j < nblk; ++j) {
            if (data[j].has_free()) {
                accumulate_trace_products(h, data[j], sc[j].e, sc[j].e);
                RealMatrix cross = RealMatrix::Zero(m, m);
                accumulate_trace_products(cross, data[j], sc[j].e, sc[j].k);
                h += cross + cross.transpose();
            } else {
                accumulate_trace_products(h, data[j], sc[j].m, sc[j].m);
            }
        }
        h = symmetrize(h);
        RealVector lp_ratio(nlp);
        for (Index k = 0; k < nlp; ++k) {
            lp_ratio(k) = it.z_lp(k) / it.s_lp(k);
            h(problem.nonneg[k], problem.nonneg[k]) += lp_ratio(k);
        }

        Eigen::LLT<RealMatrix> hfac;
        {
            const double diag_max = m > 0 ? h.diagonal().cwiseAbs().maxCoeff() : 1.0;
            double shift          = 0.0;
            for (int attempt = 0; attempt < 12; ++attempt) {
                RealMatrix hh = h;
                hh.diagonal().array() += shift;
                hfac.compute(hh);
                if (hfac.info() == Eigen::Success) {
                    break;
                }
                shift = shift == 0.0 ? 1e-14 * std::max(diag_max, 1.0) : shift * 100.0;
            }
            if (hfac.info() != Eigen::Success) {
                break;
            }
        }

        struct Direction
        {
            RealVector dx;
            std::vector<RealMatrix> dd, ds, dz;
            RealVector ds_lp, dz_lp;
        };

        // Solves the Newton system for the given complementarity right-hand
        // sides: rc[j] (block, unscaled frame) and rc_lp.
        auto solve_direction = [&](const std::vector<RealMatrix>& rc, const RealVector& rc_lp) {
            Direction dir;
            RealVector rhs = -res.rd;
            std::vector<RealMatrix> qs(nblk);
            for (Index j = 0; j < nblk; ++j) {
                const auto& bd = data[j];
                const RealMatrix& mj = sc[j].m;
                RealMatrix phi       = rc[j] - mj * res.rp[j] * mj;
                if (bd.has_free()) {
                    const auto& f  = bd.free_rows;
                    RealMatrix q   = RealMatrix(phi(f, f)) - res.rf[j];
                    const RealMatrix mfa = mj(f, Eigen::all);
                    phi -= mfa.transpose() * (sc[j].mff_inv * q * sc[j].mff_inv) * mfa;
                    qs[j] = q;
                }
                accumulate_inner(rhs, bd, symmetrize(phi));
            }
            for (Index k = 0; k < nlp; ++k) {
                rhs(problem.nonneg[k]) += rc_lp(k) - lp_ratio(k) * res.rlp(k);
            }
            dir.dx = hfac.solve(rhs);
            for (Index j = 0; j < nblk; ++j) {
                const auto& bd  = data[j];
                const RealMatrix& mj = sc[j].m;
                RealMatrix da   = combine(bd, dir.dx);
                RealMatrix dsj  = res.rp[j] + da;
                RealMatrix ddj;
                if (bd.has_free()) {
                    const auto& f        = bd.free_rows;
                    const RealMatrix mfa = mj(f, Eigen::all);
                    const RealMatrix mam = mfa * da * mfa.transpose();
                    ddj                  = symmetrize(sc[j].mff_inv * (qs[j] - mam) * sc[j].mff_inv);
                    dsj(f, f) += ddj;
                }
                dsj = symmetrize(dsj);
                dir.dd.push_back(ddj);
                dir.dz.push_back(symmetrize(rc[j] - mj * dsj * mj));
                dir.ds.push_back(std::move(dsj));
            }
            dir.ds_lp.resize(nlp);
            dir.dz_lp.resize(nlp);
            for (Index k = 0; k < nlp; ++k) {
                dir.ds_lp(k) = res.rlp(k) + dir.dx(problem.nonneg[k]);
                dir.dz_lp(k) = rc_lp(k) - lp_ratio(k) * dir.ds_lp(k);
            }
            return dir;
        };

        auto step_lengths = [&](const Direction& dir, double& ap, double& ad) {
            ap = std::numeric_limits<double>::infinity();
            ad = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < nblk; ++j) {
                const RealMatrix ds_s = sc[j].ginv * dir.ds[j] * sc[j].ginv.transpose();
                const RealMatrix dz_s = sc[j].g.transpose() * dir.dz[j] * sc[j].g;
                ap = std::min(ap, max_step(sc[j].lambda, ds_s));
                ad = std::min(ad, max_step(sc[j].lambda, dz_s));
            }
            for (Index k = 0; k < nlp; ++k) {
                if (dir.ds_lp(k) < 0) {
                    ap = std::min(ap, -it.s_lp(k) / dir.ds_lp(k));
                }
                if (dir.dz_lp(k) < 0) {
                    ad = std::min(ad, -it.z_lp(k) / dir.dz_lp(k));
                }
            }
        };

        // Predictor (affine scaling).
        std::vector<RealMatrix> rc(nblk);
        for (Index j = 0; j < nblk; ++j) {
            rc[j] = -it.z[j];
        }
        RealVector rc_lp = -it.z_lp;
        const Direction aff = solve_direction(rc, rc_lp);
        double ap_aff       = 0.0;
        double ad_aff       = 0.0;
        step_lengths(aff, ap_aff, ad_aff);
        ap_aff = std::min(1.0, ap_aff);
        ad_aff = std::min(1.0, ad_aff);

        double comp_aff = 0.0;
        for (Index j = 0; j < nblk; ++j) {
            comp_aff += (it.s[j] + ap_aff * aff.ds[j]).cwiseProduct(it.z[j] + ad_aff * aff.dz[j]).sum();
        }
        for (Index k = 0; k < nlp; ++k) {
            comp_aff += (it.s_lp(k) + ap_aff * aff.ds_lp(k)) * (it.z_lp(k) + ad_aff * aff.dz_lp(k));
        }
        const double mu_aff = nu > 0 ? comp_aff / nu : 0.0;
        double sigma        = res.mu > 0 ? std::pow(std::max(mu_aff, 0.0) / res.mu, 3) : 0.0;
        sigma               = std::clamp(sigma, 0.0, 1.0);
        const double target = sigma * res.mu;

        // Corrector in the scaled frame.
        for (Index j = 0; j < nblk; ++j) {
            const RealVector& lam = sc[j].lambda;
            const RealMatrix ds_s = sc[j].ginv * aff.ds[j] * sc[j].ginv.transpose();
            const RealMatrix dz_s = sc[j].g.transpose() * aff.dz[j] * sc[j].g;
            RealMatrix r          = -(ds_s * dz_s + dz_s * ds_s) / 2;
            r.diagonal() += (target - lam.array().square()).matrix();
            const Index n = lam.size();
            for (Index q = 0; q < n; ++q) {
                for (Index p = 0; p < n; ++p) {
                    r(p, q) *= 2.0 / (lam(p) + lam(q));
                }
            }
            rc[j] = symmetrize(sc[j].ginv.transpose() * r * sc[j].ginv);
        }
        for (Index k = 0; k < nlp; ++k) {
            rc_lp(k) = (target - it.s_lp(k) * it.z_lp(k) - aff.ds_lp(k) * aff.dz_lp(k)) / it.s_lp(k);
        }
        const Direction dir = solve_direction(rc, rc_lp);
        double ap           = 0.0;
        double ad           = 0.0;
        step_lengths(dir, ap, ad);
        const double frac = std::min(0.995, 0.9 + 0.09 * prev_step);
        ap                = std::min(1.0, frac * ap);
        ad                = std::min(1.0, frac * ad);
        prev_step         = std::min(ap, ad);

        it.x += ap * dir.dx;
        for (Index j = 0; j < nblk; ++j) {
            if (data[j].has_free()) {
                it.d[j] += ap * dir.dd[j];
            }
            it.s[j] = symmetrize(it.s[j] + ap * dir.ds[j]);
            it.z[j] = symmetrize(it.z[j] + ad * dir.dz[j]);
        }
        it.s_lp += ap * dir.ds_lp;
        it.z_lp += ad * dir.dz_lp;

        if (!it.x.allFinite() || std::max(ap, ad) < 1e-12) {
            break;
        }
    }
    best.status = Status::max_iter;
    return best;
}

} // namespace sparrow::conic
