#ifndef SPARROW_CONIC_HPP
#define SPARROW_CONIC_HPP

#include <string>
#include <vector>

#include <sparrow/numerics.hpp>

namespace sparrow::conic
{

///
/// Symmetric coefficient matrix stored as a sparse part plus a low-rank part:
///
///   A = sum_e value_e (E_{row_e,col_e} + E_{col_e,row_e}) / (1 + [row_e == col_e])
///     + sum_r weights_r factors.col(r) factors.col(r)^T
///
/// i.e. every sparse entry sets the symmetric pair (row, col) and (col, row).
///
struct SymmetricTerm
{
    struct Entry
    {
        Index row;
        Index col;
        double value;
    };

    Index variable = 0;
    std::vector<Entry> entries;
    RealMatrix factors;
    RealVector weights;

    void add_entry(Index row, Index col, double value);
    void add_rank_one(const RealVector& v, double weight);
    /// Adds the dense form of this term into `out` scaled by `scale`.
    void accumulate(RealMatrix& out, double scale) const;
    /// <A, X> = tr(A X) for symmetric X.
    double inner(const RealMatrix& x) const;
};

///
/// Linear matrix inequality  B + sum_i x_i A_i + P D P^T >= 0.
///
/// `free_rows` selects an optional unconstrained symmetric matrix variable D
/// that occupies the principal sub-block on those rows; it enters the
/// objective as free_trace_weight * tr(D). The solver eliminates D in closed
/// form, so a large free block does not enlarge the Newton system.
///
struct LmiBlock
{
    Index dim = 0;
    RealMatrix constant;
    std::vector<SymmetricTerm> terms;
    std::vector<Index> free_rows;
    double free_trace_weight = 0.0;

    explicit LmiBlock(Index n = 0) : dim(n), constant(RealMatrix::Zero(n, n)) {}

    /// Returns the term for `variable`, creating it if needed.
    SymmetricTerm& term(Index variable);
};

/// min c^T x (+ free block traces) s.t. every block LMI holds and x_i >= 0 for i in nonneg.
struct ConicProblem
{
    RealVector objective;
    std::vector<LmiBlock> blocks;
    std::vector<Index> nonneg;

    Index num_variables() const { return objective.size(); }
    /// Throws InvalidArgument on inconsistent dimensions or asymmetric data.
    void validate() const;
};

enum class Status
{
    optimal,
    max_iter,
    infeasible
};

std::string to_string(Status s);

struct ConicSolution
{
    RealVector x;
    std::vector<RealMatrix> free_blocks; ///< D per block (empty when the block has none)
    std::vector<RealMatrix> slacks;      ///< S per block
    std::vector<RealMatrix> duals;       ///< Z per block
    double objective_value      = 0.0;
    double dual_objective       = 0.0;
    double duality_gap          = 0.0; ///< relative: |p - d| / (1 + |p| + |d|)
    double primal_infeasibility = 0.0;
    double dual_infeasibility   = 0.0;
    int iterations              = 0;
    Status status               = Status::max_iter;

    bool usable(double tol) const;
};

struct Options
{
    double tol   = 1e-8;
    int max_iter = 200;
};

///
/// Primal-dual interior point method (infeasible start, Mehrotra
/// predictor-corrector, Nesterov-Todd scaling, dense factorizations).
///
ConicSolution solve_sdp(const ConicProblem& problem, const Options& options = {});
ConicSolution solve_sdp(const ConicProblem& problem, double tol);

/// Evaluates B + sum x_i A_i + P D P^T for one block.
RealMatrix evaluate_block(const LmiBlock& block, const RealVector& x, const RealMatrix& free_block);

///
/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian
/// matrix. Eigenvalues are those of H, each with doubled multiplicity.
///
RealMatrix embed_hermitian(const HermitianMatrix& h);

/// Inverse of embed_hermitian on the structured part (averages the two copies).
HermitianMatrix unembed_hermitian(const RealMatrix& e);

///
/// Helper that writes complex Hermitian data into the real embedding of an
/// `complex_dim` x `complex_dim` Hermitian block, laid out as
/// [[Re, -Im], [Im, Re]] over complex row indices 0..complex_dim-1.
///
class HermitianEmbedding
{
public:
    explicit HermitianEmbedding(Index complex_dim) : n_(complex_dim) {}

    Index complex_dim() const { return n_; }
    Index real_dim() const { return 2 * n_; }

    /// Sets H(p, q) = h and H(q, p) = conj(h) in the term (h real when p == q).
    void add_entry(SymmetricTerm& term, Index p, Index q, Complex h) const;
    /// Adds weight * a a^H where `a` occupies complex rows offset..offset+a.size()-1.
    void add_outer(SymmetricTerm& term, const ComplexVector& a, Index offset, double weight) const;
    /// Dense accumulation into a constant: out += embed(H) on the given complex offsets.
    void add_dense(RealMatrix& out, const ComplexMatrix& h, Index row_offset, Index col_offset) const;
    /// Real row indices of the complex rows offset..offset+count-1 (Re copy then Im copy).
    std::vector<Index> rows(Index offset, Index count) const;

private:
    Index n_;
};

} // namespace sparrow::conic

#endif // SPARROW_CONIC_HPP
