#include <sparrow/baselines.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/SVD>

namespace sparrow
{

namespace
{

HermitianMatrix psd_sqrt(const HermitianMatrix& r)
{
    const auto eig        = hermitian_eig(r);
    const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
    HermitianMatrix out   = eig.vectors * root.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    return (out + out.adjoint()) / 2;
}

// Noise subspace: eigenvectors of the M - L smallest eigenvalues.
ComplexMatrix noise_subspace(const SampleCovariance& r, Index l, const char* what)
{
    const Index m = r.dim();
    if (l < 1 || l >= m) {
        throw InvalidArgument(std::string(what) + ": model order must satisfy 1 <= L < M");
    }
    const auto eig = hermitian_eig(r.r);
    return eig.vectors.rightCols(m - l);
}

ComplexMatrix prox_rows(const ComplexMatrix& v, double tau)
{
    ComplexMatrix out = v;
    for (Index k = 0; k < v.rows(); ++k) {
        const double nrm = v.row(k).norm();
        if (nrm <= tau) {
            out.row(k).setZero();
        } else {
            out.row(k) *= (1.0 - tau / nrm);
        }
    }
    return out;
}

} // namespace

double l21_objective(const ComplexMatrix& x, const Dictionary& d, const MmvBatch& y, double lambda)
{
    const double root = std::sqrt(static_cast<double>(y.snapshots()));
    return 0.5 * (d.a * x - y.y).squaredNorm() + lambda * root * x.rowwise().norm().sum();
}

L21Solution l21_solve(const Dictionary& d, const MmvBatch& y, double lambda, const L21Options& opts)
{
    if (!(lambda > 0.0)) {
        throw InvalidArgument("l21_solve: lambda must be positive");
    }
    if (y.sensors() != d.sensors()) {
        throw InvalidArgument("l21_solve: batch does not match dictionary");
    }
    const Index k      = d.size();
    const Index n      = y.snapshots();
    const double sigma = Eigen::JacobiSVD<ComplexMatrix>(d.a).singularValues()(0);
    const double step  = 1.0 / (sigma * sigma);
    const double tau   = step * lambda * std::sqrt(static_cast<double>(n));
    const double root = std::sqrt(static_cast<double>(n));
    auto objective    = [&](const ComplexMatrix& ax, const ComplexMatrix& x) {
        return 0.5 * (ax - y.y).squaredNorm() + lambda * root * x.rowwise().norm().sum();
    };

    // A x and A z are carried along so each iteration costs two products with A
    ComplexMatrix x  = ComplexMatrix::Zero(k, n);
    ComplexMatrix ax = ComplexMatrix::Zero(d.sensors(), n);
    ComplexMatrix z  = x;
    ComplexMatrix az = ax;
    double t         = 1.0;
    double f         = objective(ax, x);

    L21Solution out;
    int calm       = 0;
    bool restarted = false;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const ComplexMatrix x_new  = prox_rows(z - step * (d.a.adjoint() * (az - y.y)), tau);
        const ComplexMatrix ax_new = d.a * x_new;
        const double f_new         = objective(ax_new, x_new);
        if (f_new > f) {
            out.iterations = it;
            if (restarted) {
                // a plain step from x no longer decreases f: rounding floor
                out.converged = true;
                break;
            }
            // restart momentum from the last accepted point
            z         = x;
            az        = ax;
            t         = 1.0;
            restarted = true;
            continue;
        }
        restarted = false;
        double t_new = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        // gradient restart: drop momentum once it points uphill
        if ((z - x_new).cwiseProduct((x_new - x).conjugate()).sum().real() > 0.0) {
            t_new = 1.0;
            z     = x_new;
            az    = ax_new;
        } else {
            const double beta = (t - 1.0) / t_new;
            z                 = x_new + beta * (x_new - x);
            az                = ax_new + beta * (ax_new - ax);
        }
        const double dec  = (f - f_new) / std::max(std::abs(f), 1e-300);
        const double move = (x_new - x).norm() / std::max(x_new.norm(), 1e-300);
        x                 = x_new;
        ax                = ax_new;
        f                 = f_new;
        t                 = t_new;
        out.iterations    = it;
        calm              = (dec < opts.tol && move < opts.move_tol) ? calm + 1 : 0;
        if (calm >= 5 || f == 0.0) {
            out.converged = true;
            break;
        }
    }
    out.x         = x;
    out.objective = f;
    return out;
}

MusicResult music_spectrum(const SampleCovariance& r, Index l, const FrequencyGrid& grid,
                           const ArrayGeometry& g)
{
    if (r.dim() != g.size()) {
        throw InvalidArgument("music_spectrum: covariance does not match geometry");
    }
    const ComplexMatrix en = noise_subspace(r, l, "music_spectrum");
    const ComplexMatrix a  = steering_matrix(g, grid.points);
    const Index k          = grid.size();
    MusicResult out;
    out.spectrum = (en.adjoint() * a).colwise().squaredNorm().cwiseInverse().transpose();

    std::vector<Index> maxima;
    for (Index i = 0; i < k; ++i) {
        const double v = out.spectrum(i);
        if (k == 1 || (v > out.spectrum((i + k - 1) % k) && v >= out.spectrum((i + 1) % k))) {
            maxima.push_back(i);
        }
    }
    std::stable_sort(maxima.begin(), maxima.end(),
                     [&](Index p, Index q) { return out.spectrum(p) > out.spectrum(q); });
    if (static_cast<Index>(maxima.size()) > l) {
        maxima.resize(l);
    }
    out.peaks = grid.points(maxima);
    return out;
}

namespace
{

// A noise-free covariance puts each source on a double root at the unit
// circle, where eigenvalue roots are only accurate to about sqrt(eps).
// Newton on p' converges quadratically to the double root.
Complex polish_double_root(const ComplexVector& p, Complex z)
{
    const Index n = p.size() - 1;
    if (n < 2) {
        return z;
    }
    ComplexVector d1(n), d2(n - 1);
    for (Index i = 0; i < n; ++i) {
        d1(i) = p(i) * static_cast<double>(n - i);
    }
    for (Index i = 0; i < n - 1; ++i) {
        d2(i) = d1(i) * static_cast<double>(n - 1 - i);
    }
    const Complex start = z;
    for (int it = 0; it < 8; ++it) {
        const Complex den = poly_eval(d2, z);
        if (std::abs(den) == 0.0) {
            break;
        }
        const Complex step = poly_eval(d1, z) / den;
        z -= step;
        if (std::abs(step) < 1e-15 * std::abs(z)) {
            break;
        }
    }
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z - start) > 1e-5 ||
        std::abs(poly_eval(d1, z)) > std::abs(poly_eval(d1, start))) {
        return start;
    }
    return z;
}

} // namespace

RootMusicResult root_music(const SampleCovariance& r, Index l, const ArrayGeometry& g)
{
    g.validate();
    if (!g.is_ula()) {
        throw UnsupportedGeometry("root_music: needs a uniform linear array");
    }
    if (r.dim() != g.size()) {
        throw InvalidArgument("root_music: covariance does not match geometry");
    }
    const Index m          = g.size();
    const ComplexMatrix en = noise_subspace(r, l, "root_music");
    const ComplexMatrix c  = en * en.adjoint();

    // a^H C a = sum_k c_k z^k with c_k the sum of the k-th diagonal (q - p = k).
    ComplexVector coeffs(2 * m - 1);
    for (Index k = -(m - 1); k <= m - 1; ++k) {
        Complex acc{0.0, 0.0};
        for (Index p = std::max<Index>(0, -k); p < m && p + k < m; ++p) {
            acc += c(p, p + k);
        }
        coeffs((m - 1) - k) = acc;
    }
    RootMusicResult out;
    const double scale = coeffs.cwiseAbs().maxCoeff();
    Index lead         = 0;
    while (lead < coeffs.size() && std::abs(coeffs(lead)) <= 1e-12 * scale) {
        ++lead;
    }
    if (lead > 0) {
        out.low_confidence = true;
    }
    const ComplexVector poly = coeffs.tail(coeffs.size() - lead);
    ComplexVector roots      = poly.size() > 0 ? poly_roots(poly) : ComplexVector(0);

    // Roots come in pairs (z, 1/conj z); pair them and average the angles.
    struct Pair
    {
        double angle;
        double distance;
    };
    std::vector<Pair> pairs;
    std::vector<bool> used(roots.size(), false);
    std::vector<Index> order(roots.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
        return std::abs(std::log(std::abs(roots(p)) + 1e-300)) < std::abs(std::log(std::abs(roots(q)) + 1e-300));
    });
    for (Index i : order) {
        if (used[i]) {
            continue;
        }
        used[i]         = true;
        const Complex z = roots(i);
        if (std::abs(z) < 1e-8) {
            pairs.push_back({std::arg(z), std::numeric_limits<double>::infinity()});
            continue;
        }
        const Complex mirror = 1.0 / std::conj(z);
        Index best           = -1;
        double best_d        = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < roots.size(); ++j) {
            if (!used[j] && std::abs(roots(j) - mirror) < best_d) {
                best_d = std::abs(roots(j) - mirror);
                best   = j;
            }
        }
        double dist        = std::abs(std::log(std::abs(z)));
        Complex direction  = z / std::abs(z);
        if (best >= 0 && best_d < 0.5 * std::abs(mirror)) {
            used[best] = true;
            direction += roots(best) / std::abs(roots(best));
            dist = (dist + std::abs(std::log(std::abs(roots(best))))) / 2.0;
            if (std::abs(roots(best) - z) < 1e-5) {
                direction = polish_double_root(poly, direction / std::abs(direction));
            }
        }
        pairs.push_back({std::arg(direction), dist});
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& p, const Pair& q) { return p.distance < q.distance; });

    out.frequencies = RealVector::Zero(l);
    for (Index i = 0; i < l; ++i) {
        if (i < static_cast<Index>(pairs.size()) && std::isfinite(pairs[i].distance)) {
            out.frequencies(i) = wrap_frequency(-pairs[i].angle / std::numbers::pi);
        } else {
            out.low_confidence = true;
        }
    }
    std::sort(out.frequencies.begin(), out.frequencies.end());
    return out;
}

std::string to_string(SpiceVariant v)
{
    return v == SpiceVariant::undersampled ? "undersampled" : "oversampled";
}

double spice_objective(SpiceVariant v, const RealVector& p, double eps, const Dictionary& d,
                       const SampleCovariance& r)
{
    const Index m = d.sensors();
    HermitianMatrix r0 = d.a * p.cast<Complex>().asDiagonal() * d.a.adjoint();
    r0.diagonal().array() += eps;
    r0 = (r0 + r0.adjoint()) / 2;
    if (v == SpiceVariant::undersampled) {
        const ComplexMatrix r2 = r.r * r.r;
        return solve_hpd(r0, r2).trace().real() + r0.trace().real() - 2.0 * r.r.trace().real();
    }
    const ComplexMatrix rinv = solve_hpd(r.r, ComplexMatrix::Identity(m, m));
    return solve_hpd(r0, r.r).trace().real() + (r0 * rinv).trace().real() - 2.0 * static_cast<double>(m);
}

namespace
{

// min Tr(W) + c^T [p; eps]  s.t. [[W, B], [B, A P A^H + eps I]] >= 0, p, eps >= 0.
SpiceSolution solve_spice(const Dictionary& d, const HermitianMatrix& b, const RealVector& weights,
                          double eps_weight, double offset, SpiceVariant variant,
                          const conic::Options& opts)
{
    const Index m = d.sensors();
    const Index k = d.size();
    const conic::HermitianEmbedding emb(2 * m);
    conic::ConicProblem prob;
    prob.objective.resize(k + 1);
    prob.objective.head(k) = weights;
    prob.objective(k)      = eps_weight;

    conic::LmiBlock blk(emb.real_dim());
    emb.add_dense(blk.constant, b, m, 0);
    emb.add_dense(blk.constant, b.adjoint(), 0, m);
    for (Index i = 0; i < k; ++i) {
        emb.add_outer(blk.term(i), d.a.col(i), m, 1.0);
        prob.nonneg.push_back(i);
    }
    for (Index p = 0; p < m; ++p) {
        emb.add_entry(blk.term(k), m + p, m + p, 1.0);
    }
    prob.nonneg.push_back(k);
    blk.free_rows         = emb.rows(0, m);
    blk.free_trace_weight = 0.5;
    prob.blocks.push_back(std::move(blk));

    const auto sol = conic::solve_sdp(prob, opts);
    if (!sol.usable(std::max(opts.tol * 1e3, 1e-6))) {
        throw NumericalError("spice: conic solver failed (" + conic::to_string(sol.status) + ")");
    }
    SpiceSolution out;
    out.variant    = variant;
    out.p          = sol.x.head(k).cwiseMax(0.0);
    out.epsilon    = std::max(sol.x(k), 0.0);
    out.objective  = sol.objective_value + offset;
    out.iterations = sol.iterations;
    out.converged  = sol.status == conic::Status::optimal;
    return out;
}

void check_spice_inputs(const Dictionary& d, const SampleCovariance& r, const char* what)
{
    if (r.dim() != d.sensors()) {
        throw InvalidArgument(std::string(what) + ": covariance does not match dictionary");
    }
    require_hermitian(r.r, what, 1e-10);
}

} // namespace

SpiceSolution spice_undersampled(const Dictionary& d, const SampleCovariance& r, const conic::Options& opts)
{
    check_spice_inputs(d, r, "spice_undersampled");
    const RealVector weights = d.a.colwise().squaredNorm().transpose();
    return solve_spice(d, r.r, weights, static_cast<double>(d.sensors()), -2.0 * r.r.trace().real(),
                       SpiceVariant::undersampled, opts);
}

SpiceSolution spice_oversampled(const Dictionary& d, const SampleCovariance& r, const conic::Options& opts)
{
    check_spice_inputs(d, r, "spice_oversampled");
    const Index m      = d.sensors();
    const RealVector ev = hermitian_eigenvalues(r.r);
    if (!(ev(m - 1) > 1e-10 * std::max(ev(0), 1e-300))) {
        throw InvalidArgument("spice_oversampled: sample covariance must be nonsingular");
    }
    const ComplexMatrix rinv_a = solve_hpd(r.r, d.a);
    const RealVector weights   = d.a.conjugate().cwiseProduct(rinv_a).colwise().sum().real().transpose();
    const double eps_weight    = solve_hpd(r.r, ComplexMatrix::Identity(m, m)).trace().real();
    return solve_spice(d, psd_sqrt(r.r), weights, eps_weight, -2.0 * static_cast<double>(m),
                       SpiceVariant::oversampled, opts);
}

RealMatrix stochastic_crb(const SourceScene& scene, double sigma2, Index n, const ArrayGeometry& g)
{
    g.validate();
    scene.validate();
    const Index m = g.size();
    const Index l = scene.size();
    if (!(sigma2 > 0.0)) {
        throw InvalidArgument("stochastic_crb: noise power must be positive");
    }
    if (n < 1) {
        throw InvalidArgument("stochastic_crb: need N >= 1");
    }
    if (l < 1 || l >= m) {
        throw InvalidArgument("stochastic_crb: need 1 <= L < M");
    }
    const ComplexMatrix a = steering_matrix(g, scene.frequencies);
    ComplexMatrix dmat(m, l);
    for (Index i = 0; i < l; ++i) {
        for (Index p = 0; p < m; ++p) {
            dmat(p, i) = Complex(0.0, -std::numbers::pi * g.positions(p)) * a(p, i);
        }
    }
    const HermitianMatrix p = scene.source_covariance();
    HermitianMatrix r       = a * p * a.adjoint();
    r.diagonal().array() += sigma2;

    const ComplexMatrix gram = a.adjoint() * a;
    Eigen::LLT<ComplexMatrix> llt(gram);
    const RealVector sv = Eigen::JacobiSVD<ComplexMatrix>(a).singularValues();
    if (llt.info() != Eigen::Success || sv(l - 1) < 1e-10 * sv(0)) {
        throw InvalidArgument("stochastic_crb: steering matrix is rank deficient");
    }
    ComplexMatrix proj = -a * llt.solve(a.adjoint());
    proj.diagonal().array() += 1.0;

    const ComplexMatrix h = dmat.adjoint() * proj * dmat;
    const ComplexMatrix q = p * a.adjoint() * solve_hpd((r + r.adjoint()) / 2, a) * p;
    const RealMatrix fim  = h.cwiseProduct(q.transpose()).real();
    Eigen::LLT<RealMatrix> fl((fim + fim.transpose()) / 2);
    if (fl.info() != Eigen::Success) {
        throw NumericalError("stochastic_crb: information matrix is singular");
    }
    const RealMatrix crb = sigma2 / (2.0 * static_cast<double>(n)) * fl.solve(RealMatrix::Identity(l, l));
    return (crb + crb.transpose()) / 2;
}

} // namespace sparrow
