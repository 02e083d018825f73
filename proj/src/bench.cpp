#include <sparrow/bench.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <sparrow/baselines.hpp>
#include <sparrow/gridless.hpp>
#include <sparrow/sparrow.hpp>

namespace sparrow
{

double wrap_distance(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 2.0);
    return std::min(d, 2.0 - d);
}

RealVector match_estimates(const RealVector& truth, const RealVector& estimates,
                           const RealVector& magnitudes, std::mt19937_64& rng)
{
    if (estimates.size() != magnitudes.size()) {
        throw InvalidArgument("match_estimates: estimates and magnitudes differ in length");
    }
    const Index l = truth.size();
    std::vector<double> pool;
    if (estimates.size() > l) {
        std::vector<Index> order(estimates.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index p, Index q) { return magnitudes(p) > magnitudes(q); });
        for (Index i = 0; i < l; ++i) {
            pool.push_back(estimates(order[i]));
        }
    } else {
        pool.assign(estimates.begin(), estimates.end());
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        while (static_cast<Index>(pool.size()) < l) {
            pool.push_back(uniform(rng));
        }
    }

    // exhaustive assignment; L is small
    std::vector<Index> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Index> best = perm;
    double best_cost        = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Index i = 0; i < l; ++i) {
            cost += wrap_distance(truth(i), pool[perm[i]]);
        }
        if (cost < best_cost) {
            best_cost = cost;
            best      = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    RealVector out(l);
    for (Index i = 0; i < l; ++i) {
        out(i) = pool[best[i]];
    }
    return out;
}

namespace
{

void check_trials(const TrialMatrix& trials, const RealVector& truth, const char* what)
{
    if (trials.rows() < 1) {
        throw InvalidArgument(std::string(what) + ": need at least one trial");
    }
    if (trials.cols() != truth.size() || truth.size() < 1) {
        throw InvalidArgument(std::string(what) + ": trial width does not match truth");
    }
}

} // namespace

namespace
{

// Signed wrap-around error in [-1, 1).
double signed_error(double estimate, double truth) { return wrap_frequency(estimate - truth); }

// Per-source mean of the estimates, taken through the signed errors so that
// estimates straddling +-1 average to a point near the truth rather than 0.
RealVector mean_error(const TrialMatrix& trials, const RealVector& truth)
{
    RealVector mean = RealVector::Zero(truth.size());
    for (Index t = 0; t < trials.rows(); ++t) {
        for (Index l = 0; l < trials.cols(); ++l) {
            mean(l) += signed_error(trials(t, l), truth(l));
        }
    }
    return mean / static_cast<double>(trials.rows());
}

} // namespace

double bias(const TrialMatrix& trials, const RealVector& truth)
{
    check_trials(trials, truth, "bias");
    return std::sqrt(mean_error(trials, truth).squaredNorm() / static_cast<double>(truth.size()));
}

double std_wa(const TrialMatrix& trials, const RealVector& truth)
{
    check_trials(trials, truth, "std_wa");
    const RealVector mean = mean_error(trials, truth);
    double acc            = 0.0;
    for (Index t = 0; t < trials.rows(); ++t) {
        for (Index l = 0; l < trials.cols(); ++l) {
            const double d = wrap_frequency(signed_error(trials(t, l), truth(l)) - mean(l));
            acc += d * d;
        }
    }
    return std::sqrt(acc / static_cast<double>(trials.size()));
}

double rmse(const TrialMatrix& trials, const RealVector& truth)
{
    check_trials(trials, truth, "rmse");
    double acc = 0.0;
    for (Index t = 0; t < trials.rows(); ++t) {
        for (Index l = 0; l < trials.cols(); ++l) {
            const double d = wrap_distance(truth(l), trials(t, l));
            acc += d * d;
        }
    }
    return std::sqrt(acc / static_cast<double>(trials.size()));
}

double resolution_fraction(const TrialMatrix& trials, const RealVector& truth)
{
    check_trials(trials, truth, "resolution_fraction");
    if (truth.size() != 2) {
        throw InvalidArgument("resolution_fraction: defined for two sources only");
    }
    const double gap = wrap_distance(truth(0), truth(1));
    Index resolved   = 0;
    for (Index t = 0; t < trials.rows(); ++t) {
        const double err = wrap_distance(truth(0), trials(t, 0)) + wrap_distance(truth(1), trials(t, 1));
        // the boundary counts as resolved; small slack absorbs rounding
        if (err <= gap * (1.0 + 1e-12)) {
            ++resolved;
        }
    }
    return static_cast<double>(resolved) / static_cast<double>(trials.rows());
}

const std::vector<std::string>& method_names()
{
    static const std::vector<std::string> names{"sparrow-cd", "sparrow-sdp", "gl-sparrow",
                                                "anm",        "l21",         "music",
                                                "root-music", "spice-us",    "spice-os"};
    return names;
}

bool is_grid_method(const std::string& m)
{
    return m == "sparrow-cd" || m == "sparrow-sdp" || m == "l21" || m == "music" || m == "spice-us" ||
           m == "spice-os";
}

bool is_gridless_method(const std::string& m) { return m == "gl-sparrow" || m == "anm"; }

namespace
{

Estimate from_grid_values(const RealVector& values, const FrequencyGrid& grid)
{
    Estimate out;
    const Support pk = peaks_from_s(values, grid);
    out.frequencies  = pk.frequencies;
    out.magnitudes   = values(pk.indices);
    out.model_order  = out.frequencies.size();
    return out;
}

Estimate from_toeplitz(const ToeplitzParam& u)
{
    Estimate out;
    out.model_order = estimate_model_order(u);
    if (out.model_order == 0) {
        out.frequencies.resize(0);
        out.magnitudes.resize(0);
        return out;
    }
    const AtomicDecomposition dec = vandermonde_decomposition(u, out.model_order);
    out.frequencies               = dec.frequencies;
    out.magnitudes                = dec.magnitudes;
    return out;
}

void require_lambda(const EstimateInput& in, const std::string& method)
{
    if (!(in.lambda > 0.0)) {
        throw InvalidArgument(method + ": needs a positive lambda");
    }
}

} // namespace

Estimate estimate_frequencies(const std::string& method, const EstimateInput& in)
{
    const auto& names = method_names();
    if (std::find(names.begin(), names.end(), method) == names.end()) {
        std::string list;
        for (const auto& n : names) {
            list += (list.empty() ? "" : ", ") + n;
        }
        throw InvalidArgument("unknown method '" + method + "' (valid: " + list + ")");
    }
    if (in.batch.sensors() != in.geometry.size()) {
        throw InvalidArgument("estimate: batch does not match geometry");
    }
    if (is_gridless_method(method) || method == "root-music") {
        in.geometry.validate();
        if (!in.geometry.is_ula()) {
            throw UnsupportedGeometry(method + ": needs a uniform linear array");
        }
    }

    if (method == "gl-sparrow") {
        require_lambda(in, method);
        const auto sol = gl_sparrow(in.geometry, in.batch, in.lambda);
        Estimate out   = from_toeplitz(sol.u);
        out.objective  = sol.objective;
        out.has_objective = true;
        return out;
    }
    if (method == "anm") {
        require_lambda(in, method);
        const auto sol = anm_sdp(in.geometry, in.batch, in.lambda);
        Estimate out   = from_toeplitz(sol.v);
        out.objective  = sol.objective;
        out.has_objective = true;
        return out;
    }
    if (method == "root-music") {
        const auto res = root_music(sample_covariance(in.batch), in.order, in.geometry);
        Estimate out;
        out.frequencies    = res.frequencies;
        out.magnitudes     = RealVector::Ones(res.frequencies.size());
        out.model_order    = in.order;
        out.low_confidence = res.low_confidence;
        return out;
    }

    const Dictionary d(in.geometry, uniform_grid(in.grid_size));
    if (method == "music") {
        const auto res = music_spectrum(sample_covariance(in.batch), in.order, d.grid, in.geometry);
        Estimate out;
        out.frequencies = res.peaks;
        out.magnitudes.resize(res.peaks.size());
        for (Index i = 0; i < res.peaks.size(); ++i) {
            const auto it = std::find(d.grid.points.begin(), d.grid.points.end(), res.peaks(i));
            out.magnitudes(i) = res.spectrum(it - d.grid.points.begin());
        }
        out.model_order = in.order;
        return out;
    }
    if (method == "sparrow-cd") {
        require_lambda(in, method);
        const auto sol = sparrow_cd(d, sample_covariance(in.batch), in.lambda);
        Estimate out   = from_grid_values(sol.s, d.grid);
        out.objective  = sol.objective;
        out.has_objective = true;
        return out;
    }
    if (method == "sparrow-sdp") {
        require_lambda(in, method);
        const auto sol = sparrow_sdp(d, in.batch, in.lambda);
        Estimate out   = from_grid_values(sol.s, d.grid);
        out.objective  = sol.objective;
        out.has_objective = true;
        return out;
    }
    if (method == "l21") {
        require_lambda(in, method);
        const auto sol = l21_solve(d, in.batch, in.lambda);
        const RealVector rows =
            sol.x.rowwise().norm() / std::sqrt(static_cast<double>(in.batch.snapshots()));
        Estimate out      = from_grid_values(rows, d.grid);
        out.objective     = sol.objective;
        out.has_objective = true;
        return out;
    }
    const SampleCovariance r = sample_covariance(in.batch);
    const SpiceSolution sol  = method == "spice-us" ? spice_undersampled(d, r) : spice_oversampled(d, r);
    Estimate out             = from_grid_values(sol.p, d.grid);
    out.objective            = sol.objective;
    out.has_objective        = true;
    return out;
}

std::string to_string(SweepVariable v)
{
    switch (v) {
    case SweepVariable::snapshots:
        return "snapshots";
    case SweepVariable::snr_db:
        return "snr_db";
    case SweepVariable::delta_mu:
        return "delta_mu";
    }
    return "unknown";
}

SweepVariable sweep_variable_from_string(const std::string& s)
{
    if (s == "snapshots") {
        return SweepVariable::snapshots;
    }
    if (s == "snr_db") {
        return SweepVariable::snr_db;
    }
    if (s == "delta_mu") {
        return SweepVariable::delta_mu;
    }
    throw InvalidArgument("unknown sweep variable '" + s + "' (valid: snapshots, snr_db, delta_mu)");
}

void ExperimentConfig::validate() const
{
    std::vector<std::string> problems;
    if (sensors < 2) {
        problems.push_back("sensors must be at least 2");
    }
    if (trials < 1) {
        problems.push_back("trials must be at least 1");
    }
    if (sweep_values.empty()) {
        problems.push_back("sweep_values must not be empty");
    }
    if (methods.empty()) {
        problems.push_back("methods must not be empty");
    }
    if (grid_size < 1 || sdp_grid_size < 1) {
        problems.push_back("grid sizes must be positive");
    }
    if (!(lambda_scale > 0.0)) {
        problems.push_back("lambda_scale must be positive");
    }
    if (snapshots < 1) {
        problems.push_back("snapshots must be at least 1");
    }
    for (const auto& m : methods) {
        const auto& names = method_names();
        if (m != "crb" && std::find(names.begin(), names.end(), m) == names.end()) {
            problems.push_back("unknown method '" + m + "'");
        }
    }
    if (sweep_var != SweepVariable::delta_mu) {
        if (frequencies.size() < 1) {
            problems.push_back("frequencies must not be empty");
        } else if (frequencies.size() >= sensors) {
            problems.push_back("need fewer sources than sensors");
        }
        for (double f : frequencies) {
            if (!(f >= -1.0 && f < 1.0)) {
                problems.push_back("frequencies must lie in [-1, 1)");
                break;
            }
        }
    } else if (!(mu1 >= -1.0 && mu1 < 1.0)) {
        problems.push_back("mu1 must lie in [-1, 1)");
    }
    for (double v : sweep_values) {
        if (sweep_var == SweepVariable::snapshots && (v < 1.0 || v != std::floor(v))) {
            problems.push_back("snapshot sweep values must be positive integers");
            break;
        }
        if (sweep_var == SweepVariable::delta_mu && !(v > 0.0 && v < 2.0)) {
            problems.push_back("delta_mu sweep values must lie in (0, 2)");
            break;
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid experiment config:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw InvalidArgument(msg);
    }
}

SweepPoint sweep_point(const ExperimentConfig& cfg, double value)
{
    SweepPoint pt;
    double snr_db = cfg.snr_db;
    pt.snapshots  = cfg.snapshots;
    pt.frequencies = cfg.frequencies;
    switch (cfg.sweep_var) {
    case SweepVariable::snapshots:
        pt.snapshots = static_cast<Index>(value);
        break;
    case SweepVariable::snr_db:
        snr_db = value;
        break;
    case SweepVariable::delta_mu:
        pt.frequencies.resize(2);
        pt.frequencies << cfg.mu1, wrap_frequency(cfg.mu1 - value);
        break;
    }
    pt.sigma2 = std::pow(10.0, -snr_db / 10.0);
    return pt;
}

const MetricsRow& MetricsReport::row(const std::string& method, double sweep_value) const
{
    for (const auto& r : rows) {
        if (r.method == method && r.sweep_value == sweep_value) {
            return r;
        }
    }
    throw InvalidArgument("MetricsReport: no row for " + method);
}

MetricsReport run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    MetricsReport rep;
    rep.config = cfg;
    const ArrayGeometry g = ArrayGeometry::ula(cfg.sensors);
    const double nan      = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t pi = 0; pi < cfg.sweep_values.size(); ++pi) {
        const double value   = cfg.sweep_values[pi];
        const SweepPoint pt  = sweep_point(cfg, value);
        const Index l        = pt.frequencies.size();
        SourceScene scene;
        scene.frequencies = pt.frequencies;
        scene.powers      = RealVector::Ones(l);
        const double lambda = cfg.lambda_scale * select_lambda(pt.sigma2, cfg.sensors);

        std::vector<std::vector<TrialRecord>> per_method(cfg.methods.size());
        for (Index t = 0; t < cfg.trials; ++t) {
            const std::uint64_t key = (static_cast<std::uint64_t>(pi) << 32) | static_cast<std::uint64_t>(t);
            EstimateInput in;
            in.geometry = g;
            in.batch    = simulate_mmv(g, scene, pt.snapshots, pt.sigma2, cfg.seed, key);
            in.lambda   = lambda;
            in.order    = l;
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const std::string& method = cfg.methods[mi];
                if (method == "crb") {
                    continue;
                }
                in.grid_size = (method == "sparrow-sdp" || method == "spice-us" || method == "spice-os")
                                   ? cfg.sdp_grid_size
                                   : cfg.grid_size;
                TrialRecord rec;
                rec.method      = method;
                rec.sweep_value = value;
                rec.trial       = t;
                const auto start = std::chrono::steady_clock::now();
                try {
                    const Estimate est = estimate_frequencies(method, in);
                    const auto stop    = std::chrono::steady_clock::now();
                    rec.wall_ms        = std::chrono::duration<double, std::milli>(stop - start).count();
                    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                                      static_cast<std::uint32_t>(cfg.seed >> 32),
                                      static_cast<std::uint32_t>(pi), static_cast<std::uint32_t>(t),
                                      static_cast<std::uint32_t>(mi)};
                    std::mt19937_64 rng(seq);
                    rec.estimates = match_estimates(pt.frequencies, est.frequencies, est.magnitudes, rng);
                } catch (const Error& e) {
                    const auto stop = std::chrono::steady_clock::now();
                    rec.wall_ms     = std::chrono::duration<double, std::milli>(stop - start).count();
                    rec.ok          = false;
                    rec.error       = e.what();
                }
                if (!cfg.record_timing) {
                    rec.wall_ms = 0.0;
                }
                per_method[mi].push_back(std::move(rec));
            }
        }

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            MetricsRow row;
            row.method      = cfg.methods[mi];
            row.sweep_value = value;
            if (row.method == "crb") {
                const RealMatrix crb = stochastic_crb(scene, pt.sigma2, pt.snapshots, g);
                row.bias       = nan;
                row.std        = nan;
                row.rmse       = std::sqrt(crb.trace() / static_cast<double>(l));
                row.resolution = nan;
                rep.rows.push_back(row);
                continue;
            }
            const auto& recs = per_method[mi];
            row.trials       = static_cast<Index>(recs.size());
            std::vector<const TrialRecord*> good;
            double total_ms = 0.0;
            for (const auto& r : recs) {
                total_ms += r.wall_ms;
                if (r.ok) {
                    good.push_back(&r);
                } else {
                    ++row.failures;
                }
            }
            row.mean_ms = recs.empty() ? 0.0 : total_ms / static_cast<double>(recs.size());
            if (good.empty()) {
                row.bias = row.std = row.rmse = row.resolution = nan;
            } else {
                TrialMatrix m(static_cast<Index>(good.size()), l);
                for (std::size_t i = 0; i < good.size(); ++i) {
                    m.row(static_cast<Index>(i)) = good[i]->estimates.transpose();
                }
                row.bias       = bias(m, pt.frequencies);
                row.std        = std_wa(m, pt.frequencies);
                row.rmse       = rmse(m, pt.frequencies);
                row.resolution = l == 2 ? resolution_fraction(m, pt.frequencies) : nan;
            }
            rep.rows.push_back(row);
            for (auto& r : per_method[mi]) {
                rep.trials.push_back(std::move(r));
            }
        }
    }
    return rep;
}

void write_trials_csv(std::ostream& os, const MetricsReport& rep)
{
    const std::string var = to_string(rep.config.sweep_var);
    os << "method,sweep_var,sweep_value,trial,freq_index,estimate,wall_ms,status\n";
    os.precision(12);
    for (const auto& r : rep.trials) {
        const std::string status = r.ok ? "ok" : "failed";
        if (!r.ok) {
            os << r.method << ',' << var << ',' << r.sweep_value << ',' << r.trial << ",,," << r.wall_ms
               << ',' << status << '\n';
            continue;
        }
        for (Index l = 0; l < r.estimates.size(); ++l) {
            os << r.method << ',' << var << ',' << r.sweep_value << ',' << r.trial << ',' << l << ','
               << r.estimates(l) << ',' << r.wall_ms << ',' << status << '\n';
        }
    }
}

void write_metrics_csv(std::ostream& os, const MetricsReport& rep)
{
    os << "method,sweep_value,bias,std,rmse,resolution,mean_ms,failures\n";
    os.precision(12);
    for (const auto& r : rep.rows) {
        os << r.method << ',' << r.sweep_value << ',' << r.bias << ',' << r.std << ',' << r.rmse << ','
           << r.resolution << ',' << r.mean_ms << ',' << r.failures << '\n';
    }
}

} // namespace sparrow
