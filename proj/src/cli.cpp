#include <sparrow/cli.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include <sparrow/baselines.hpp>
#include <sparrow/bench.hpp>
#include <sparrow/gridless.hpp>
#include <sparrow/io.hpp>
#include <sparrow/sparrow.hpp>

namespace sparrow::cli
{

namespace
{

// CLI11 consumes argument vectors back to front.
int parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
          bool& done)
{
    std::vector<std::string> rev(args.rbegin(), args.rend());
    done = false;
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        done = true;
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        done = true;
        return exit_usage;
    }
    return exit_ok;
}

template <typename F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}

RealVector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
}

std::string methods_list()
{
    std::string s;
    for (const auto& m : method_names()) {
        s += (s.empty() ? "" : ", ") + m;
    }
    return s;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    const std::string usage = "usage: sparrow <simulate|estimate|bench|equiv> [options]\n"
                              "       sparrow <subcommand> --help\n";
    if (args.empty()) {
        err << usage;
        return exit_usage;
    }
    const std::string sub = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (sub == "simulate") {
        return cmd_simulate(rest, out, err);
    }
    if (sub == "estimate") {
        return cmd_estimate(rest, out, err);
    }
    if (sub == "bench") {
        return cmd_bench(rest, out, err);
    }
    if (sub == "equiv") {
        return cmd_equiv(rest, out, err);
    }
    if (sub == "--help" || sub == "-h") {
        out << usage;
        return exit_ok;
    }
    err << "unknown subcommand '" << sub << "'\n" << usage;
    return exit_usage;
}

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Simulate a multiple measurement vector batch", "sparrow simulate"};
    Index ula = 0;
    std::vector<double> positions;
    std::vector<double> freqs;
    std::vector<double> powers;
    double snr_db = 0.0;
    double sigma2 = -1.0;
    Index n       = 0;
    std::uint64_t seed  = 0;
    std::uint64_t trial = 0;
    std::string out_path;
    auto* ula_opt = app.add_option("--ula", ula, "uniform linear array with M sensors");
    auto* pos_opt = app.add_option("--positions", positions, "sensor positions (half wavelengths)")->delimiter(',');
    ula_opt->excludes(pos_opt);
    app.add_option("--freqs", freqs, "source spatial frequencies in [-1, 1)")->delimiter(',')->required();
    app.add_option("--powers", powers, "source powers (default 1)")->delimiter(',');
    auto* snr_opt = app.add_option("--snr", snr_db, "SNR in dB, sigma^2 = 10^(-SNR/10)");
    auto* s2_opt  = app.add_option("--sigma2", sigma2, "noise power");
    snr_opt->excludes(s2_opt);
    app.add_option("--n", n, "snapshots")->required();
    app.add_option("--seed", seed, "random seed")->required();
    app.add_option("--trial", trial, "trial index mixed into the seed");
    app.add_option("--out", out_path, "output JSON file")->required();
    bool done = false;
    const int code = parse(app, args, out, err, done);
    if (done) {
        return code;
    }
    return guarded(err, [&]() {
        io::BatchFile f;
        if (*ula_opt) {
            f.geometry = ArrayGeometry::ula(ula);
        } else if (*pos_opt) {
            f.geometry.positions = to_vector(positions);
        } else {
            throw InvalidArgument("one of --ula or --positions is required");
        }
        f.geometry.validate();
        if (*snr_opt) {
            sigma2 = std::pow(10.0, -snr_db / 10.0);
        } else if (!*s2_opt) {
            throw InvalidArgument("one of --snr or --sigma2 is required");
        }
        SourceScene scene;
        scene.frequencies = to_vector(freqs);
        scene.powers      = powers.empty() ? RealVector::Ones(scene.frequencies.size()) : to_vector(powers);
        f.batch           = simulate_mmv(f.geometry, scene, n, sigma2, seed, trial);
        f.scene           = scene;
        io::write_text_file(out_path, io::batch_to_json(f).dump(1) + "\n");
        out << "wrote " << f.batch.sensors() << "x" << f.batch.snapshots() << " batch to " << out_path << "\n";
        return exit_ok;
    });
}

int cmd_estimate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Estimate frequencies from a batch file", "sparrow estimate"};
    std::string in_path;
    std::string method;
    std::string lambda_arg;
    Index order     = 0;
    Index grid_size = 1000;
    std::string out_path;
    app.add_option("--in", in_path, "batch JSON file")->required();
    app.add_option("--method", method, "one of: " + methods_list())->required();
    app.add_option("--lambda", lambda_arg, "regularization parameter or 'auto'");
    app.add_option("--order", order, "source count (music, root-music)");
    app.add_option("--grid", grid_size, "grid size for grid based methods");
    app.add_option("--out", out_path, "report file (stdout when omitted)");
    bool done = false;
    const int code = parse(app, args, out, err, done);
    if (done) {
        return code;
    }
    return guarded(err, [&]() {
        const auto& names = method_names();
        if (std::find(names.begin(), names.end(), method) == names.end()) {
            throw InvalidArgument("unknown method '" + method + "' (valid: " + methods_list() + ")");
        }
        const io::BatchFile f = io::batch_from_json(io::read_json_file(in_path));
        EstimateInput in;
        in.geometry  = f.geometry;
        in.batch     = f.batch;
        in.order     = order;
        in.grid_size = grid_size;
        const bool sparse = method != "music" && method != "root-music" && method != "spice-us" && method != "spice-os";
        if (sparse) {
            if (lambda_arg.empty()) {
                throw InvalidArgument(method + " needs --lambda (a value or 'auto')");
            }
            if (lambda_arg == "auto") {
                if (!f.batch.noise_power) {
                    throw InvalidArgument("--lambda auto needs noise_power in the batch file; pass an explicit --lambda");
                }
                in.lambda = select_lambda(*f.batch.noise_power, f.geometry.size());
            } else {
                try {
                    in.lambda = std::stod(lambda_arg);
                } catch (const std::exception&) {
                    throw InvalidArgument("--lambda must be a number or 'auto'");
                }
            }
            if (!(in.lambda > 0.0)) {
                throw InvalidArgument("--lambda must be positive");
            }
        }
        if ((method == "music" || method == "root-music") && order < 1) {
            throw InvalidArgument(method + " needs --order");
        }
        const auto start   = std::chrono::steady_clock::now();
        const Estimate est = estimate_frequencies(method, in);
        const double ms    = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        io::Json j;
        j["schema_version"] = io::schema_version;
        j["method"]         = method;
        if (sparse) {
            j["lambda"] = in.lambda;
        }
        j["frequencies"] = std::vector<double>(est.frequencies.begin(), est.frequencies.end());
        j["magnitudes"]  = std::vector<double>(est.magnitudes.begin(), est.magnitudes.end());
        j["model_order"] = est.model_order;
        j["objective"]   = est.has_objective ? io::Json(est.objective) : io::Json(nullptr);
        j["low_confidence"] = est.low_confidence;
        j["wall_ms"]     = ms;
        const std::string text = j.dump(2) + "\n";
        if (out_path.empty()) {
            out << text;
        } else {
            io::write_text_file(out_path, text);
            out << method << ": " << est.frequencies.size() << " frequencies written to " << out_path << "\n";
        }
        return exit_ok;
    });
}

int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Run a Monte-Carlo experiment", "sparrow bench"};
    std::string config_path;
    std::string out_dir = ".";
    std::string prefix;
    bool no_timing = false;
    app.add_option("--config", config_path, "experiment config JSON")->required();
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--prefix", prefix, "output file prefix (default: config file stem)");
    app.add_flag("--no-timing", no_timing, "write wall_ms = 0 so reruns are byte identical");
    bool done = false;
    const int code = parse(app, args, out, err, done);
    if (done) {
        return code;
    }
    return guarded(err, [&]() {
        ExperimentConfig cfg = io::config_from_json(io::read_json_file(config_path));
        if (no_timing) {
            cfg.record_timing = false;
        }
        if (prefix.empty()) {
            prefix = std::filesystem::path(config_path).stem().string();
        }
        const MetricsReport rep = run_experiment(cfg);
        std::filesystem::create_directories(out_dir);
        const auto base = (std::filesystem::path(out_dir) / prefix).string();
        std::ostringstream trials;
        write_trials_csv(trials, rep);
        io::write_text_file(base + "_trials.csv", trials.str());
        std::ostringstream metrics;
        write_metrics_csv(metrics, rep);
        io::write_text_file(base + "_metrics.csv", metrics.str());
        io::write_text_file(base + ".json", io::report_to_json(rep).dump(1) + "\n");

        out << std::left << std::setw(12) << "method" << std::right << std::setw(10) << to_string(cfg.sweep_var)
            << std::setw(12) << "bias" << std::setw(12) << "std" << std::setw(12) << "rmse" << std::setw(8)
            << "res" << std::setw(10) << "ms" << std::setw(6) << "fail" << "\n";
        for (const auto& r : rep.rows) {
            out << std::left << std::setw(12) << r.method << std::right << std::setw(10) << r.sweep_value
                << std::setprecision(4) << std::setw(12) << r.bias << std::setw(12) << r.std << std::setw(12)
                << r.rmse << std::setw(8) << r.resolution << std::setw(10) << r.mean_ms << std::setw(6)
                << r.failures << "\n";
        }
        out << "wrote " << base << "_trials.csv, " << base << "_metrics.csv, " << base << ".json\n";
        return exit_ok;
    });
}

int cmd_equiv(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Audit the l21 / SPARROW and ANM / gridless SPARROW equivalences", "sparrow equiv"};
    int trials         = 5;
    double tol         = 1e-4;
    Index m            = 6;
    Index k            = 24;
    Index n            = 5;
    std::uint64_t seed = 1;
    app.add_option("--trials", trials, "random instances");
    app.add_option("--tol", tol, "tolerance on row norms and Toeplitz parameters");
    app.add_option("--m", m, "sensors (uniform linear array)");
    app.add_option("--k", k, "grid size");
    app.add_option("--n", n, "snapshots");
    app.add_option("--seed", seed, "random seed");
    bool done = false;
    const int code = parse(app, args, out, err, done);
    if (done) {
        return code;
    }
    return guarded(err, [&]() {
        if (trials < 1) {
            throw InvalidArgument("--trials must be at least 1");
        }
        if (!(tol > 0.0)) {
            throw InvalidArgument("--tol must be positive");
        }
        if (m < 2 || k < 1 || n < 1) {
            throw InvalidArgument("--m, --k and --n must be positive (m >= 2)");
        }
        const ArrayGeometry g = ArrayGeometry::ula(m);
        const Dictionary d(g, uniform_grid(k));
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> freq(-1.0, 1.0);
        std::uniform_real_distribution<double> noise(0.1, 1.0);

        double worst_s = 0.0, worst_x = 0.0, worst_u = 0.0, worst_obj = 0.0;
        for (int t = 0; t < trials; ++t) {
            SourceScene scene;
            scene.frequencies.resize(2);
            do {
                scene.frequencies << freq(rng), freq(rng);
            } while (wrap_distance(scene.frequencies(0), scene.frequencies(1)) < 0.1);
            scene.powers        = RealVector::Ones(2);
            const double sigma2 = noise(rng);
            const MmvBatch y    = simulate_mmv(g, scene, n, sigma2, seed, static_cast<std::uint64_t>(t));
            const double lambda = select_lambda(sigma2, m);

            const auto cd  = sparrow_cd(d, sample_covariance(y), lambda);
            const auto l21 = l21_solve(d, y, lambda);
            const RealVector rows = l21.x.rowwise().norm() / std::sqrt(static_cast<double>(n));
            const ComplexMatrix xh = reconstruct_signal(cd.s, d, y, lambda);
            const double ds = (rows - cd.s).cwiseAbs().maxCoeff();
            const double dx = (xh - l21.x).norm() / std::max(l21.x.norm(), 1e-300);

            const auto gl  = gl_sparrow_snapshot(g, y, lambda);
            const auto anm = anm_sdp(g, y, lambda);
            const auto rep = check_anm_equivalence(gl, anm, n, lambda, tol);

            worst_s   = std::max(worst_s, ds);
            worst_x   = std::max(worst_x, dx);
            worst_u   = std::max(worst_u, rep.u_deviation);
            worst_obj = std::max(worst_obj, rep.objective_deviation);
            out << "trial " << t << ": |s - rownorm| " << ds << ", X rel " << dx << ", |u - v/sqrt(N)| "
                << rep.u_deviation << ", objective rel " << rep.objective_deviation << "\n";
        }
        // the reconstruction inherits the row-norm error, so it gets a decade of slack
        const bool pass_l21 = worst_s <= tol && worst_x <= 10.0 * tol;
        const bool pass_anm = worst_u <= tol && worst_obj <= tol;
        out << "l21 vs SPARROW: worst row-norm deviation " << worst_s << ", worst X deviation " << worst_x
            << (pass_l21 ? "  PASS" : "  FAIL") << "\n";
        out << "ANM vs gridless SPARROW: worst u deviation " << worst_u << ", worst objective deviation "
            << worst_obj << (pass_anm ? "  PASS" : "  FAIL") << "\n";
        return pass_l21 && pass_anm ? exit_ok : exit_numerical;
    });
}

} // namespace sparrow::cli
