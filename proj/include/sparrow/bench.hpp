#ifndef SPARROW_BENCH_HPP
#define SPARROW_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <sparrow/model.hpp>

namespace sparrow
{

/// min_i |a - b + 2i|
double wrap_distance(double a, double b);

///
/// Pairs estimates with the true frequencies. Keeps the L strongest
/// estimates when there are too many, pads with uniform random frequencies
/// when there are too few, then assigns by minimum total wrap distance.
/// Entry l of the result is the estimate paired with truth(l).
///
RealVector match_estimates(const RealVector& truth, const RealVector& estimates,
                           const RealVector& magnitudes, std::mt19937_64& rng);

/// Matched estimates, one row per trial and one column per source.
using TrialMatrix = RealMatrix;

/// sqrt(sum_l (mu_l - mean_t est_l)^2 / L)
double bias(const TrialMatrix& trials, const RealVector& truth);
/// sqrt(sum_l sum_t |mean_t est_l - est_l(t)|_wa^2 / (T L))
double std_wa(const TrialMatrix& trials, const RealVector& truth);
/// sqrt(sum_l sum_t |mu_l - est_l(t)|_wa^2 / (T L))
double rmse(const TrialMatrix& trials, const RealVector& truth);
/// Fraction of trials with sum_l |mu_l - est_l|_wa <= |mu_1 - mu_2|_wa. Needs L = 2.
double resolution_fraction(const TrialMatrix& trials, const RealVector& truth);

/// Estimation methods understood by estimate_frequencies.
const std::vector<std::string>& method_names();
bool is_grid_method(const std::string& method);
bool is_gridless_method(const std::string& method);

struct EstimateInput
{
    ArrayGeometry geometry;
    MmvBatch batch;
    double lambda    = 0.0; ///< needed by the sparse methods
    Index order      = 0;   ///< source count for music / root-music
    Index grid_size  = 1000;
};

struct Estimate
{
    RealVector frequencies;
    RealVector magnitudes;
    Index model_order  = 0;
    double objective   = 0.0;
    bool has_objective = false;
    bool low_confidence = false;
};

/// Runs one method by name. Throws InvalidArgument for unknown names.
Estimate estimate_frequencies(const std::string& method, const EstimateInput& in);

enum class SweepVariable
{
    snapshots,
    snr_db,
    delta_mu
};

std::string to_string(SweepVariable v);
SweepVariable sweep_variable_from_string(const std::string& s);

struct ExperimentConfig
{
    Index sensors = 6;
    RealVector frequencies; ///< fixed scene (unused for delta_mu sweeps)
    double mu1    = 0.5;    ///< delta_mu sweeps place sources at mu1 and mu1 - delta
    double snr_db = 10.0;   ///< SNR = 1 / sigma^2 with unit source powers
    Index snapshots = 50;
    SweepVariable sweep_var = SweepVariable::snapshots;
    std::vector<double> sweep_values;
    Index grid_size     = 1000;
    Index sdp_grid_size = 1000; ///< grid for sparrow-sdp, spice-us, spice-os
    Index trials        = 100;
    std::vector<std::string> methods;
    std::uint64_t seed  = 1;
    double lambda_scale = 1.0;  ///< lambda = scale * sqrt(sigma^2 M ln M)
    bool record_timing  = true; ///< false writes wall_ms = 0 for reproducible files

    void validate() const;
};

struct TrialRecord
{
    std::string method;
    double sweep_value = 0.0;
    Index trial        = 0;
    RealVector estimates; ///< matched, one per source
    double wall_ms     = 0.0;
    bool ok            = true;
    std::string error;
};

struct MetricsRow
{
    std::string method;
    double sweep_value = 0.0;
    double bias        = 0.0;
    double std         = 0.0;
    double rmse        = 0.0;
    double resolution  = 0.0; ///< NaN unless two sources
    double mean_ms     = 0.0;
    Index failures     = 0;
    Index trials       = 0;
};

struct MetricsReport
{
    ExperimentConfig config;
    std::vector<TrialRecord> trials;
    std::vector<MetricsRow> rows;

    const MetricsRow& row(const std::string& method, double sweep_value) const;
};

/// Scene (frequencies, sigma2, snapshots) of one sweep point.
struct SweepPoint
{
    RealVector frequencies;
    double sigma2   = 1.0;
    Index snapshots = 1;
};

SweepPoint sweep_point(const ExperimentConfig& cfg, double value);

MetricsReport run_experiment(const ExperimentConfig& cfg);

void write_trials_csv(std::ostream& os, const MetricsReport& rep);
void write_metrics_csv(std::ostream& os, const MetricsReport& rep);

} // namespace sparrow

#endif // SPARROW_BENCH_HPP
