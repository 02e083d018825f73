#include <sparrow/io.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sparrow::io
{

namespace
{

// Collects schema problems so they can be reported together.
class Checker
{
public:
    explicit Checker(std::string what) : what_(std::move(what)) {}

    void problem(const std::string& p) { problems_.push_back(p); }

    void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where)
    {
        for (const auto& item : j.items()) {
            if (!known.count(item.key())) {
                problem("unknown key '" + where + item.key() + "'");
            }
        }
    }

    template <typename T>
    std::optional<T> get(const Json& j, const std::string& key, bool required)
    {
        if (!j.contains(key)) {
            if (required) {
                problem("missing key '" + key + "'");
            }
            return std::nullopt;
        }
        try {
            return j.at(key).get<T>();
        } catch (const Json::exception&) {
            problem("key '" + key + "' has the wrong type");
            return std::nullopt;
        }
    }

    void finish() const
    {
        if (problems_.empty()) {
            return;
        }
        std::string msg = what_ + ":";
        for (const auto& p : problems_) {
            msg += "\n  - " + p;
        }
        throw InvalidArgument(msg);
    }

private:
    std::string what_;
    std::vector<std::string> problems_;
};

RealVector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const RealVector& v) { return {v.begin(), v.end()}; }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void check_version(Checker& c, const Json& j)
{
    const auto v = c.get<int>(j, "schema_version", true);
    if (v && *v != schema_version) {
        c.problem("unsupported schema_version " + std::to_string(*v));
    }
}

} // namespace

Json to_json(const ComplexMatrix& m)
{
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back({m(i, j).real(), m(i, j).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ComplexMatrix complex_matrix_from_json(const Json& j)
{
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw InvalidArgument("complex matrix must be a non-empty array of rows");
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    ComplexMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw InvalidArgument("complex matrix rows differ in length");
        }
        for (Index c = 0; c < cols; ++c) {
            const auto& e = row[c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw InvalidArgument("complex entries must be [re, im] pairs");
            }
            m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    if (!m.allFinite()) {
        throw InvalidArgument("complex matrix has non-finite entries");
    }
    return m;
}

Json batch_to_json(const BatchFile& f)
{
    Json j;
    j["schema_version"] = schema_version;
    j["kind"]           = "mmv_batch";
    j["geometry"]       = {{"positions", to_std(f.geometry.positions)}};
    if (f.scene) {
        j["scene"] = {{"frequencies", to_std(f.scene->frequencies)}, {"powers", to_std(f.scene->powers)}};
    }
    if (f.batch.noise_power) {
        j["noise_power"] = *f.batch.noise_power;
    }
    j["sensors"]   = f.batch.sensors();
    j["snapshots"] = f.batch.snapshots();
    j["Y"]         = to_json(f.batch.y);
    return j;
}

BatchFile batch_from_json(const Json& j)
{
    Checker c("invalid batch file");
    if (!j.is_object()) {
        c.problem("top level must be an object");
        c.finish();
    }
    c.reject_unknown(j, {"schema_version", "kind", "geometry", "scene", "noise_power", "sensors", "snapshots", "Y"}, "");
    check_version(c, j);
    const auto kind = c.get<std::string>(j, "kind", true);
    if (kind && *kind != "mmv_batch") {
        c.problem("kind must be 'mmv_batch'");
    }
    BatchFile f;
    if (!j.contains("geometry") || !j["geometry"].is_object()) {
        c.problem("missing object 'geometry'");
    } else {
        c.reject_unknown(j["geometry"], {"positions"}, "geometry.");
        if (const auto pos = c.get<std::vector<double>>(j["geometry"], "positions", true)) {
            f.geometry.positions = to_vector(*pos);
        }
    }
    if (j.contains("scene")) {
        if (!j["scene"].is_object()) {
            c.problem("'scene' must be an object");
        } else {
            c.reject_unknown(j["scene"], {"frequencies", "powers"}, "scene.");
            SourceScene sc;
            const auto fr = c.get<std::vector<double>>(j["scene"], "frequencies", true);
            const auto pw = c.get<std::vector<double>>(j["scene"], "powers", true);
            if (fr && pw) {
                sc.frequencies = to_vector(*fr);
                sc.powers      = to_vector(*pw);
                f.scene        = sc;
            }
        }
    }
    f.batch.noise_power = c.get<double>(j, "noise_power", false);
    const auto m = c.get<Index>(j, "sensors", true);
    const auto n = c.get<Index>(j, "snapshots", true);
    if (!j.contains("Y")) {
        c.problem("missing key 'Y'");
    } else {
        try {
            f.batch.y = complex_matrix_from_json(j["Y"]);
        } catch (const InvalidArgument& e) {
            c.problem(std::string("Y: ") + e.what());
        }
    }
    if (m && n && f.batch.y.size() > 0 && (f.batch.y.rows() != *m || f.batch.y.cols() != *n)) {
        c.problem("Y shape does not match sensors x snapshots");
    }
    if (f.geometry.positions.size() > 0 && f.batch.y.size() > 0 && f.geometry.size() != f.batch.y.rows()) {
        c.problem("geometry size does not match the rows of Y");
    }
    if (f.batch.noise_power && !(*f.batch.noise_power >= 0.0)) {
        c.problem("noise_power must be nonnegative");
    }
    c.finish();
    f.geometry.validate();
    if (f.scene) {
        f.scene->validate();
    }
    return f;
}

Json config_to_json(const ExperimentConfig& cfg)
{
    Json j;
    j["schema_version"] = schema_version;
    j["sensors"]        = cfg.sensors;
    j["frequencies"]    = to_std(cfg.frequencies);
    j["mu1"]            = cfg.mu1;
    j["snr_db"]         = cfg.snr_db;
    j["snapshots"]      = cfg.snapshots;
    j["sweep"]          = {{"variable", to_string(cfg.sweep_var)}, {"values", cfg.sweep_values}};
    j["grid_size"]      = cfg.grid_size;
    j["sdp_grid_size"]  = cfg.sdp_grid_size;
    j["trials"]         = cfg.trials;
    j["methods"]        = cfg.methods;
    j["seed"]           = cfg.seed;
    j["lambda_scale"]   = cfg.lambda_scale;
    j["record_timing"]  = cfg.record_timing;
    return j;
}

ExperimentConfig config_from_json(const Json& j)
{
    Checker c("invalid experiment config");
    if (!j.is_object()) {
        c.problem("top level must be an object");
        c.finish();
    }
    c.reject_unknown(j,
                     {"schema_version", "sensors", "frequencies", "mu1", "snr_db", "snapshots", "sweep",
                      "grid_size", "sdp_grid_size", "trials", "methods", "seed", "lambda_scale",
                      "record_timing", "description"},
                     "");
    check_version(c, j);
    ExperimentConfig cfg;
    if (auto v = c.get<Index>(j, "sensors", true)) cfg.sensors = *v;
    if (auto v = c.get<std::vector<double>>(j, "frequencies", false)) cfg.frequencies = to_vector(*v);
    if (auto v = c.get<double>(j, "mu1", false)) cfg.mu1 = *v;
    if (auto v = c.get<double>(j, "snr_db", true)) cfg.snr_db = *v;
    if (auto v = c.get<Index>(j, "snapshots", false)) cfg.snapshots = *v;
    if (auto v = c.get<Index>(j, "grid_size", false)) {
        cfg.grid_size     = *v;
        cfg.sdp_grid_size = *v;
    }
    if (auto v = c.get<Index>(j, "sdp_grid_size", false)) cfg.sdp_grid_size = *v;
    if (auto v = c.get<Index>(j, "trials", true)) cfg.trials = *v;
    if (auto v = c.get<std::vector<std::string>>(j, "methods", true)) cfg.methods = *v;
    if (auto v = c.get<std::uint64_t>(j, "seed", false)) cfg.seed = *v;
    if (auto v = c.get<double>(j, "lambda_scale", false)) cfg.lambda_scale = *v;
    if (auto v = c.get<bool>(j, "record_timing", false)) cfg.record_timing = *v;
    if (!j.contains("sweep") || !j["sweep"].is_object()) {
        c.problem("missing object 'sweep'");
    } else {
        c.reject_unknown(j["sweep"], {"variable", "values"}, "sweep.");
        if (auto v = c.get<std::string>(j["sweep"], "variable", true)) {
            try {
                cfg.sweep_var = sweep_variable_from_string(*v);
            } catch (const InvalidArgument& e) {
                c.problem(e.what());
            }
        }
        if (auto v = c.get<std::vector<double>>(j["sweep"], "values", true)) cfg.sweep_values = *v;
    }
    c.finish();
    cfg.validate();
    return cfg;
}

Json report_to_json(const MetricsReport& rep)
{
    Json j;
    j["schema_version"] = schema_version;
    j["config"]         = config_to_json(rep.config);
    Json rows           = Json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"method", r.method},
                        {"sweep_value", r.sweep_value},
                        {"bias", number_or_null(r.bias)},
                        {"std", number_or_null(r.std)},
                        {"rmse", number_or_null(r.rmse)},
                        {"resolution", number_or_null(r.resolution)},
                        {"mean_ms", r.mean_ms},
                        {"failures", r.failures},
                        {"trials", r.trials}});
    }
    j["metrics"] = rows;
    Json trials  = Json::array();
    for (const auto& t : rep.trials) {
        Json rec{{"method", t.method},
                 {"sweep_value", t.sweep_value},
                 {"trial", t.trial},
                 {"estimates", to_std(t.estimates)},
                 {"wall_ms", t.wall_ms},
                 {"status", t.ok ? "ok" : "failed"}};
        if (!t.ok) {
            rec["error"] = t.error;
        }
        trials.push_back(std::move(rec));
    }
    j["trials"] = trials;
    return j;
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open '" + path + "'");
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw InvalidArgument("failed writing '" + path + "'");
    }
}

} // namespace sparrow::io
