#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <sparrow/cli.hpp>
#include <sparrow/io.hpp>

using namespace sparrow;
namespace fs = std::filesystem;

namespace
{

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch()
{
    const fs::path dir = fs::current_path() / "cli_scratch";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("io: batch files roundtrip and reject bad input")
{
    io::BatchFile f;
    f.geometry = ArrayGeometry::ula(3);
    SourceScene sc;
    sc.frequencies = RealVector::Constant(1, 0.1);
    sc.powers      = RealVector::Ones(1);
    f.scene        = sc;
    f.batch        = simulate_mmv(f.geometry, sc, 4, 0.2, 1);
    const io::Json j = io::batch_to_json(f);
    const io::BatchFile back = io::batch_from_json(io::Json::parse(j.dump()));
    CHECK((back.batch.y - f.batch.y).norm() == 0.0);
    CHECK(back.batch.noise_power == f.batch.noise_power);
    CHECK(back.scene->frequencies == f.scene->frequencies);

    io::Json bad = j;
    bad["extra"]     = 1;
    bad["snapshots"] = 9;
    bad.erase("kind");
    try {
        io::batch_from_json(bad);
        FAIL("expected a schema error");
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("extra") != std::string::npos);
        CHECK(msg.find("kind") != std::string::npos);
        CHECK(msg.find("shape") != std::string::npos);
    }
    CHECK_THROWS_AS(io::complex_matrix_from_json(io::Json::parse("[[1, 2]]")), InvalidArgument);
}

TEST_CASE("io: experiment configs")
{
    ExperimentConfig c;
    c.frequencies  = (RealVector(2) << 0.35, 0.5).finished();
    c.sweep_values = {10, 20};
    c.methods      = {"gl-sparrow", "crb"};
    c.trials       = 3;
    const ExperimentConfig back = io::config_from_json(io::config_to_json(c));
    CHECK(back.frequencies == c.frequencies);
    CHECK(back.methods == c.methods);
    CHECK(back.trials == 3);
    io::Json j = io::config_to_json(c);
    j["unknown"] = true;
    CHECK_THROWS_AS(io::config_from_json(j), InvalidArgument);
}

TEST_CASE("usage errors")
{
    CHECK(invoke({}).code == cli::exit_usage);
    CHECK(invoke({"frobnicate"}).code == cli::exit_usage);
    CHECK(invoke({"simulate", "--help"}).code == cli::exit_ok);
}

TEST_CASE("simulate")
{
    const fs::path dir = scratch();
    const std::string y1 = (dir / "y1.json").string(), y2 = (dir / "y2.json").string();
    auto r = invoke({"simulate", "--ula", "6", "--freqs", "0.35,0.5", "--snr", "3", "--n", "50", "--seed", "7", "--out", y1});
    REQUIRE(r.code == 0);
    const auto f = io::batch_from_json(io::read_json_file(y1));
    CHECK(f.batch.sensors() == 6);
    CHECK(f.batch.snapshots() == 50);
    REQUIRE(f.batch.noise_power.has_value());
    CHECK(*f.batch.noise_power == doctest::Approx(std::pow(10.0, -0.3)));

    r = invoke({"simulate", "--ula", "6", "--freqs", "0.35,0.5", "--snr", "3", "--n", "50", "--seed", "7", "--out", y2});
    CHECK(slurp(y1) == slurp(y2));

    r = invoke({"simulate", "--ula", "6", "--freqs", "0.35,0.5", "--snr", "3", "--n", "50", "--seed", "7"});
    CHECK(r.code == cli::exit_usage);
    r = invoke({"simulate", "--freqs", "0.3", "--snr", "3", "--n", "5", "--seed", "1", "--out", y2});
    CHECK(r.code == cli::exit_usage);
}

TEST_CASE("estimate")
{
    const fs::path dir = scratch();
    const std::string y = (dir / "clean.json").string();
    REQUIRE(invoke({"simulate", "--ula", "6", "--freqs", "0.25", "--sigma2", "0", "--n", "20", "--seed", "2", "--out", y})
                .code == 0);
    auto r = invoke({"estimate", "--in", y, "--method", "gl-sparrow", "--lambda", "1e-3"});
    REQUIRE(r.code == 0);
    const io::Json rep = io::Json::parse(r.out);
    REQUIRE(rep["frequencies"].size() == 1);
    CHECK(rep["frequencies"][0].get<double>() == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(rep["model_order"] == 1);

    r = invoke({"estimate", "--in", y, "--method", "esprit", "--lambda", "1"});
    CHECK(r.code == cli::exit_usage);
    CHECK(r.err.find("root-music") != std::string::npos);

    // a file without the noise power cannot drive the lambda heuristic
    io::Json j = io::read_json_file(y);
    j.erase("noise_power");
    const std::string bare = (dir / "bare.json").string();
    io::write_text_file(bare, j.dump());
    r = invoke({"estimate", "--in", bare, "--method", "sparrow-cd", "--lambda", "auto"});
    CHECK(r.code == cli::exit_usage);
    CHECK(r.err.find("explicit") != std::string::npos);

    const std::string out = (dir / "est.json").string();
    r = invoke({"estimate", "--in", y, "--method", "root-music", "--order", "1", "--out", out});
    CHECK(r.code == 0);
    CHECK(io::read_json_file(out)["frequencies"][0].get<double>() == doctest::Approx(0.25));
}

TEST_CASE("bench runs a shipped preset and is reproducible")
{
    const fs::path dir = scratch();
    io::Json cfg = io::read_json_file(std::string(PRESET_DIR) + "/fig5_desk.json");
    cfg["trials"]           = 2;
    cfg["sweep"]["values"]  = {20};
    cfg["sdp_grid_size"]    = 60;
    const std::string path = (dir / "mini.json").string();
    io::write_text_file(path, cfg.dump());

    auto r = invoke({"bench", "--config", path, "--out-dir", (dir / "a").string(), "--no-timing"});
    REQUIRE(r.code == 0);
    const std::string metrics = slurp(dir / "a" / "mini_metrics.csv");
    for (const auto& m : cfg["methods"]) {
        CHECK(metrics.find(m.get<std::string>() + ",20") != std::string::npos);
    }
    r = invoke({"bench", "--config", path, "--out-dir", (dir / "b").string(), "--no-timing"});
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "a" / "mini_trials.csv") == slurp(dir / "b" / "mini_trials.csv"));
    CHECK(slurp(dir / "a" / "mini.json") == slurp(dir / "b" / "mini.json"));

    cfg["trials"] = 0;
    io::write_text_file(path, cfg.dump());
    r = invoke({"bench", "--config", path, "--out-dir", (dir / "c").string()});
    CHECK(r.code == cli::exit_usage);
    CHECK(r.err.find("trials") != std::string::npos);
}

TEST_CASE("equiv")
{
    auto r = invoke({"equiv"});
    CHECK(r.code == cli::exit_ok);
    CHECK(r.out.find("FAIL") == std::string::npos);
    r = invoke({"equiv", "--tol", "1e-14", "--trials", "2"});
    CHECK(r.code == cli::exit_numerical);
    CHECK(r.out.find("FAIL") != std::string::npos);
    CHECK(invoke({"equiv", "--trials", "0"}).code == cli::exit_usage);
}
