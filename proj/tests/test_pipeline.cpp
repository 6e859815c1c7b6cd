#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ssmred/integrate.hpp"
#include "ssmred/io.hpp"
#include "ssmred/pipeline.hpp"

using namespace ssmred;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel = "") const {
        return (rel.empty() ? path : path / rel).string();
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

std::string chain_config(const std::string& out_dir, const std::string& extra = "") {
    return R"({
  "model": {"type": "chain", "n_masses": 2, "stiffness": [1, 1, 1],
            "cubic": [0.5, 0.5, 0.5], "alpha": 0.01, "beta": 0.002},
  "chart": {"modes": [0], "style": "modal-complex", "order": 3, "h_order": 3},
  "train": {"amplitudes": [0.3], "t_end": 100.0, "dt": 0.05, "seed": 1},
  "forcing": {"f0": [1.0, 0.0], "eps_list": [0.002],
              "omega_lo": 0.9, "omega_hi": 1.1},
  "predict": {"rho_max": 0.2, "n_rho": 5},
  "out": ")" + out_dir + "\"" + extra + "\n}\n";
}

}  // namespace

TEST_CASE("load_config") {
    TempDir dir("ssmred_cfg_test");
    std::string cfg_path = dir.str("config.json");

    SUBCASE("a complete chain config parses with defaults filled in") {
        write_file(cfg_path, chain_config(dir.str("out")));
        PipelineConfig cfg = load_config(cfg_path);
        CHECK(cfg.model_type == "chain");
        CHECK(cfg.n_masses == 2);
        CHECK(cfg.stiffness.size() == 3);
        CHECK(cfg.modes == std::vector<int>{0});
        CHECK(cfg.style == ChartStyle::ModalComplex);
        CHECK(cfg.order == 3);
        CHECK(cfg.h_order == 3);
        CHECK(cfg.strategy == 2);       // default
        CHECK(cfg.test_scale == 0.95);  // default
        CHECK(cfg.seed == 1);
        CHECK(cfg.eps_list == std::vector<double>{0.002});
        CHECK(cfg.rho_max == 0.2);
        CHECK(cfg.out_dir == dir.str("out"));
        CHECK_FALSE(cfg.raw.empty());
    }
    SUBCASE("malformed JSON is a config error") {
        write_file(cfg_path, "{not json");
        CHECK_THROWS_AS(load_config(cfg_path), ConfigError);
    }
    SUBCASE("missing file is a config error") {
        CHECK_THROWS_AS(load_config(dir.str("nope.json")), ConfigError);
    }
    SUBCASE("missing required sections are config errors") {
        write_file(cfg_path, R"({"model": {"type": "chain"}})");
        CHECK_THROWS_AS(load_config(cfg_path), ConfigError);
    }
    SUBCASE("semantic validation") {
        auto rejects = [&](const std::string& needle, const std::string& repl) {
            std::string body = chain_config(dir.str("out"));
            body.replace(body.find(needle), needle.size(), repl);
            write_file(cfg_path, body);
            CHECK_THROWS_AS(load_config(cfg_path), ConfigError);
        };
        rejects("\"modes\": [0]", "\"modes\": []");
        rejects("\"order\": 3", "\"order\": 1");
        rejects("\"amplitudes\": [0.3]", "\"amplitudes\": [0.0]");
        rejects("\"amplitudes\": [0.3]", "\"amplitudes\": []");
        rejects("\"dt\": 0.05", "\"dt\": -1.0");
        rejects("\"style\": \"modal-complex\"", "\"style\": \"banana\"");
        rejects("\"t_end\": 100.0", "\"t_end\": 0.0");
    }
    SUBCASE("unknown strategy is rejected") {
        write_file(cfg_path,
                   chain_config(dir.str("out"), ",\n  \"ignored\": 0"));
        std::string body = chain_config(dir.str("out"));
        body.replace(body.find("\"amplitudes\""), 0, "\"strategy\": 3, ");
        write_file(cfg_path, body);
        CHECK_THROWS_AS(load_config(cfg_path), ConfigError);
    }
}

TEST_CASE("apply_overrides") {
    TempDir dir("ssmred_ovr_test");
    std::string cfg_path = dir.str("config.json");
    write_file(cfg_path, chain_config(dir.str("out")));
    PipelineConfig cfg = load_config(cfg_path);

    SUBCASE("negative or empty overrides are no-ops") {
        PipelineConfig before = cfg;
        apply_overrides(cfg, "", -1, "", -1);
        CHECK(cfg.out_dir == before.out_dir);
        CHECK(cfg.order == before.order);
        CHECK(cfg.style == before.style);
        CHECK(cfg.seed == before.seed);
        CHECK(cfg.raw == before.raw);
    }
    SUBCASE("explicit overrides land in both the struct and the snapshot") {
        apply_overrides(cfg, dir.str("elsewhere"), 5, "modal-mechanical", 42);
        CHECK(cfg.out_dir == dir.str("elsewhere"));
        CHECK(cfg.order == 5);
        CHECK(cfg.style == ChartStyle::ModalMechanical);
        CHECK(cfg.seed == 42);
        CHECK(cfg.raw.find("modal-mechanical") != std::string::npos);
        CHECK(cfg.raw.find("\"seed\": 42") != std::string::npos);
    }
    SUBCASE("seed 0 is a valid override") {
        apply_overrides(cfg, "", -1, "", 0);
        CHECK(cfg.seed == 0);
    }
    SUBCASE("invalid order override is rejected") {
        CHECK_THROWS_AS(apply_overrides(cfg, "", 1, "", -1), ConfigError);
    }
}

TEST_CASE("build_model from matrix files") {
    TempDir dir("ssmred_mat_test");
    Mat M = Mat::Identity(2, 2);
    Mat K(2, 2);
    K << 2.0, -1.0, -1.0, 2.0;
    Mat C = 0.01 * M + 0.002 * K;
    write_matrix_market(M, dir.str("M.mtx"));
    write_matrix_market(C, dir.str("C.mtx"));
    write_matrix_market(K, dir.str("K.mtx"));
    write_file(dir.str("config.json"), R"({
  "model": {"type": "matrices", "M": ")" + dir.str("M.mtx") + R"(",
            "C": ")" + dir.str("C.mtx") + R"(", "K": ")" + dir.str("K.mtx") + R"(",
            "force_terms": [[0, 0, 0, 0, 0.5]], "observable_dof": 1},
  "chart": {"modes": [0]},
  "train": {"amplitudes": [0.2], "t_end": 10.0, "dt": 0.1},
  "out": ")" + dir.str("out") + R"("
})");
    PipelineConfig cfg = load_config(dir.str("config.json"));
    MechModel model = build_model(cfg);
    CHECK(model.n() == 2);
    CHECK((model.K() - K).cwiseAbs().maxCoeff() == 0.0);
    CHECK(model.observable_dof() == 1);
    // the cubic force term is active
    Vec q(2), qd = Vec::Zero(2);
    q << 0.5, 0.0;
    CHECK(model.f_int(q)(0) == doctest::Approx(0.5 * 0.125));  // nonlinear part
}

TEST_CASE("polymap persistence helpers") {
    TempDir dir("ssmred_pm_test");
    auto table = monomial_exponents(2, 2, 3);
    CMat coeffs = CMat::Random(4, static_cast<Eigen::Index>(table.size()));
    PolyMap map(2, 4, table, coeffs);
    save_polymap(map, dir.str("map.txt"));
    PolyMap back = load_polymap(dir.str("map.txt"));
    CHECK(back.table() == map.table());
    CHECK((back.coeffs() - map.coeffs()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(load_polymap(dir.str("missing.txt")), IoError);
}

TEST_CASE("end-to-end: eig, generate, fit, predict on a small chain") {
    TempDir dir("ssmred_e2e_test");
    std::string out = dir.str("out");
    write_file(dir.str("config.json"), chain_config(out));
    PipelineConfig cfg = load_config(dir.str("config.json"));

    cmd_eig(cfg);
    CHECK(fs::exists(out + "/resolved_config.json"));
    {
        std::ifstream is(out + "/eig_report.csv");
        std::string header;
        std::getline(is, header);
        CHECK(header ==
              "mode,re_lambda,im_lambda,freq_rad_s,freq_hz,damping_ratio,spectral_gap");
        int rows = 0;
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 2);
    }
    CHECK(fs::exists(out + "/resonances.csv"));

    cmd_generate(cfg);
    CHECK(fs::exists(out + "/train_0.csv"));
    CHECK(fs::exists(out + "/test_0.csv"));
    {
        Trajectory tr = read_trajectory_csv(out + "/train_0.csv");
        Trajectory te = read_trajectory_csv(out + "/test_0.csv");
        CHECK(tr.states.rows() == 4);
        CHECK(tr.times.front() == 0.0);
        CHECK(tr.times.back() == doctest::Approx(100.0));
        // test trajectories are scaled-down initial conditions
        MechModel model = build_model(cfg);
        Vec x_tr = modal_initial_condition(model, {{0, 0.3}});
        Vec x_te = modal_initial_condition(model, {{0, 0.95 * 0.3}});
        CHECK((tr.states.col(0) - x_tr).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((te.states.col(0) - x_te).cwiseAbs().maxCoeff() < 1e-14);
    }

    cmd_fit(cfg);
    for (const char* f : {"chart.txt", "v_nl.txt", "r_nl.txt", "normal_form.txt",
                          "fit_report.csv"})
        CHECK(fs::exists(out + "/" + std::string(f)));
    SsmRom rom = load_rom(cfg);
    CHECK(rom.nf.m() == 1);
    CHECK(rom.chart.m() == 1);
    CHECK(rom.nf.conjugacy_residual < 1e-2);
    {
        // fit report carries a small test-set NMTE
        std::ifstream is(out + "/fit_report.csv");
        std::string line;
        bool found = false;
        while (std::getline(is, line)) {
            if (line.rfind("test_nmte_0,", 0) == 0) {
                found = true;
                CHECK(std::stod(line.substr(line.find(',') + 1)) < 1.0);
            }
        }
        CHECK(found);
    }

    cmd_predict(cfg);
    CHECK(fs::exists(out + "/backbone.csv"));
    CHECK(fs::exists(out + "/frc_0.csv"));
    {
        std::ifstream is(out + "/backbone.csv");
        std::string header;
        std::getline(is, header);
        CHECK(header == "rho,omega_rad_s,omega_hz,alpha,amp");
        int rows = 0;
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 5);
    }
}

TEST_CASE("generate strategy 1 releases from the static equilibrium") {
    TempDir dir("ssmred_s1_test");
    std::string out = dir.str("out");
    write_file(dir.str("config.json"), R"({
  "model": {"type": "chain", "n_masses": 2, "stiffness": [1, 1, 1],
            "cubic": [0.5, 0.5, 0.5], "alpha": 0.01, "beta": 0.002},
  "chart": {"modes": [0]},
  "train": {"strategy": 1, "amplitudes": [0.4], "t_end": 1.0, "dt": 0.5},
  "forcing": {"f0": [1.0, 0.5]},
  "out": ")" + out + R"("
})");
    PipelineConfig cfg = load_config(dir.str("config.json"));
    cmd_generate(cfg);
    MechModel model = build_model(cfg);
    Vec q = static_solve(model, 0.4 * cfg.f0);
    Trajectory tr = read_trajectory_csv(out + "/train_0.csv");
    CHECK((tr.states.col(0).head(2) - q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(tr.states.col(0).tail(2).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("strategy 1 without a load pattern is a config error") {
        PipelineConfig bad = cfg;
        bad.f0 = Vec();
        CHECK_THROWS_AS(cmd_generate(bad), ConfigError);
    }
}

TEST_CASE("fit without generated data is a config error") {
    TempDir dir("ssmred_nofit_test");
    std::string out = dir.str("out");
    write_file(dir.str("config.json"), chain_config(out));
    PipelineConfig cfg = load_config(dir.str("config.json"));
    fs::create_directories(out);
    CHECK_THROWS_AS(cmd_fit(cfg), ConfigError);
}
