#include "ssmred/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ssmred/forcing.hpp"
#include "ssmred/integrate.hpp"
#include "ssmred/io.hpp"
#include "ssmred/manifold_fit.hpp"
#include "ssmred/normal_form.hpp"
#include "ssmred/trajectory_data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ssmred {

namespace {

Vec vec_from_json(const json& j) {
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

ChartStyle style_from_string(const std::string& s) {
    if (s == "modal-complex") return ChartStyle::ModalComplex;
    if (s == "modal-mechanical") return ChartStyle::ModalMechanical;
    if (s == "non-modal") return ChartStyle::NonModal;
    throw ConfigError("unknown chart style '" + s + "'");
}

std::string style_to_string(ChartStyle s) {
    switch (s) {
        case ChartStyle::ModalComplex: return "modal-complex";
        case ChartStyle::ModalMechanical: return "modal-mechanical";
        case ChartStyle::NonModal: return "non-modal";
    }
    return "modal-complex";
}

json parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return j;
}

void write_snapshot(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/resolved_config.json");
    os << cfg.raw << "\n";
}

std::string path_in(const PipelineConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/" + name;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    json j = parse_file(path);
    PipelineConfig cfg;
    try {
        const auto& jm = j.at("model");
        cfg.model_type = jm.at("type").get<std::string>();
        if (cfg.model_type == "chain") {
            cfg.n_masses = jm.at("n_masses").get<int>();
            cfg.stiffness = vec_from_json(jm.at("stiffness"));
            cfg.cubic = vec_from_json(jm.at("cubic"));
            cfg.alpha = jm.value("alpha", 0.0);
            cfg.beta = jm.value("beta", 0.0);
        } else if (cfg.model_type == "matrices") {
            cfg.M_path = jm.at("M").get<std::string>();
            cfg.C_path = jm.at("C").get<std::string>();
            cfg.K_path = jm.at("K").get<std::string>();
            if (jm.contains("force_terms"))
                for (const auto& t : jm["force_terms"])
                    cfg.force_terms.push_back({t.at(0).get<int>(), t.at(1).get<int>(),
                                               t.at(2).get<int>(), t.at(3).get<int>(),
                                               t.at(4).get<double>()});
        } else {
            throw ConfigError("model.type must be 'chain' or 'matrices'");
        }
        cfg.observable_dof = jm.value("observable_dof", 0);

        const auto& jc = j.at("chart");
        cfg.modes = jc.at("modes").get<std::vector<int>>();
        cfg.style = style_from_string(jc.value("style", "modal-complex"));
        cfg.order = jc.value("order", 3);
        cfg.h_order = jc.value("h_order", cfg.order);
        cfg.nonmodal_dof = jc.value("nonmodal_dof", 0);
        cfg.n_pairs_keep = jc.value("n_pairs_keep", 0);

        const auto& jt = j.at("train");
        cfg.strategy = jt.value("strategy", 2);
        cfg.amplitudes = jt.at("amplitudes").get<std::vector<double>>();
        cfg.t_end = jt.at("t_end").get<double>();
        cfg.dt = jt.at("dt").get<double>();
        cfg.tol = jt.value("tol", 1e-10);
        cfg.transient_periods = jt.value("transient_periods", 1.0);
        cfg.stride = jt.value("stride", 1);
        cfg.test_scale = jt.value("test_scale", 0.95);
        cfg.seed = jt.value("seed", 0UL);
        cfg.ridge = jt.value("ridge", 0.0);

        if (j.contains("forcing")) {
            const auto& jf = j["forcing"];
            if (jf.contains("f0")) cfg.f0 = vec_from_json(jf["f0"]);
            cfg.eps_list = jf.value("eps_list", std::vector<double>{});
            cfg.omega_lo = jf.value("omega_lo", 0.0);
            cfg.omega_hi = jf.value("omega_hi", 0.0);
            cfg.n_validate = jf.value("n_validate", 6);
            cfg.sim_omegas = jf.value("sim_omegas", std::vector<double>{});
            cfg.sim_t_end = jf.value("sim_t_end", 0.0);
            cfg.correction_modes = jf.value("correction_modes", 0);
        }
        if (j.contains("predict")) {
            const auto& jp = j["predict"];
            cfg.rho_max = jp.value("rho_max", 0.0);
            cfg.n_rho = jp.value("n_rho", 40);
        }
        cfg.out_dir = j.value("out", "out");
    } catch (const json::exception& e) {
        throw ConfigError("config field error: " + std::string(e.what()));
    }

    // validation
    if (cfg.modes.empty()) throw ConfigError("chart.modes must not be empty");
    if (cfg.order < 2) throw ConfigError("chart.order must be >= 2");
    if (cfg.strategy != 1 && cfg.strategy != 2)
        throw ConfigError("train.strategy must be 1 or 2");
    if (cfg.amplitudes.empty()) throw ConfigError("train.amplitudes must not be empty");
    for (double a : cfg.amplitudes)
        if (a == 0.0) throw ConfigError("train.amplitudes must be nonzero");
    if (cfg.t_end <= 0.0 || cfg.dt <= 0.0)
        throw ConfigError("train.t_end and train.dt must be positive");

    cfg.raw = j.dump(2);
    return cfg;
}

void apply_overrides(PipelineConfig& cfg, const std::string& out_dir, int order,
                     const std::string& style, long seed) {
    json j = json::parse(cfg.raw);
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
        j["out"] = out_dir;
    }
    if (order > 0) {
        if (order < 2) throw ConfigError("--order must be >= 2");
        cfg.order = order;
        j["chart"]["order"] = order;
    }
    if (!style.empty()) {
        cfg.style = style_from_string(style);
        j["chart"]["style"] = style;
    }
    if (seed >= 0) {
        cfg.seed = static_cast<unsigned long>(seed);
        j["train"]["seed"] = cfg.seed;
    }
    cfg.raw = j.dump(2);
}

MechModel build_model(const PipelineConfig& cfg) {
    if (cfg.model_type == "chain") {
        MechModel model = build_oscillator_chain(cfg.n_masses, cfg.stiffness,
                                                 cfg.cubic, cfg.alpha, cfg.beta);
        model.set_observable_dof(cfg.observable_dof);
        return model;
    }
    MechModel model(read_matrix_market(cfg.M_path), read_matrix_market(cfg.C_path),
                    read_matrix_market(cfg.K_path), cfg.force_terms);
    model.set_observable_dof(cfg.observable_dof);
    return model;
}

namespace {

Spectrum spectrum_for(const PipelineConfig& cfg, const MechModel& model) {
    int keep = cfg.n_pairs_keep > 0 ? cfg.n_pairs_keep : model.n();
    return compute_spectrum(model, keep);
}

ChartBasis chart_for(const PipelineConfig& cfg, const MechModel& model,
                     const Spectrum& spectrum) {
    if (cfg.style == ChartStyle::NonModal) {
        Mat proj = dof_selector_projection(cfg.nonmodal_dof, model.n());
        return build_chart(spectrum, cfg.modes, cfg.style, &proj);
    }
    return build_chart(spectrum, cfg.modes, cfg.style);
}

}  // namespace

void cmd_eig(const PipelineConfig& cfg) {
    write_snapshot(cfg);
    MechModel model = build_model(cfg);
    Spectrum sp = spectrum_for(cfg, model);

    std::ofstream os(path_in(cfg, "eig_report.csv"));
    os << "mode,re_lambda,im_lambda,freq_rad_s,freq_hz,damping_ratio,spectral_gap\n";
    for (int j = 0; j < sp.n_pairs(); ++j) {
        Complex lam = sp.lambda(j);
        double wn = std::abs(lam);
        double gap = (j + 1 < sp.n_pairs()) ? spectral_gap(sp, j + 1) : 0.0;
        os << j << "," << format_double(lam.real()) << "," << format_double(lam.imag())
           << "," << format_double(lam.imag()) << ","
           << format_double(lam.imag() / (2.0 * M_PI)) << ","
           << format_double(-lam.real() / wn) << "," << format_double(gap) << "\n";
    }
    os.close();

    auto hits = detect_internal_resonance(sp, 5, 0.02);
    std::ofstream rs(path_in(cfg, "resonances.csv"));
    rs << "mode_i,mode_j,p,q,detuning\n";
    for (const auto& h : hits)
        rs << h.mode_i << "," << h.mode_j << "," << h.p << "," << h.q << ","
           << format_double(h.detuning) << "\n";
}

void cmd_generate(const PipelineConfig& cfg) {
    write_snapshot(cfg);
    MechModel model = build_model(cfg);
    const int m = static_cast<int>(cfg.modes.size());

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto initial_state = [&](int mode, double amp) {
        if (cfg.strategy == 1) {
            if (cfg.f0.size() != model.n())
                throw ConfigError("strategy 1 needs forcing.f0 as the static load pattern");
            Vec q = static_solve(model, amp * cfg.f0);
            Vec x0 = Vec::Zero(2 * model.n());
            x0.head(model.n()) = q;
            return x0;
        }
        return modal_initial_condition(model, {{mode, amp}});
    };

    struct Plan { Vec x0; std::string name; };
    std::vector<Plan> plans;
    int idx = 0;
    for (double amp : cfg.amplitudes) {
        if (m == 1) {
            plans.push_back({initial_state(cfg.modes[0], amp),
                             "train_" + std::to_string(idx)});
            plans.push_back({initial_state(cfg.modes[0], cfg.test_scale * amp),
                             "test_" + std::to_string(idx)});
        } else {
            // multi-mode chart: one trajectory per mode plus a seeded random
            // convex combination, and a scaled copy of each for testing
            std::vector<std::pair<int, double>> combo;
            std::string suffix;
            for (int mi = 0; mi < m; ++mi) {
                plans.push_back({initial_state(cfg.modes[static_cast<std::size_t>(mi)], amp),
                                 "train_" + std::to_string(idx) + "_m" + std::to_string(mi)});
                combo.push_back({cfg.modes[static_cast<std::size_t>(mi)], unif(rng) * amp});
            }
            plans.push_back({modal_initial_condition(model, combo),
                             "train_" + std::to_string(idx) + "_rand"});
            for (int mi = 0; mi < m; ++mi)
                plans.push_back(
                    {initial_state(cfg.modes[static_cast<std::size_t>(mi)], cfg.test_scale * amp),
                     "test_" + std::to_string(idx) + "_m" + std::to_string(mi)});
            std::vector<std::pair<int, double>> combo_test = combo;
            for (auto& [mi, a] : combo_test) a *= cfg.test_scale;
            plans.push_back({modal_initial_condition(model, combo_test),
                             "test_" + std::to_string(idx) + "_rand"});
        }
        ++idx;
    }

    for (const auto& plan : plans) {
        Trajectory traj = integrate(model, nullptr, plan.x0, 0.0, cfg.t_end,
                                    cfg.tol, cfg.dt);
        traj.stride_full = cfg.stride;
        write_trajectory_csv(traj, path_in(cfg, plan.name + ".csv"));
    }
}

namespace {

ReducedDataset load_dataset(const PipelineConfig& cfg, const MechModel& model,
                            const ChartBasis& chart) {
    ReducedDataset ds;
    ds.m = chart.m();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
        std::string name = entry.path().filename().string();
        if (entry.path().extension() == ".csv" &&
            (name.rfind("train_", 0) == 0 || name.rfind("test_", 0) == 0))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ConfigError("no trajectory files in " + cfg.out_dir + "; run generate first");
    for (const auto& file : files) {
        Trajectory traj = read_trajectory_csv(file.string());
        traj = truncate_transient(traj, chart, cfg.transient_periods);
        ds.trajectories.push_back(project(traj, chart, model, cfg.stride));
        ds.split.push_back(file.filename().string().rfind("train_", 0) == 0 ? "train"
                                                                            : "test");
    }
    differentiate(ds);
    return ds;
}

}  // namespace

void save_polymap(const PolyMap& map, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    map.save(os);
}

PolyMap load_polymap(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return PolyMap::load(is);
}

SsmRom load_rom(const PipelineConfig& cfg) {
    SsmRom rom;
    rom.chart = load_chart(path_in(cfg, "chart.txt"));
    rom.v_nl = load_polymap(path_in(cfg, "v_nl.txt"));
    rom.r_nl = load_polymap(path_in(cfg, "r_nl.txt"));
    rom.nf = load_normal_form(path_in(cfg, "normal_form.txt"));
    return rom;
}

void cmd_fit(const PipelineConfig& cfg) {
    write_snapshot(cfg);
    MechModel model = build_model(cfg);
    Spectrum sp = spectrum_for(cfg, model);
    ChartBasis chart = chart_for(cfg, model, sp);
    ReducedDataset ds = load_dataset(cfg, model, chart);

    FitReport vrep, rrep;
    PolyMap v_nl = fit_parametrization(ds, chart, cfg.order, cfg.ridge, &vrep);
    PolyMap r_nl = fit_reduced_dynamics(ds, chart, cfg.order, cfg.ridge, &rrep);

    ResonanceStructure st = select_resonant_terms(chart.lambdas, cfg.order);
    NormalFormModel nf = fit_normal_form(ds, chart, st, cfg.h_order);

    save_chart(chart, path_in(cfg, "chart.txt"));
    save_polymap(v_nl, path_in(cfg, "v_nl.txt"));
    save_polymap(r_nl, path_in(cfg, "r_nl.txt"));
    save_normal_form(nf, path_in(cfg, "normal_form.txt"));

    // test-set NMTE: replay each test trajectory through the autonomous ROM
    SsmRom rom{chart, v_nl, r_nl, nf};
    std::ofstream os(path_in(cfg, "fit_report.csv"));
    os << "quantity,value\n";
    os << "param_residual," << format_double(vrep.residual) << "\n";
    os << "param_w0vnl_max," << format_double(vrep.w0_vnl_max) << "\n";
    os << "dynamics_residual," << format_double(rrep.residual) << "\n";
    os << "conjugacy_residual," << format_double(nf.conjugacy_residual) << "\n";
    int ti = 0;
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        if (ds.split[i] != "test") continue;
        const auto& rt = ds.trajectories[i];
        Trajectory ref;
        ref.times = rt.t_full;
        ref.states = rt.x_full;
        Vec x0 = rt.x_full.col(0);
        Trajectory pred = simulate_rom(rom, sp, model, nullptr, x0, ref.times.front(),
                                       ref.times.back(), cfg.dt * cfg.stride, cfg.tol);
        os << "test_nmte_" << ti++ << "," << format_double(nmte(pred, ref)) << "\n";
    }
}

void cmd_predict(const PipelineConfig& cfg) {
    write_snapshot(cfg);
    MechModel model = build_model(cfg);
    Spectrum sp = spectrum_for(cfg, model);
    SsmRom rom = load_rom(cfg);

    if (cfg.rho_max > 0.0 && rom.nf.m() == 1) {
        BackboneCurve bb = backbone(rom, model, cfg.rho_max, cfg.n_rho);
        std::ofstream os(path_in(cfg, "backbone.csv"));
        os << "rho,omega_rad_s,omega_hz,alpha,amp\n";
        for (const auto& s : bb.samples)
            os << format_double(s.rho) << "," << format_double(s.omega) << ","
               << format_double(s.omega / (2.0 * M_PI)) << ","
               << format_double(s.alpha) << "," << format_double(s.amp) << "\n";
    }

    if (!cfg.eps_list.empty() && cfg.omega_hi > cfg.omega_lo) {
        if (cfg.f0.size() != model.n())
            throw ConfigError("predict: forcing.f0 required for FRC");
        for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
            ForcedResponseProblem prob{&rom, &sp, &model, cfg.f0, cfg.eps_list[e]};
            FrcOptions opt;
            opt.correction_modes = cfg.correction_modes;
            FRCBranch branch = continue_frc(prob, cfg.omega_lo, cfg.omega_hi, opt);
            std::ofstream os(path_in(cfg, "frc_" + std::to_string(e) + ".csv"));
            os << "omega_rad_s,omega_hz,amp,phase,stability,fold";
            for (int k = 0; k < rom.nf.m(); ++k) os << ",rho_" << k;
            os << "\n";
            for (const auto& pt : branch.points) {
                os << format_double(pt.Omega) << ","
                   << format_double(pt.Omega / (2.0 * M_PI)) << ","
                   << format_double(pt.amp) << "," << format_double(pt.phase) << ","
                   << (pt.stability == Stability::Stable
                           ? "stable"
                           : pt.stability == Stability::Unstable ? "unstable"
                                                                 : "marginal")
                   << "," << (pt.fold ? 1 : 0);
                for (int k = 0; k < rom.nf.m(); ++k)
                    os << "," << format_double(pt.rho(k));
                os << "\n";
            }
        }
    }

    if (!cfg.sim_omegas.empty() && cfg.sim_t_end > 0.0) {
        if (cfg.f0.size() != model.n() || cfg.eps_list.empty())
            throw ConfigError("predict: forcing.f0 and eps_list required for simulation");
        Vec om(static_cast<Eigen::Index>(cfg.sim_omegas.size()));
        for (std::size_t i = 0; i < cfg.sim_omegas.size(); ++i)
            om(static_cast<Eigen::Index>(i)) = cfg.sim_omegas[i];
        ForcingSpec spec(om, cfg.eps_list.front());
        for (std::size_t i = 0; i < cfg.sim_omegas.size(); ++i) {
            std::vector<int> k(cfg.sim_omegas.size(), 0);
            k[i] = 1;
            spec.add_harmonic(k, (cfg.f0 / 2.0).cast<Complex>());
        }
        Vec x0 = Vec::Zero(2 * model.n());
        Trajectory pred = simulate_rom(rom, sp, model, &spec, x0, 0.0, cfg.sim_t_end,
                                       cfg.dt, cfg.tol, cfg.correction_modes);
        write_trajectory_csv(pred, path_in(cfg, "pred_traj.csv"));
    }
}

void cmd_validate(const PipelineConfig& cfg) {
    write_snapshot(cfg);
    MechModel model = build_model(cfg);
    Spectrum sp = spectrum_for(cfg, model);
    SsmRom rom = load_rom(cfg);
    if (cfg.f0.size() != model.n() || cfg.eps_list.empty() ||
        cfg.omega_hi <= cfg.omega_lo)
        throw ConfigError("validate: forcing.f0, eps_list, and an omega window are required");

    std::ofstream os(path_in(cfg, "validate.csv"));
    os << "eps,omega_rad_s,rom_amp,full_amp,rel_err,nmte_last_cycle\n";
    for (double eps : cfg.eps_list) {
        ForcedResponseProblem prob{&rom, &sp, &model, cfg.f0, eps};
        for (int i = 0; i < cfg.n_validate; ++i) {
            double Omega = cfg.omega_lo + (cfg.omega_hi - cfg.omega_lo) *
                                              (i + 0.5) / cfg.n_validate;
            FRCPoint pt;
            if (!frc_point(prob, Omega, pt))
                throw ResponseError("validate: no FRC point at Omega " +
                                    std::to_string(Omega));
            std::vector<int> eta = harmonic_ratios(rom.nf, Omega);
            Trajectory orbit = reconstruct_periodic(prob, pt, eta, 128);

            // seed the full model from the ROM periodic state, settle 50 cycles
            double T = 2.0 * M_PI / Omega;
            ForcingSpec spec = ForcingSpec::cosine(cfg.f0, Omega, eps);
            Trajectory full = integrate(model, &spec, orbit.states.col(0), 0.0,
                                        50.0 * T, cfg.tol, T / 128.0);
            int nlast = 128;
            Vec s(nlast);
            std::vector<double> ts(static_cast<std::size_t>(nlast));
            int j0 = full.n_samples() - nlast;
            for (int j = 0; j < nlast; ++j) {
                s(j) = model.observe(full.states.col(j0 + j));
                ts[static_cast<std::size_t>(j)] = full.times[static_cast<std::size_t>(j0 + j)];
            }
            auto [amp_full, ph_full] = amp_phase(s, ts, T);
            (void)ph_full;

            Trajectory last;
            last.times = ts;
            last.states = full.states.rightCols(nlast);
            // phase-align by sampling the ROM orbit on the full-model grid
            Trajectory rom_wrapped;
            rom_wrapped.times = ts;
            rom_wrapped.states.resize(orbit.states.rows(), nlast);
            for (int j = 0; j < nlast; ++j) {
                double tau = std::fmod(ts[static_cast<std::size_t>(j)], T);
                int idx = static_cast<int>(std::round(tau / T * orbit.n_samples())) %
                          orbit.n_samples();
                rom_wrapped.states.col(j) = orbit.states.col(idx);
            }
            double err_nmte = nmte(rom_wrapped, last);
            double rel = std::abs(pt.amp - amp_full) / std::max(amp_full, 1e-300);
            os << format_double(eps) << "," << format_double(Omega) << ","
               << format_double(pt.amp) << "," << format_double(amp_full) << ","
               << format_double(rel) << "," << format_double(err_nmte) << "\n";
        }
    }
}

}  // namespace ssmred
