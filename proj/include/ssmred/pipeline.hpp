#pragma once

#include <string>

#include "ssmred/model.hpp"
#include "ssmred/response.hpp"
#include "ssmred/spectral.hpp"

namespace ssmred {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything one workflow run needs, parsed and validated from a JSON config.
struct PipelineConfig {
    // model
    std::string model_type;  // "chain" | "matrices"
    int n_masses = 0;
    Vec stiffness, cubic;
    double alpha = 0.0, beta = 0.0;
    std::string M_path, C_path, K_path;
    std::vector<ForceTerm> force_terms;
    int observable_dof = 0;

    // chart
    std::vector<int> modes;
    ChartStyle style = ChartStyle::ModalComplex;
    int order = 3;    // parametrization / reduced-dynamics order
    int h_order = 5;  // normal-form transform order
    int nonmodal_dof = 0;
    int n_pairs_keep = 0;  // spectrum pairs to compute (0 = all)

    // training plan
    int strategy = 2;  // 1 = static release, 2 = modal initial condition
    std::vector<double> amplitudes;
    double t_end = 0.0;
    double dt = 0.0;
    double tol = 1e-10;
    double transient_periods = 1.0;
    int stride = 1;
    double test_scale = 0.95;
    unsigned long seed = 0;
    double ridge = 0.0;

    // forcing / prediction
    Vec f0;
    std::vector<double> eps_list;
    double omega_lo = 0.0, omega_hi = 0.0;  // FRC sweep window
    int n_validate = 6;
    double rho_max = 0.0;
    int n_rho = 40;
    std::vector<double> sim_omegas;  // multi-frequency trajectory prediction
    double sim_t_end = 0.0;
    int correction_modes = 0;

    std::string out_dir = "out";
    std::string raw;  // resolved JSON snapshot (after CLI overrides)
};

PipelineConfig load_config(const std::string& path);

/// CLI overrides; negative/empty values leave the config untouched.
void apply_overrides(PipelineConfig& cfg, const std::string& out_dir, int order,
                     const std::string& style, long seed);

MechModel build_model(const PipelineConfig& cfg);

void cmd_eig(const PipelineConfig& cfg);
void cmd_generate(const PipelineConfig& cfg);
void cmd_fit(const PipelineConfig& cfg);
void cmd_predict(const PipelineConfig& cfg);
void cmd_validate(const PipelineConfig& cfg);

/// Fitted-artifact persistence within the output directory.
void save_polymap(const PolyMap& map, const std::string& path);
PolyMap load_polymap(const std::string& path);
SsmRom load_rom(const PipelineConfig& cfg);

}  // namespace ssmred
