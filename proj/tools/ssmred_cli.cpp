#include <CLI11.hpp>
#include <iostream>

#include "ssmred/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"SSM reduced-order modeling workflow"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int order = -1;
    std::string style;
    long seed = -1;

    app.add_option("--config", config_path, "pipeline config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--order", order, "polynomial order override");
    app.add_option("--style", style, "chart style override")
        ->check(CLI::IsMember({"modal-complex", "modal-mechanical", "non-modal"}));
    app.add_option("--seed", seed, "RNG seed override");

    auto* c_eig = app.add_subcommand("eig", "eigenanalysis report");
    auto* c_gen = app.add_subcommand("generate", "synthesize decay trajectories");
    auto* c_fit = app.add_subcommand("fit", "fit chart, manifold, and normal form");
    auto* c_pre = app.add_subcommand("predict", "FRC / backbone / trajectory prediction");
    auto* c_val = app.add_subcommand("validate", "oracle comparison against the full model");
    for (auto* sub : {c_eig, c_gen, c_fit, c_pre, c_val}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ssmred::PipelineConfig cfg = ssmred::load_config(config_path);
        ssmred::apply_overrides(cfg, out_dir, order, style, seed);
        if (c_eig->parsed()) ssmred::cmd_eig(cfg);
        if (c_gen->parsed()) ssmred::cmd_generate(cfg);
        if (c_fit->parsed()) ssmred::cmd_fit(cfg);
        if (c_pre->parsed()) ssmred::cmd_predict(cfg);
        if (c_val->parsed()) ssmred::cmd_validate(cfg);
    } catch (const ssmred::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
