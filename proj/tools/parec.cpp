// Command-line front end: configuration-driven photoacoustic reconstruction
// experiments (phantom generation, forward simulation, SL0/BP/IR inversion,
// PSNR evaluation and multi-run comparisons).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parec/parec.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

struct CommonOptions {
    std::vector<std::string> configs;
    std::vector<std::string> presets;
    std::string out = "out";
    std::string cache_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool multi) {
    auto* config = cmd->add_option("--config", opt.configs, "experiment config JSON file");
    auto* preset = cmd->add_option("--preset", opt.presets,
                                   "builtin preset (fig2a..fig2e, fig2, fig4, desk)");
    if (!multi) {
        config->expected(0, 1);
        preset->expected(0, 1);
    }
    cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
    cmd->add_option("--cache", opt.cache_dir, "model matrix cache directory");
    cmd->add_option("--seed", opt.seed, "noise seed override")
        ->each([&](const std::string&) { opt.seed_set = true; });
    cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
}

std::vector<parec::ExperimentConfig> resolve_configs(const CommonOptions& opt) {
    std::vector<parec::ExperimentConfig> configs;
    for (const auto& name : opt.presets)
        for (auto& c : parec::expand_preset(name)) configs.push_back(std::move(c));
    for (const auto& path : opt.configs) {
        // A single preset plus a config file means the file overrides the preset.
        if (opt.configs.size() == 1 && configs.size() == 1) {
            configs[0] = parec::load_experiment_config(path, configs[0]);
        } else {
            configs.push_back(parec::load_experiment_config(path));
        }
    }
    if (configs.empty()) configs.push_back(parec::ExperimentConfig{});
    if (opt.seed_set)
        for (auto& c : configs) c.seed = opt.seed;
    if (opt.threads > 0) parec::par::set_threads(opt.threads);
    return configs;
}

void assign_output_dirs(std::vector<parec::ExperimentConfig>& configs, const std::string& out) {
    if (configs.size() == 1) {
        configs[0].output_dir = out;
        return;
    }
    for (auto& c : configs)
        c.output_dir = (std::filesystem::path(out) / c.label).string();
}

int report_outcome(const parec::RunOutcome& outcome, const std::string& label) {
    if (outcome.time_window_truncated)
        std::fprintf(stderr,
                     "warning: %s: sampling window ends before the farthest pixel is reached; "
                     "the model is truncated\n",
                     label.c_str());
    if (!outcome.ok) {
        std::fprintf(stderr, "error: %s: %s\n", label.c_str(), outcome.error.c_str());
        return kExitConvergence;
    }
    if (outcome.psnr.is_exact())
        std::printf("%s: PSNR = inf dB (%.1fs)\n", label.c_str(), outcome.runtime_seconds);
    else
        std::printf("%s: PSNR = %.2f dB (%.1fs)\n", label.c_str(), outcome.psnr.psnr_db,
                    outcome.runtime_seconds);
    return kExitOk;
}

int cmd_phantom(const CommonOptions& opt) {
    auto configs = resolve_configs(opt);
    const auto& config = configs.front();
    const parec::ImagingGrid grid = config.grid();
    const parec::Image phantom =
        config.phantom_table.empty()
            ? parec::shepp_logan(grid)
            : parec::rasterize_phantom(grid, parec::load_ellipse_table(config.phantom_table));
    std::filesystem::create_directories(opt.out);
    const auto base = std::filesystem::path(opt.out);
    parec::io::write_image_pgm16((base / "phantom.pgm").string(), phantom);
    parec::io::write_image_pgm8((base / "phantom_preview.pgm").string(), phantom);
    parec::io::write_profile_csv((base / "profile_phantom.csv").string(),
                                 parec::center_row_profile(phantom));
    std::printf("phantom: %zux%zu written to %s\n", grid.nx, grid.ny, opt.out.c_str());
    return kExitOk;
}

int cmd_forward(const CommonOptions& opt) {
    auto configs = resolve_configs(opt);
    const auto& config = configs.front();
    const parec::ImagingGrid grid = config.grid();
    const parec::Image phantom =
        config.phantom_table.empty()
            ? parec::shepp_logan(grid)
            : parec::rasterize_phantom(grid, parec::load_ellipse_table(config.phantom_table));

    parec::ModelCache cache(opt.cache_dir);
    const auto K = cache.get(grid, config.sensors(), config.acquisition);
    if (K->time_window_truncated)
        std::fprintf(stderr, "warning: sampling window ends before the farthest pixel\n");

    parec::Sinogram y = parec::apply_forward(*K, phantom);
    if (config.noise_snr_db) y = parec::add_noise(y, *config.noise_snr_db, config.seed);

    std::filesystem::create_directories(opt.out);
    const auto base = std::filesystem::path(opt.out);
    parec::io::write_image_pgm16((base / "phantom.pgm").string(), phantom);
    parec::io::write_sinogram_csv((base / "sinogram.csv").string(), y);
    parec::io::write_sinogram_raw((base / "sinogram.bin").string(), y);
    std::printf("forward: %zu sensors x %zu samples written to %s\n", y.num_sensors,
                y.num_samples, opt.out.c_str());
    return kExitOk;
}

int cmd_run(const CommonOptions& opt) {
    auto configs = resolve_configs(opt);
    assign_output_dirs(configs, opt.out);
    parec::ModelCache cache(opt.cache_dir);
    int exit_code = kExitOk;
    for (const auto& config : configs) {
        const parec::RunOutcome outcome = parec::run_experiment(config, &cache);
        const int code = report_outcome(outcome, config.label);
        if (code != kExitOk) exit_code = code;
    }
    return exit_code;
}

int cmd_reconstruct(const CommonOptions& opt, const std::string& sinogram_path) {
    auto configs = resolve_configs(opt);
    auto config = configs.front();
    config.output_dir = opt.out;

    if (sinogram_path.empty()) return cmd_run(opt);

    // Reconstruct from a previously recorded sinogram.
    config.validate();
    const parec::ImagingGrid grid = config.grid();
    const parec::Sinogram y = parec::io::read_sinogram_raw(sinogram_path);
    parec::ModelCache cache(opt.cache_dir);
    const auto K = cache.get(grid, config.sensors(), config.acquisition);
    if (y.values.size() != K->rows()) {
        std::fprintf(stderr, "error: sinogram length %zu does not match the model (%zu rows)\n",
                     y.values.size(), K->rows());
        return kExitConfig;
    }

    std::filesystem::create_directories(opt.out);
    const auto base = std::filesystem::path(opt.out);
    try {
        const parec::ReconResult result =
            parec::reconstruct(config.method, *K, config.basis(), y, config.params());
        parec::io::write_image_pgm16((base / "recon.pgm").string(), result.image);
        parec::io::write_image_pgm8((base / "recon_preview.pgm").string(), result.image);
        parec::io::write_profile_csv((base / "profile_recon.csv").string(),
                                     parec::center_row_profile(result.image));
        std::printf("reconstruct: %s finished after %zu iterations, residual %.3e\n",
                    parec::to_string(config.method).c_str(), result.iterations_run,
                    result.residual_norm);
        return kExitOk;
    } catch (const parec::ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConvergence;
    }
}

int cmd_evaluate(const std::string& recon_path, const std::string& reference_path,
                 const std::string& out) {
    const parec::Image recon = parec::io::read_image_pgm16(recon_path);
    const parec::Image reference = parec::io::read_image_pgm16(reference_path);
    const parec::PsnrReport report = parec::psnr(recon, reference);

    std::filesystem::create_directories(out);
    const auto base = std::filesystem::path(out);
    parec::io::write_psnr_json((base / "psnr.json").string(), report);
    parec::io::write_profile_csv((base / "profile_recon.csv").string(),
                                 parec::center_row_profile(recon));
    parec::io::write_profile_csv((base / "profile_reference.csv").string(),
                                 parec::center_row_profile(reference));
    if (report.is_exact())
        std::printf("PSNR = inf dB (images identical after normalization)\n");
    else
        std::printf("PSNR = %.4f dB (mse %.6e)\n", report.psnr_db, report.mse);
    return kExitOk;
}

int cmd_compare(const CommonOptions& opt) {
    auto configs = resolve_configs(opt);
    parec::ModelCache cache(opt.cache_dir);
    const auto rows = parec::compare_experiments(configs, opt.out, &cache);
    std::printf("%-10s %-5s %5s %8s %10s %9s\n", "label", "meth", "noa", "samples", "psnr_db",
                "runtime");
    bool all_ok = true;
    for (const auto& r : rows) {
        char psnr_txt[32];
        if (!r.ok) {
            std::snprintf(psnr_txt, sizeof(psnr_txt), "error");
            all_ok = false;
        } else if (r.psnr.is_exact()) {
            std::snprintf(psnr_txt, sizeof(psnr_txt), "inf");
        } else {
            std::snprintf(psnr_txt, sizeof(psnr_txt), "%.2f", r.psnr.psnr_db);
        }
        std::printf("%-10s %-5s %5zu %8zu %10s %8.1fs\n", r.label.c_str(),
                    parec::to_string(r.method).c_str(), r.noa, r.samples, psnr_txt,
                    r.runtime_seconds);
    }
    return all_ok ? kExitOk : kExitConvergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-based photoacoustic reconstruction with sparse recovery"};
    app.require_subcommand(1);

    CommonOptions phantom_opt, forward_opt, run_opt, recon_opt, compare_opt;
    std::string sinogram_path, eval_recon, eval_reference, eval_out = "out";

    add_common(app.add_subcommand("phantom", "rasterize the phantom"), phantom_opt, false);
    add_common(app.add_subcommand("forward", "simulate sensor data"), forward_opt, false);
    auto* recon_cmd =
        app.add_subcommand("reconstruct", "reconstruct an image (optionally from a sinogram)");
    add_common(recon_cmd, recon_opt, false);
    recon_cmd->add_option("--sinogram", sinogram_path, "raw sinogram (.bin with .json sidecar)");
    add_common(app.add_subcommand("run", "full pipeline: phantom, forward, solve, evaluate"),
               run_opt, true);
    auto* eval_cmd = app.add_subcommand("evaluate", "PSNR between two exported images");
    eval_cmd->add_option("--recon", eval_recon, "reconstructed image (.pgm)")->required();
    eval_cmd->add_option("--reference", eval_reference, "reference image (.pgm)")->required();
    eval_cmd->add_option("--out", eval_out, "output directory")->capture_default_str();
    add_common(app.add_subcommand("compare", "run several configurations and tabulate PSNR"),
               compare_opt, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("phantom")) return cmd_phantom(phantom_opt);
        if (app.got_subcommand("forward")) return cmd_forward(forward_opt);
        if (app.got_subcommand("reconstruct")) return cmd_reconstruct(recon_opt, sinogram_path);
        if (app.got_subcommand("run")) return cmd_run(run_opt);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(eval_recon, eval_reference, eval_out);
        if (app.got_subcommand("compare")) return cmd_compare(compare_opt);
    } catch (const parec::config_detail::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
