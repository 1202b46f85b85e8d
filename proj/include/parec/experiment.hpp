#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parec/forward_model.hpp"
#include "parec/grid.hpp"
#include "parec/io.hpp"
#include "parec/metrics.hpp"
#include "parec/phantom.hpp"
#include "parec/sensors.hpp"
#include "parec/solvers.hpp"
#include "parec/vec.hpp"
#include "parec/wavelet.hpp"

namespace parec {

// Fully resolved description of one reconstruction experiment.
struct ExperimentConfig {
    std::string label = "experiment";

    std::size_t nx = 128;
    std::size_t ny = 128;
    double pixel_size = 1.0e-4;

    std::string phantom_table;  // path to an ellipse table; empty = builtin

    double sensor_radius = 8.0e-3;
    std::size_t sensor_count = 16;
    double sensor_start_angle = 0.0;

    AcquisitionConfig acquisition;

    WaveletFamily basis_family = WaveletFamily::haar;
    std::size_t basis_levels = 3;

    Method method = Method::sl0;
    Sl0Params sl0;
    BpParams bp;
    IrParams ir;

    std::optional<double> noise_snr_db;  // absent = noiseless
    std::uint64_t seed = 0;
    std::string output_dir;

    ImagingGrid grid() const { return make_grid(nx, ny, pixel_size); }
    SensorArray sensors() const {
        return make_sensor_array(sensor_radius, sensor_count, sensor_start_angle);
    }
    WaveletBasis basis() const { return WaveletBasis{basis_family, basis_levels, nx, ny}; }
    SolverParams params() const {
        switch (method) {
            case Method::sl0: return sl0;
            case Method::bp: return bp;
            case Method::ir: return ir;
        }
        throw std::invalid_argument("unknown method tag");
    }

    void validate() const {
        grid();
        sensors();
        acquisition.validate();
        basis().validate();
        sl0.validate();
        bp.validate();
        ir.validate();
    }
};

// ---------------------------------------------------------------------------
// JSON config parsing (strict; unknown keys are rejected)
// ---------------------------------------------------------------------------

namespace config_detail {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void reject_unknown(const nlohmann::json& obj, const char* where,
                           std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (const char* k : known)
            if (key == k) {
                found = true;
                break;
            }
        if (!found)
            throw ParseError(std::string("config: unknown key \"") + key + "\" in " + where);
    }
}

// nlohmann reports byte offsets; convert to line:column for the message.
inline std::pair<std::size_t, std::size_t> line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline nlohmann::json parse_text(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = line_of(text, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << col << ": " << e.what();
        throw ParseError(msg.str());
    }
}

inline ProjectorBackend projector_from_string(const std::string& s) {
    if (s == "auto") return ProjectorBackend::automatic;
    if (s == "cg") return ProjectorBackend::cg;
    if (s == "gram") return ProjectorBackend::gram;
    throw ParseError("config: unknown projector \"" + s + "\" (auto, cg, gram)");
}

inline const char* projector_to_string(ProjectorBackend b) {
    switch (b) {
        case ProjectorBackend::automatic: return "auto";
        case ProjectorBackend::cg: return "cg";
        case ProjectorBackend::gram: return "gram";
    }
    return "auto";
}

}  // namespace config_detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                                ExperimentConfig base = {}) {
    using config_detail::ParseError;
    using config_detail::reject_unknown;
    ExperimentConfig c = std::move(base);
    if (!doc.is_object()) throw ParseError("config: top level must be a JSON object");
    reject_unknown(doc, "top level",
                   {"label", "grid", "phantom", "sensors", "acquisition", "basis", "method",
                    "sl0", "bp", "ir", "noise", "seed", "output_dir"});

    c.label = doc.value("label", c.label);
    c.seed = doc.value("seed", c.seed);
    c.output_dir = doc.value("output_dir", c.output_dir);

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        reject_unknown(g, "grid", {"nx", "ny", "pixel_size"});
        c.nx = g.value("nx", c.nx);
        c.ny = g.value("ny", c.ny);
        c.pixel_size = g.value("pixel_size", c.pixel_size);
    }
    if (doc.contains("phantom")) {
        const auto& p = doc.at("phantom");
        reject_unknown(p, "phantom", {"builtin", "table"});
        if (p.contains("table")) c.phantom_table = p.at("table").get<std::string>();
        if (p.contains("builtin")) {
            const auto name = p.at("builtin").get<std::string>();
            if (name != "shepp_logan")
                throw ParseError("config: unknown builtin phantom \"" + name + "\"");
            c.phantom_table.clear();
        }
    }
    if (doc.contains("sensors")) {
        const auto& s = doc.at("sensors");
        reject_unknown(s, "sensors", {"radius", "count", "start_angle"});
        c.sensor_radius = s.value("radius", c.sensor_radius);
        c.sensor_count = s.value("count", c.sensor_count);
        c.sensor_start_angle = s.value("start_angle", c.sensor_start_angle);
    }
    if (doc.contains("acquisition")) {
        const auto& a = doc.at("acquisition");
        reject_unknown(a, "acquisition",
                       {"sound_speed", "sampling_freq", "num_samples", "t_start",
                        "amplitude_constant"});
        c.acquisition.sound_speed = a.value("sound_speed", c.acquisition.sound_speed);
        c.acquisition.sampling_freq = a.value("sampling_freq", c.acquisition.sampling_freq);
        c.acquisition.num_samples = a.value("num_samples", c.acquisition.num_samples);
        c.acquisition.t_start = a.value("t_start", c.acquisition.t_start);
        c.acquisition.amplitude_constant =
            a.value("amplitude_constant", c.acquisition.amplitude_constant);
    }
    if (doc.contains("basis")) {
        const auto& b = doc.at("basis");
        reject_unknown(b, "basis", {"family", "levels"});
        if (b.contains("family")) {
            const auto name = b.at("family").get<std::string>();
            if (name != "haar")
                throw ParseError("config: unknown wavelet family \"" + name + "\"");
            c.basis_family = WaveletFamily::haar;
        }
        c.basis_levels = b.value("levels", c.basis_levels);
    }
    if (doc.contains("method")) c.method = method_from_string(doc.at("method").get<std::string>());
    if (doc.contains("sl0")) {
        const auto& s = doc.at("sl0");
        reject_unknown(s, "sl0",
                       {"sigma_min_ratio", "sigma_decrease", "step_mu", "inner_iterations",
                        "projection_tolerance", "projection_max_iters", "projector"});
        c.sl0.sigma_min_ratio = s.value("sigma_min_ratio", c.sl0.sigma_min_ratio);
        c.sl0.sigma_decrease = s.value("sigma_decrease", c.sl0.sigma_decrease);
        c.sl0.step_mu = s.value("step_mu", c.sl0.step_mu);
        c.sl0.inner_iterations = s.value("inner_iterations", c.sl0.inner_iterations);
        c.sl0.projection_tolerance = s.value("projection_tolerance", c.sl0.projection_tolerance);
        c.sl0.projection_max_iters = s.value("projection_max_iters", c.sl0.projection_max_iters);
        if (s.contains("projector"))
            c.sl0.projector =
                config_detail::projector_from_string(s.at("projector").get<std::string>());
    }
    if (doc.contains("bp")) {
        const auto& b = doc.at("bp");
        reject_unknown(b, "bp",
                       {"lambda_final", "lambda_is_relative", "continuation_steps",
                        "max_iterations", "tolerance"});
        c.bp.lambda_final = b.value("lambda_final", c.bp.lambda_final);
        c.bp.lambda_is_relative = b.value("lambda_is_relative", c.bp.lambda_is_relative);
        c.bp.continuation_steps = b.value("continuation_steps", c.bp.continuation_steps);
        c.bp.max_iterations = b.value("max_iterations", c.bp.max_iterations);
        c.bp.tolerance = b.value("tolerance", c.bp.tolerance);
    }
    if (doc.contains("ir")) {
        const auto& i = doc.at("ir");
        reject_unknown(i, "ir", {"iterations", "step", "tikhonov_mu", "nonneg"});
        c.ir.iterations = i.value("iterations", c.ir.iterations);
        if (i.contains("step")) {
            if (i.at("step").is_string()) {
                if (i.at("step").get<std::string>() != "auto")
                    throw ParseError("config: ir.step must be a number or \"auto\"");
                c.ir.step = 0.0;
            } else {
                c.ir.step = i.at("step").get<double>();
            }
        }
        c.ir.tikhonov_mu = i.value("tikhonov_mu", c.ir.tikhonov_mu);
        c.ir.nonneg = i.value("nonneg", c.ir.nonneg);
    }
    if (doc.contains("noise")) {
        const auto& n = doc.at("noise");
        reject_unknown(n, "noise", {"snr_db"});
        c.noise_snr_db = n.at("snr_db").get<double>();
    }

    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig parse_experiment_config_text(const std::string& text,
                                                     const std::string& origin,
                                                     ExperimentConfig base = {}) {
    return parse_experiment_config(config_detail::parse_text(text, origin), std::move(base));
}

inline ExperimentConfig load_experiment_config(const std::string& path,
                                               ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in.good())
        throw config_detail::ParseError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config_text(buf.str(), path, std::move(base));
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json doc;
    doc["label"] = c.label;
    doc["grid"] = {{"nx", c.nx}, {"ny", c.ny}, {"pixel_size", c.pixel_size}};
    if (c.phantom_table.empty())
        doc["phantom"] = {{"builtin", "shepp_logan"}};
    else
        doc["phantom"] = {{"table", c.phantom_table}};
    doc["sensors"] = {{"radius", c.sensor_radius},
                      {"count", c.sensor_count},
                      {"start_angle", c.sensor_start_angle}};
    doc["acquisition"] = {{"sound_speed", c.acquisition.sound_speed},
                          {"sampling_freq", c.acquisition.sampling_freq},
                          {"num_samples", c.acquisition.num_samples},
                          {"t_start", c.acquisition.t_start},
                          {"amplitude_constant", c.acquisition.amplitude_constant}};
    doc["basis"] = {{"family", to_string(c.basis_family)}, {"levels", c.basis_levels}};
    doc["method"] = to_string(c.method);
    doc["sl0"] = {{"sigma_min_ratio", c.sl0.sigma_min_ratio},
                  {"sigma_decrease", c.sl0.sigma_decrease},
                  {"step_mu", c.sl0.step_mu},
                  {"inner_iterations", c.sl0.inner_iterations},
                  {"projection_tolerance", c.sl0.projection_tolerance},
                  {"projection_max_iters", c.sl0.projection_max_iters},
                  {"projector", config_detail::projector_to_string(c.sl0.projector)}};
    doc["bp"] = {{"lambda_final", c.bp.lambda_final},
                 {"lambda_is_relative", c.bp.lambda_is_relative},
                 {"continuation_steps", c.bp.continuation_steps},
                 {"max_iterations", c.bp.max_iterations},
                 {"tolerance", c.bp.tolerance}};
    doc["ir"] = {{"iterations", c.ir.iterations},
                 {"step", c.ir.step},
                 {"tikhonov_mu", c.ir.tikhonov_mu},
                 {"nonneg", c.ir.nonneg}};
    if (c.noise_snr_db) doc["noise"] = {{"snr_db", *c.noise_snr_db}};
    doc["seed"] = c.seed;
    if (!c.output_dir.empty()) doc["output_dir"] = c.output_dir;
    return doc;
}

// ---------------------------------------------------------------------------
// Builtin presets pinning the simulation protocol parameter sets
// ---------------------------------------------------------------------------

inline ExperimentConfig preset_base() {
    ExperimentConfig c;  // defaults already carry the 128x128 / 0.1 mm /
                         // 1540 m/s / 8 mm / 600 @ 55 MHz protocol
    // Annealing depth tuned on the full-scale circular-array model; the
    // shallower reference-default floor (sigma_min_ratio 0.01) leaves the
    // reconstruction visibly unconverged there.
    c.sl0.sigma_decrease = 0.7;
    c.sl0.inner_iterations = 8;
    c.sl0.step_mu = 1.0;
    c.sl0.sigma_min_ratio = 1e-3;
    return c;
}

inline std::vector<ExperimentConfig> expand_preset(const std::string& name) {
    auto with = [&](const std::string& label, Method m,
                    const std::function<void(ExperimentConfig&)>& tweak) {
        ExperimentConfig c = preset_base();
        c.label = label;
        c.method = m;
        tweak(c);
        return c;
    };
    auto fig2a = with("fig2a", Method::ir, [](ExperimentConfig& c) {
        c.sensor_count = 32;
        c.ir.iterations = 20;
    });
    auto fig2b = with("fig2b", Method::ir, [](ExperimentConfig& c) {
        c.sensor_count = 64;
        c.ir.iterations = 1;
    });
    auto fig2c = with("fig2c", Method::ir, [](ExperimentConfig& c) {
        c.sensor_count = 64;
        c.ir.iterations = 20;
    });
    auto fig2d = with("fig2d", Method::bp, [](ExperimentConfig&) {});
    auto fig2e = with("fig2e", Method::sl0, [](ExperimentConfig&) {});
    auto reduced = [](ExperimentConfig& c) {
        c.acquisition.num_samples = 500;
        c.acquisition.sampling_freq = 45.0e6;
    };
    auto fig4_sl0 = with("fig4_sl0", Method::sl0, reduced);
    auto fig4_bp = with("fig4_bp", Method::bp, reduced);
    auto desk = with("desk", Method::sl0, [](ExperimentConfig& c) {
        c.nx = c.ny = 64;
        c.sensor_radius = 4.0e-3;
        c.acquisition.num_samples = 300;
    });

    if (name == "fig2a") return {fig2a};
    if (name == "fig2b") return {fig2b};
    if (name == "fig2c") return {fig2c};
    if (name == "fig2d") return {fig2d};
    if (name == "fig2e") return {fig2e};
    if (name == "fig2") return {fig2a, fig2b, fig2c, fig2d, fig2e};
    if (name == "fig4") return {fig4_sl0, fig4_bp};
    if (name == "fig4_sl0") return {fig4_sl0};
    if (name == "fig4_bp") return {fig4_bp};
    if (name == "desk") return {desk};
    throw std::invalid_argument("unknown preset \"" + name +
                                "\" (fig2a..fig2e, fig2, fig4, fig4_sl0, fig4_bp, desk)");
}

// ---------------------------------------------------------------------------
// Model matrix cache (in-process and optional on-disk)
// ---------------------------------------------------------------------------

class ModelCache {
public:
    explicit ModelCache(std::string disk_dir = {}) : disk_dir_(std::move(disk_dir)) {}

    std::shared_ptr<const ModelMatrix> get(const ImagingGrid& grid, const SensorArray& sensors,
                                           const AcquisitionConfig& acq) {
        const std::uint64_t fp = model_fingerprint(grid, sensors, acq);
        if (auto it = memory_.find(fp); it != memory_.end()) return it->second;

        std::shared_ptr<const ModelMatrix> entry;
        if (!disk_dir_.empty()) {
            const auto path = disk_path(fp);
            if (std::filesystem::exists(path)) {
                try {
                    entry = std::make_shared<ModelMatrix>(io::load_model_matrix(path, fp));
                } catch (const std::exception&) {
                    entry.reset();  // stale or corrupt: rebuild below
                }
            }
        }
        if (!entry) {
            entry = std::make_shared<ModelMatrix>(build_model_matrix(grid, sensors, acq));
            if (!disk_dir_.empty()) {
                std::filesystem::create_directories(disk_dir_);
                io::save_model_matrix(disk_path(fp), *entry);
            }
        }
        memory_[fp] = entry;
        return entry;
    }

private:
    std::string disk_path(std::uint64_t fp) const {
        return (std::filesystem::path(disk_dir_) / (io::fingerprint_hex(fp) + ".kmat")).string();
    }

    std::string disk_dir_;
    std::map<std::uint64_t, std::shared_ptr<const ModelMatrix>> memory_;
};

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunOutcome {
    bool ok = false;
    std::string error;
    PsnrReport psnr;
    std::size_t iterations_run = 0;
    double residual_norm = 0.0;
    double runtime_seconds = 0.0;
    std::string output_dir;
    bool time_window_truncated = false;
};

// Runs the full pipeline for one configuration and writes every artifact
// into config.output_dir: phantom, sinogram, reconstruction (data + preview),
// center-row profiles, PSNR report, objective trace and a manifest with the
// resolved configuration. Solver convergence failures still produce the
// partial artifact set plus an error record in the manifest.
inline RunOutcome run_experiment(const ExperimentConfig& config, ModelCache* cache = nullptr) {
    config.validate();
    require(!config.output_dir.empty(), "run_experiment: output directory not set");
    const auto t_begin = std::chrono::steady_clock::now();

    namespace fs = std::filesystem;
    const fs::path out(config.output_dir);
    fs::create_directories(out);
    auto path = [&](const char* name) { return (out / name).string(); };

    const ImagingGrid grid = config.grid();
    const SensorArray sensors = config.sensors();
    const WaveletBasis basis = config.basis();

    const Image phantom = config.phantom_table.empty()
                              ? shepp_logan(grid)
                              : rasterize_phantom(grid, load_ellipse_table(config.phantom_table));

    ModelCache local_cache;
    ModelCache& models = cache ? *cache : local_cache;
    const auto K = models.get(grid, sensors, config.acquisition);

    Sinogram y = apply_forward(*K, phantom);
    if (config.noise_snr_db) y = add_noise(y, *config.noise_snr_db, config.seed);

    io::write_image_pgm16(path("phantom.pgm"), phantom);
    io::write_image_pgm8(path("phantom_preview.pgm"), phantom);
    io::write_profile_csv(path("profile_phantom.csv"), center_row_profile(phantom));
    io::write_sinogram_csv(path("sinogram.csv"), y);
    io::write_sinogram_raw(path("sinogram.bin"), y);

    nlohmann::json manifest;
    manifest["config"] = config_to_json(config);
    manifest["model_matrix"] = {{"fingerprint", io::fingerprint_hex(K->fingerprint)},
                                {"rows", K->rows()},
                                {"cols", K->cols()},
                                {"nnz", K->nnz()},
                                {"time_window_truncated", K->time_window_truncated}};

    RunOutcome outcome;
    outcome.output_dir = config.output_dir;
    outcome.time_window_truncated = K->time_window_truncated;

    auto write_trace = [&](const ReconResult& r) {
        auto trace = io::detail::open_out(path("trace.csv"));
        trace << "iteration,control,objective,residual\n";
        for (const auto& e : r.objective_trace)
            trace << e.iteration << "," << io::detail::fmt(e.control) << ","
                  << io::detail::fmt(e.objective) << "," << io::detail::fmt(e.residual) << "\n";
    };

    std::vector<std::string> artifacts = {"phantom.pgm",  "phantom.pgm.json",
                                          "phantom_preview.pgm", "profile_phantom.csv",
                                          "sinogram.csv", "sinogram.bin", "sinogram.bin.json"};

    try {
        const ReconResult result = reconstruct(config.method, *K, basis, y, config.params());

        io::write_image_pgm16(path("recon.pgm"), result.image);
        io::write_image_pgm8(path("recon_preview.pgm"), result.image);
        io::write_profile_csv(path("profile_recon.csv"), center_row_profile(result.image));
        write_trace(result);
        if (result.coefficients)
            io::write_coefficients_raw(path("coefficients.bin"), *result.coefficients, basis);

        const PsnrReport report = psnr(result.image, phantom);
        io::write_psnr_json(path("psnr.json"), report);

        artifacts.insert(artifacts.end(),
                         {"recon.pgm", "recon.pgm.json", "recon_preview.pgm",
                          "profile_recon.csv", "trace.csv", "psnr.json"});
        if (result.coefficients) {
            artifacts.push_back("coefficients.bin");
            artifacts.push_back("coefficients.bin.json");
        }

        outcome.ok = true;
        outcome.psnr = report;
        outcome.iterations_run = result.iterations_run;
        outcome.residual_norm = result.residual_norm;
        manifest["psnr"] = io::psnr_to_json(report);
        manifest["iterations_run"] = result.iterations_run;
        manifest["residual_norm"] = result.residual_norm;
    } catch (const ConvergenceError& e) {
        outcome.error = e.what();
        manifest["error"] = {{"type", "convergence"},
                             {"message", e.what()},
                             {"iterations_run", e.iterations_run},
                             {"residual", e.residual}};
    } catch (const NumericalError& e) {
        outcome.error = e.what();
        manifest["error"] = {{"type", "numerical"}, {"message", e.what()}};
    }

    manifest["artifacts"] = artifacts;
    io::detail::open_out(path("manifest.json")) << manifest.dump(2) << "\n";

    outcome.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return outcome;
}

// ---------------------------------------------------------------------------
// Multi-configuration comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
    std::string label;
    Method method = Method::sl0;
    std::size_t noa = 0;
    std::size_t samples = 0;
    PsnrReport psnr;
    double runtime_seconds = 0.0;
    bool ok = false;
    std::string error;
};

// Runs every configuration (all must share grid and phantom), writing each
// artifact set under out_dir/<label>/ plus a comparison table as JSON + CSV.
inline std::vector<ComparisonRow> compare_experiments(std::vector<ExperimentConfig> configs,
                                                      const std::string& out_dir,
                                                      ModelCache* cache = nullptr) {
    require(!configs.empty(), "compare_experiments: no configurations");
    for (const auto& c : configs) {
        require(c.nx == configs.front().nx && c.ny == configs.front().ny &&
                    c.pixel_size == configs.front().pixel_size,
                "compare_experiments: all configurations must share the grid");
        require(c.phantom_table == configs.front().phantom_table,
                "compare_experiments: all configurations must share the phantom");
    }

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    ModelCache local_cache;
    ModelCache& models = cache ? *cache : local_cache;

    std::vector<ComparisonRow> rows;
    for (auto& config : configs) {
        config.output_dir = (fs::path(out_dir) / config.label).string();
        const RunOutcome outcome = run_experiment(config, &models);
        ComparisonRow row;
        row.label = config.label;
        row.method = config.method;
        row.noa = config.sensor_count;
        row.samples = config.acquisition.num_samples;
        row.psnr = outcome.psnr;
        row.runtime_seconds = outcome.runtime_seconds;
        row.ok = outcome.ok;
        row.error = outcome.error;
        rows.push_back(std::move(row));
    }

    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json item{{"label", r.label},     {"method", to_string(r.method)},
                            {"noa", r.noa},         {"samples", r.samples},
                            {"ok", r.ok},           {"runtime_seconds", r.runtime_seconds}};
        if (r.ok) item["psnr"] = io::psnr_to_json(r.psnr);
        if (!r.error.empty()) item["error"] = r.error;
        table.push_back(item);
    }
    io::detail::open_out((fs::path(out_dir) / "comparison.json").string())
        << table.dump(2) << "\n";

    auto csv = io::detail::open_out((fs::path(out_dir) / "comparison.csv").string());
    csv << "label,method,noa,samples,psnr_db,runtime_seconds\n";
    for (const auto& r : rows) {
        csv << r.label << "," << to_string(r.method) << "," << r.noa << "," << r.samples << ",";
        if (!r.ok)
            csv << "error";
        else if (r.psnr.is_exact())
            csv << "inf";
        else
            csv << io::detail::fmt(r.psnr.psnr_db);
        csv << "," << io::detail::fmt(r.runtime_seconds) << "\n";
    }
    return rows;
}

}  // namespace parec
