#include "gapp/harness.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

gapp::RunConfig load_config(const std::string& path) {
    if (path.empty()) return gapp::synthetic_preset();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    gapp::Json j;
    in >> j;
    return gapp::run_config_from_json(j);
}

unsigned env_threads() {
    const char* v = std::getenv("GAPP_THREADS");
    if (v == nullptr) return 1;
    const int n = std::atoi(v);
    return n > 0 ? static_cast<unsigned>(n) : 1;
}

gapp::Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    gapp::Json j;
    in >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GaPP multi-object tracking: generate / track / evaluate / sweep"};
    app.require_subcommand(1);

    std::string config_path, out_path, dataset_path, results_path, tracker_override;
    std::uint64_t seed = 1;
    int count = 1;
    int particles_override = 0;

    auto* gen = app.add_subcommand("generate", "Generate synthetic scenario datasets");
    gen->add_option("--config", config_path, "Run-config JSON (preset + overrides)");
    gen->add_option("--seed", seed, "First dataset seed");
    gen->add_option("--count", count, "Number of datasets");
    gen->add_option("--out", out_path, "Output directory")->required();

    auto* track = app.add_subcommand("track", "Run a tracker over a dataset file");
    track->add_option("--dataset", dataset_path, "Dataset JSON file")->required();
    track->add_option("--config", config_path, "Run-config JSON");
    track->add_option("--tracker", tracker_override, "gapp-class | gapp-reaction");
    track->add_option("--particles", particles_override, "Particle count override");
    track->add_option("--seed", seed, "Master seed override");
    track->add_option("--out", out_path, "Results file (NDJSON)")->required();

    auto* eval = app.add_subcommand("evaluate", "Compute metrics for a results/dataset pair");
    eval->add_option("--results", results_path, "Results NDJSON file")->required();
    eval->add_option("--dataset", dataset_path, "Dataset JSON file")->required();
    eval->add_option("--config", config_path, "Run-config JSON (for metric parameters)");
    eval->add_option("--out", out_path, "Report JSON file");

    auto* sweep = app.add_subcommand("sweep", "generate + track + evaluate over many seeds");
    sweep->add_option("--config", config_path, "Run-config JSON");
    sweep->add_option("--seed", seed, "First seed");
    sweep->add_option("--count", count, "Number of datasets");
    sweep->add_option("--tracker", tracker_override, "gapp-class | gapp-reaction | both");
    sweep->add_option("--out", out_path, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    gapp::RunConfig config;
    try {
        config = load_config(config_path);
        config.filter.threads = env_threads();
        if (!tracker_override.empty() && tracker_override != "both") {
            if (tracker_override != "gapp-class" && tracker_override != "gapp-reaction")
                throw std::invalid_argument("unknown tracker: " + tracker_override);
            config.tracker = tracker_override;
            config.filter.revival_enabled = (config.tracker == "gapp-reaction");
        }
        if (particles_override > 0) config.filter.particles = particles_override;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (gen->parsed()) {
            std::filesystem::create_directories(out_path);
            for (int i = 0; i < count; ++i) {
                const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
                const gapp::GenParams params =
                    config.sample_params_per_seed ? gapp::sample_default_params(s) : config.gen;
                const gapp::ScenarioDataset ds = gapp::generate_scenario(config.scene, params, s);
                const auto file =
                    std::filesystem::path(out_path) / ("dataset_" + std::to_string(s) + ".json");
                std::ofstream f(file);
                f << gapp::dataset_to_json(ds).dump(2) << "\n";
                std::cout << file.string() << "\n";
            }
            return kExitOk;
        }

        if (track->parsed()) {
            gapp::TrackingInput input;
            try {
                input = gapp::tracking_input_from_json(load_json_file(dataset_path));
            } catch (const std::exception& e) {
                std::cerr << "data error: " << e.what() << "\n";
                return kExitData;
            }
            if (track->count("--seed") > 0 || config.filter.master_seed == 0)
                config.filter.master_seed = seed;
            const gapp::TrackingResult result = gapp::run_tracking(input, config);
            gapp::write_results(out_path, result);
            std::cout << "steps=" << result.steps.size() << " wall_ms=" << result.wall_ms << "\n";
            return kExitOk;
        }

        if (eval->parsed()) {
            gapp::TrackingResult result;
            gapp::ScenarioDataset ds;
            try {
                result = gapp::read_results(results_path);
                ds = gapp::dataset_from_json(load_json_file(dataset_path));
            } catch (const std::exception& e) {
                std::cerr << "data error: " << e.what() << "\n";
                return kExitData;
            }
            const gapp::Json report = gapp::evaluate_results(result, ds, config.gospa);
            if (out_path.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                std::ofstream f(out_path);
                f << report.dump(2) << "\n";
            }
            return kExitOk;
        }

        if (sweep->parsed()) {
            std::vector<std::string> trackers;
            if (tracker_override.empty() || tracker_override == "both")
                trackers = {"gapp-class", "gapp-reaction"};
            else
                trackers = {tracker_override};
            const gapp::SweepOutcome outcome = gapp::run_sweep(config, seed, count, trackers, out_path);
            std::cout << outcome.report["means"].dump(2) << "\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
