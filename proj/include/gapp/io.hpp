#pragma once

#include "gapp/filter.hpp"
#include "gapp/metrics.hpp"
#include "gapp/scenario.hpp"

#include <string>
#include <vector>

// vendored single-header nlohmann/json
#include "json.hpp"

namespace gapp {

using Json = nlohmann::ordered_json;

// ----- scenario dataset (JSON, canonical field order) -----
Json dataset_to_json(const ScenarioDataset& ds);
ScenarioDataset dataset_from_json(const Json& j);

// Tracking input view: only meta + frames, never the truth block. The tracker
// consumes this type, so ground truth cannot leak into inference.
struct TrackingInput {
    SceneConfig scene;
    std::vector<Frame> frames;
};
TrackingInput tracking_input_from_json(const Json& j);

// ----- run configuration -----
struct RunConfig {
    std::string tracker = "gapp-reaction";  // "gapp-class" | "gapp-reaction"
    FilterConfig filter;
    GospaConfig gospa;
    SceneConfig scene;
    bool sample_params_per_seed = true;  // sweep/generate draw fresh true params per seed
    GenParams gen;                        // used when sample_params_per_seed is false
};

RunConfig synthetic_preset();
RunConfig radar_preset();
// Parses {"preset": ..., overrides...}; throws std::invalid_argument on bad config.
RunConfig run_config_from_json(const Json& j);

// ----- tracking results (newline-delimited records) -----
struct ParticleTrackRec {
    std::uint64_t key = 0;
    Vec pos;
    double alpha = 1.0, beta = 1.0;
    std::vector<double> class_probs;
};
struct ParticleRec {
    double w = 1.0;
    std::vector<ParticleTrackRec> tracks;
};
struct StepRecord {
    int k = 0;
    std::vector<TrackEstimate> estimates;
    std::vector<ParticleRec> particles;
    std::vector<HyperSample> hyper;
    std::vector<RevivalEvent> revivals;
};
struct TrackingResult {
    std::string tracker;
    int particles = 0;
    std::uint64_t seed = 0;
    int dims = 0;
    double existence_threshold = 0.5;
    double gate = 10.0;
    std::vector<StepRecord> steps;
    double wall_ms = 0.0;
};

void write_results(const std::string& path, const TrackingResult& result);
TrackingResult read_results(const std::string& path);

std::string key_to_string(std::uint64_t key);

}  // namespace gapp
