#pragma once

#include "gapp/io.hpp"

#include <string>

namespace gapp {

// Runs the configured tracker over the frames; never sees ground truth.
TrackingResult run_tracking(const TrackingInput& input, const RunConfig& config);

// Metrics report for one results/dataset pair. "metrics" is fully
// deterministic; wall-clock timing sits in a separate "timing" section.
Json evaluate_results(const TrackingResult& result, const ScenarioDataset& dataset,
                      const GospaConfig& gospa_config);

struct SweepOutcome {
    Json report;   // deterministic aggregate (written to sweep_report.json)
    Json timing;   // wall-clock section (written separately)
};

// generate -> track -> evaluate over `count` seeds starting at `first_seed`,
// running the trackers named in `trackers` on identical datasets. Writes
// datasets, results, per-dataset reports, plot data and the aggregate report
// under out_dir. Skips file output when out_dir is empty.
SweepOutcome run_sweep(const RunConfig& base, std::uint64_t first_seed, int count,
                       const std::vector<std::string>& trackers, const std::string& out_dir);

// Plot-ready columnar text: truth trajectories with birth/end markers,
// observations, and reported tracks.
void write_plot_data(const std::string& path, const ScenarioDataset& dataset,
                     const std::vector<std::pair<std::string, const TrackingResult*>>& results);

}  // namespace gapp
