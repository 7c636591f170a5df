#pragma once

#include "gapp/common.hpp"
#include "gapp/ise.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gapp {

// Axis-aligned scene box.
struct SceneConfig {
    std::vector<std::pair<double, double>> bounds;  // per-dimension [lo, hi]
    double step = 1.0;                              // seconds per time step
    int horizon = 100;                              // number of frames

    int dims() const { return static_cast<int>(bounds.size()); }

    double volume() const {
        double v = 1.0;
        for (const auto& [lo, hi] : bounds) v *= (hi - lo);
        return v;
    }

    double density() const { return 1.0 / volume(); }

    void validate() const {
        if (bounds.empty() || bounds.size() > 3) throw std::invalid_argument("SceneConfig: dims must be 1..3");
        for (const auto& [lo, hi] : bounds)
            if (!(hi > lo)) throw std::invalid_argument("SceneConfig: empty bounds");
        if (horizon < 1 || step <= 0.0) throw std::invalid_argument("SceneConfig: bad horizon/step");
    }
};

struct TrueObject {
    int id = 0;
    int birth_step = 1;                 // first step with a position
    std::optional<int> death_step;      // first step inactive; nullopt = survived
    int class_label = 0;
    double detection_rate = 4.0;
    std::vector<Vec> positions;         // one per active step, starting at birth_step

    bool active_at(int k) const {
        return k >= birth_step && (!death_step || k < *death_step);
    }
    const Vec& position_at(int k) const { return positions[static_cast<std::size_t>(k - birth_step)]; }
    int last_active_step(int horizon) const { return death_step ? *death_step - 1 : horizon; }
};

struct Frame {
    int step = 0;
    std::vector<Vec> observations;
};

struct GenParams {
    double clutter_rate = 12.0;                   // mu_0
    double birth_rate = 0.05;                     // gamma
    double noise_var = 1.0;                       // s^2
    double survival_prob = 0.98;                  // psi, applied once age >= window
    std::vector<double> class_prior;              // pi_+
    std::vector<IseClassParams> class_params;
    std::pair<double, double> detection_rate_range{3.0, 6.0};
    bool forced_initial_object = true;
    int no_birth_tail = 10;

    void validate() const {
        if (clutter_rate <= 0.0 || birth_rate < 0.0 || noise_var < 0.0)
            throw std::invalid_argument("GenParams: rates must be nonnegative, clutter positive");
        if (survival_prob <= 0.0 || survival_prob > 1.0)
            throw std::invalid_argument("GenParams: survival_prob in (0,1]");
        if (class_prior.size() != class_params.size() || class_prior.empty())
            throw std::invalid_argument("GenParams: class prior/params mismatch");
        double s = 0.0;
        for (double p : class_prior) s += p;
        if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("GenParams: class prior must sum to 1");
    }
};

struct ScenarioDataset {
    SceneConfig scene;
    std::uint64_t seed = 0;
    bool has_true_params = true;  // external datasets may carry trajectories only
    GenParams true_params;
    std::vector<TrueObject> objects;
    std::vector<Frame> frames;  // steps 1..horizon
};

// Samples all generative parameters from their default experiment ranges:
// mu0 ~ U(10,15), gamma ~ U(0.02,0.1), s^2 ~ U(0.5,2), detection rates U(3,6),
// two classes (100,4) and (10,1) with window 10, psi = 0.98.
GenParams sample_default_params(std::uint64_t seed);

ScenarioDataset generate_scenario(const SceneConfig& config, const GenParams& params, std::uint64_t seed);

}  // namespace gapp
