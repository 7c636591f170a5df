#pragma once

#include "gapp/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gapp {

struct GospaConfig {
    double order = 2.0;       // p
    double cutoff = 10.0;     // c
    double normalizer = 2.0;  // alpha

    void validate() const {
        if (order < 1.0 || cutoff <= 0.0 || normalizer <= 0.0 || normalizer > 2.0)
            throw std::invalid_argument("GospaConfig: need p >= 1, c > 0, alpha in (0,2]");
    }
};

// Minimum-cost assignment on a square cost matrix; returns row -> column.
std::vector<int> hungarian_assign(const Mat& cost);

// Exact GOSPA distance between two point sets (columns of equal dimension).
double gospa(std::span<const Vec> truth, std::span<const Vec> estimate, const GospaConfig& config);

// One scene: labelled point estimates at one step.
struct LabelledPoint {
    std::uint64_t key = 0;
    Vec pos;
};

struct SiapReport {
    double continuity = 0.0;    // C
    double ambiguity = 0.0;     // A
    double spuriousness = 0.0;  // S
    double pos_accuracy = 0.0;  // P
    double break_rate = 0.0;    // R
    double milli_breaks = 0.0;  // 1000 * R
};

// truth_by_step[k]: active truths (id, position) at step k.
// consensus_by_step[k]: the reported scene estimate; used for the break rate.
// weighted_scenes_by_step[k]: per-particle scenes with weights; when empty the
// consensus is treated as a single unit-weight particle.
struct WeightedScene {
    double weight = 1.0;
    std::vector<LabelledPoint> tracks;
};
SiapReport siap(const std::vector<std::vector<std::pair<int, Vec>>>& truth_by_step,
                const std::vector<std::vector<LabelledPoint>>& consensus_by_step,
                const std::vector<std::vector<WeightedScene>>& weighted_scenes_by_step,
                double assoc_gate);

// Weighted posterior summaries of the global hyperparameters in one particle.
struct HyperSample {
    double w = 1.0;
    double eps = 0.0, xi = 1.0;       // birth rate Gamma
    double alpha0 = 1.0, beta0 = 1.0; // clutter rate Gamma
    double phi = 2.0, b = 1.0;        // noise variance InvGamma
};

// Per (truth, step) posterior of the associated track across particles.
struct TrackPosteriorSample {
    std::vector<double> w;
    std::vector<double> alpha, beta;          // detection-rate Gamma per particle
    std::vector<std::vector<double>> class_probs;
    double true_rate = 0.0;
    int true_class = 0;
};

struct ArmseReport {
    double gamma = 0.0;
    double mu0 = 0.0;
    double s2 = 0.0;
    bool s2_defined = true;  // false when any posterior had shape <= 2
    double mu_pos = 0.0;     // detection rates, averaged over associated truth steps
    double classification = 0.0;
    int mu_steps = 0;        // number of associated truth steps entering mu_pos
};

ArmseReport armse(const std::vector<std::vector<HyperSample>>& hyper_by_step, double true_gamma,
                  double true_mu0, double true_s2,
                  const std::vector<TrackPosteriorSample>& track_posteriors);

// Mixture second-moment RMSE of a Gamma posterior ensemble vs a true value.
double gamma_mixture_rmse(std::span<const HyperSample> samples, bool birth, double truth);

}  // namespace gapp
