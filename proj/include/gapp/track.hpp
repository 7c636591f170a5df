#pragma once

#include "gapp/common.hpp"
#include "gapp/conjugate.hpp"
#include "gapp/ise.hpp"

#include <cstdint>
#include <deque>
#include <vector>

namespace gapp {

// Gaussian state for one class: one mean column per spatial dimension, one
// covariance shared by all dimensions (model and noise are identical per
// dimension). Row 0 is the current position.
struct PerClassState {
    Mat mean;  // window_len x dims
    Mat cov;   // window_len x window_len

    int window_len() const { return static_cast<int>(mean.rows()); }
};

// Rolled-back state used when a track is retroactively terminated.
struct TrackSnapshot {
    int step = 0;
    std::vector<PerClassState> states;
    ClassProbs class_probs;
    GammaPosterior rate_post;
    int last_assoc_step = 0;
    int prev_assoc_step = 0;
    int miss_streak = 0;
};

struct TrackBelief {
    std::uint32_t id = 0;
    int birth_step = 0;
    int birth_cluster = 0;  // smallest cluster index of the initialising group

    std::vector<PerClassState> states;  // posterior, one per class
    std::vector<PerClassState> pred;    // predictive at the current step (transient)
    bool has_pred = false;

    ClassProbs class_probs;
    GammaPosterior rate_post;

    bool active = true;            // zeta
    bool heuristic_deleted = false;  // deletion was absolute: never revivable
    int death_step = 0;            // first inactive step; valid when !active

    int last_assoc_step = 0;       // most recent step with associated data
    int prev_assoc_step = 0;       // the associated step before that (0 = none)
    int miss_streak = 0;
    int revived_at = -1;           // step of the most recent revival, -1 if never

    std::deque<TrackSnapshot> history;  // recent end-of-step states, oldest first

    // Cross-particle reporting key: tracks born from the same cluster of the
    // same frame describe the same hypothesised object.
    std::uint64_t report_key() const {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(birth_step)) << 20) |
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(birth_cluster) & 0xfffff);
    }

    int window_len() const { return states.empty() ? 0 : states[0].window_len(); }
    int age_at(int k) const { return k - birth_step; }

    // Class-probability-weighted mean and variance of the current position,
    // from the posterior states.
    Vec mixture_mean() const {
        const int dims = static_cast<int>(states[0].mean.cols());
        Vec m = Vec::Zero(dims);
        for (std::size_t c = 0; c < states.size(); ++c)
            m += class_probs.probs[c] * states[c].mean.row(0).transpose();
        return m;
    }

    double mixture_pos_var() const {
        // average over dimensions of the per-dimension mixture variance
        const int dims = static_cast<int>(states[0].mean.cols());
        const Vec mix = mixture_mean();
        double total = 0.0;
        for (int d = 0; d < dims; ++d) {
            double second = 0.0;
            for (std::size_t c = 0; c < states.size(); ++c) {
                const double m1 = states[c].mean(0, d);
                second += class_probs.probs[c] * (states[c].cov(0, 0) + m1 * m1);
            }
            total += second - mix(d) * mix(d);
        }
        return std::max(total / static_cast<double>(dims), 0.0);
    }
};

struct Particle {
    std::vector<TrackBelief> tracks;
    GammaPosterior clutter_post;
    GammaPosterior birth_post;
    InvGammaPosterior noise_post;
    double log_weight = 0.0;
    double weight = 1.0;  // normalized
    bool degenerate_weight = false;  // a weight increment became non-finite
    std::uint32_t next_track_id = 0;
};

struct DeletionHeuristics {
    double max_pos_std = 50.0;
    int max_miss_streak = 3;
    double min_expected_rate = 0.5;
    double scene_margin_frac = 0.1;  // scene width fraction for the leaving-view test
};

}  // namespace gapp
