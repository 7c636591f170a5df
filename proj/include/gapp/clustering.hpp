#pragma once

#include "gapp/common.hpp"

#include <vector>

namespace gapp {

struct Cluster {
    std::vector<int> member_indices;
    Vec mean;         // arithmetic mean of member observations
    Vec argmax_mean;  // running mean of the members' KSD modes

    int size() const { return static_cast<int>(member_indices.size()); }
};

// Deterministic partition of one frame's observations, shared by all particles.
struct ClusterSet {
    std::vector<Cluster> clusters;
    double bandwidth_var = 1.0;
    bool converged = true;  // false if any mode search hit the iteration cap

    int count() const { return static_cast<int>(clusters.size()); }
};

// Weighted average of the particles' posterior-mean noise variances.
double pooled_noise_estimate(std::span<const double> weights, std::span<const double> posterior_means);

// Mean-shift ascent on the Gaussian kernel density over `observations` with
// isotropic bandwidth_var, started at `start`. Stops when the step norm drops
// below 1e-4*sqrt(bandwidth_var) or after 200 iterations (flagged via
// `converged` when provided).
Vec ksd_mode(const Vec& start, std::span<const Vec> observations, double bandwidth_var,
             bool* converged = nullptr);

// Sequential mode-matching: each observation's mode joins the first cluster
// whose argmax mean lies within merge_radius_scale*sqrt(bandwidth_var), else it
// starts a new cluster.
ClusterSet cluster_frame(std::span<const Vec> observations, double bandwidth_var,
                         double merge_radius_scale = 0.5);

}  // namespace gapp
