#pragma once

#include "gapp/clustering.hpp"
#include "gapp/common.hpp"
#include "gapp/track.hpp"

#include <vector>

namespace gapp {

// Everything the proposal formulas need from one particle at step k, with the
// hyperparameter posteriors as of k-1. The birth density is the uniform rho
// over the scene; the clutter spatial density defaults to the same rho but may
// be substituted per cluster via cluster_clutter_logsum.
struct AssocInputs {
    const std::vector<TrackBelief>* tracks = nullptr;
    GammaPosterior clutter_prior;   // (alpha_0, beta_0) at k-1
    GammaPosterior birth_prior;     // (eps, xi) at k-1
    GammaPosterior rate_baseline;   // (alpha_+, beta_+)
    double noise_var = 1.0;         // s'^2_{k-1}
    double log_birth_density = 0.0;  // log rho
    // per-cluster sum of log clutter densities; when null, clusters use
    // n * log_birth_density (uniform clutter)
    const std::vector<double>* cluster_clutter_logsum = nullptr;
    int dims = 2;
};

// Per-cluster labels after both sampling stages. Entry semantics:
//   0..T-1  -> index into inputs.tracks (pre-existing track)
//   -1      -> clutter
//   T + g   -> new track number g (0-based, birth order)
struct AssociationDraw {
    std::vector<int> labels;
    int new_track_count = 0;
    double log_q = 0.0;            // accumulated proposal log-probability
    bool forced_clutter = false;   // degenerate all--infinity fallback fired
};

// Log proposal weights for one cluster over {existing tracks..., clutter, new}.
// Layout: [0..T-1] tracks, [T] clutter, [T+1] new. Inactive tracks and
// size-one clusters' "new" option are -inf. Entries more than 700 below the
// maximum are floored to -inf. clutter_logsum is the cluster's summed log
// clutter density (pass n * log rho for the uniform default).
std::vector<double> initial_assoc_logits(const Mat& cluster_obs, double clutter_logsum,
                                         const AssocInputs& inputs);

// Sequentially resolves the clusters marked "new" (given in index order) into
// distinct new tracks. Returns per-cluster group numbers and adds the
// realized choice probabilities to log_q.
struct NewTrackResolution {
    std::vector<int> group_of_cluster;  // parallel to new_cluster_order
    int group_count = 0;
    double log_q = 0.0;
};
NewTrackResolution resolve_new_tracks(std::span<const Mat> new_cluster_obs,
                                      const AssocInputs& inputs, Rng& rng);

// Samples the full association for one frame's clusters.
AssociationDraw sample_associations(std::span<const Mat> cluster_obs, const AssocInputs& inputs,
                                    Rng& rng);

// log of n_k! * p(a_k, eta_k | history): the Gamma-Poisson marginal mass of the
// realized counts for every active source (clutter at index 0 semantics is the
// caller's), plus the birth-count mass.
struct CountTerm {
    double shape;
    double rate;
    int count;
};
double assoc_prior_logmass(std::span<const CountTerm> active_sources,
                           const GammaPosterior& birth_prior, int eta_k);

// Shared per-count marginal: log Gamma-Poisson mass of n given Gamma(shape, rate).
double gamma_poisson_logmass(double shape, double rate, int count);

// Approximate marginal likelihood of a new track's observations:
// log[ rho * (2 pi s2 / n)^{D/2} * prod_dims prod_obs N(y | ybar, s2) ].
double new_track_loglik(const Mat& obs_group, double noise_var, double log_clutter_density);

}  // namespace gapp
