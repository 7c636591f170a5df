#pragma once

#include "gapp/association.hpp"
#include "gapp/clustering.hpp"
#include "gapp/common.hpp"
#include "gapp/conjugate.hpp"
#include "gapp/scenario.hpp"
#include "gapp/track.hpp"

#include <map>
#include <optional>
#include <string>

namespace gapp {

struct RevivalConfig {
    int d_zeta = 3;
    bool allow_resplit_of_revived = false;
};

struct FilterConfig {
    int particles = 50;
    std::vector<IseClassParams> class_params;
    std::vector<double> class_prior;

    GammaPosterior clutter_baseline{9.0, 0.75};   // (alpha'_+, beta'_+)
    GammaPosterior rate_baseline{4.0, 1.0};       // (alpha_+, beta_+)
    GammaPosterior birth_baseline{0.05, 1.0};     // (eps_+, xi_+)
    InvGammaPosterior noise_baseline{3.0, 2.0};   // (phi_+, b_+)

    double survival_prob = 0.98;
    DeletionHeuristics deletion;
    ForgettingConfig forgetting;

    double ess_threshold = 0.5;        // resample when ESS < threshold * J
    double merge_radius_scale = 0.5;   // clustering merge radius, units of sqrt(s'^2)
    double existence_threshold = 0.5;

    bool revival_enabled = false;      // false = GaPP-Class, true = GaPP-ReaCtion
    RevivalConfig revival;

    std::uint64_t master_seed = 0;
    unsigned threads = 1;

    // log clutter spatial density; empty = uniform over the scene (log rho).
    // The birth density stays uniform regardless.
    std::function<double(const Vec&)> log_clutter_density;

    void validate() const;
};

// Consensus (cross-particle) estimate of one track at one step.
struct TrackEstimate {
    std::uint64_t key = 0;
    Vec mean;
    double pos_std = 0.0;
    double existence = 0.0;
    std::vector<double> class_probs;
};

struct RevivalEvent {
    int step = 0;
    std::uint64_t consumed_key = 0;  // new track that was absorbed
    std::uint64_t revived_key = 0;
    bool split = false;              // true: a split created `consumed_key` out of `revived_key`
};

// Data a step leaves behind for the revival kernel and for reporting.
struct StepScratch {
    int step = 0;
    double s2_assoc = 1.0;    // s'^2_{k-1} used by the proposals
    double s2_updated = 1.0;  // s'^2_k used by updates and likelihoods
    GammaPosterior birth_prev;
    int eta_sampled = 0;
    // per track id: the observations associated this step and their clusters
    std::map<std::uint32_t, Mat> groups;
    std::map<std::uint32_t, std::vector<int>> group_clusters;
    std::vector<RevivalEvent> revivals;
};

// Free functions mirroring the per-track operations (also used by tests).
bool heuristic_deletion(const TrackBelief& track, const DeletionHeuristics& h, const SceneConfig& scene);
// Final survival: Bernoulli(psi * zeta_check).
inline bool sample_survival(bool zeta_check, double psi, Rng& rng) {
    return zeta_check && rng.bernoulli(psi);
}
void predict_track(TrackBelief& track, std::span<const TransitionCache> caches);
// Applies the associated observations to every class state, refreshes the
// class probabilities and returns the class-mixture marginal log-likelihood.
double update_track(TrackBelief& track, const Mat& obs_group, double noise_var);
TrackBelief init_track(const Mat& obs_group, double noise_var, const FilterConfig& config, int step,
                       int birth_cluster, std::uint32_t id);

// Systematic resampling of particle indices given normalized weights.
std::vector<int> systematic_resample_indices(std::span<const double> weights, Rng& rng);

class Filter {
  public:
    Filter(FilterConfig config, SceneConfig scene);

    // One full step of the tracker over one frame of observations.
    void step(const Frame& frame);

    const std::vector<Particle>& particles() const { return particles_; }
    std::vector<Particle>& mutable_particles() { return particles_; }
    const FilterConfig& config() const { return config_; }
    const SceneConfig& scene() const { return scene_; }
    std::span<const TransitionCache> caches() const { return caches_; }
    int current_step() const { return step_; }
    const ClusterSet& last_clusters() const { return clusters_; }
    const std::vector<StepScratch>& last_scratch() const { return scratch_; }
    double last_ess() const { return last_ess_; }
    bool last_resampled() const { return last_resampled_; }

    // Existence-thresholded consensus scene estimate for the current step.
    std::vector<TrackEstimate> estimates() const;

    // Normalizes log weights into weights; returns the log normalizer.
    double normalize_weights();

    // Runs the per-particle block of one step on particle j given shared
    // clustering; exposed for the enumeration tests.
    void particle_step(Particle& p, StepScratch& scratch, std::span<const Mat> cluster_obs, int k,
                       Rng& rng) const;

  private:
    void resample_if_needed(Rng& rng);

    FilterConfig config_;
    SceneConfig scene_;
    std::vector<TransitionCache> caches_;
    std::vector<Particle> particles_;
    ClusterSet clusters_;
    std::vector<StepScratch> scratch_;
    int step_ = 0;
    double last_ess_ = 0.0;
    bool last_resampled_ = false;
};

}  // namespace gapp
