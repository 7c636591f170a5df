#pragma once

#include "gapp/filter.hpp"

namespace gapp {

// Last step strictly before k with data associated to this track, floored at
// k - d_zeta.
int kappa_prime(const TrackBelief& track, int k, int d_zeta);

// A deleted track may be revived if the deletion was sampled (not heuristic)
// and happened recently enough given its last associated data.
bool revival_validity(const TrackBelief& track, int k, int d_zeta);

// Split times are restricted to {floor+1, ..., k}: later than the last
// associated data and recent enough that the inverse revival stays proposable.
int split_floor(int kappa_prime_val, int k, int d_zeta);
int valid_split_count(const TrackBelief& track, int k, int d_zeta);

// Predictive states obtained by propagating a deleted track forward with no
// data from its deletion step through k. support_ok is false when any
// intermediate step would have triggered the heuristic deletion criteria.
struct GapReplay {
    std::vector<PerClassState> pred;
    bool support_ok = true;
};
GapReplay replay_gap_predict(const TrackBelief& track, int from_step, int to_step,
                             std::span<const TransitionCache> caches, const DeletionHeuristics& h,
                             const SceneConfig& scene);

// Proposal weights for re-attaching the new track's observations to each valid
// deleted track. log_weights align with candidate track ids; the no-revival
// option has weight one, so z = 1 + sum(exp(log_weights)).
struct RevivalProposal {
    std::vector<std::uint32_t> candidate_ids;
    std::vector<double> log_weights;
    double z = 1.0;
};

// Context shared by the revival and split evaluations at step k.
struct KernelContext {
    int step = 0;
    double s2 = 1.0;                 // s'^2_k
    double log_rho = 0.0;
    GammaPosterior birth_prev;       // (eps, xi) at k-1
    const FilterConfig* config = nullptr;
    const SceneConfig* scene = nullptr;
    std::span<const TransitionCache> caches;
};

RevivalProposal revival_logits(const Particle& particle, const Mat& group, int eta_current,
                               const KernelContext& ctx,
                               const TrackBelief* split_candidate = nullptr,
                               int split_step = 0);

// Metropolis ratios. `floor` is the lower end of the valid split-time range,
// so k - floor counts the valid split times; it equals kappa_prime whenever
// every split time has a proposable inverse.
double revival_accept_ratio(double z, int k, int floor);
double split_accept_ratio(double z_counter, int k, int floor);

// In-place Metropolis-within-Gibbs sweep: revivals over the step's new tracks
// in birth order, then uniform-time splits over eligible pre-existing tracks,
// then the birth-rate posterior is rebuilt from the final birth count.
// Particle weights are not modified. Events are appended to scratch.revivals.
void apply_revival_kernel(Particle& particle, StepScratch& scratch, const FilterConfig& config,
                          const SceneConfig& scene, std::span<const TransitionCache> caches, Rng& rng);

}  // namespace gapp
