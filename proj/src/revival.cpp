#include "gapp/revival.hpp"

#include <algorithm>
#include <set>

namespace gapp {

int kappa_prime(const TrackBelief& track, int k, int d_zeta) {
    int last = track.last_assoc_step;
    if (last >= k) last = track.prev_assoc_step;  // data at k itself does not count
    return std::max(last, k - d_zeta);
}

bool revival_validity(const TrackBelief& track, int k, int d_zeta) {
    if (track.active || track.heuristic_deleted) return false;
    const int kp = kappa_prime(track, k, d_zeta);
    return track.death_step > 2 * k - d_zeta - kp;
}

int split_floor(int kappa_prime_val, int k, int d_zeta) {
    return std::max(kappa_prime_val, 2 * k - d_zeta - kappa_prime_val);
}

int valid_split_count(const TrackBelief& track, int k, int d_zeta) {
    return k - split_floor(kappa_prime(track, k, d_zeta), k, d_zeta);
}

GapReplay replay_gap_predict(const TrackBelief& track, int from_step, int to_step,
                             std::span<const TransitionCache> caches, const DeletionHeuristics& h,
                             const SceneConfig& scene) {
    GapReplay out;
    TrackBelief temp = track;
    temp.history.clear();
    const double alpha = track.rate_post.shape;
    const double beta = track.rate_post.rate;
    for (int m = from_step; m <= to_step; ++m) {
        temp.miss_streak = std::max(m - 1 - track.last_assoc_step, 0);
        temp.rate_post = GammaPosterior{alpha, beta + static_cast<double>(m - from_step)};
        if (heuristic_deletion(temp, h, scene)) {
            out.support_ok = false;
            break;
        }
        predict_track(temp, caches);
        temp.states = temp.pred;  // no data in the gap: posterior equals predictive
    }
    out.pred = temp.pred;
    return out;
}

namespace {

double candidate_log_weight(const std::vector<PerClassState>& pred,
                            const GammaPosterior& frozen_rate, const ClassProbs& frozen_probs,
                            int death_step, const Mat& group, int eta_current,
                            const KernelContext& ctx) {
    const int k = ctx.step;
    const double n = static_cast<double>(group.rows());
    const double steps_active = static_cast<double>(k - death_step + 1);
    const FilterConfig& cfg = *ctx.config;

    std::vector<double> class_terms(pred.size(), kNegInf);
    for (std::size_t c = 0; c < pred.size(); ++c) {
        const double pi_c = frozen_probs.probs[c];
        if (pi_c <= 0.0) continue;
        const Vec mean1 = pred[c].mean.row(0).transpose();
        class_terms[c] =
            std::log(pi_c) + fast_marginal_loglik_dims(mean1, pred[c].cov(0, 0), group, ctx.s2);
    }
    const double ll_revived = log_sum_exp(class_terms);
    const double ll_new = new_track_loglik(group, ctx.s2, ctx.log_rho);

    const double a = frozen_rate.shape;
    const double b = frozen_rate.rate;
    const double ap = cfg.rate_baseline.shape;
    const double bp = cfg.rate_baseline.rate;
    const double psi = cfg.survival_prob;
    const double eps = ctx.birth_prev.shape;
    const double xi = ctx.birth_prev.rate;
    const double eta = static_cast<double>(eta_current);

    double logw = ll_revived - ll_new;
    logw += std::lgamma(a + n) - std::lgamma(a) + a * std::log(b) -
            (a + n) * std::log(b + steps_active);
    logw += std::lgamma(ap) - std::lgamma(ap + n) + (ap + n) * std::log(bp + 1.0) -
            ap * std::log(bp);
    logw += std::log(eta) + std::log(xi + 1.0) - std::log(eps + eta - 1.0);
    logw += steps_active * std::log(psi) - std::log1p(-psi);
    return logw;
}

const TrackSnapshot* find_snapshot(const TrackBelief& track, int step) {
    for (const TrackSnapshot& s : track.history)
        if (s.step == step) return &s;
    return nullptr;
}

TrackBelief* track_by_id(Particle& p, std::uint32_t id) {
    for (TrackBelief& tr : p.tracks)
        if (tr.id == id) return &tr;
    return nullptr;
}

}  // namespace

RevivalProposal revival_logits(const Particle& particle, const Mat& group, int eta_current,
                               const KernelContext& ctx, const TrackBelief* split_candidate,
                               int split_step) {
    RevivalProposal out;
    const int k = ctx.step;
    const int d_zeta = ctx.config->revival.d_zeta;

    for (const TrackBelief& tr : particle.tracks) {
        if (split_candidate != nullptr && tr.id == split_candidate->id) {
            // hypothetical: this track was deleted at split_step; evaluate its
            // counter-revival from the rolled-back state
            const TrackSnapshot* snap = find_snapshot(tr, split_step - 1);
            if (snap == nullptr) continue;
            const int kp = std::max(std::min(snap->last_assoc_step, k - 1), k - d_zeta);
            if (!(split_step > 2 * k - d_zeta - kp)) continue;
            TrackBelief ghost;
            ghost.id = tr.id;
            ghost.states = snap->states;
            ghost.class_probs = snap->class_probs;
            ghost.rate_post = snap->rate_post;
            ghost.last_assoc_step = snap->last_assoc_step;
            ghost.prev_assoc_step = snap->prev_assoc_step;
            const GapReplay rep = replay_gap_predict(ghost, split_step, k, ctx.caches,
                                                     ctx.config->deletion, *ctx.scene);
            if (!rep.support_ok) continue;
            out.candidate_ids.push_back(tr.id);
            out.log_weights.push_back(candidate_log_weight(rep.pred, snap->rate_post,
                                                           snap->class_probs, split_step, group,
                                                           eta_current, ctx));
            continue;
        }
        if (!revival_validity(tr, k, d_zeta)) continue;
        const GapReplay rep =
            replay_gap_predict(tr, tr.death_step, k, ctx.caches, ctx.config->deletion, *ctx.scene);
        if (!rep.support_ok) continue;
        out.candidate_ids.push_back(tr.id);
        out.log_weights.push_back(candidate_log_weight(rep.pred, tr.rate_post, tr.class_probs,
                                                       tr.death_step, group, eta_current, ctx));
    }

    double z = 1.0;
    for (double lw : out.log_weights) z += std::exp(lw);
    out.z = z;
    return out;
}

double revival_accept_ratio(double z, int k, int floor) {
    return z / static_cast<double>(k - floor);
}

double split_accept_ratio(double z_counter, int k, int floor) {
    return static_cast<double>(k - floor) / z_counter;
}

void apply_revival_kernel(Particle& particle, StepScratch& scratch, const FilterConfig& config,
                          const SceneConfig& scene, std::span<const TransitionCache> caches,
                          Rng& rng) {
    const int k = scratch.step;
    const int d_zeta = config.revival.d_zeta;
    KernelContext ctx;
    ctx.step = k;
    ctx.s2 = scratch.s2_updated;
    ctx.log_rho = std::log(scene.density());
    ctx.birth_prev = scratch.birth_prev;
    ctx.config = &config;
    ctx.scene = &scene;
    ctx.caches = caches;

    int eta = scratch.eta_sampled;

    // --- revivals over this step's new tracks, in birth order ---
    std::vector<std::uint32_t> new_ids;
    for (const TrackBelief& tr : particle.tracks)
        if (tr.birth_step == k) new_ids.push_back(tr.id);

    for (std::uint32_t new_id : new_ids) {
        TrackBelief* nt = track_by_id(particle, new_id);
        if (nt == nullptr) continue;
        const Mat group = scratch.groups.at(new_id);
        const RevivalProposal prop = revival_logits(particle, group, eta, ctx);
        if (prop.candidate_ids.empty()) continue;

        std::vector<double> options(prop.log_weights.size() + 1, 0.0);
        for (std::size_t i = 0; i < prop.log_weights.size(); ++i) options[i + 1] = prop.log_weights[i];
        const int choice = rng.categorical_log(options);
        if (choice <= 0) continue;

        TrackBelief* revived = track_by_id(particle, prop.candidate_ids[static_cast<std::size_t>(choice - 1)]);
        const double lambda =
            revival_accept_ratio(prop.z, k, split_floor(kappa_prime(*revived, k, d_zeta), k, d_zeta));
        if (lambda < 1.0 && rng.uniform() >= lambda) continue;

        // commit: replay the gap, update with the reassigned data, rebuild counts
        const int death = revived->death_step;
        const double a0 = revived->rate_post.shape;
        const double b0 = revived->rate_post.rate;
        const GapReplay rep = replay_gap_predict(*revived, death, k, caches, config.deletion, scene);
        revived->pred = rep.pred;
        revived->has_pred = true;
        update_track(*revived, group, ctx.s2);
        revived->rate_post = GammaPosterior{a0 + static_cast<double>(group.rows()),
                                            b0 + static_cast<double>(k - death + 1)};
        revived->active = true;
        revived->death_step = 0;
        revived->prev_assoc_step = revived->last_assoc_step;
        revived->last_assoc_step = k;
        revived->miss_streak = 0;
        revived->revived_at = k;

        RevivalEvent ev;
        ev.step = k;
        ev.consumed_key = nt->report_key();
        ev.revived_key = revived->report_key();
        ev.split = false;
        scratch.revivals.push_back(ev);

        scratch.groups[revived->id] = group;
        scratch.group_clusters[revived->id] = scratch.group_clusters.at(new_id);
        scratch.groups.erase(new_id);
        scratch.group_clusters.erase(new_id);
        particle.tracks.erase(std::find_if(particle.tracks.begin(), particle.tracks.end(),
                                           [&](const TrackBelief& t) { return t.id == new_id; }));
        --eta;
    }

    // --- splits over eligible pre-existing tracks ---
    std::vector<std::uint32_t> split_ids;
    for (const TrackBelief& tr : particle.tracks) {
        if (tr.birth_step >= k || !tr.active) continue;
        if (tr.revived_at == k && !config.revival.allow_resplit_of_revived) continue;
        const auto it = scratch.groups.find(tr.id);
        if (it == scratch.groups.end() || it->second.rows() == 0) continue;
        split_ids.push_back(tr.id);
    }

    for (std::uint32_t id : split_ids) {
        TrackBelief* tr = track_by_id(particle, id);
        const int kp = kappa_prime(*tr, k, d_zeta);
        const int floor = split_floor(kp, k, d_zeta);
        if (floor >= k) continue;  // no split time has a proposable inverse
        const int split_step = rng.uniform_int(floor + 1, k);
        const TrackSnapshot* snap = find_snapshot(*tr, split_step - 1);
        if (snap == nullptr) continue;  // history not retained; cannot roll back

        const Mat group = scratch.groups.at(id);
        const RevivalProposal counter = revival_logits(particle, group, eta + 1, ctx, tr, split_step);
        const double lambda = split_accept_ratio(counter.z, k, floor);
        if (lambda < 1.0 && rng.uniform() >= lambda) continue;

        // commit: roll the track back, spawn a new track from its step-k data
        const std::vector<int> clusters = scratch.group_clusters.at(id);
        tr->states = snap->states;
        tr->class_probs = snap->class_probs;
        tr->rate_post = snap->rate_post;
        tr->last_assoc_step = snap->last_assoc_step;
        tr->prev_assoc_step = snap->prev_assoc_step;
        tr->miss_streak = snap->miss_streak;
        tr->active = false;
        tr->heuristic_deleted = false;
        tr->death_step = split_step;
        tr->has_pred = false;
        while (!tr->history.empty() && tr->history.back().step >= split_step) tr->history.pop_back();
        scratch.groups.erase(id);
        scratch.group_clusters.erase(id);

        const int birth_cluster = *std::min_element(clusters.begin(), clusters.end());
        TrackBelief fresh = init_track(group, ctx.s2, config, k, birth_cluster, particle.next_track_id++);
        RevivalEvent ev;
        ev.step = k;
        ev.consumed_key = fresh.report_key();
        ev.revived_key = tr->report_key();
        ev.split = true;
        scratch.revivals.push_back(ev);
        scratch.groups[fresh.id] = group;
        scratch.group_clusters[fresh.id] = clusters;
        particle.tracks.push_back(std::move(fresh));
        ++eta;
    }

    particle.birth_post = update_birth_rate(scratch.birth_prev, eta);
    scratch.eta_sampled = eta;

    std::set<std::uint32_t> ids;
    for (const TrackBelief& tr : particle.tracks)
        if (!ids.insert(tr.id).second)
            throw std::logic_error("apply_revival_kernel: duplicate track id after kernel");
}

}  // namespace gapp
