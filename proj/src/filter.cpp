#include "gapp/filter.hpp"

#include "gapp/revival.hpp"
#include "gapp/structured.hpp"

#include <algorithm>
#include <numeric>

namespace gapp {

void FilterConfig::validate() const {
    if (particles < 1) throw std::invalid_argument("FilterConfig: particles must be >= 1");
    if (class_params.empty() || class_params.size() != class_prior.size())
        throw std::invalid_argument("FilterConfig: class params/prior mismatch");
    double s = 0.0;
    for (double p : class_prior) s += p;
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("FilterConfig: class prior must sum to 1");
    for (const auto& cp : class_params) cp.validate();
    if (clutter_baseline.shape <= 0.0 || clutter_baseline.rate <= 0.0 || rate_baseline.shape <= 0.0 ||
        rate_baseline.rate <= 0.0 || birth_baseline.shape <= 0.0 || birth_baseline.rate <= 0.0)
        throw std::invalid_argument("FilterConfig: Gamma baselines must be positive");
    if (noise_baseline.shape <= 1.0 || noise_baseline.scale <= 0.0)
        throw std::invalid_argument("FilterConfig: noise baseline needs shape > 1, scale > 0");
    if (survival_prob <= 0.0 || survival_prob > 1.0)
        throw std::invalid_argument("FilterConfig: survival_prob in (0,1]");
    if (revival.d_zeta < 1) throw std::invalid_argument("FilterConfig: d_zeta must be >= 1");
}

bool heuristic_deletion(const TrackBelief& track, const DeletionHeuristics& h, const SceneConfig& scene) {
    if (track.miss_streak >= h.max_miss_streak) return true;
    if (track.rate_post.mean() < h.min_expected_rate) return true;
    if (std::sqrt(track.mixture_pos_var()) > h.max_pos_std) return true;
    const Vec m = track.mixture_mean();
    for (Eigen::Index d = 0; d < m.size(); ++d) {
        const auto [lo, hi] = scene.bounds[static_cast<std::size_t>(d)];
        const double margin = h.scene_margin_frac * (hi - lo);
        if (m(d) < lo - margin || m(d) > hi + margin) return true;
    }
    return false;
}

void predict_track(TrackBelief& track, std::span<const TransitionCache> caches) {
    track.pred.resize(track.states.size());
    const int len = track.window_len();
    for (std::size_t c = 0; c < track.states.size(); ++c) {
        const TransitionPair& tr = caches[c].for_input_length(len);
        PerClassState& out = track.pred[c];
        out.mean = tr.f_matrix * track.states[c].mean;
        out.cov = tr.f_matrix * track.states[c].cov * tr.f_matrix.transpose();
        out.cov(0, 0) += tr.noise_var;
        out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    }
    track.has_pred = true;
}

double update_track(TrackBelief& track, const Mat& obs_group, double noise_var) {
    if (obs_group.rows() == 0) throw std::invalid_argument("update_track: empty group");
    if (!track.has_pred) throw std::logic_error("update_track: predict step missing");

    const int n = static_cast<int>(obs_group.rows());
    Vec ybar(obs_group.cols());
    for (Eigen::Index d = 0; d < obs_group.cols(); ++d) ybar(d) = obs_group.col(d).mean();

    std::vector<double> class_ll(track.states.size(), kNegInf);
    std::vector<double> weighted(track.states.size(), kNegInf);
    for (std::size_t c = 0; c < track.states.size(); ++c) {
        const PerClassState& pred = track.pred[c];
        const Vec mean1 = pred.mean.row(0).transpose();
        class_ll[c] = fast_marginal_loglik_dims(mean1, pred.cov(0, 0), obs_group, noise_var);
        auto [m, v] = fast_gaussian_update(pred.mean, pred.cov, n, ybar, noise_var);
        track.states[c].mean = std::move(m);
        track.states[c].cov = std::move(v);
        if (track.class_probs.probs[c] > 0.0)
            weighted[c] = std::log(track.class_probs.probs[c]) + class_ll[c];
    }
    const double marginal = log_sum_exp(weighted);
    if (std::isfinite(marginal))
        for (std::size_t c = 0; c < track.states.size(); ++c)
            track.class_probs.probs[c] = std::exp(weighted[c] - marginal);
    return marginal;
}

TrackBelief init_track(const Mat& obs_group, double noise_var, const FilterConfig& config, int step,
                       int birth_cluster, std::uint32_t id) {
    const int n = static_cast<int>(obs_group.rows());
    if (n < 1) throw std::invalid_argument("init_track: empty group");

    TrackBelief tr;
    tr.id = id;
    tr.birth_step = step;
    tr.birth_cluster = birth_cluster;
    tr.class_probs.probs = config.class_prior;
    tr.rate_post = GammaPosterior{config.rate_baseline.shape + static_cast<double>(n),
                                  config.rate_baseline.rate + 1.0};
    tr.active = true;
    tr.last_assoc_step = step;
    tr.prev_assoc_step = 0;
    tr.miss_streak = 0;

    Mat mean(1, obs_group.cols());
    for (Eigen::Index d = 0; d < obs_group.cols(); ++d) mean(0, d) = obs_group.col(d).mean();
    Mat cov(1, 1);
    cov(0, 0) = noise_var / static_cast<double>(n);
    tr.states.assign(config.class_params.size(), PerClassState{mean, cov});
    return tr;
}

std::vector<int> systematic_resample_indices(std::span<const double> weights, Rng& rng) {
    const int n = static_cast<int>(weights.size());
    std::vector<int> out(static_cast<std::size_t>(n));
    const double u0 = rng.uniform() / static_cast<double>(n);
    double cum = weights.empty() ? 0.0 : weights[0];
    int j = 0;
    for (int i = 0; i < n; ++i) {
        const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
        while (cum < u && j < n - 1) {
            ++j;
            cum += weights[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = j;
    }
    return out;
}

Filter::Filter(FilterConfig config, SceneConfig scene)
    : config_(std::move(config)), scene_(std::move(scene)) {
    config_.validate();
    scene_.validate();
    caches_.reserve(config_.class_params.size());
    for (auto cp : config_.class_params) {
        cp.step = scene_.step;
        caches_.emplace_back(cp);
    }
    Particle proto;
    proto.clutter_post = config_.clutter_baseline;
    proto.birth_post = config_.birth_baseline;
    proto.noise_post = config_.noise_baseline;
    proto.log_weight = -std::log(static_cast<double>(config_.particles));
    proto.weight = 1.0 / static_cast<double>(config_.particles);
    particles_.assign(static_cast<std::size_t>(config_.particles), proto);
    scratch_.resize(static_cast<std::size_t>(config_.particles));
}

void Filter::resample_if_needed(Rng& rng) {
    double sum_sq = 0.0;
    for (const Particle& p : particles_) sum_sq += p.weight * p.weight;
    last_ess_ = sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
    last_resampled_ = false;
    const double J = static_cast<double>(particles_.size());
    if (last_ess_ >= config_.ess_threshold * J) return;

    std::vector<double> w(particles_.size());
    for (std::size_t j = 0; j < particles_.size(); ++j) w[j] = particles_[j].weight;
    const std::vector<int> idx = systematic_resample_indices(w, rng);
    std::vector<Particle> next;
    next.reserve(particles_.size());
    for (int i : idx) next.push_back(particles_[static_cast<std::size_t>(i)]);
    particles_ = std::move(next);
    for (Particle& p : particles_) {
        p.weight = 1.0 / J;
        p.log_weight = -std::log(J);
    }
    last_resampled_ = true;
}

void Filter::particle_step(Particle& p, StepScratch& scratch, std::span<const Mat> cluster_obs, int k,
                           Rng& rng) const {
    scratch = StepScratch{};
    scratch.step = k;
    scratch.s2_assoc = p.noise_post.mean();
    scratch.birth_prev = p.birth_post;
    const GammaPosterior clutter_prev = p.clutter_post;
    const double psi = config_.survival_prob;
    const double log_rho = std::log(scene_.density());
    const int dims = scene_.dims();

    // per-cluster clutter log densities (uniform unless substituted)
    std::vector<double> clutter_logsum(cluster_obs.size());
    for (std::size_t theta = 0; theta < cluster_obs.size(); ++theta) {
        if (config_.log_clutter_density) {
            double total = 0.0;
            for (Eigen::Index r = 0; r < cluster_obs[theta].rows(); ++r)
                total += config_.log_clutter_density(cluster_obs[theta].row(r).transpose());
            clutter_logsum[theta] = total;
        } else {
            clutter_logsum[theta] = static_cast<double>(cluster_obs[theta].rows()) * log_rho;
        }
    }

    // deletion: heuristics first (absolute), then sampled survival
    double log_survival_factor = 0.0;
    for (TrackBelief& tr : p.tracks) {
        tr.has_pred = false;
        if (!tr.active) continue;
        if (heuristic_deletion(tr, config_.deletion, scene_)) {
            tr.heuristic_deleted = true;
            tr.active = false;
            tr.death_step = k;
            log_survival_factor += std::log1p(-psi);
            continue;
        }
        if (!sample_survival(true, psi, rng)) {
            tr.active = false;
            tr.death_step = k;
        }
    }

    // predict
    for (TrackBelief& tr : p.tracks)
        if (tr.active) predict_track(tr, caches());

    // associate
    AssocInputs inputs;
    inputs.tracks = &p.tracks;
    inputs.clutter_prior = clutter_prev;
    inputs.birth_prior = scratch.birth_prev;
    inputs.rate_baseline = config_.rate_baseline;
    inputs.noise_var = scratch.s2_assoc;
    inputs.log_birth_density = log_rho;
    inputs.cluster_clutter_logsum = &clutter_logsum;
    inputs.dims = dims;
    const AssociationDraw draw = sample_associations(cluster_obs, inputs, rng);

    // gather per-label groups
    const int T = static_cast<int>(p.tracks.size());
    int n_clutter = 0;
    double clutter_loglik = 0.0;
    std::vector<std::vector<int>> track_clusters(static_cast<std::size_t>(T));
    std::vector<std::vector<int>> new_clusters(static_cast<std::size_t>(draw.new_track_count));
    for (std::size_t theta = 0; theta < cluster_obs.size(); ++theta) {
        const int label = draw.labels[theta];
        if (label < 0) {
            n_clutter += static_cast<int>(cluster_obs[theta].rows());
            clutter_loglik += clutter_logsum[theta];
        } else if (label < T)
            track_clusters[static_cast<std::size_t>(label)].push_back(static_cast<int>(theta));
        else
            new_clusters[static_cast<std::size_t>(label - T)].push_back(static_cast<int>(theta));
    }
    auto stack_group = [&](const std::vector<int>& thetas) {
        int rows = 0;
        for (int t : thetas) rows += static_cast<int>(cluster_obs[static_cast<std::size_t>(t)].rows());
        Mat g(rows, dims);
        int at = 0;
        for (int t : thetas) {
            const Mat& c = cluster_obs[static_cast<std::size_t>(t)];
            g.middleRows(at, static_cast<int>(c.rows())) = c;
            at += static_cast<int>(c.rows());
        }
        return g;
    };

    // association prior mass with step-(k-1) hyperparameters
    std::vector<CountTerm> count_terms;
    count_terms.push_back({clutter_prev.shape, clutter_prev.rate, n_clutter});
    std::vector<Mat> track_groups(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const TrackBelief& tr = p.tracks[static_cast<std::size_t>(t)];
        if (!tr.active) continue;
        track_groups[static_cast<std::size_t>(t)] = stack_group(track_clusters[static_cast<std::size_t>(t)]);
        count_terms.push_back({tr.rate_post.shape, tr.rate_post.rate,
                               static_cast<int>(track_groups[static_cast<std::size_t>(t)].rows())});
    }
    std::vector<Mat> new_groups;
    new_groups.reserve(new_clusters.size());
    for (const auto& thetas : new_clusters) {
        new_groups.push_back(stack_group(thetas));
        count_terms.push_back({config_.rate_baseline.shape, config_.rate_baseline.rate,
                               static_cast<int>(new_groups.back().rows())});
    }
    const double log_prior =
        assoc_prior_logmass(count_terms, scratch.birth_prev, draw.new_track_count);
    scratch.eta_sampled = draw.new_track_count;

    // hyperparameter updates
    p.birth_post = update_birth_rate(scratch.birth_prev, draw.new_track_count);
    p.clutter_post = update_rate(clutter_prev, n_clutter, true);
    for (int t = 0; t < T; ++t) {
        TrackBelief& tr = p.tracks[static_cast<std::size_t>(t)];
        if (!tr.active) continue;
        tr.rate_post = update_rate(tr.rate_post,
                                   static_cast<int>(track_groups[static_cast<std::size_t>(t)].rows()), true);
    }
    {
        std::vector<Mat> noise_groups;
        for (int t = 0; t < T; ++t)
            if (p.tracks[static_cast<std::size_t>(t)].active &&
                track_groups[static_cast<std::size_t>(t)].rows() > 1)
                noise_groups.push_back(track_groups[static_cast<std::size_t>(t)]);
        for (const Mat& g : new_groups)
            if (g.rows() > 1) noise_groups.push_back(g);
        p.noise_post = update_noise_var(p.noise_post, noise_groups);
    }
    const double s2_upd = p.noise_post.mean();
    scratch.s2_updated = s2_upd;

    // track updates and the data log-likelihood
    double log_lik = clutter_loglik;
    for (int t = 0; t < T; ++t) {
        TrackBelief& tr = p.tracks[static_cast<std::size_t>(t)];
        if (!tr.active) continue;
        const Mat& g = track_groups[static_cast<std::size_t>(t)];
        if (g.rows() == 0) {
            tr.states = tr.pred;  // no data: posterior equals predictive
            ++tr.miss_streak;
            continue;
        }
        log_lik += update_track(tr, g, s2_upd);
        tr.prev_assoc_step = tr.last_assoc_step;
        tr.last_assoc_step = k;
        tr.miss_streak = 0;
        scratch.groups[tr.id] = g;
        scratch.group_clusters[tr.id] = track_clusters[static_cast<std::size_t>(t)];
    }

    // new tracks
    for (std::size_t g = 0; g < new_groups.size(); ++g) {
        const Mat& obs = new_groups[g];
        log_lik += new_track_loglik(obs, s2_upd, log_rho);
        const int birth_cluster =
            *std::min_element(new_clusters[g].begin(), new_clusters[g].end());
        TrackBelief nt = init_track(obs, s2_upd, config_, k, birth_cluster, p.next_track_id++);
        scratch.groups[nt.id] = obs;
        scratch.group_clusters[nt.id] = new_clusters[g];
        p.tracks.push_back(std::move(nt));
    }

    const double increment = log_lik + log_prior - draw.log_q + log_survival_factor;
    if (std::isfinite(increment)) {
        p.log_weight += increment;
    } else {
        p.log_weight = kNegInf;
        p.degenerate_weight = true;
    }
}

double Filter::normalize_weights() {
    std::vector<double> lw(particles_.size());
    for (std::size_t j = 0; j < particles_.size(); ++j) lw[j] = particles_[j].log_weight;
    const double norm = log_sum_exp(lw);
    if (!std::isfinite(norm)) {
        // every particle degenerated; restart from uniform weights
        const double u = 1.0 / static_cast<double>(particles_.size());
        for (Particle& p : particles_) {
            p.weight = u;
            p.log_weight = std::log(u);
        }
        return norm;
    }
    double sum = 0.0;
    for (Particle& p : particles_) {
        p.weight = std::exp(p.log_weight - norm);
        sum += p.weight;
    }
    for (Particle& p : particles_) {
        p.weight /= sum;
        p.log_weight = std::log(p.weight);
    }
    return norm;
}

void Filter::step(const Frame& frame) {
    if (frame.step != step_ + 1)
        throw std::runtime_error("Filter::step: frames must be consecutive");
    const int k = frame.step;
    step_ = k;
    const std::uint64_t J = static_cast<std::uint64_t>(particles_.size());

    Rng resample_rng = substream(config_.master_seed, static_cast<std::uint64_t>(k), J);
    resample_if_needed(resample_rng);

    // shared across particles: pooled noise estimate, then clustering
    std::vector<double> w(particles_.size()), means(particles_.size());
    for (std::size_t j = 0; j < particles_.size(); ++j) {
        w[j] = particles_[j].weight;
        means[j] = particles_[j].noise_post.mean();
    }
    const double s2_pool = pooled_noise_estimate(w, means);
    clusters_ = cluster_frame(frame.observations, s2_pool, config_.merge_radius_scale);

    const int dims = scene_.dims();
    std::vector<Mat> cluster_obs;
    cluster_obs.reserve(clusters_.clusters.size());
    for (const Cluster& c : clusters_.clusters) {
        Mat m(c.size(), dims);
        for (int r = 0; r < c.size(); ++r)
            m.row(r) = frame.observations[static_cast<std::size_t>(c.member_indices[static_cast<std::size_t>(r)])]
                           .transpose();
        cluster_obs.push_back(std::move(m));
    }

    parallel_for(particles_.size(), config_.threads, [&](std::size_t j) {
        Rng rng = substream(config_.master_seed, static_cast<std::uint64_t>(k), j);
        particle_step(particles_[j], scratch_[j], cluster_obs, k, rng);
    });

    normalize_weights();

    if (config_.revival_enabled) {
        parallel_for(particles_.size(), config_.threads, [&](std::size_t j) {
            Rng rng = substream(config_.master_seed, static_cast<std::uint64_t>(k), J + 2 + j);
            apply_revival_kernel(particles_[j], scratch_[j], config_, scene_, caches(), rng);
        });
    }

    // forgetting pulls the next step's priors toward the baselines (identity
    // at the default lambda = 1)
    const ForgettingConfig& fg = config_.forgetting;
    if (fg.lambda_gamma < 1.0 || fg.lambda_mu < 1.0 || fg.lambda_s2 < 1.0) {
        for (Particle& p : particles_) {
            p.birth_post = apply_forgetting(p.birth_post, config_.birth_baseline, fg.lambda_gamma);
            p.clutter_post = apply_forgetting(p.clutter_post, config_.clutter_baseline, fg.lambda_mu);
            p.noise_post = apply_forgetting(p.noise_post, config_.noise_baseline, fg.lambda_s2);
            for (TrackBelief& tr : p.tracks)
                if (tr.active) tr.rate_post = apply_forgetting(tr.rate_post, config_.rate_baseline, fg.lambda_mu);
        }
    }

    // end-of-step snapshots for retroactive splits
    if (config_.revival_enabled) {
        for (Particle& p : particles_) {
            for (TrackBelief& tr : p.tracks) {
                if (!tr.active) {
                    tr.history.clear();
                    continue;
                }
                TrackSnapshot snap;
                snap.step = k;
                snap.states = tr.states;
                snap.class_probs = tr.class_probs;
                snap.rate_post = tr.rate_post;
                snap.last_assoc_step = tr.last_assoc_step;
                snap.prev_assoc_step = tr.prev_assoc_step;
                snap.miss_streak = tr.miss_streak;
                tr.history.push_back(std::move(snap));
                while (!tr.history.empty() && tr.history.front().step < k - config_.revival.d_zeta)
                    tr.history.pop_front();
            }
        }
    }
}

std::vector<TrackEstimate> Filter::estimates() const {
    struct Acc {
        double exist = 0.0;
        Vec mean_sum;
        double var_sum = 0.0;
        double mean_sq_sum = 0.0;
        std::vector<double> pi_sum;
        bool init = false;
    };
    std::map<std::uint64_t, Acc> acc;
    const int dims = scene_.dims();
    for (const Particle& p : particles_) {
        for (const TrackBelief& tr : p.tracks) {
            if (!tr.active) continue;
            Acc& a = acc[tr.report_key()];
            if (!a.init) {
                a.mean_sum = Vec::Zero(dims);
                a.pi_sum.assign(tr.class_probs.probs.size(), 0.0);
                a.init = true;
            }
            const Vec m = tr.mixture_mean();
            a.exist += p.weight;
            a.mean_sum += p.weight * m;
            a.var_sum += p.weight * tr.mixture_pos_var();
            a.mean_sq_sum += p.weight * m.squaredNorm() / static_cast<double>(dims);
            for (std::size_t c = 0; c < a.pi_sum.size(); ++c)
                a.pi_sum[c] += p.weight * tr.class_probs.probs[c];
        }
    }
    std::vector<TrackEstimate> out;
    for (const auto& [key, a] : acc) {
        if (a.exist < config_.existence_threshold) continue;
        TrackEstimate e;
        e.key = key;
        e.existence = a.exist;
        e.mean = a.mean_sum / a.exist;
        const double mean_sq = a.mean_sq_sum / a.exist;
        const double spread = std::max(mean_sq - e.mean.squaredNorm() / static_cast<double>(dims), 0.0);
        e.pos_std = std::sqrt(std::max(a.var_sum / a.exist + spread, 0.0));
        e.class_probs.resize(a.pi_sum.size());
        for (std::size_t c = 0; c < a.pi_sum.size(); ++c) e.class_probs[c] = a.pi_sum[c] / a.exist;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace gapp
