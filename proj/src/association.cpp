#include "gapp/association.hpp"

#include "gapp/structured.hpp"

#include <cstdio>

namespace gapp {

namespace {

void apply_floor(std::vector<double>& logits) {
    double m = kNegInf;
    for (double v : logits) m = std::max(m, v);
    if (!std::isfinite(m)) return;
    for (double& v : logits)
        if (v < m - 700.0) v = kNegInf;
}

double log_normalizer(std::span<const double> logits) { return log_sum_exp(logits); }

}  // namespace

std::vector<double> initial_assoc_logits(const Mat& cluster_obs, double clutter_logsum,
                                         const AssocInputs& inputs) {
    if (cluster_obs.rows() == 0) throw std::invalid_argument("initial_assoc_logits: empty cluster");
    const auto& tracks = *inputs.tracks;
    const int n = static_cast<int>(cluster_obs.rows());
    const double nd = static_cast<double>(n);
    const int T = static_cast<int>(tracks.size());

    std::vector<double> logits(static_cast<std::size_t>(T) + 2, kNegInf);

    // existing tracks: zeta * (alpha/beta)^n * sum_c N(cluster | predictive_c) pi_c
    for (int t = 0; t < T; ++t) {
        const TrackBelief& tr = tracks[static_cast<std::size_t>(t)];
        if (!tr.active || !tr.has_pred) continue;
        std::vector<double> class_terms(tr.pred.size(), kNegInf);
        for (std::size_t c = 0; c < tr.pred.size(); ++c) {
            const double pi_c = tr.class_probs.probs[c];
            if (pi_c <= 0.0) continue;
            const Vec mean1 = tr.pred[c].mean.row(0).transpose();
            class_terms[c] = std::log(pi_c) +
                             fast_marginal_loglik_dims(mean1, tr.pred[c].cov(0, 0), cluster_obs,
                                                       inputs.noise_var);
        }
        logits[static_cast<std::size_t>(t)] =
            nd * std::log(tr.rate_post.mean()) + log_sum_exp(class_terms);
    }

    // clutter: (alpha_0/beta_0)^n * prod p(y)
    logits[static_cast<std::size_t>(T)] =
        nd * std::log(inputs.clutter_prior.mean()) + clutter_logsum;

    // new track, blocked for singleton clusters
    if (n >= 2) {
        const double eps = inputs.birth_prior.shape;
        const double xi = inputs.birth_prior.rate;
        const double log_p_birth = std::log1p(-std::pow(xi / (1.0 + xi), eps));
        logits[static_cast<std::size_t>(T) + 1] =
            log_p_birth + nd * std::log(inputs.rate_baseline.mean()) +
            new_track_loglik(cluster_obs, inputs.noise_var, inputs.log_birth_density);
    }

    apply_floor(logits);
    return logits;
}

NewTrackResolution resolve_new_tracks(std::span<const Mat> new_cluster_obs, const AssocInputs& inputs,
                                      Rng& rng) {
    NewTrackResolution out;
    const double s2 = inputs.noise_var;
    const double D = static_cast<double>(inputs.dims);
    const double eps = inputs.birth_prior.shape;
    const double xi = inputs.birth_prior.rate;
    const double log_start_base =
        inputs.log_birth_density + 0.5 * D * std::log(2.0 * M_PI * s2) - std::log(xi + 1.0);

    std::vector<double> group_sizes;   // nu'
    std::vector<Vec> group_means;      // ybar'

    for (const Mat& obs : new_cluster_obs) {
        const double n = static_cast<double>(obs.rows());
        Vec ybar(obs.cols());
        for (Eigen::Index d = 0; d < obs.cols(); ++d) ybar(d) = obs.col(d).mean();

        std::vector<double> logits(group_sizes.size() + 1, kNegInf);
        for (std::size_t g = 0; g < group_sizes.size(); ++g) {
            const double nu = group_sizes[g];
            const double ratio = n * nu / (n + nu);
            logits[g] = 0.5 * D * std::log(ratio) -
                        ratio * (ybar - group_means[g]).squaredNorm() / (2.0 * s2);
        }
        logits.back() =
            log_start_base + std::log(eps + static_cast<double>(group_sizes.size()));
        apply_floor(logits);

        const int choice = rng.categorical_log(logits);
        out.log_q += logits[static_cast<std::size_t>(choice)] - log_normalizer(logits);
        if (choice == static_cast<int>(group_sizes.size())) {
            group_sizes.push_back(n);
            group_means.push_back(ybar);
        } else {
            const auto g = static_cast<std::size_t>(choice);
            group_means[g] = (group_sizes[g] * group_means[g] + n * ybar) / (group_sizes[g] + n);
            group_sizes[g] += n;
        }
        out.group_of_cluster.push_back(choice);
    }
    out.group_count = static_cast<int>(group_sizes.size());
    return out;
}

AssociationDraw sample_associations(std::span<const Mat> cluster_obs, const AssocInputs& inputs,
                                    Rng& rng) {
    AssociationDraw draw;
    const int T = static_cast<int>(inputs.tracks->size());
    draw.labels.assign(cluster_obs.size(), -1);

    std::vector<std::size_t> new_marked;
    for (std::size_t theta = 0; theta < cluster_obs.size(); ++theta) {
        const double clutter_logsum =
            inputs.cluster_clutter_logsum != nullptr
                ? (*inputs.cluster_clutter_logsum)[theta]
                : static_cast<double>(cluster_obs[theta].rows()) * inputs.log_birth_density;
        std::vector<double> logits = initial_assoc_logits(cluster_obs[theta], clutter_logsum, inputs);
        int choice = rng.categorical_log(logits);
        if (choice < 0) {  // every option vanished; fall back to clutter
            if (!draw.forced_clutter)
                std::fprintf(stderr, "warning: association weights all vanished; forcing clutter\n");
            draw.forced_clutter = true;
            choice = T;
        } else {
            draw.log_q += logits[static_cast<std::size_t>(choice)] - log_normalizer(logits);
        }
        if (choice < T) {
            draw.labels[theta] = choice;
        } else if (choice == T) {
            draw.labels[theta] = -1;
        } else {
            new_marked.push_back(theta);
        }
    }

    if (!new_marked.empty()) {
        std::vector<Mat> new_obs;
        new_obs.reserve(new_marked.size());
        for (std::size_t theta : new_marked) new_obs.push_back(cluster_obs[theta]);
        const NewTrackResolution res = resolve_new_tracks(new_obs, inputs, rng);
        draw.log_q += res.log_q;
        draw.new_track_count = res.group_count;
        for (std::size_t i = 0; i < new_marked.size(); ++i)
            draw.labels[new_marked[i]] = T + res.group_of_cluster[i];
    }
    return draw;
}

double gamma_poisson_logmass(double shape, double rate, int count) {
    const double n = static_cast<double>(count);
    return std::lgamma(shape + n) - std::lgamma(shape) + shape * std::log(rate) -
           (shape + n) * std::log(rate + 1.0);
}

double new_track_loglik(const Mat& obs_group, double noise_var, double log_clutter_density) {
    const double n = static_cast<double>(obs_group.rows());
    if (n < 1.0) throw std::invalid_argument("new_track_loglik: empty group");
    double out = log_clutter_density + 0.5 * static_cast<double>(obs_group.cols()) *
                                           (std::log(2.0 * M_PI * noise_var) - std::log(n));
    for (Eigen::Index d = 0; d < obs_group.cols(); ++d) {
        const double ybar = obs_group.col(d).mean();
        for (Eigen::Index r = 0; r < obs_group.rows(); ++r)
            out += norm_logpdf(obs_group(r, d), ybar, noise_var);
    }
    return out;
}

double assoc_prior_logmass(std::span<const CountTerm> active_sources,
                           const GammaPosterior& birth_prior, int eta_k) {
    double total = 0.0;
    for (const CountTerm& s : active_sources) total += gamma_poisson_logmass(s.shape, s.rate, s.count);
    const double eta = static_cast<double>(eta_k);
    total += std::lgamma(birth_prior.shape + eta) - std::lgamma(birth_prior.shape) -
             std::lgamma(eta + 1.0) + birth_prior.shape * std::log(birth_prior.rate) -
             (birth_prior.shape + eta) * std::log(birth_prior.rate + 1.0);
    return total;
}

}  // namespace gapp
