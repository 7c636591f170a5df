#pragma once

#include "gapp/common.hpp"
#include "gapp/structured.hpp"

#include <vector>

namespace gapp {

// Gamma(shape, rate) posterior for a Poisson rate (births, clutter, per-track
// detection rates). Mean = shape / rate.
struct GammaPosterior {
    double shape = 1.0;
    double rate = 1.0;

    double mean() const { return shape / rate; }
};

// InvGamma(shape, scale) posterior for the observation noise variance.
// Point estimate is the posterior mean scale / (shape - 1), so shape > 1.
struct InvGammaPosterior {
    double shape = 2.0;
    double scale = 1.0;

    double mean() const { return scale / (shape - 1.0); }
};

struct ClassProbs {
    std::vector<double> probs;

    static ClassProbs uniform(std::size_t n_classes) {
        return ClassProbs{std::vector<double>(n_classes, 1.0 / static_cast<double>(n_classes))};
    }
};

// lambda = 1 keeps parameters static; smaller values decay old evidence toward
// the baseline prior step by step.
struct ForgettingConfig {
    double lambda_gamma = 1.0;
    double lambda_mu = 1.0;
    double lambda_s2 = 1.0;
};

inline GammaPosterior update_birth_rate(GammaPosterior post, int eta_k) {
    if (eta_k < 0) throw std::invalid_argument("update_birth_rate: eta_k must be >= 0");
    post.shape += static_cast<double>(eta_k);
    post.rate += 1.0;
    return post;
}

inline GammaPosterior update_rate(GammaPosterior post, int n_ki, bool active) {
    if (n_ki < 0) throw std::invalid_argument("update_rate: n_ki must be >= 0");
    if (!active) return post;
    post.shape += static_cast<double>(n_ki);
    post.rate += 1.0;
    return post;
}

// One step's associated observations for one track: rows are observations,
// columns are spatial dimensions.
inline InvGammaPosterior update_noise_var(InvGammaPosterior post, std::span<const Mat> assoc_groups) {
    for (const Mat& g : assoc_groups) {
        const double n = static_cast<double>(g.rows());
        if (n <= 1.0) continue;
        const double dims = static_cast<double>(g.cols());
        post.shape += 0.5 * dims * (n - 1.0);
        for (Eigen::Index d = 0; d < g.cols(); ++d) {
            const double mean = g.col(d).mean();
            post.scale += 0.5 * (g.col(d).array() - mean).square().sum();
        }
    }
    return post;
}

inline GammaPosterior apply_forgetting(GammaPosterior post, const GammaPosterior& baseline, double lambda) {
    if (lambda <= 0.0 || lambda > 1.0) throw std::invalid_argument("apply_forgetting: lambda in (0,1]");
    post.shape = (1.0 - lambda) * baseline.shape + lambda * post.shape;
    post.rate = (1.0 - lambda) * baseline.rate + lambda * post.rate;
    return post;
}

inline InvGammaPosterior apply_forgetting(InvGammaPosterior post, const InvGammaPosterior& baseline,
                                          double lambda) {
    if (lambda <= 0.0 || lambda > 1.0) throw std::invalid_argument("apply_forgetting: lambda in (0,1]");
    post.shape = (1.0 - lambda) * baseline.shape + lambda * post.shape;
    post.scale = (1.0 - lambda) * baseline.scale + lambda * post.scale;
    return post;
}

// Predicted first-coordinate mean (one entry per spatial dimension) and
// variance for one class.
struct ClassPredictive {
    Vec mean_1;        // length = spatial dims
    double var_1 = 0.0;
};

// Reweights class probabilities by each class's marginal likelihood of the
// associated observations (rows x dims), then renormalizes in log space.
inline ClassProbs update_class_probs(const ClassProbs& probs,
                                     std::span<const ClassPredictive> per_class_pred,
                                     const Mat& obs_group, double noise_var_mean) {
    if (obs_group.rows() == 0) return probs;
    if (per_class_pred.size() != probs.probs.size())
        throw std::invalid_argument("update_class_probs: class count mismatch");

    std::vector<double> logp(probs.probs.size(), kNegInf);
    for (std::size_t c = 0; c < probs.probs.size(); ++c) {
        if (probs.probs[c] <= 0.0) continue;
        logp[c] = std::log(probs.probs[c]) +
                  fast_marginal_loglik_dims(per_class_pred[c].mean_1, per_class_pred[c].var_1,
                                            obs_group, noise_var_mean);
    }
    const double norm = log_sum_exp(logp);
    ClassProbs out;
    out.probs.resize(probs.probs.size());
    for (std::size_t c = 0; c < probs.probs.size(); ++c)
        out.probs[c] = std::isfinite(norm) ? std::exp(logp[c] - norm) : probs.probs[c];
    return out;
}

}  // namespace gapp
