#include "gapp/clustering.hpp"

namespace gapp {

double pooled_noise_estimate(std::span<const double> weights, std::span<const double> posterior_means) {
    if (weights.size() != posterior_means.size() || weights.empty())
        throw std::invalid_argument("pooled_noise_estimate: size mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * posterior_means[j];
    return s;
}

Vec ksd_mode(const Vec& start, std::span<const Vec> observations, double bandwidth_var, bool* converged) {
    if (observations.empty()) throw std::invalid_argument("ksd_mode: no observations");
    if (bandwidth_var <= 0.0) throw std::invalid_argument("ksd_mode: bandwidth must be positive");
    if (converged) *converged = true;

    const double tol = 1e-4 * std::sqrt(bandwidth_var);
    Vec z = start;
    for (int iter = 0; iter < 200; ++iter) {
        // kernel-weighted mean of the data; weights computed stably via the max exponent
        double max_e = kNegInf;
        for (const Vec& y : observations)
            max_e = std::max(max_e, -(z - y).squaredNorm() / (2.0 * bandwidth_var));
        Vec num = Vec::Zero(z.size());
        double den = 0.0;
        for (const Vec& y : observations) {
            const double w = std::exp(-(z - y).squaredNorm() / (2.0 * bandwidth_var) - max_e);
            num += w * y;
            den += w;
        }
        Vec z_next = num / den;
        const double move = (z_next - z).norm();
        z = std::move(z_next);
        if (move < tol) return z;
    }
    if (converged) *converged = false;
    return z;
}

ClusterSet cluster_frame(std::span<const Vec> observations, double bandwidth_var,
                         double merge_radius_scale) {
    ClusterSet out;
    out.bandwidth_var = bandwidth_var;
    if (observations.empty()) return out;

    const double radius = merge_radius_scale * std::sqrt(bandwidth_var);
    for (std::size_t l = 0; l < observations.size(); ++l) {
        bool ok = true;
        const Vec mode = ksd_mode(observations[l], observations, bandwidth_var, &ok);
        out.converged = out.converged && ok;

        int target = -1;
        for (std::size_t t = 0; t < out.clusters.size(); ++t) {
            if ((mode - out.clusters[t].argmax_mean).norm() <= radius) {
                target = static_cast<int>(t);
                break;
            }
        }
        if (target < 0) {
            Cluster c;
            c.member_indices = {static_cast<int>(l)};
            c.mean = observations[l];
            c.argmax_mean = mode;
            out.clusters.push_back(std::move(c));
        } else {
            Cluster& c = out.clusters[static_cast<std::size_t>(target)];
            const double n_old = static_cast<double>(c.size());
            c.member_indices.push_back(static_cast<int>(l));
            const double n_new = n_old + 1.0;
            c.mean = (n_old * c.mean + observations[l]) / n_new;
            c.argmax_mean = (n_old * c.argmax_mean + mode) / n_new;
        }
    }
    return out;
}

}  // namespace gapp
