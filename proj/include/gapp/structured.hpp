#pragma once

#include "gapp/common.hpp"

#include <utility>

namespace gapp {

// Matrices of the form A*I + B*11^T. Their inverse and determinant are closed
// form, which turns the rank-one-structured Gaussian updates and marginal
// likelihoods used by the tracker into O(n) operations.
struct OffsetDiag {
    int dim = 1;
    double diag_coeff = 1.0;    // A
    double offset_coeff = 0.0;  // B

    Mat dense() const {
        Mat m = Mat::Constant(dim, dim, offset_coeff);
        m.diagonal().array() += diag_coeff;
        return m;
    }
};

inline bool offset_diag_singular(const OffsetDiag& m) {
    const double a = m.diag_coeff;
    const double b = m.offset_coeff;
    const double alpha = static_cast<double>(m.dim);
    const double tol = 1e-12;
    if (std::abs(a) < tol * std::max(std::abs(a) + alpha * std::abs(b), 1.0)) return true;
    return std::abs(a + alpha * b) < tol * std::max(std::abs(a), 1.0);
}

inline OffsetDiag offset_diag_inverse(const OffsetDiag& m) {
    if (m.dim < 1) throw std::invalid_argument("offset_diag_inverse: dim must be >= 1");
    if (offset_diag_singular(m)) throw std::domain_error("offset_diag_inverse: singular input");
    const double a = m.diag_coeff;
    const double b = m.offset_coeff;
    const double alpha = static_cast<double>(m.dim);
    return OffsetDiag{m.dim, 1.0 / a, -b / (alpha * a * b + a * a)};
}

inline double offset_diag_det(const OffsetDiag& m) {
    const double a = m.diag_coeff;
    const double b = m.offset_coeff;
    const double alpha = static_cast<double>(m.dim);
    return std::pow(a, alpha - 1.0) * (a + alpha * b);
}

// prod_l N(y_l | x, var) / N(y_l | ybar, var) collapses to a single exponential
// in the distance between x and the sample mean.
inline double gaussian_ratio_product(double x, std::span<const double> ys, double var) {
    if (ys.empty()) throw std::invalid_argument("gaussian_ratio_product: empty sample");
    if (var <= 0.0) throw std::invalid_argument("gaussian_ratio_product: var must be positive");
    const double n = static_cast<double>(ys.size());
    double ybar = 0.0;
    for (double y : ys) ybar += y;
    ybar /= n;
    const double d = ybar - x;
    return std::exp(-n * d * d / (2.0 * var));
}

// n_y (zbar-ybar)^2 + n_x (zbar-xbar)^2 with zbar the pooled mean.
inline double pooled_mean_identity(double n_x, double x_bar, double n_y, double y_bar) {
    if (n_x < 1.0 || n_y < 1.0) throw std::invalid_argument("pooled_mean_identity: counts must be >= 1");
    const double d = x_bar - y_bar;
    return n_x * n_y / (n_x + n_y) * d * d;
}

// Conditioning a Gaussian state on n independent observations of its first
// coordinate. Each column of prior_mean is one spatial dimension sharing the
// covariance; obs_mean holds the per-dimension sample means.
// Returns {posterior_mean, posterior_cov}.
inline std::pair<Mat, Mat> fast_gaussian_update(const Mat& prior_mean, const Mat& prior_cov,
                                                int obs_count, const Vec& obs_mean,
                                                double noise_var) {
    if (obs_count < 1) throw std::invalid_argument("fast_gaussian_update: obs_count must be >= 1");
    if (prior_mean.cols() != obs_mean.size())
        throw std::invalid_argument("fast_gaussian_update: dimension mismatch");
    const double n = static_cast<double>(obs_count);
    const double denom = n * prior_cov(0, 0) + noise_var;
    if (denom <= 0.0) throw std::domain_error("fast_gaussian_update: degenerate noise/covariance");

    const Vec col = prior_cov.col(0);
    Mat mean = prior_mean;
    for (Eigen::Index d = 0; d < obs_mean.size(); ++d) {
        const double gain = n * (obs_mean(d) - prior_mean(0, d)) / denom;
        mean.col(d) += gain * col;
    }
    Mat cov = prior_cov - (n / denom) * (col * col.transpose());
    cov = 0.5 * (cov + cov.transpose());
    return {std::move(mean), std::move(cov)};
}

// log N(ys | m1*1, V11*11^T + noise_var*I) via the closed-form determinant and
// the simplified quadratic form.
inline double fast_marginal_loglik(double pred_mean_1, double pred_var_1,
                                   std::span<const double> ys, double noise_var) {
    if (noise_var <= 0.0) throw std::invalid_argument("fast_marginal_loglik: noise_var must be positive");
    if (pred_var_1 < 0.0) pred_var_1 = 0.0;
    const double n = static_cast<double>(ys.size());
    if (ys.empty()) return 0.0;
    double ybar = 0.0;
    for (double y : ys) ybar += y;
    ybar /= n;
    double msd = 0.0;  // mean squared deviation about ybar
    for (double y : ys) msd += (y - ybar) * (y - ybar);
    msd /= n;

    const double tail = noise_var + n * pred_var_1;
    const double log_det = (n - 1.0) * std::log(noise_var) + std::log(tail);
    const double dm = ybar - pred_mean_1;
    const double quad = 0.5 * n * (msd / noise_var + dm * dm / tail);
    return -0.5 * n * kLogTwoPi - 0.5 * log_det - quad;
}

// Same marginal accumulated over independent spatial dimensions: one column of
// per-dimension observations at a time, shared pred_var_1 and noise.
inline double fast_marginal_loglik_dims(const Vec& pred_mean, double pred_var_1, const Mat& obs,
                                        double noise_var) {
    double total = 0.0;
    for (Eigen::Index d = 0; d < obs.cols(); ++d) {
        const Vec col = obs.col(d);
        total += fast_marginal_loglik(pred_mean(d), pred_var_1,
                                      std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                      noise_var);
    }
    return total;
}

}  // namespace gapp
