#include "gapp/ise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gapp {

double se_cov(double t, double t_prime, const IseClassParams& params) {
    const double d = t - t_prime;
    return params.sigma2 * std::exp(-d * d / (2.0 * params.ell * params.ell));
}

double xi(double x, double a, double b) {
    if (b <= 0.0) throw std::invalid_argument("xi: b must be positive");
    const double z = (x - a) / b;
    const double dens = std::exp(-0.5 * z * z) / (b * std::sqrt(2.0 * M_PI));
    return (x - a) * std_normal_cdf(z) + b * b * dens;
}

double ise_cov(double t, double t_prime, const IseClassParams& params) {
    const double l = params.ell;
    const double s2 = params.sigma2;
    const double sum = xi(t, 0.0, l) + xi(0.0, t_prime, l) - xi(t, t_prime, l);
    return std::sqrt(2.0 * M_PI) * l * s2 * sum - s2 * l * l;
}

namespace {

// Times T*(alpha, alpha-1, ..., 1).
Vec time_grid(int alpha, double step) {
    Vec t(alpha);
    for (int i = 0; i < alpha; ++i) t(i) = step * static_cast<double>(alpha - i);
    return t;
}

Mat gram(const Vec& t, const IseClassParams& params) {
    const int n = static_cast<int>(t.size());
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) g(i, j) = g(j, i) = ise_cov(t(i), t(j), params);
    return g;
}

Vec cross_cov(const Vec& t, double t_new, const IseClassParams& params) {
    Vec c(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) c(i) = ise_cov(t(i), t_new, params);
    return c;
}

// Regression weights g = C_tt^{-1} C_{t,new} and residual variance. Solves via
// LDLT; near-singular Grams (condition > 1e12) get a jitter of 1e-9*sigma2*ell^2
// on the diagonal and the result is flagged.
struct GramSolve {
    Vec weights;
    double resid_var = 0.0;
    bool regularized = false;
};

GramSolve solve_regression(const Vec& t, double t_new, const IseClassParams& params) {
    Mat g = gram(t, params);
    const Vec c = cross_cov(t, t_new, params);

    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    const double ev_min = es.eigenvalues().minCoeff();
    const double ev_max = es.eigenvalues().maxCoeff();
    GramSolve out;
    if (ev_min <= 0.0 || ev_max / ev_min > 1e12) {
        g.diagonal().array() += 1e-9 * params.sigma2 * params.ell * params.ell;
        out.regularized = true;
    }

    // Long windows with large lengthscales produce Grams conditioned near
    // 1e12; solve in extended precision with one refinement pass so the
    // weights stay accurate. This runs once per (class, age) at startup.
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const MatL gl = g.cast<long double>();
    const VecL cl = c.cast<long double>();
    const auto ldlt = gl.ldlt();
    VecL w = ldlt.solve(cl);
    for (int pass = 0; pass < 6; ++pass) {
        const VecL corr = ldlt.solve(cl - gl * w);
        w += corr;
        if (corr.cwiseAbs().maxCoeff() <= 1e-18L * std::max<long double>(w.cwiseAbs().maxCoeff(), 1.0L))
            break;
    }

    out.weights = w.cast<double>();
    const double prior_var = ise_cov(t_new, t_new, params);
    const long double resid =
        static_cast<long double>(prior_var) - cl.dot(w);
    out.resid_var = std::max(static_cast<double>(resid), 0.0);
    return out;
}

}  // namespace

TransitionPair mature_transition(const IseClassParams& params) {
    params.validate();
    const int d = params.window;
    if (d < 2) throw std::invalid_argument("mature_transition: window must be >= 2");

    const Vec t = time_grid(d - 1, params.step);
    const GramSolve sol = solve_regression(t, static_cast<double>(d) * params.step, params);

    TransitionPair out;
    out.window_len = d;
    out.noise_var = sol.resid_var;
    out.regularized = sol.regularized;
    out.f_matrix = Mat::Zero(d, d);
    out.f_matrix.row(0).head(d - 1) = sol.weights.transpose();
    out.f_matrix(0, d - 1) = 1.0 - sol.weights.sum();
    out.f_matrix.block(1, 0, d - 1, d - 1).setIdentity();
    return out;
}

TransitionPair growing_transition(const IseClassParams& params, int age) {
    params.validate();
    if (age < 1 || age >= params.window)
        throw std::invalid_argument("growing_transition: need 1 <= age < window");

    const Vec t = time_grid(age, params.step);
    const GramSolve sol = solve_regression(t, static_cast<double>(age + 1) * params.step, params);

    TransitionPair out;
    out.window_len = age + 1;
    out.noise_var = sol.resid_var;
    out.regularized = sol.regularized;
    out.f_matrix = Mat::Zero(age + 1, age);
    out.f_matrix.row(0) = sol.weights.transpose();
    out.f_matrix(0, age - 1) += 1.0 - sol.weights.sum();
    out.f_matrix.block(1, 0, age, age).setIdentity();
    return out;
}

TransitionCache::TransitionCache(const IseClassParams& params) : params_(params) {
    params_.validate();
    if (params_.window < 2) throw std::invalid_argument("TransitionCache: window must be >= 2");
    growing_.reserve(static_cast<std::size_t>(params_.window - 1));
    for (int age = 1; age < params_.window; ++age) growing_.push_back(growing_transition(params_, age));
    mature_ = mature_transition(params_);
}

const TransitionPair& TransitionCache::for_input_length(int len) const {
    if (len < 1) throw std::invalid_argument("TransitionCache: state length must be >= 1");
    if (len >= params_.window) return mature_;
    return growing_[static_cast<std::size_t>(len - 1)];
}

}  // namespace gapp
