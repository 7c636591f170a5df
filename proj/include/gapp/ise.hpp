#pragma once

#include "gapp/common.hpp"

#include <vector>

namespace gapp {

// Hyperparameters of one kinematic class: the integrated squared-exponential
// kernel (sigma2, ell) plus the sliding-window state-space approximation
// (window steps of size step seconds).
struct IseClassParams {
    double sigma2 = 1.0;
    double ell = 1.0;
    int window = 10;
    double step = 1.0;

    void validate() const {
        if (sigma2 <= 0.0 || ell <= 0.0 || step <= 0.0 || window < 1)
            throw std::invalid_argument("IseClassParams: sigma2, ell, step must be positive and window >= 1");
    }
};

// One linear transition: x_k = f_matrix * x_{k-1} + e_1 * N(0, noise_var).
// Every row of f_matrix sums to one, so predictions are translation equivariant.
struct TransitionPair {
    Mat f_matrix;
    double noise_var = 0.0;
    int window_len = 0;    // rows of f_matrix = output state length
    bool regularized = false;  // Gram solve needed jitter
};

double se_cov(double t, double t_prime, const IseClassParams& params);

// Antiderivative of the standard normal CDF: (x-a) Phi((x-a)/b) + b^2 N(x|a,b^2).
double xi(double x, double a, double b);

// Twice-integrated SE kernel; ise_cov(0, t') == 0 and symmetric in (t, t').
double ise_cov(double t, double t_prime, const IseClassParams& params);

// Transition for a track whose window is full (length == params.window).
TransitionPair mature_transition(const IseClassParams& params);

// Transition for a growing track, age = current step - birth step, 1 <= age < window.
// Output state has length age + 1.
TransitionPair growing_transition(const IseClassParams& params, int age);

// Precomputed transitions for one class: growing ages 1..window-1 plus mature.
// Transitions depend only on (sigma2, ell, step, window/age), so they are built
// once and shared read-only afterwards.
class TransitionCache {
  public:
    explicit TransitionCache(const IseClassParams& params);

    // Transition taking a state of length `len` to length min(len+1, window).
    const TransitionPair& for_input_length(int len) const;
    const TransitionPair& mature() const { return mature_; }
    const IseClassParams& params() const { return params_; }

  private:
    IseClassParams params_;
    std::vector<TransitionPair> growing_;  // index a-1 holds age a
    TransitionPair mature_;
};

}  // namespace gapp
