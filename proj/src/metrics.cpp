#include "gapp/metrics.hpp"

#include <algorithm>
#include <map>

namespace gapp {

std::vector<int> hungarian_assign(const Mat& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("hungarian_assign: matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return row_to_col;
}

double gospa(std::span<const Vec> truth, std::span<const Vec> estimate, const GospaConfig& config) {
    config.validate();
    // canonical argument order makes the result bitwise symmetric
    auto lex_less = [](std::span<const Vec> a, std::span<const Vec> b) {
        if (a.size() != b.size()) return a.size() < b.size();
        for (std::size_t i = 0; i < a.size(); ++i)
            for (Eigen::Index d = 0; d < a[i].size(); ++d) {
                if (a[i](d) != b[i](d)) return a[i](d) < b[i](d);
            }
        return false;
    };
    if (lex_less(estimate, truth)) std::swap(truth, estimate);

    const int nx = static_cast<int>(truth.size());
    const int ny = static_cast<int>(estimate.size());
    if (nx == 0 && ny == 0) return 0.0;

    const double p = config.order;
    const double miss_cost = std::pow(config.cutoff, p) / config.normalizer;

    // Augmented square assignment: real pairs carry d^p, each point can instead
    // take its private miss/false slot at c^p/alpha; slot-to-slot is free.
    const int n = nx + ny;
    double big = miss_cost * static_cast<double>(n) + 1.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            big += std::pow((truth[static_cast<std::size_t>(i)] - estimate[static_cast<std::size_t>(j)]).norm(), p);

    Mat cost = Mat::Constant(n, n, big);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            cost(i, j) = std::pow((truth[static_cast<std::size_t>(i)] - estimate[static_cast<std::size_t>(j)]).norm(), p);
    for (int i = 0; i < nx; ++i) cost(i, ny + i) = miss_cost;
    for (int j = 0; j < ny; ++j) cost(nx + j, j) = miss_cost;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) cost(nx + j, ny + i) = 0.0;

    const std::vector<int> assign = hungarian_assign(cost);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, assign[static_cast<std::size_t>(i)]);
    return std::pow(total, 1.0 / p);
}

namespace {

// Per-scene association: each track attaches to the nearest truth within the gate.
struct SceneAssoc {
    std::vector<int> track_truth;  // per track: truth id or -1
    int tracks_assoc = 0;
    int truths_assoc = 0;
    double sq_err_sum = 0.0;
};

SceneAssoc associate_scene(const std::vector<std::pair<int, Vec>>& truths,
                           const std::vector<LabelledPoint>& tracks, double gate) {
    SceneAssoc out;
    out.track_truth.assign(tracks.size(), -1);
    std::map<int, int> truth_hits;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        double best = gate;
        int best_id = -1;
        for (const auto& [tid, pos] : truths) {
            const double d = (tracks[t].pos - pos).norm();
            if (d <= best) {
                best = d;
                best_id = tid;
            }
        }
        out.track_truth[t] = best_id;
        if (best_id >= 0) {
            ++out.tracks_assoc;
            ++truth_hits[best_id];
            out.sq_err_sum += best * best;
        }
    }
    out.truths_assoc = static_cast<int>(truth_hits.size());
    return out;
}

}  // namespace

SiapReport siap(const std::vector<std::vector<std::pair<int, Vec>>>& truth_by_step,
                const std::vector<std::vector<LabelledPoint>>& consensus_by_step,
                const std::vector<std::vector<WeightedScene>>& weighted_scenes_by_step,
                double assoc_gate) {
    const std::size_t K = truth_by_step.size();
    if (consensus_by_step.size() != K)
        throw std::invalid_argument("siap: consensus length mismatch");
    const bool use_weighted = !weighted_scenes_by_step.empty();
    if (use_weighted && weighted_scenes_by_step.size() != K)
        throw std::invalid_argument("siap: weighted scenes length mismatch");

    double truth_steps = 0.0, truth_assoc_steps = 0.0;
    double track_steps = 0.0, track_assoc_steps = 0.0;
    double aleph = 0.0, aleph_tilde = 0.0, sq_err = 0.0;

    for (std::size_t k = 0; k < K; ++k) {
        const auto& truths = truth_by_step[k];
        const std::vector<WeightedScene> single{
            WeightedScene{1.0, consensus_by_step[k]}};
        const auto& scenes = use_weighted ? weighted_scenes_by_step[k] : single;
        for (const WeightedScene& scene : scenes) {
            const SceneAssoc a = associate_scene(truths, scene.tracks, assoc_gate);
            const double w = scene.weight;
            truth_steps += w * static_cast<double>(truths.size());
            truth_assoc_steps += w * static_cast<double>(a.truths_assoc);
            track_steps += w * static_cast<double>(scene.tracks.size());
            track_assoc_steps += w * static_cast<double>(a.tracks_assoc);
            aleph += w * static_cast<double>(a.tracks_assoc);
            aleph_tilde += w * static_cast<double>(a.truths_assoc);
            sq_err += w * a.sq_err_sum;
        }
    }

    SiapReport rep;
    rep.continuity = truth_steps > 0.0 ? truth_assoc_steps / truth_steps : 1.0;
    rep.ambiguity = aleph_tilde > 0.0 ? aleph / aleph_tilde : 1.0;
    rep.spuriousness = track_steps > 0.0 ? 1.0 - track_assoc_steps / track_steps : 0.0;
    rep.pos_accuracy = track_assoc_steps > 0.0 ? std::sqrt(sq_err / track_assoc_steps) : 0.0;

    // Track breaks from the consensus scene: per truth, changes of the nearest
    // associated track key across its associated steps (gaps are bridged).
    double breaks = 0.0, assoc_truth_steps = 0.0;
    std::map<int, std::uint64_t> last_key;
    for (std::size_t k = 0; k < K; ++k) {
        for (const auto& [tid, pos] : truth_by_step[k]) {
            double best = assoc_gate;
            const LabelledPoint* nearest = nullptr;
            for (const LabelledPoint& tr : consensus_by_step[k]) {
                const double d = (tr.pos - pos).norm();
                if (d <= best) {
                    best = d;
                    nearest = &tr;
                }
            }
            if (nearest == nullptr) continue;
            assoc_truth_steps += 1.0;
            const auto it = last_key.find(tid);
            if (it != last_key.end() && it->second != nearest->key) breaks += 1.0;
            last_key[tid] = nearest->key;
        }
    }
    rep.break_rate = assoc_truth_steps > 0.0 ? breaks / assoc_truth_steps : 0.0;
    rep.milli_breaks = 1000.0 * rep.break_rate;
    return rep;
}

double gamma_mixture_rmse(std::span<const HyperSample> samples, bool birth, double truth) {
    double mse = 0.0;
    for (const HyperSample& s : samples) {
        const double a = birth ? s.eps : s.alpha0;
        const double r = birth ? s.xi : s.beta0;
        mse += s.w * (a * (a + 1.0) / (r * r) - 2.0 * truth * a / r + truth * truth);
    }
    return std::sqrt(std::max(mse, 0.0));
}

ArmseReport armse(const std::vector<std::vector<HyperSample>>& hyper_by_step, double true_gamma,
                  double true_mu0, double true_s2,
                  const std::vector<TrackPosteriorSample>& track_posteriors) {
    ArmseReport rep;
    const double K = static_cast<double>(hyper_by_step.size());
    if (hyper_by_step.empty()) return rep;

    double g = 0.0, m0 = 0.0, s2 = 0.0;
    bool s2_ok = true;
    for (const auto& step : hyper_by_step) {
        g += gamma_mixture_rmse(step, true, true_gamma);
        m0 += gamma_mixture_rmse(step, false, true_mu0);
        double s2_mse = 0.0;
        for (const HyperSample& s : step) {
            if (s.phi <= 2.0) {
                s2_ok = false;
                break;
            }
            const double m1 = s.b / (s.phi - 1.0);
            const double m2 = s.b * s.b / ((s.phi - 1.0) * (s.phi - 2.0));
            s2_mse += s.w * (m2 - 2.0 * true_s2 * m1 + true_s2 * true_s2);
        }
        if (s2_ok) s2 += std::sqrt(std::max(s2_mse, 0.0));
    }
    rep.gamma = g / K;
    rep.mu0 = m0 / K;
    rep.s2_defined = s2_ok;
    rep.s2 = s2_ok ? s2 / K : 0.0;

    double mu_sum = 0.0, cls_sum = 0.0;
    for (const TrackPosteriorSample& tp : track_posteriors) {
        double wsum = 0.0, mse = 0.0, wrong = 0.0;
        for (std::size_t j = 0; j < tp.w.size(); ++j) {
            const double a = tp.alpha[j];
            const double r = tp.beta[j];
            wsum += tp.w[j];
            mse += tp.w[j] * (a * (a + 1.0) / (r * r) - 2.0 * tp.true_rate * a / r +
                              tp.true_rate * tp.true_rate);
            wrong += tp.w[j] * (1.0 - tp.class_probs[j][static_cast<std::size_t>(tp.true_class)]);
        }
        if (wsum <= 0.0) continue;
        mu_sum += std::sqrt(std::max(mse / wsum, 0.0));
        cls_sum += std::sqrt(std::max(wrong / wsum, 0.0));
        ++rep.mu_steps;
    }
    if (rep.mu_steps > 0) {
        rep.mu_pos = mu_sum / static_cast<double>(rep.mu_steps);
        rep.classification = cls_sum / static_cast<double>(rep.mu_steps);
    }
    return rep;
}

}  // namespace gapp
