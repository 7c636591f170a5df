#include "gapp/scenario.hpp"

#include <algorithm>

namespace gapp {

GenParams sample_default_params(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x9e37f1a5));
    GenParams p;
    p.clutter_rate = rng.uniform(10.0, 15.0);
    p.birth_rate = rng.uniform(0.02, 0.1);
    p.noise_var = rng.uniform(0.5, 2.0);
    p.survival_prob = 0.98;
    p.class_prior = {0.5, 0.5};
    p.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    p.detection_rate_range = {3.0, 6.0};
    p.forced_initial_object = true;
    p.no_birth_tail = 10;
    return p;
}

namespace {

struct TrajectoryResult {
    std::vector<Vec> positions;
};

// Simulates one trajectory from the class's state-space model, one coordinate
// at a time (the model is applied independently per dimension). The growing
// transitions cover ages < window, after which the mature transition applies.
std::vector<Vec> simulate_trajectory(const Vec& start, int lifespan, const TransitionCache& cache,
                                     Rng& rng) {
    const int dims = static_cast<int>(start.size());
    const int d = cache.params().window;
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(lifespan));
    out.push_back(start);

    // state per dimension, newest first
    std::vector<std::vector<double>> state(static_cast<std::size_t>(dims));
    for (int dd = 0; dd < dims; ++dd) state[static_cast<std::size_t>(dd)] = {start(dd)};

    for (int s = 1; s < lifespan; ++s) {
        const int len = static_cast<int>(state[0].size());
        const TransitionPair& tr = cache.for_input_length(len);
        Vec next(dims);
        for (int dd = 0; dd < dims; ++dd) {
            auto& st = state[static_cast<std::size_t>(dd)];
            double pred = 0.0;
            for (int j = 0; j < len; ++j) pred += tr.f_matrix(0, j) * st[static_cast<std::size_t>(j)];
            const double x = pred + (tr.noise_var > 0.0 ? rng.normal(0.0, tr.noise_var) : 0.0);
            st.insert(st.begin(), x);
            if (static_cast<int>(st.size()) > d) st.pop_back();
            next(dd) = x;
        }
        out.push_back(next);
    }
    return out;
}

bool inside(const Vec& p, const std::vector<std::pair<double, double>>& box) {
    for (Eigen::Index d = 0; d < p.size(); ++d)
        if (p(d) < box[static_cast<std::size_t>(d)].first || p(d) > box[static_cast<std::size_t>(d)].second)
            return false;
    return true;
}

}  // namespace

ScenarioDataset generate_scenario(const SceneConfig& config, const GenParams& params, std::uint64_t seed) {
    config.validate();
    params.validate();

    ScenarioDataset ds;
    ds.scene = config;
    ds.seed = seed;
    ds.true_params = params;

    std::vector<TransitionCache> caches;
    caches.reserve(params.class_params.size());
    for (auto cp : params.class_params) {
        cp.step = config.step;
        caches.emplace_back(cp);
    }

    const int dims = config.dims();
    const int K = config.horizon;

    // Start points land in the central 60% of the scene; a trajectory that
    // leaves the scene expanded by 20% per side is rejected and redrawn.
    std::vector<std::pair<double, double>> start_box(static_cast<std::size_t>(dims));
    std::vector<std::pair<double, double>> keep_box(static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d) {
        const auto [lo, hi] = config.bounds[static_cast<std::size_t>(d)];
        const double w = hi - lo;
        start_box[static_cast<std::size_t>(d)] = {lo + 0.2 * w, hi - 0.2 * w};
        keep_box[static_cast<std::size_t>(d)] = {lo - 0.2 * w, hi + 0.2 * w};
    }

    Rng rng(mix_seed(seed, 0x5ce3a7));
    int next_id = 0;

    auto spawn_object = [&](int birth_step) {
        TrueObject obj;
        obj.id = next_id++;
        obj.birth_step = birth_step;
        obj.detection_rate = rng.uniform(params.detection_rate_range.first, params.detection_rate_range.second);

        // class label from the prior
        {
            const double u = rng.uniform();
            double acc = 0.0;
            obj.class_label = static_cast<int>(params.class_prior.size()) - 1;
            for (std::size_t c = 0; c < params.class_prior.size(); ++c) {
                acc += params.class_prior[c];
                if (u < acc) {
                    obj.class_label = static_cast<int>(c);
                    break;
                }
            }
        }

        const TransitionCache& cache = caches[static_cast<std::size_t>(obj.class_label)];
        const int d = cache.params().window;

        // lifespan: survival probability 1 until age >= window, then psi per step
        int lifespan = 1;
        for (int k = birth_step + 1; k <= K; ++k) {
            const int age = k - birth_step;
            if (age >= d && !rng.bernoulli(params.survival_prob)) {
                obj.death_step = k;
                break;
            }
            ++lifespan;
        }

        for (int attempt = 0; attempt < 200; ++attempt) {
            Vec start(dims);
            for (int dd = 0; dd < dims; ++dd)
                start(dd) = rng.uniform(start_box[static_cast<std::size_t>(dd)].first,
                                        start_box[static_cast<std::size_t>(dd)].second);
            auto traj = simulate_trajectory(start, lifespan, cache, rng);
            const bool ok = std::all_of(traj.begin(), traj.end(),
                                        [&](const Vec& p) { return inside(p, keep_box); });
            obj.positions = std::move(traj);
            if (ok) break;
        }
        ds.objects.push_back(std::move(obj));
    };

    // births
    if (params.forced_initial_object) spawn_object(1);
    for (int k = 1; k <= K; ++k) {
        if (k > K - params.no_birth_tail) break;
        const int births = rng.poisson(params.birth_rate);
        for (int b = 0; b < births; ++b) spawn_object(k);
    }

    // observations
    ds.frames.resize(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        Frame& frame = ds.frames[static_cast<std::size_t>(k - 1)];
        frame.step = k;
        for (const TrueObject& obj : ds.objects) {
            if (!obj.active_at(k)) continue;
            const Vec& pos = obj.position_at(k);
            const int n = rng.poisson(obj.detection_rate);
            for (int i = 0; i < n; ++i) {
                Vec y = pos;
                if (params.noise_var > 0.0)
                    for (int d = 0; d < dims; ++d) y(d) += rng.normal(0.0, params.noise_var);
                frame.observations.push_back(std::move(y));
            }
        }
        const int n_clutter = rng.poisson(params.clutter_rate);
        for (int i = 0; i < n_clutter; ++i) {
            Vec y(dims);
            for (int d = 0; d < dims; ++d)
                y(d) = rng.uniform(config.bounds[static_cast<std::size_t>(d)].first,
                                   config.bounds[static_cast<std::size_t>(d)].second);
            frame.observations.push_back(std::move(y));
        }
        // shuffle so frame order carries no information
        for (std::size_t i = frame.observations.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(frame.observations[i - 1], frame.observations[std::min(j, i - 1)]);
        }
    }

    return ds;
}

}  // namespace gapp
