#include "doctest.h"

#include "gapp/filter.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <set>

using namespace gapp;

namespace {

SceneConfig test_scene() {
    SceneConfig s;
    s.bounds = {{0.0, 100.0}, {0.0, 100.0}};
    s.step = 1.0;
    s.horizon = 100;
    return s;
}

FilterConfig test_config(int particles = 20) {
    FilterConfig c;
    c.particles = particles;
    c.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    c.class_prior = {0.5, 0.5};
    c.master_seed = 99;
    return c;
}

TrackBelief basic_track(const FilterConfig& c, double x, double y, double var, int birth, int now) {
    Mat mean(1, 2);
    mean << x, y;
    Mat cov(1, 1);
    cov << var;
    TrackBelief tr;
    tr.id = 0;
    tr.birth_step = birth;
    tr.class_probs.probs = c.class_prior;
    tr.rate_post = GammaPosterior{4.0, 1.0};
    tr.active = true;
    tr.last_assoc_step = now;
    tr.states.assign(c.class_params.size(), PerClassState{mean, cov});
    return tr;
}

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

}  // namespace

TEST_CASE("heuristic deletion criteria") {
    const FilterConfig c = test_config();
    const SceneConfig scene = test_scene();
    DeletionHeuristics h;  // defaults: std 50, misses 3, rate 0.5, margin 10%

    TrackBelief ok = basic_track(c, 50, 50, 1.0, 1, 5);
    CHECK_FALSE(heuristic_deletion(ok, h, scene));

    TrackBelief missed = ok;
    missed.miss_streak = 3;
    CHECK(heuristic_deletion(missed, h, scene));
    missed.miss_streak = 2;
    CHECK_FALSE(heuristic_deletion(missed, h, scene));

    TrackBelief faint = ok;
    faint.rate_post = GammaPosterior{0.4, 1.0};  // mean 0.4 < 0.5
    CHECK(heuristic_deletion(faint, h, scene));

    TrackBelief fuzzy = ok;
    for (auto& st : fuzzy.states) st.cov(0, 0) = 51.0 * 51.0;
    CHECK(heuristic_deletion(fuzzy, h, scene));

    // outside bounds + 10% margin
    TrackBelief gone = basic_track(c, 115.0, 50.0, 1.0, 1, 5);
    CHECK(heuristic_deletion(gone, h, scene));
    TrackBelief edge = basic_track(c, 105.0, 50.0, 1.0, 1, 5);
    CHECK_FALSE(heuristic_deletion(edge, h, scene));
}

TEST_CASE("sample survival") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) CHECK_FALSE(sample_survival(false, 0.98, rng));
    for (int i = 0; i < 20; ++i) CHECK(sample_survival(true, 1.0, rng));

    int alive = 0;
    const int reps = 100000;
    for (int i = 0; i < reps; ++i)
        if (sample_survival(true, 0.7, rng)) ++alive;
    const double freq = static_cast<double>(alive) / reps;
    const double se = std::sqrt(0.7 * 0.3 / reps);
    CHECK(std::abs(freq - 0.7) < 3.0 * se);
}

TEST_CASE("predict track: growing and mature paths") {
    const FilterConfig c = test_config();
    std::vector<TransitionCache> caches;
    for (const auto& cp : c.class_params) caches.emplace_back(cp);

    // window-2 state: prediction must equal the hand-computed dense algebra
    TrackBelief tr = basic_track(c, 0, 0, 0.0, 1, 3);
    Mat mean(2, 2);
    mean << 4.0, 2.0, 3.0, 1.5;
    Mat cov(2, 2);
    cov << 0.5, 0.2, 0.2, 0.4;
    for (auto& st : tr.states) {
        st.mean = mean;
        st.cov = cov;
    }
    predict_track(tr, caches);
    REQUIRE(tr.has_pred);
    for (std::size_t cl = 0; cl < caches.size(); ++cl) {
        const TransitionPair& g = caches[cl].for_input_length(2);
        const Mat expect_mean = g.f_matrix * mean;
        Mat expect_cov = g.f_matrix * cov * g.f_matrix.transpose();
        expect_cov(0, 0) += g.noise_var;
        CHECK((tr.pred[cl].mean - expect_mean).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((tr.pred[cl].cov - expect_cov).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(tr.pred[cl].window_len() == 3);
        CHECK((tr.pred[cl].cov - tr.pred[cl].cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }

    // mature window keeps its length
    Mat mean10 = Mat::Zero(10, 2);
    Mat cov10 = Mat::Identity(10, 10) * 0.3;
    for (auto& st : tr.states) {
        st.mean = mean10;
        st.cov = cov10;
    }
    predict_track(tr, caches);
    CHECK(tr.pred[0].window_len() == 10);
}

TEST_CASE("update track: scalar Kalman and batch-equals-sequential") {
    FilterConfig c = test_config();
    c.class_params = {IseClassParams{10.0, 1.0, 10, 1.0}};
    c.class_prior = {1.0};

    // single class, single observation: textbook scalar Kalman update on the
    // first coordinate
    TrackBelief tr = basic_track(c, 1.0, 2.0, 0.0, 1, 1);
    Mat pm(1, 2);
    pm << 1.0, 2.0;
    Mat pv(1, 1);
    pv << 0.8;
    tr.states.assign(1, PerClassState{pm, pv});
    tr.pred = tr.states;
    tr.has_pred = true;
    Mat obs(1, 2);
    obs << 1.6, 1.7;
    const double s2 = 0.5;
    update_track(tr, obs, s2);
    const double gain = 0.8 / (0.8 + 0.5);
    CHECK(tr.states[0].mean(0, 0) == doctest::Approx(1.0 + gain * 0.6).epsilon(1e-12));
    CHECK(tr.states[0].mean(0, 1) == doctest::Approx(2.0 + gain * (-0.3)).epsilon(1e-12));
    CHECK(tr.states[0].cov(0, 0) == doctest::Approx(0.8 - gain * 0.8).epsilon(1e-12));

    // update with n observations equals n sequential single-observation updates
    Rng rng(5);
    Mat mean(3, 2);
    Mat cov(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int d = 0; d < 2; ++d) mean(i, d) = rng.normal();
        for (int j = 0; j < 3; ++j) cov(i, j) = 0.0;
    }
    cov << 0.9, 0.3, 0.1, 0.3, 0.7, 0.2, 0.1, 0.2, 0.5;
    Mat group(4, 2);
    for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 2; ++d) group(i, d) = rng.normal();

    TrackBelief batch = basic_track(c, 0, 0, 0, 1, 1);
    batch.states.assign(1, PerClassState{mean, cov});
    batch.pred = batch.states;
    batch.has_pred = true;
    update_track(batch, group, s2);

    TrackBelief seq = basic_track(c, 0, 0, 0, 1, 1);
    seq.states.assign(1, PerClassState{mean, cov});
    for (int i = 0; i < 4; ++i) {
        seq.pred = seq.states;
        seq.has_pred = true;
        update_track(seq, group.row(i), s2);
    }
    CHECK((batch.states[0].mean - seq.states[0].mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((batch.states[0].cov - seq.states[0].cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("init track") {
    FilterConfig c = test_config();
    Mat group(2, 1);
    group << 0.0, 2.0;
    // 1-D group {0,2} with s'^2 = 1: mean 1, var 0.5
    FilterConfig c1 = c;
    c1.class_params = {IseClassParams{10.0, 1.0, 10, 1.0}};
    c1.class_prior = {1.0};
    const TrackBelief tr = init_track(group, 1.0, c1, 7, 3, 42);
    CHECK(tr.states[0].mean(0, 0) == doctest::Approx(1.0));
    CHECK(tr.states[0].cov(0, 0) == doctest::Approx(0.5));
    CHECK(tr.rate_post.shape == doctest::Approx(c1.rate_baseline.shape + 2.0));
    CHECK(tr.rate_post.rate == doctest::Approx(c1.rate_baseline.rate + 1.0));
    CHECK(tr.birth_step == 7);
    CHECK(tr.birth_cluster == 3);
    CHECK(tr.active);
    CHECK(tr.window_len() == 1);

    Mat g2(3, 2);
    g2 << 0, 0, 1, 1, 2, 2;
    const TrackBelief tr2 = init_track(g2, 2.0, c, 4, 0, 1);
    CHECK(tr2.class_probs.probs == c.class_prior);
    CHECK(tr2.states.size() == 2);
    CHECK(tr2.states[0].cov(0, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("systematic resampling") {
    // uniform weights: identity-like (each index appears exactly once)
    Rng rng(6);
    std::vector<double> uniform(8, 1.0 / 8.0);
    const std::vector<int> idx = systematic_resample_indices(uniform, rng);
    std::set<int> seen(idx.begin(), idx.end());
    CHECK(seen.size() == 8);

    // a single unit weight: everything copies it
    std::vector<double> point(5, 0.0);
    point[3] = 1.0;
    const std::vector<int> all3 = systematic_resample_indices(point, rng);
    for (int i : all3) CHECK(i == 3);

    // expected copy counts proportional to weights
    std::vector<double> w{0.5, 0.3, 0.15, 0.05};
    std::vector<double> counts(4, 0.0);
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        Rng rr(mix_seed(7, static_cast<std::uint64_t>(r)));
        for (int i : systematic_resample_indices(w, rr)) counts[static_cast<std::size_t>(i)] += 1.0;
    }
    for (int i = 0; i < 4; ++i) {
        const double expect = w[static_cast<std::size_t>(i)] * 4.0 * reps;
        CHECK(std::abs(counts[static_cast<std::size_t>(i)] - expect) < 4.0 * std::sqrt(expect) + 4.0);
    }
}

TEST_CASE("empty frame: miss streaks advance, weights stay equal") {
    FilterConfig c = test_config(10);
    Filter f(c, test_scene());
    for (Particle& p : f.mutable_particles()) {
        TrackBelief tr = basic_track(c, 50, 50, 1.0, 0, 0);
        tr.id = p.next_track_id++;
        p.tracks.push_back(tr);
    }
    Frame empty;
    empty.step = 1;
    f.step(empty);
    double wsum = 0.0;
    for (const Particle& p : f.particles()) {
        wsum += p.weight;
        for (const TrackBelief& tr : p.tracks)
            if (tr.active) CHECK(tr.miss_streak == 1);
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    // survival sampling differs across particles but weights must agree for
    // particles with identical survival outcomes; with psi = 0.98 most are equal
    std::map<int, std::set<double>> weights_by_count;
    for (const Particle& p : f.particles()) {
        int active = 0;
        for (const TrackBelief& tr : p.tracks) active += tr.active ? 1 : 0;
        weights_by_count[active].insert(p.weight);
    }
    for (const auto& [n, ws] : weights_by_count) CHECK(ws.size() == 1);
}

TEST_CASE("exact-proposal single-cluster scene gives equal weights") {
    // one track, one cluster, survival certain, clutter and track rates with
    // equal Gamma rate parameters so the proposal is exactly proportional to
    // the target; every particle must then carry the same weight
    FilterConfig c = test_config(30);
    c.survival_prob = 1.0;
    c.clutter_baseline = GammaPosterior{9.0, 1.0};
    c.rate_baseline = GammaPosterior{4.0, 1.0};
    Filter f(c, test_scene());
    for (Particle& p : f.mutable_particles()) {
        TrackBelief tr = basic_track(c, 50, 50, 0.5, 0, 0);
        tr.id = p.next_track_id++;
        tr.rate_post = GammaPosterior{4.0, 1.0};
        p.tracks.push_back(tr);
    }
    Frame frame;
    frame.step = 1;
    frame.observations = {v2(50.2, 49.9)};  // single observation, one cluster
    f.step(frame);
    for (const Particle& p : f.particles())
        CHECK(p.weight == doctest::Approx(1.0 / 30.0).epsilon(1e-9));
}

TEST_CASE("step invariants on a random scene") {
    FilterConfig c = test_config(25);
    c.master_seed = 3;
    Filter f(c, test_scene());
    Rng rng(8);
    for (int k = 1; k <= 25; ++k) {
        Frame frame;
        frame.step = k;
        const int n = rng.poisson(8.0);
        for (int i = 0; i < n; ++i) frame.observations.push_back(v2(rng.uniform(0, 100), rng.uniform(0, 100)));
        f.step(frame);

        double wsum = 0.0;
        for (const Particle& p : f.particles()) {
            wsum += p.weight;
            std::set<std::uint32_t> ids;
            for (const TrackBelief& tr : p.tracks) {
                CHECK(ids.insert(tr.id).second);  // ids never reused
                for (const auto& st : tr.states) {
                    CHECK((st.cov - st.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
                    Eigen::SelfAdjointEigenSolver<Mat> es(st.cov, Eigen::EigenvaluesOnly);
                    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(st.cov.trace(), 1.0));
                }
                if (tr.active) CHECK(tr.window_len() == std::min(k - tr.birth_step + 1, 10));
            }
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("filter runs are bit-deterministic for a fixed master seed") {
    const SceneConfig scene = test_scene();
    GenParams gp;
    gp.clutter_rate = 6.0;
    gp.birth_rate = 0.05;
    gp.noise_var = 1.0;
    gp.survival_prob = 0.98;
    gp.class_prior = {0.5, 0.5};
    gp.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    const ScenarioDataset ds = generate_scenario(scene, gp, 17);

    FilterConfig c = test_config(15);
    c.master_seed = 55;
    Filter f1(c, scene);
    Filter f2(c, scene);
    for (int k = 0; k < 30; ++k) {
        f1.step(ds.frames[static_cast<std::size_t>(k)]);
        f2.step(ds.frames[static_cast<std::size_t>(k)]);
    }
    const auto& p1 = f1.particles();
    const auto& p2 = f2.particles();
    for (std::size_t j = 0; j < p1.size(); ++j) {
        CHECK(p1[j].weight == p2[j].weight);
        REQUIRE(p1[j].tracks.size() == p2[j].tracks.size());
        for (std::size_t t = 0; t < p1[j].tracks.size(); ++t) {
            CHECK(p1[j].tracks[t].id == p2[j].tracks[t].id);
            CHECK((p1[j].tracks[t].states[0].mean - p2[j].tracks[t].states[0].mean).cwiseAbs().maxCoeff() ==
                  0.0);
        }
    }
    const auto e1 = f1.estimates();
    const auto e2 = f2.estimates();
    REQUIRE(e1.size() == e2.size());
    for (std::size_t i = 0; i < e1.size(); ++i) {
        CHECK(e1[i].key == e2[i].key);
        CHECK((e1[i].mean - e2[i].mean).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("thread count does not change results") {
    const SceneConfig scene = test_scene();
    GenParams gp;
    gp.clutter_rate = 6.0;
    gp.birth_rate = 0.08;
    gp.noise_var = 1.0;
    gp.survival_prob = 0.98;
    gp.class_prior = {0.5, 0.5};
    gp.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    const ScenarioDataset ds = generate_scenario(scene, gp, 18);

    FilterConfig c1 = test_config(12);
    c1.threads = 1;
    FilterConfig c2 = test_config(12);
    c2.threads = 4;
    Filter f1(c1, scene);
    Filter f2(c2, scene);
    for (int k = 0; k < 20; ++k) {
        f1.step(ds.frames[static_cast<std::size_t>(k)]);
        f2.step(ds.frames[static_cast<std::size_t>(k)]);
    }
    for (std::size_t j = 0; j < f1.particles().size(); ++j)
        CHECK(f1.particles()[j].weight == f2.particles()[j].weight);
}

namespace {

// Exhaustive association posterior for a frozen one-step scene, computed with
// dense likelihood evaluations. Outcomes label each cluster with a track
// index, clutter (-1), or new (-2); singleton clusters cannot open tracks.
struct EnumOutcome {
    std::vector<int> labels;
    double log_post;
};

std::vector<EnumOutcome> enumerate_posterior(const Filter& f, const std::vector<Mat>& cluster_obs) {
    const FilterConfig& c = f.config();
    const Particle& proto = f.particles()[0];
    const double log_rho = std::log(f.scene().density());
    const int T = static_cast<int>(proto.tracks.size());
    const int n_clusters = static_cast<int>(cluster_obs.size());

    // per-track per-class dense predictive (tracks share the prototype state)
    std::vector<std::vector<PerClassState>> preds(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        TrackBelief tmp = proto.tracks[static_cast<std::size_t>(t)];
        predict_track(tmp, f.caches());
        preds[static_cast<std::size_t>(t)] = tmp.pred;
    }

    auto dense_group_ll = [&](const Mat& g, const TrackBelief& tr,
                              const std::vector<PerClassState>& pred, double s2) {
        std::vector<double> terms;
        for (std::size_t cl = 0; cl < pred.size(); ++cl) {
            const int n = static_cast<int>(g.rows());
            double ll = std::log(tr.class_probs.probs[cl]);
            for (Eigen::Index d = 0; d < g.cols(); ++d) {
                Mat cov = Mat::Constant(n, n, pred[cl].cov(0, 0)) + s2 * Mat::Identity(n, n);
                Vec r = g.col(d) - Vec::Constant(n, pred[cl].mean(0, d));
                ll += -0.5 * n * kLogTwoPi - 0.5 * std::log(cov.determinant()) -
                      0.5 * r.dot(cov.inverse() * r);
            }
            terms.push_back(ll);
        }
        return log_sum_exp(terms);
    };

    std::vector<EnumOutcome> outcomes;
    std::vector<int> labels(static_cast<std::size_t>(n_clusters), 0);
    // label alphabet per cluster: 0..T-1 tracks, -1 clutter, -2 new (size >= 2)
    std::function<void(int)> rec = [&](int theta) {
        if (theta == n_clusters) {
            // stack groups per label
            std::vector<Mat> track_groups(static_cast<std::size_t>(T), Mat(0, 2));
            Mat new_group(0, 2);
            int n_clutter = 0, eta = 0;
            for (int th = 0; th < n_clusters; ++th) {
                const Mat& g = cluster_obs[static_cast<std::size_t>(th)];
                const int lab = labels[static_cast<std::size_t>(th)];
                auto append = [&](Mat& dst) {
                    Mat next(dst.rows() + g.rows(), 2);
                    next << dst, g;
                    dst = next;
                };
                if (lab == -1)
                    n_clutter += static_cast<int>(g.rows());
                else if (lab == -2)
                    append(new_group);
                else
                    append(track_groups[static_cast<std::size_t>(lab)]);
            }
            if (new_group.rows() > 0) eta = 1;

            // outcome-dependent noise estimate, mirroring the plug-in scheme
            InvGammaPosterior noise = proto.noise_post;
            std::vector<Mat> ng;
            for (const Mat& g : track_groups)
                if (g.rows() > 1) ng.push_back(g);
            if (new_group.rows() > 1) ng.push_back(new_group);
            noise = update_noise_var(noise, ng);
            const double s2 = noise.mean();

            double lp = static_cast<double>(n_clutter) * log_rho;
            for (int t = 0; t < T; ++t)
                if (track_groups[static_cast<std::size_t>(t)].rows() > 0)
                    lp += dense_group_ll(track_groups[static_cast<std::size_t>(t)],
                                         proto.tracks[static_cast<std::size_t>(t)],
                                         preds[static_cast<std::size_t>(t)], s2);
            if (eta == 1) lp += new_track_loglik(new_group, s2, log_rho);

            std::vector<CountTerm> terms;
            terms.push_back({proto.clutter_post.shape, proto.clutter_post.rate, n_clutter});
            for (int t = 0; t < T; ++t)
                terms.push_back({proto.tracks[static_cast<std::size_t>(t)].rate_post.shape,
                                 proto.tracks[static_cast<std::size_t>(t)].rate_post.rate,
                                 static_cast<int>(track_groups[static_cast<std::size_t>(t)].rows())});
            if (eta == 1)
                terms.push_back({c.rate_baseline.shape, c.rate_baseline.rate,
                                 static_cast<int>(new_group.rows())});
            lp += assoc_prior_logmass(terms, proto.birth_post, eta);
            outcomes.push_back({labels, lp});
            return;
        }
        for (int lab = -2; lab < T; ++lab) {
            if (lab == -2 && cluster_obs[static_cast<std::size_t>(theta)].rows() < 2) continue;
            labels[static_cast<std::size_t>(theta)] = lab;
            rec(theta + 1);
        }
    };
    rec(0);

    // normalize
    std::vector<double> lps;
    for (const auto& o : outcomes) lps.push_back(o.log_post);
    const double z = log_sum_exp(lps);
    for (auto& o : outcomes) o.log_post -= z;
    return outcomes;
}

// Extracts the outcome labels realized by one particle at the last step.
std::vector<int> realized_labels(const Filter& f, const Particle& p, const StepScratch& scratch,
                                 int n_clusters, const std::vector<std::uint32_t>& track_ids) {
    std::vector<int> labels(static_cast<std::size_t>(n_clusters), -1);
    for (const auto& [id, clusters] : scratch.group_clusters) {
        int lab = -2;
        for (std::size_t t = 0; t < track_ids.size(); ++t)
            if (track_ids[t] == id) lab = static_cast<int>(t);
        for (int theta : clusters) labels[static_cast<std::size_t>(theta)] = lab;
    }
    (void)f;
    (void)p;
    return labels;
}

}  // namespace

TEST_CASE("one-step association posterior matches exhaustive enumeration") {
    // frozen clustering, 3 observations, 2 tracks; moderate particle count
    // here, the acceptance suite runs the full-size version
    FilterConfig c = test_config(4000);
    c.survival_prob = 1.0;  // freeze survival so the posterior is association-only
    c.master_seed = 12345;
    Filter f(c, test_scene());

    std::vector<std::uint32_t> track_ids;
    for (Particle& p : f.mutable_particles()) {
        TrackBelief a = basic_track(c, 20, 20, 0.6, 0, 0);
        a.id = p.next_track_id++;
        TrackBelief b = basic_track(c, 60, 60, 0.6, 0, 0);
        b.id = p.next_track_id++;
        p.tracks = {a, b};
    }
    track_ids = {f.particles()[0].tracks[0].id, f.particles()[0].tracks[1].id};

    Frame frame;
    frame.step = 1;
    frame.observations = {v2(20.4, 19.8), v2(19.7, 20.3), v2(61.0, 59.5)};
    f.step(frame);

    REQUIRE(f.last_clusters().count() == 2);
    std::vector<Mat> cluster_obs;
    for (const Cluster& cl : f.last_clusters().clusters) {
        Mat m(cl.size(), 2);
        for (int r = 0; r < cl.size(); ++r)
            m.row(r) = frame.observations[static_cast<std::size_t>(cl.member_indices[static_cast<std::size_t>(r)])].transpose();
        cluster_obs.push_back(m);
    }

    // fresh prototype filter for enumeration (pre-step state)
    Filter proto(c, test_scene());
    for (Particle& p : proto.mutable_particles()) {
        TrackBelief a = basic_track(c, 20, 20, 0.6, 0, 0);
        a.id = p.next_track_id++;
        TrackBelief b = basic_track(c, 60, 60, 0.6, 0, 0);
        b.id = p.next_track_id++;
        p.tracks = {a, b};
    }
    const std::vector<EnumOutcome> exact = enumerate_posterior(proto, cluster_obs);

    std::map<std::vector<int>, double> empirical;
    for (std::size_t j = 0; j < f.particles().size(); ++j) {
        const auto labels = realized_labels(f, f.particles()[j], f.last_scratch()[j], 2, track_ids);
        empirical[labels] += f.particles()[j].weight;
    }

    double tv = 0.0;
    for (const EnumOutcome& o : exact) {
        const double emp = empirical.count(o.labels) ? empirical.at(o.labels) : 0.0;
        tv += std::abs(emp - std::exp(o.log_post));
    }
    tv *= 0.5;
    CHECK(tv < 0.05);
}
