#include "doctest.h"

#include "gapp/scenario.hpp"

using namespace gapp;

namespace {

SceneConfig small_scene(int horizon = 50) {
    SceneConfig s;
    s.bounds = {{0.0, 200.0}, {0.0, 200.0}};
    s.step = 1.0;
    s.horizon = horizon;
    return s;
}

GenParams base_params() {
    GenParams p;
    p.clutter_rate = 8.0;
    p.birth_rate = 0.05;
    p.noise_var = 1.0;
    p.survival_prob = 0.98;
    p.class_prior = {0.5, 0.5};
    p.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    p.detection_rate_range = {3.0, 6.0};
    p.forced_initial_object = true;
    p.no_birth_tail = 10;
    return p;
}

}  // namespace

TEST_CASE("default parameter sampling stays inside the stated ranges") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const GenParams p = sample_default_params(seed);
        CHECK(p.clutter_rate >= 10.0);
        CHECK(p.clutter_rate <= 15.0);
        CHECK(p.birth_rate >= 0.02);
        CHECK(p.birth_rate <= 0.1);
        CHECK(p.noise_var >= 0.5);
        CHECK(p.noise_var <= 2.0);
        CHECK(p.survival_prob == doctest::Approx(0.98));
        REQUIRE(p.class_params.size() == 2);
        CHECK(p.class_params[0].sigma2 == doctest::Approx(100.0));
        CHECK(p.class_params[0].ell == doctest::Approx(4.0));
        CHECK(p.class_params[1].sigma2 == doctest::Approx(10.0));
        CHECK(p.class_params[1].ell == doctest::Approx(1.0));
        CHECK(p.class_params[0].window == 10);
    }

    const GenParams a = sample_default_params(123);
    const GenParams b = sample_default_params(123);
    CHECK(a.clutter_rate == b.clutter_rate);
    CHECK(a.birth_rate == b.birth_rate);
    CHECK(a.noise_var == b.noise_var);
}

TEST_CASE("zero birth rate and no forced object gives clutter-only frames") {
    GenParams p = base_params();
    p.birth_rate = 1e-300;
    p.forced_initial_object = false;
    const ScenarioDataset ds = generate_scenario(small_scene(), p, 3);
    CHECK(ds.objects.empty());
    for (const Frame& f : ds.frames)
        for (const Vec& y : f.observations) {
            CHECK(y(0) >= 0.0);
            CHECK(y(0) <= 200.0);
        }
}

TEST_CASE("zero noise puts observations exactly on the trajectory") {
    GenParams p = base_params();
    p.noise_var = 0.0;
    p.clutter_rate = 1e-12;
    p.birth_rate = 1e-300;
    p.detection_rate_range = {20.0, 20.0};
    const ScenarioDataset ds = generate_scenario(small_scene(20), p, 5);
    REQUIRE(ds.objects.size() == 1);
    const TrueObject& obj = ds.objects[0];
    for (const Frame& f : ds.frames) {
        if (!obj.active_at(f.step)) continue;
        for (const Vec& y : f.observations)
            CHECK((y - obj.position_at(f.step)).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("determinism under fixed seed") {
    const GenParams p = base_params();
    const ScenarioDataset a = generate_scenario(small_scene(), p, 77);
    const ScenarioDataset b = generate_scenario(small_scene(), p, 77);
    REQUIRE(a.objects.size() == b.objects.size());
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        REQUIRE(a.frames[i].observations.size() == b.frames[i].observations.size());
        for (std::size_t l = 0; l < a.frames[i].observations.size(); ++l)
            CHECK((a.frames[i].observations[l] - b.frames[i].observations[l]).norm() == 0.0);
    }
}

TEST_CASE("clutter counts are Poisson: mean within 3 standard errors") {
    GenParams p = base_params();
    p.birth_rate = 1e-300;
    p.forced_initial_object = false;
    p.clutter_rate = 11.0;
    SceneConfig scene = small_scene(1);
    double total = 0.0;
    const int reps = 10000;
    // horizon-1 scenes regenerated with distinct seeds give iid frames
    for (int r = 0; r < reps; ++r) {
        const ScenarioDataset ds = generate_scenario(scene, p, 1000 + static_cast<std::uint64_t>(r));
        total += static_cast<double>(ds.frames[0].observations.size());
    }
    const double mean = total / reps;
    const double se = std::sqrt(11.0 / reps);
    CHECK(std::abs(mean - 11.0) < 3.0 * se);
}

TEST_CASE("total observation count matches the Poisson mixture (chi-square)") {
    // no objects: total count ~ Poisson(mu0); chi-square goodness of fit
    GenParams p = base_params();
    p.birth_rate = 1e-300;
    p.forced_initial_object = false;
    p.clutter_rate = 6.0;
    SceneConfig scene = small_scene(1);

    const int reps = 10000;
    std::vector<int> counts;
    counts.reserve(reps);
    int max_n = 0;
    for (int r = 0; r < reps; ++r) {
        const ScenarioDataset ds = generate_scenario(scene, p, 50000 + static_cast<std::uint64_t>(r));
        const int n = static_cast<int>(ds.frames[0].observations.size());
        counts.push_back(n);
        max_n = std::max(max_n, n);
    }
    // bins 0..14 plus tail
    const int bins = 16;
    std::vector<double> expected(bins, 0.0), observed(bins, 0.0);
    double pmf = std::exp(-6.0);
    double tail = 1.0;
    for (int n = 0; n < bins - 1; ++n) {
        expected[static_cast<std::size_t>(n)] = pmf * reps;
        tail -= pmf;
        pmf *= 6.0 / static_cast<double>(n + 1);
    }
    expected[bins - 1] = tail * reps;
    for (int n : counts) observed[static_cast<std::size_t>(std::min(n, bins - 1))] += 1.0;
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b)
        if (expected[static_cast<std::size_t>(b)] > 1e-9)
            chi2 += std::pow(observed[static_cast<std::size_t>(b)] - expected[static_cast<std::size_t>(b)], 2) /
                    expected[static_cast<std::size_t>(b)];
    // 15 dof, significance 1e-3 -> critical value 37.70
    CHECK(chi2 < 37.70);

    // with one forced object present, the total is Poisson(mu0 + mu_1)
    GenParams p1 = base_params();
    p1.birth_rate = 1e-300;
    p1.forced_initial_object = true;
    p1.clutter_rate = 4.0;
    p1.detection_rate_range = {3.0, 3.0};
    const double total_rate = 7.0;
    const int bins2 = 18;
    std::vector<double> expected2(bins2, 0.0), observed2(bins2, 0.0);
    for (int r = 0; r < reps; ++r) {
        const ScenarioDataset ds = generate_scenario(scene, p1, 90000 + static_cast<std::uint64_t>(r));
        const int n = static_cast<int>(ds.frames[0].observations.size());
        observed2[static_cast<std::size_t>(std::min(n, bins2 - 1))] += 1.0;
    }
    double pmf2 = std::exp(-total_rate);
    double tail2 = 1.0;
    for (int n = 0; n < bins2 - 1; ++n) {
        expected2[static_cast<std::size_t>(n)] = pmf2 * reps;
        tail2 -= pmf2;
        pmf2 *= total_rate / static_cast<double>(n + 1);
    }
    expected2[bins2 - 1] = tail2 * reps;
    double chi2b = 0.0;
    for (int b = 0; b < bins2; ++b)
        if (expected2[static_cast<std::size_t>(b)] > 1e-9)
            chi2b += std::pow(observed2[static_cast<std::size_t>(b)] - expected2[static_cast<std::size_t>(b)], 2) /
                     expected2[static_cast<std::size_t>(b)];
    // 17 dof, significance 1e-3 -> critical value 40.79
    CHECK(chi2b < 40.79);
}

TEST_CASE("class-conditional trajectories separate under their own model") {
    // score increments of each trajectory under both class models; the true
    // class must win on average
    const GenParams p = base_params();
    std::vector<TransitionCache> caches;
    for (const auto& cp : p.class_params) caches.emplace_back(cp);

    int checked_per_class[2] = {0, 0};
    double margin_per_class[2] = {0.0, 0.0};
    for (std::uint64_t seed = 0; checked_per_class[0] < 12 || checked_per_class[1] < 12; ++seed) {
        GenParams pp = base_params();
        pp.birth_rate = 1e-300;
        pp.noise_var = 0.0;
        pp.detection_rate_range = {1.0, 1.0};
        const ScenarioDataset ds = generate_scenario(small_scene(40), pp, 9000 + seed);
        REQUIRE(ds.objects.size() == 1);
        const TrueObject& obj = ds.objects[0];
        if (static_cast<int>(obj.positions.size()) < 25) continue;

        double ll[2] = {0.0, 0.0};
        for (int c = 0; c < 2; ++c) {
            // exact filtering of the noiseless positions under class c
            std::vector<double> win_x{obj.positions[0](0)}, win_y{obj.positions[0](1)};
            for (std::size_t s = 1; s < obj.positions.size(); ++s) {
                const auto& tr = caches[static_cast<std::size_t>(c)].for_input_length(
                    static_cast<int>(win_x.size()));
                double mx = 0.0, my = 0.0;
                for (std::size_t j = 0; j < win_x.size(); ++j) {
                    mx += tr.f_matrix(0, static_cast<int>(j)) * win_x[j];
                    my += tr.f_matrix(0, static_cast<int>(j)) * win_y[j];
                }
                const double v = std::max(tr.noise_var, 1e-12);
                ll[c] += norm_logpdf(obj.positions[s](0), mx, v) + norm_logpdf(obj.positions[s](1), my, v);
                win_x.insert(win_x.begin(), obj.positions[s](0));
                win_y.insert(win_y.begin(), obj.positions[s](1));
                if (static_cast<int>(win_x.size()) > 10) {
                    win_x.pop_back();
                    win_y.pop_back();
                }
            }
        }
        const int truth = obj.class_label;
        margin_per_class[truth] += ll[truth] - ll[1 - truth];
        ++checked_per_class[truth];
    }
    CHECK(margin_per_class[0] / checked_per_class[0] > 0.0);
    CHECK(margin_per_class[1] / checked_per_class[1] > 0.0);
}

TEST_CASE("forced object and birth tail flags") {
    GenParams p = base_params();
    p.birth_rate = 0.2;
    const ScenarioDataset ds = generate_scenario(small_scene(60), p, 21);
    REQUIRE(!ds.objects.empty());
    CHECK(ds.objects[0].birth_step == 1);
    for (const TrueObject& o : ds.objects) CHECK(o.birth_step <= 60 - p.no_birth_tail);
}
