#include "doctest.h"

#include "gapp/clustering.hpp"

#include <set>

using namespace gapp;

namespace {

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

}  // namespace

TEST_CASE("pooled noise estimate") {
    std::vector<double> w{1.0};
    std::vector<double> m{2.7};
    CHECK(pooled_noise_estimate(w, m) == doctest::Approx(2.7));

    std::vector<double> w2{0.5, 0.5};
    std::vector<double> m2{1.0, 3.0};
    CHECK(pooled_noise_estimate(w2, m2) == doctest::Approx(2.0));

    Rng rng(31);
    std::vector<double> wj(20), mj(20);
    double norm = 0.0;
    for (double& v : wj) {
        v = rng.uniform(0.01, 1.0);
        norm += v;
    }
    double direct = 0.0;
    for (std::size_t j = 0; j < wj.size(); ++j) {
        wj[j] /= norm;
        mj[j] = rng.uniform(0.5, 3.0);
        direct += wj[j] * mj[j];
    }
    CHECK(pooled_noise_estimate(wj, mj) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("ksd mode basics") {
    // single observation: the mode is that observation
    std::vector<Vec> one{v2(3.0, -1.0)};
    const Vec m = ksd_mode(v2(3.0, -1.0), one, 0.5);
    CHECK((m - one[0]).norm() < 1e-10);

    // coincident observations
    std::vector<Vec> twin{v2(1.0, 1.0), v2(1.0, 1.0)};
    CHECK((ksd_mode(twin[0], twin, 1.0) - twin[0]).norm() < 1e-10);

    // widely separated points each pull their own start to themselves
    const double bw = 1.0;
    std::vector<Vec> pair{v2(0.0, 0.0), v2(10.0 * std::sqrt(bw), 0.0)};
    const Vec m0 = ksd_mode(pair[0], pair, bw);
    const Vec m1 = ksd_mode(pair[1], pair, bw);
    CHECK((m0 - pair[0]).norm() < 0.01);
    CHECK((m1 - pair[1]).norm() < 0.01);

    // 1-D grid scan confirms two modes at roughly the data locations
    double best_left = -1e9, best_left_f = -1e18;
    for (double x = -2.0; x < 5.0; x += 0.001) {
        const double f = std::exp(-x * x / 2.0) + std::exp(-(x - 10.0) * (x - 10.0) / 2.0);
        if (f > best_left_f) {
            best_left_f = f;
            best_left = x;
        }
    }
    CHECK(std::abs(best_left - 0.0) < 0.01);

    // idempotence: re-running from a mode moves less than the tolerance
    const Vec again = ksd_mode(m0, pair, bw);
    CHECK((again - m0).norm() < 1e-4 * std::sqrt(bw));
}

TEST_CASE("cluster frame partition and membership") {
    CHECK(cluster_frame({}, 1.0).count() == 0);

    // m coincident points form one cluster
    std::vector<Vec> same(5, v2(2.0, 2.0));
    const ClusterSet cs = cluster_frame(same, 1.0);
    REQUIRE(cs.count() == 1);
    CHECK(cs.clusters[0].size() == 5);
    CHECK((cs.clusters[0].mean - v2(2.0, 2.0)).norm() < 1e-12);

    // two well-separated blobs of five points each split correctly
    Rng rng(32);
    std::vector<Vec> obs;
    const double bw = 1.0;
    const double sep = 20.0 * std::sqrt(bw);
    for (int i = 0; i < 5; ++i) obs.push_back(v2(rng.normal() * 0.5, rng.normal() * 0.5));
    for (int i = 0; i < 5; ++i) obs.push_back(v2(sep + rng.normal() * 0.5, rng.normal() * 0.5));
    const ClusterSet blobs = cluster_frame(obs, bw);
    REQUIRE(blobs.count() == 2);
    std::set<int> first(blobs.clusters[0].member_indices.begin(), blobs.clusters[0].member_indices.end());
    CHECK(first == std::set<int>{0, 1, 2, 3, 4});
    CHECK(blobs.clusters[1].size() == 5);

    // partition: every index exactly once
    std::vector<Vec> mixed;
    for (int i = 0; i < 40; ++i) mixed.push_back(v2(rng.uniform(0, 50), rng.uniform(0, 50)));
    const ClusterSet part = cluster_frame(mixed, 2.0);
    std::set<int> seen;
    int total = 0;
    for (const Cluster& c : part.clusters) {
        for (int idx : c.member_indices) {
            CHECK(seen.insert(idx).second);
            ++total;
        }
        // cluster means equal the arithmetic means of members
        Vec mean = Vec::Zero(2);
        for (int idx : c.member_indices) mean += mixed[static_cast<std::size_t>(idx)];
        mean /= c.size();
        CHECK((mean - c.mean).norm() < 1e-9);
    }
    CHECK(total == 40);
}

TEST_CASE("cluster frame translation equivariance") {
    Rng rng(33);
    std::vector<Vec> obs;
    for (int i = 0; i < 25; ++i) obs.push_back(v2(rng.uniform(0, 30), rng.uniform(0, 30)));
    const Vec shift = v2(123.4, -56.7);
    std::vector<Vec> moved;
    for (const Vec& y : obs) moved.push_back(y + shift);

    const ClusterSet a = cluster_frame(obs, 1.5);
    const ClusterSet b = cluster_frame(moved, 1.5);
    REQUIRE(a.count() == b.count());
    for (int c = 0; c < a.count(); ++c) {
        CHECK(a.clusters[static_cast<std::size_t>(c)].member_indices ==
              b.clusters[static_cast<std::size_t>(c)].member_indices);
        CHECK((a.clusters[static_cast<std::size_t>(c)].mean + shift -
               b.clusters[static_cast<std::size_t>(c)].mean)
                  .norm() < 1e-6);
        CHECK((a.clusters[static_cast<std::size_t>(c)].argmax_mean + shift -
               b.clusters[static_cast<std::size_t>(c)].argmax_mean)
                  .norm() < 1e-6);
    }
}
