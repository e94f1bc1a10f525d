#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "gpr/oneclass.hpp"
#include "gpr/reference.hpp"
#include "gpr/rng.hpp"
#include "support/oracles.hpp"

using namespace gpr;

namespace {

std::vector<std::vector<double>> gaussian_cloud(int n, int dim, double spread,
                                                const std::vector<double>& center,
                                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> out(n, std::vector<double>(dim, 0.0));
    for (auto& v : out)
        for (int j = 0; j < dim; ++j) v[j] = center[j] + spread * rng.normal();
    return out;
}

std::vector<double> origin(int dim) { return std::vector<double>(dim, 0.0); }

std::vector<double> shifted(int dim, double value, int axis = 0) {
    std::vector<double> v(dim, 0.0);
    v[axis] = value;
    return v;
}

}  // namespace

TEST_CASE("svdd: single point degenerates to a zero-radius sphere") {
    SvddModel m = svdd_train({{1.0, 2.0}}, 1.0, 1.0);
    REQUIRE(m.alpha.size() == 1);
    CHECK(m.alpha[0] == doctest::Approx(1.0));
    CHECK(m.r_squared == doctest::Approx(0.0));
    CHECK(svdd_distance2(m, {1.0, 2.0}) == doctest::Approx(0.0));
    CHECK(svdd_accepts(m, {1.0, 2.0})); // the training point is inside
}

TEST_CASE("svdd: two points split the mass by symmetry") {
    SvddModel m = svdd_train({{0.0, 0.0}, {1.0, 0.0}}, 1.0, 1.0);
    REQUIRE(m.alpha.size() == 2);
    CHECK(m.alpha[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(m.alpha[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("svdd: infeasible C rejected") {
    auto cloud = gaussian_cloud(10, 2, 1.0, origin(2), 3);
    CHECK_THROWS_AS(svdd_train(cloud, 0.05, 1.0), std::invalid_argument); // C < 1/10
}

TEST_CASE("svdd: dual feasibility and boundary geometry") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        auto cloud = gaussian_cloud(60, 4, 1.0, origin(4), seed);
        SvddModel m = svdd_train(cloud, 0.1, 0.0);
        double asum = 0.0;
        for (double a : m.alpha) {
            CHECK(a >= 0.0);
            CHECK(a <= 0.1 + 1e-12);
            asum += a;
        }
        CHECK(std::fabs(asum - 1.0) <= 1e-8);
        int boundary = 0;
        for (std::size_t i = 0; i < m.alpha.size(); ++i)
            if (m.alpha[i] > 1e-8 && m.alpha[i] < m.c - 1e-8) {
                ++boundary;
                CHECK(std::fabs(svdd_distance2(m, m.support[i]) - m.r_squared) <= 1e-6);
            }
        CHECK(boundary >= 1);
    }
}

TEST_CASE("svdd: solver matches the exhaustive grid oracle on 5-point instances") {
    Rng rng(41);
    for (int inst = 0; inst < 6; ++inst) {
        std::vector<std::vector<double>> pts(5, std::vector<double>(2));
        for (auto& p : pts) {
            p[0] = 2.0 * rng.normal();
            p[1] = 2.0 * rng.normal();
        }
        const double c = 0.6, gamma = 1.0;
        SvddModel m = svdd_train(pts, c, gamma);
        // solver-side dual objective: 1 - self_term for a Gaussian kernel
        const double solver_obj = 1.0 - m.self_term;
        const auto gram = ref::gram_rbf(pts, gamma);
        const double grid_obj = oracle::svdd_dual_gridsearch(gram, 5, c);
        CHECK(std::fabs(solver_obj - grid_obj) <= 1e-4);
        CHECK(solver_obj >= grid_obj - 1e-4); // any grid point lower-bounds the max
    }
}

TEST_CASE("svdd: distance of a faraway point approaches 1 + self_term") {
    auto cloud = gaussian_cloud(20, 3, 0.5, origin(3), 5);
    SvddModel m = svdd_train(cloud, 0.5, 1.0);
    const double far = svdd_distance2(m, shifted(3, 1e4));
    CHECK(far == doctest::Approx(1.0 + m.self_term).epsilon(1e-12));
    CHECK(!svdd_accepts(m, shifted(3, 1e4)));
}

TEST_CASE("svdd: with C=1 every training point is accepted") {
    for (std::uint64_t seed : {21ull, 22ull}) {
        auto cloud = gaussian_cloud(40, 4, 1.0, origin(4), seed);
        SvddModel m = svdd_train(cloud, 1.0, 0.0);
        for (const auto& x : cloud) CHECK(svdd_accepts(m, x));
    }
}

TEST_CASE("svdd: decreasing C never decreases the support set") {
    auto cloud = gaussian_cloud(40, 4, 1.0, origin(4), 77);
    std::size_t prev = 0;
    for (double c : {1.0, 0.5, 0.25, 0.125}) {
        SvddModel m = svdd_train(cloud, c, 0.5);
        CHECK(m.alpha.size() >= prev);
        prev = m.alpha.size();
    }
}

TEST_CASE("bank: classify honors first-accept ordering") {
    OneClassParams params;
    params.c = 1.0;
    params.cohesion_radius = 2.0;
    params.spawn_threshold = 4;
    auto normal = gaussian_cloud(30, 2, 0.5, origin(2), 1);
    ClassBank bank = ClassBank::bootstrap(normal, params);
    REQUIRE(bank.num_classes() == 1);
    // inside class 0
    CHECK(bank.classify(origin(2)) == 0);
    // far away: rejected
    CHECK(bank.classify(shifted(2, 50.0)) == -1);
    // spawn a second class overlapping class 0's region: a point inside both
    // spheres must still land in class 0
    for (int i = 0; i < 4; ++i) {
        auto x = origin(2);
        x[0] = 0.2 + 0.01 * i;
        x[1] = 40.0; // outside class 0
        bank.absorb(x, i);
    }
    REQUIRE(bank.num_classes() == 2);
    CHECK(bank.classify({0.21, 40.0}) == 1);
    CHECK(bank.classify({0.1, 0.1}) == 0);
}

TEST_CASE("bank: spawn policy") {
    OneClassParams params;
    params.c = 1.0;
    params.spawn_threshold = 8;
    params.cohesion_radius = 2.0;
    auto normal = gaussian_cloud(30, 2, 0.4, origin(2), 2);

    SUBCASE("seven rejects stay buffered") {
        ClassBank bank = ClassBank::bootstrap(normal, params);
        auto rejects = gaussian_cloud(7, 2, 0.2, shifted(2, 30.0), 3);
        for (std::size_t i = 0; i < rejects.size(); ++i)
            CHECK(!bank.absorb(rejects[i], static_cast<std::int64_t>(i)).has_value());
        CHECK(bank.num_classes() == 1);
        CHECK(bank.buffer_size() == 7);
    }
    SUBCASE("eight cohesive rejects spawn a class that then accepts its kin") {
        ClassBank bank = ClassBank::bootstrap(normal, params);
        auto rejects = gaussian_cloud(8, 2, 0.2, shifted(2, 30.0), 4);
        std::optional<SpawnEvent> ev;
        for (std::size_t i = 0; i < rejects.size(); ++i) {
            ev = bank.absorb(rejects[i], static_cast<std::int64_t>(i));
            if (i + 1 < rejects.size()) CHECK(!ev.has_value());
        }
        REQUIRE(ev.has_value());
        CHECK(ev->class_id == 1);
        CHECK(ev->member_tags.size() == 8);
        CHECK(bank.buffer_size() == 0);
        auto similar = gaussian_cloud(5, 2, 0.2, shifted(2, 30.0), 5);
        for (const auto& x : similar) CHECK(bank.classify(x) == 1);
    }
    SUBCASE("bimodal rejects fail the cohesion gate") {
        ClassBank bank = ClassBank::bootstrap(normal, params);
        auto g1 = gaussian_cloud(4, 2, 0.1, shifted(2, 30.0), 6);
        auto g2 = gaussian_cloud(4, 2, 0.1, shifted(2, -30.0), 7);
        std::int64_t tag = 0;
        for (const auto& x : g1) CHECK(!bank.absorb(x, tag++).has_value());
        for (const auto& x : g2) CHECK(!bank.absorb(x, tag++).has_value());
        CHECK(bank.num_classes() == 1);
        CHECK(bank.buffer_size() == 8); // retained, not dropped
    }
    SUBCASE("two sequential anomaly populations spawn exactly two classes") {
        ClassBank bank = ClassBank::bootstrap(normal, params);
        std::int64_t tag = 0;
        auto type_a = gaussian_cloud(20, 2, 0.25, shifted(2, 25.0), 8);
        auto type_b = gaussian_cloud(20, 2, 0.25, shifted(2, -25.0), 9);
        int spawned = 0;
        for (const auto& x : type_a)
            if (bank.classify(x) == -1 && bank.absorb(x, tag++).has_value()) ++spawned;
        for (const auto& x : type_b)
            if (bank.classify(x) == -1 && bank.absorb(x, tag++).has_value()) ++spawned;
        CHECK(spawned == 2);
        CHECK(bank.num_classes() == 3);
        CHECK(bank.classify(shifted(2, 25.0)) == 1);
        CHECK(bank.classify(shifted(2, -25.0)) == 2);
    }
}

TEST_CASE("bank: save/load round trip preserves decisions") {
    OneClassParams params;
    params.c = 0.5;
    params.cohesion_radius = 2.0;
    params.spawn_threshold = 4;
    auto normal = gaussian_cloud(25, 3, 0.5, origin(3), 10);
    ClassBank bank = ClassBank::bootstrap(normal, params);
    auto rejects = gaussian_cloud(4, 3, 0.2, shifted(3, 20.0), 11);
    for (std::size_t i = 0; i < rejects.size(); ++i) bank.absorb(rejects[i], static_cast<int>(i));
    REQUIRE(bank.num_classes() == 2);

    bank.save("/tmp/gpr_bank.json", "/tmp/gpr_bank.blob");
    ClassBank back = ClassBank::load("/tmp/gpr_bank.json", "/tmp/gpr_bank.blob");
    REQUIRE(back.num_classes() == 2);
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x = {10.0 * rng.normal(), 10.0 * rng.normal(), 10.0 * rng.normal()};
        CHECK(back.classify(x) == bank.classify(x));
    }
    std::remove("/tmp/gpr_bank.json");
    std::remove("/tmp/gpr_bank.blob");
}

namespace {

std::vector<FeatureVector> as_features(const std::vector<std::vector<double>>& xs) {
    std::vector<FeatureVector> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i].values = xs[i];
    return fs;
}

}  // namespace

TEST_CASE("pca3: recovers a diagonal covariance in variance order") {
    // six points whose sample covariance is exactly diag(3, 2, 1)
    const double a = std::sqrt(3.0 * 5.0 / 2.0), b = std::sqrt(2.0 * 5.0 / 2.0),
                 c = std::sqrt(1.0 * 5.0 / 2.0);
    std::vector<std::vector<double>> pts = {{a, 0, 0},  {-a, 0, 0}, {0, b, 0},
                                            {0, -b, 0}, {0, 0, c},  {0, 0, -c}};
    Pca3Result r = pca3(as_features(pts));
    CHECK(r.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.points[0][0] == doctest::Approx(a).epsilon(1e-10));
    CHECK(r.points[2][1] == doctest::Approx(b).epsilon(1e-10));
    CHECK(r.points[4][2] == doctest::Approx(c).epsilon(1e-10));
    CHECK(!r.rank_deficient);
}

TEST_CASE("pca3: duplicated cloud projects identically") {
    auto xs = gaussian_cloud(10, 5, 1.0, origin(5), 14);
    auto fs = as_features(xs);
    auto doubled = fs;
    doubled.insert(doubled.end(), fs.begin(), fs.end());
    Pca3Result r = pca3(doubled);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        CHECK(r.points[i][0] == doctest::Approx(r.points[i + fs.size()][0]));
        CHECK(r.points[i][1] == doctest::Approx(r.points[i + fs.size()][1]));
        CHECK(r.points[i][2] == doctest::Approx(r.points[i + fs.size()][2]));
    }
}

TEST_CASE("pca3: axes orthonormal, residual equals the eigenvalue tail") {
    auto xs = gaussian_cloud(40, 128, 1.0, origin(128), 15);
    auto fs = as_features(xs);
    Pca3Result r = pca3(fs);
    // orthonormal projection
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < r.axes.size(); ++j) dot += r.axes[j][a] * r.axes[j][b];
            CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) <= 1e-10);
        }
    // mean squared reconstruction residual = discarded eigenvalue mass
    const int n = static_cast<int>(xs.size());
    const int d = 128;
    std::vector<double> mean(d, 0.0);
    for (const auto& x : xs)
        for (int j = 0; j < d; ++j) mean[j] += x[j] / n;
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            double recon = 0.0;
            for (int axis = 0; axis < 3; ++axis) recon += r.points[i][axis] * r.axes[j][axis];
            const double dlt = (xs[i][j] - mean[j]) - recon;
            resid += dlt * dlt;
        }
    }
    resid /= (n - 1);
    CHECK(std::fabs(resid - r.discarded_variance) <= 1e-8 * std::max(1.0, resid));
}

TEST_CASE("pca3: rank-deficient input flagged and padded") {
    // all points on one line
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({static_cast<double>(i), 2.0 * i, 0.0});
    Pca3Result r = pca3(as_features(pts));
    CHECK(r.rank_deficient);
    CHECK(r.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.eigenvalues[2] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("pca3: needs at least 3 features") {
    auto xs = gaussian_cloud(2, 4, 1.0, origin(4), 16);
    CHECK_THROWS_AS(pca3(as_features(xs)), std::invalid_argument);
}
