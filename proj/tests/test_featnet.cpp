#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gpr/featnet.hpp"
#include "gpr/rng.hpp"
#include "support/testutil.hpp"

using namespace gpr;

namespace {

// Two easily separable synthetic classes: smooth vertical gradient vs a
// strong diagonal texture.
std::vector<BScan> toy_images(int per_class, int rows, int cols, std::uint64_t seed) {
    std::vector<BScan> imgs;
    Rng rng(seed);
    for (int i = 0; i < 2 * per_class; ++i) {
        BScan s = make_scan(rows, cols, 1.0, 0.02);
        const int cls = i % 2;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                if (cls == 0)
                    s.at(r, c) = 0.5 * r / rows + 0.05 * rng.normal();
                else
                    s.at(r, c) = std::sin(0.8 * (r + 2 * c)) + 0.05 * rng.normal();
            }
        imgs.push_back(std::move(s));
    }
    return imgs;
}

std::vector<int> toy_labels(int per_class) {
    std::vector<int> l(2 * per_class);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<int>(i % 2);
    return l;
}

}  // namespace

TEST_CASE("forward: softmax normalization and determinism") {
    auto net = ConvNet<float>::random_init(32, 48, 7);
    BScan img = testutil::random_scan(32, 48, 3);
    ForwardResult a = forward(net, img);
    ForwardResult b = forward(net, img);
    CHECK(a.probs[0] > 0.0);
    CHECK(a.probs[1] > 0.0);
    CHECK(std::fabs(a.probs[0] + a.probs[1] - 1.0) <= 1e-6);
    CHECK(a.embedding.size() == 128);
    for (double v : a.embedding) CHECK(std::isfinite(v));
    CHECK(a.embedding == b.embedding); // bitwise identical
    CHECK(a.probs == b.probs);
}

TEST_CASE("forward: all-zero image hits the std guard and stays finite") {
    auto net = ConvNet<float>::random_init(32, 48, 9);
    BScan img = make_scan(32, 48, 1.0, 0.02);
    ForwardResult r = forward(net, img);
    for (double v : r.embedding) CHECK(std::isfinite(v));
    CHECK(std::fabs(r.probs[0] + r.probs[1] - 1.0) <= 1e-6);
}

TEST_CASE("forward: rejects non-finite input") {
    auto net = ConvNet<float>::random_init(32, 48, 9);
    BScan img = make_scan(32, 48, 1.0, 0.02);
    img.data[5] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward(net, img), std::invalid_argument);
}

TEST_CASE("bce_loss analytic values") {
    CHECK(bce_loss({0.5}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss({1.0 - 1e-7}, {1}) == doctest::Approx(1e-7).epsilon(1e-3));
    // -(ln 0.9 + ln 0.8)/2
    CHECK(bce_loss({0.9, 0.2}, {1, 0}) == doctest::Approx(0.164252033486018).epsilon(1e-12));
    CHECK_THROWS_AS(bce_loss({0.5}, {2}), std::invalid_argument);
    CHECK(bce_loss({0.3}, {0}) >= 0.0);
}

TEST_CASE("gradients match central finite differences (strided subset)") {
    // The acceptance suite sweeps every parameter; here a strided subset
    // keeps the unit run fast. Double precision, eps = 1e-4.
    auto net = ConvNet<double>::random_init(16, 16, 31);
    std::vector<BScan> imgs;
    imgs.push_back(testutil::random_scan(16, 16, 100));
    imgs.push_back(testutil::random_scan(16, 16, 101));
    std::vector<const BScan*> batch = {&imgs[0], &imgs[1]};
    std::vector<int> labels = {1, 0};
    std::vector<double> grad;
    batch_loss_and_grad(net, batch, labels, &grad);

    const double eps = 1e-4;
    std::size_t checked = 0, worst_idx = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j < net.param_count(); j += 37) {
        auto perturbed = net;
        perturbed.params()[j] += eps;
        const double lp = batch_loss_and_grad<double>(perturbed, batch, labels, nullptr);
        perturbed.params()[j] = net.params()[j] - eps;
        const double lm = batch_loss_and_grad<double>(perturbed, batch, labels, nullptr);
        const double fd = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::fabs(fd), std::fabs(grad[j]), 1e-6});
        const double rel = std::fabs(fd - grad[j]) / denom;
        if (rel > worst) {
            worst = rel;
            worst_idx = j;
        }
        ++checked;
    }
    INFO("checked " << checked << " params, worst rel err " << worst << " at " << worst_idx);
    CHECK(worst <= 1e-4);
}

TEST_CASE("train: lr = 0 leaves parameters unchanged") {
    auto net = ConvNet<float>::random_init(16, 16, 5);
    const auto before = net.params();
    std::vector<BScan> imgs = toy_images(4, 16, 16, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 2;
    cfg.batch_size = 4;
    cfg.input_rows = 16;
    cfg.input_cols = 16;
    train(net, imgs, toy_labels(4), cfg);
    CHECK(net.params() == before);
}

TEST_CASE("train: single-class corpus rejected") {
    auto net = ConvNet<float>::random_init(16, 16, 5);
    std::vector<BScan> imgs = toy_images(4, 16, 16, 2);
    std::vector<int> labels(imgs.size(), 1);
    TrainConfig cfg;
    cfg.input_rows = 16;
    cfg.input_cols = 16;
    CHECK_THROWS_AS(train(net, imgs, labels, cfg), std::invalid_argument);
}

TEST_CASE("train: loss non-increasing on a separable 2-point corpus") {
    auto net = ConvNet<double>::random_init(16, 16, 77);
    std::vector<BScan> imgs = toy_images(1, 16, 16, 4); // one image per class
    TrainConfig cfg;
    cfg.learning_rate = 1e-4; // small step
    cfg.max_epochs = 8;
    cfg.batch_size = 2;
    cfg.input_rows = 16;
    cfg.input_cols = 16;
    TrainResult r = train(net, imgs, toy_labels(1), cfg);
    REQUIRE(r.curve.size() == 8);
    for (std::size_t e = 1; e < r.curve.size(); ++e)
        CHECK(r.curve[e].loss <= r.curve[e - 1].loss + 1e-12);
}

TEST_CASE("train: deterministic parameter trajectories") {
    std::vector<BScan> imgs = toy_images(8, 16, 16, 6);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 9;
    cfg.input_rows = 16;
    cfg.input_cols = 16;
    auto net1 = ConvNet<float>::random_init(16, 16, 1);
    auto net2 = ConvNet<float>::random_init(16, 16, 1);
    TrainResult r1 = train(net1, imgs, toy_labels(8), cfg);
    TrainResult r2 = train(net2, imgs, toy_labels(8), cfg);
    CHECK(net1.params() == net2.params()); // bit-identical
    REQUIRE(r1.curve.size() == r2.curve.size());
    for (std::size_t e = 0; e < r1.curve.size(); ++e) {
        CHECK(r1.curve[e].loss == r2.curve[e].loss);
        CHECK(r1.curve[e].accuracy == r2.curve[e].accuracy);
    }
}

TEST_CASE("train: learns the toy separation within 10 epochs") {
    std::vector<BScan> imgs = toy_images(24, 16, 16, 8);
    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-2;
    cfg.seed = 4;
    cfg.input_rows = 16;
    cfg.input_cols = 16;
    auto net = ConvNet<float>::random_init(16, 16, 12);
    TrainResult r = train(net, imgs, toy_labels(24), cfg);
    CHECK(r.curve.back().accuracy >= 0.95);
}

TEST_CASE("extract: one D-vector per window, order preserved, duplicates equal") {
    auto net = ConvNet<float>::random_init(32, 48, 3);
    std::vector<BScan> windows;
    for (int i = 0; i < 7; ++i) windows.push_back(testutil::random_scan(32, 48, 40 + i));
    windows.push_back(windows[2]); // duplicate
    auto feats = extract(net, windows);
    REQUIRE(feats.size() == 8);
    for (const auto& f : feats) CHECK(f.values.size() == 128);
    CHECK(feats[7].values == feats[2].values);
    // parity with single-image forward
    ForwardResult direct = forward(net, windows[0]);
    CHECK(feats[0].values == direct.embedding);
}

TEST_CASE("checkpoint: exact round trip and validation") {
    auto net = ConvNet<float>::random_init(32, 48, 21);
    const std::string path = "/tmp/gpr_test_net.fnet";
    save_checkpoint(net, path);
    ConvNet<float> back = load_checkpoint(path);
    CHECK(back.input_rows() == 32);
    CHECK(back.input_cols() == 48);
    CHECK(back.params() == net.params()); // f32 payload is exact

    // corrupt the magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.put('X');
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::remove(path.c_str());
}
