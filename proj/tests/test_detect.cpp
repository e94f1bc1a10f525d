#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpr/detect.hpp"
#include "gpr/synthbench.hpp"
#include "support/testutil.hpp"

using namespace gpr;

namespace {

// Small-geometry fixture shared across the end-to-end cases: a short
// layered "road", a planted metal pipe, and a quickly trained net.
struct Fixture {
    AreaSpec area;
    PreprocessConfig pre;
    SlideConfig slide;
    OneClassParams oneclass;
    ConvNet<float> net = ConvNet<float>(32, 40);
    BScan clean_scan;
    BScan pipe_scan;
    int pipe_col_lo = 0, pipe_col_hi = 0;

    Fixture() {
        area.width_m = 24.0; // 1201 cols at dx = 0.02
        area.time_window_ns = 25.0;
        area.dt_ns = 0.4;
        area.source_freq_mhz = 250.0; // keeps >= 10 samples per period at this dt
        area.n_layers = 3;
        area.layer_depth_max_m = 1.0;
        area.seed = 5;

        slide.window_width = 40;
        slide.step = 5;
        slide.bootstrap_cols = 600;

        oneclass.c = 0.1;
        oneclass.spawn_threshold = 8;

        clean_scan = render_area_background(area);

        SceneSpec scene;
        scene.id = "pipe";
        scene.host = area.host;
        scene.width_m = area.width_m;
        scene.time_window_ns = area.time_window_ns;
        scene.dt_ns = area.dt_ns;
        scene.dx_m = area.dx_m;
        scene.source_freq_mhz = area.source_freq_mhz;
        BuriedObject o;
        o.kind = ObjectKind::Pipe;
        o.center_x_m = 17.0;
        o.depth_m = 0.45;
        o.size_m = 0.08;
        o.material = {"metal", std::numeric_limits<double>::infinity(), -1.0};
        scene.objects.push_back(o);
        pipe_scan = sum(clean_scan, render(scene, 7));
        pipe_col_lo = static_cast<int>((o.center_x_m - o.size_m) / area.dx_m);
        pipe_col_hi = static_cast<int>((o.center_x_m + o.size_m) / area.dx_m) + 1;

        // quick fine-tune: normal windows vs windows with planted objects
        const BScan conditioned = preprocess(clean_scan, pre);
        auto normals = sample_normal_windows(conditioned, 60, slide.window_width,
                                             slide.bootstrap_cols, 11);
        AreaSpec simgrid = area;
        auto objs = simulated_object_images(simgrid, 12, 21);
        std::vector<BScan> anomaly_windows;
        Rng rng(31);
        for (int i = 0; i < 60; ++i) {
            const BScan& sim = objs[i % objs.size()];
            const BScan conditioned_sim = preprocess(sim, pre);
            const int start = rng.uniform_int(0, conditioned_sim.cols - slide.window_width);
            BScan w = extract(conditioned_sim, Window{"sim", start, slide.window_width});
            anomaly_windows.push_back(sum(w, normals[i % normals.size()]));
        }
        std::vector<BScan> images = normals;
        std::vector<int> labels(normals.size(), 0);
        for (auto& w : anomaly_windows) {
            images.push_back(w);
            labels.push_back(1);
        }
        TrainConfig tc;
        tc.max_epochs = 8;
        tc.batch_size = 8;
        tc.learning_rate = 3e-3;
        tc.seed = 17;
        tc.input_rows = 32;
        tc.input_cols = 40;
        net = ConvNet<float>::random_init(32, 40, 3);
        train(net, images, labels, tc);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("window_starts arithmetic") {
    // exact fit: floor((3000-300)/10)+1 = 271, no tail window
    CHECK(window_starts(3000, 300, 10).size() == 271);
    // remainder: one extra right-aligned window
    auto s = window_starts(3007, 300, 10);
    CHECK(s.size() == 272);
    CHECK(s.back() == 2707);
    // formula property across configs
    for (int cols : {300, 301, 512, 999}) {
        for (int step : {1, 7, 10, 50}) {
            auto starts = window_starts(cols, 300, step, false);
            CHECK(static_cast<int>(starts.size()) == (cols - 300) / step + 1);
        }
    }
    CHECK_THROWS_AS(window_starts(200, 300, 10), std::invalid_argument);
}

TEST_CASE("merge_regions unit rules") {
    BScan meta = make_scan(4, 1000, 1.0, 0.02);
    auto mkdec = [](int start, int width, int cls, double d2) {
        Decision d;
        d.window = Window{"s", start, width};
        d.class_id = cls;
        d.dist2_class0 = d2;
        return d;
    };
    SUBCASE("overlapping same-class windows merge") {
        std::vector<Decision> ds = {mkdec(0, 300, 1, 0.5), mkdec(10, 300, 1, 0.7)};
        auto regions = merge_regions(ds, meta, 0.1);
        REQUIRE(regions.size() == 1);
        CHECK(regions[0].col_start == 0);
        CHECK(regions[0].col_end == 310);
        CHECK(regions[0].window_count == 2);
        CHECK(regions[0].score == doctest::Approx(0.5)); // mean of 0.4 and 0.6
        CHECK(regions[0].meters_start == doctest::Approx(0.0));
        CHECK(regions[0].meters_end == doctest::Approx(310 * 0.02));
    }
    SUBCASE("disjoint same-class windows stay separate") {
        std::vector<Decision> ds = {mkdec(0, 300, 1, 0.5), mkdec(600, 300, 1, 0.5)};
        auto regions = merge_regions(ds, meta, 0.0);
        REQUIRE(regions.size() == 2);
        CHECK(regions[0].col_end == 300);
        CHECK(regions[1].col_start == 600);
    }
    SUBCASE("class change splits at the boundary") {
        std::vector<Decision> ds = {mkdec(0, 300, 1, 0.5), mkdec(10, 300, 2, 0.5),
                                    mkdec(20, 300, 2, 0.5)};
        auto regions = merge_regions(ds, meta, 0.0);
        REQUIRE(regions.size() == 2);
        CHECK(regions[0].class_id == 1);
        CHECK(regions[0].col_end == 300);
        CHECK(regions[1].class_id == 2);
        CHECK(regions[1].col_start == 10);
        CHECK(regions[1].col_end == 320);
    }
    SUBCASE("normal windows break runs; every anomalous window lands in one region") {
        std::vector<Decision> ds = {mkdec(0, 300, 1, 0.5), mkdec(10, 300, 0, 0.0),
                                    mkdec(20, 300, 1, 0.5)};
        auto regions = merge_regions(ds, meta, 0.0);
        REQUIRE(regions.size() == 2);
        int covered = 0;
        for (const auto& r : regions) covered += r.window_count;
        CHECK(covered == 2);
    }
    SUBCASE("unclassified rejects form their own regions") {
        std::vector<Decision> ds = {mkdec(0, 300, -1, 0.9), mkdec(10, 300, -1, 0.9)};
        auto regions = merge_regions(ds, meta, 0.0);
        REQUIRE(regions.size() == 1);
        CHECK(regions[0].class_id == -1);
    }
}

TEST_CASE("bootstrap window count and validation") {
    Fixture& f = fixture();
    const BScan conditioned = preprocess(f.clean_scan, f.pre);
    // (600 - 40)/5 + 1 = 113 bootstrap windows
    CHECK(window_starts(f.slide.bootstrap_cols, f.slide.window_width, f.slide.step, false).size() ==
          113);
    SUBCASE("bootstrap_cols below the window width is rejected") {
        SlideConfig bad = f.slide;
        bad.bootstrap_cols = 30;
        CHECK_THROWS_AS(bootstrap_bank(conditioned, bad, f.net, f.oneclass, "s"),
                        std::invalid_argument);
    }
    SUBCASE("too few windows rejected") {
        SlideConfig bad = f.slide;
        bad.step = 40;
        bad.bootstrap_cols = 600; // 15 windows only
        CHECK_THROWS_AS(bootstrap_bank(conditioned, bad, f.net, f.oneclass, "s"),
                        std::invalid_argument);
    }
}

TEST_CASE("clean scan: high self-acceptance and no regions") {
    Fixture& f = fixture();
    ClassBank bank;
    ScanReport rep = detect_scan(f.clean_scan, f.pre, f.slide, f.oneclass, f.net, bank, "clean");
    CHECK(rep.windows_total == static_cast<int>(window_starts(f.clean_scan.cols, 40, 5).size()));
    CHECK(static_cast<double>(rep.windows_normal) / rep.windows_total >= 0.99);
    CHECK(rep.regions.empty());
    CHECK(rep.classes_in_bank == 1);
}

TEST_CASE("planted pipe: anomalous run intersects the truth, regions localize it") {
    Fixture& f = fixture();
    ClassBank bank;
    ScanReport rep = detect_scan(f.pipe_scan, f.pre, f.slide, f.oneclass, f.net, bank, "pipe");
    REQUIRE(!rep.regions.empty());
    // some region overlaps the pipe extent, up to the window redundancy
    const int tol = f.slide.window_width - f.slide.step;
    bool hit = false;
    for (const auto& r : rep.regions)
        if (r.col_start <= f.pipe_col_hi + tol && r.col_end >= f.pipe_col_lo - tol) hit = true;
    CHECK(hit);
    // no detections should fall inside the bootstrap section
    for (const auto& r : rep.regions) CHECK(r.col_end >= f.slide.bootstrap_cols - tol);
    // scores are positive for anomalous regions
    for (const auto& r : rep.regions) CHECK(r.score > 0.0);
}

TEST_CASE("re-running with the returned bank reproduces the regions") {
    Fixture& f = fixture();
    ClassBank bank;
    ScanReport first = detect_scan(f.pipe_scan, f.pre, f.slide, f.oneclass, f.net, bank, "pipe");
    ScanReport second = detect_scan(f.pipe_scan, f.pre, f.slide, f.oneclass, f.net, bank, "pipe");
    REQUIRE(first.regions.size() == second.regions.size());
    for (std::size_t i = 0; i < first.regions.size(); ++i) {
        CHECK(first.regions[i].col_start == second.regions[i].col_start);
        CHECK(first.regions[i].col_end == second.regions[i].col_end);
        CHECK(first.regions[i].class_id == second.regions[i].class_id);
    }
    CHECK(report_to_json_text(first) == report_to_json_text(second));
}

TEST_CASE("region overlay marks detections and nothing else") {
    Fixture& f = fixture();
    GrayImage plain = region_overlay(f.clean_scan, {});
    GrayImage base = to_gray(f.clean_scan);
    CHECK(plain.pixels == base.pixels); // empty overlay is the plain gray image
    AnomalyRegion r;
    r.col_start = 100;
    r.col_end = 140;
    GrayImage marked = region_overlay(f.clean_scan, {r});
    CHECK(marked.pixels[100] == 0.0);
    CHECK(marked.pixels[99] == base.pixels[99]);
}
