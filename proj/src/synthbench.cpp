#include "gpr/synthbench.hpp"

#include <algorithm>
#include <cmath>

#include "gpr/parallel.hpp"
#include "gpr/rng.hpp"

namespace gpr {

namespace {
constexpr double kC_m_per_ns = 0.2998;
}

BScan render_area_background(const AreaSpec& area) {
    const int rows = static_cast<int>(std::floor(area.time_window_ns / area.dt_ns)) + 1;
    const int cols = static_cast<int>(std::floor(area.width_m / area.dx_m)) + 1;
    BScan out = make_scan(rows, cols, area.dt_ns, area.dx_m, 0.0);

    Rng rng(Rng::mix(area.seed, 0xA2EA));
    struct Layer {
        double depth, amp, phase, wavelength, undulation;
    };
    std::vector<Layer> layers;
    for (int l = 0; l < area.n_layers; ++l) {
        Layer lay;
        const double f = area.n_layers > 1 ? static_cast<double>(l) / (area.n_layers - 1) : 0.0;
        lay.depth = area.layer_depth_min_m + f * (area.layer_depth_max_m - area.layer_depth_min_m);
        lay.depth += 0.03 * rng.normal();
        lay.amp = area.layer_amp * (l % 2 == 0 ? 1.0 : -0.8) * rng.uniform(0.7, 1.3);
        lay.phase = rng.uniform(0.0, 6.283185307179586);
        lay.wavelength = area.layer_wavelength_m * rng.uniform(0.6, 1.5);
        lay.undulation = area.layer_undulation_m * rng.uniform(0.6, 1.4);
        layers.push_back(lay);
    }

    const double v = kC_m_per_ns / std::sqrt(area.host.rel_permittivity);
    const double period_ns = 1000.0 / area.source_freq_mhz;
    const double support_ns = 3.0 * period_ns;
#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (int c = 0; c < cols; ++c) {
        const double x = c * area.dx_m;
        for (const auto& lay : layers) {
            const double d = lay.depth + lay.undulation * std::sin(6.283185307179586 * x / lay.wavelength + lay.phase);
            const double t0 = 2.0 * d / v;
            const double spread = 1.0 / std::max(t0, area.dt_ns);
            const int r_lo = std::max(0, static_cast<int>(std::ceil((t0 - support_ns) / area.dt_ns)));
            const int r_hi = std::min(rows - 1, static_cast<int>(std::floor((t0 + support_ns) / area.dt_ns)));
            for (int r = r_lo; r <= r_hi; ++r)
                out.data[static_cast<std::size_t>(r) * cols + c] +=
                    lay.amp * spread * ricker(r * area.dt_ns - t0, area.source_freq_mhz);
        }
    }
    if (area.noise_sigma > 0.0) {
        Rng noise(Rng::mix(area.seed, 0xBEEF));
        for (double& vv : out.data) vv += noise.normal(0.0, area.noise_sigma);
    }
    return out;
}

namespace {

MaterialSpec anomaly_material(ObjectKind kind, double host_er, Rng& rng) {
    switch (kind) {
        case ObjectKind::Pipe:
            return {"metal", std::numeric_limits<double>::infinity(), -1.0};
        case ObjectKind::WaterPocket: {
            const double er = 81.0;
            const double r = (std::sqrt(host_er) - std::sqrt(er)) / (std::sqrt(host_er) + std::sqrt(er));
            return {"water", er, r};
        }
        case ObjectKind::Void: {
            const double er = 1.0;
            const double r = (std::sqrt(host_er) - std::sqrt(er)) / (std::sqrt(host_er) + std::sqrt(er));
            return {"air", er, r};
        }
        case ObjectKind::Crack: {
            const double er = 1.0;
            const double r = 0.55 * (std::sqrt(host_er) - 1.0) / (std::sqrt(host_er) + 1.0);
            return {"air_crack", er, r};
        }
        case ObjectKind::Rock: {
            const double er = rng.uniform(5.0, 8.0);
            const double r = (std::sqrt(host_er) - std::sqrt(er)) / (std::sqrt(host_er) + std::sqrt(er));
            return {"rock", er, r};
        }
    }
    return {"host", host_er, 0.0};
}

BuriedObject random_anomaly(ObjectKind kind, double center_x, const BenchmarkConfig& cfg,
                            Rng& rng) {
    BuriedObject o;
    o.kind = kind;
    o.center_x_m = center_x;
    o.depth_m = rng.uniform(cfg.depth_min_m, cfg.depth_max_m);
    switch (kind) {
        case ObjectKind::Pipe: o.size_m = rng.uniform(0.04, 0.12); break;
        case ObjectKind::WaterPocket: o.size_m = rng.uniform(0.25, 0.5); break;
        case ObjectKind::Void: o.size_m = rng.uniform(0.2, 0.45); break;
        case ObjectKind::Crack: o.size_m = rng.uniform(0.3, 0.7); break;
        case ObjectKind::Rock: o.size_m = rng.uniform(0.08, 0.2); break;
    }
    o.material = anomaly_material(kind, cfg.area.host.rel_permittivity, rng);
    return o;
}

}  // namespace

Benchmark build_benchmark(const BenchmarkConfig& cfg) {
    Benchmark bench;
    bench.area = cfg.area;
    for (int s = 0; s < cfg.n_scans; ++s) {
        AreaSpec area = cfg.area;
        area.seed = Rng::mix(cfg.seed, 0x500 + static_cast<std::uint64_t>(s));
        BenchScan bs;
        bs.id = "road_" + std::to_string(s + 1);
        BScan background = render_area_background(area);

        // anomaly scene on the same grid, rendered without noise and added
        Rng rng(Rng::mix(cfg.seed, 0x900 + static_cast<std::uint64_t>(s)));
        SceneSpec scene;
        scene.id = bs.id + "_anomalies";
        scene.host = area.host;
        scene.width_m = area.width_m;
        scene.time_window_ns = area.time_window_ns;
        scene.dt_ns = area.dt_ns;
        scene.dx_m = area.dx_m;
        scene.source_freq_mhz = area.source_freq_mhz;
        scene.noise_sigma = 0.0;

        const double usable = area.width_m - cfg.margin_m - cfg.bootstrap_m;
        const double slot = usable / cfg.anomalies_per_scan;
        for (int a = 0; a < cfg.anomalies_per_scan; ++a) {
            const ObjectKind kind = cfg.kinds[(s + a) % cfg.kinds.size()];
            const double lo = cfg.bootstrap_m + a * slot + cfg.margin_m / 2.0;
            const double hi = cfg.bootstrap_m + (a + 1) * slot - cfg.margin_m / 2.0;
            scene.objects.push_back(random_anomaly(kind, rng.uniform(lo, hi), cfg, rng));
        }
        const std::vector<std::uint64_t> seeds = {Rng::mix(cfg.seed, 0xC00 + s)};
        SimCorpus rendered = corpus({scene}, seeds);
        bs.scan = sum(background, rendered.scans[0]);
        for (auto& lab : rendered.labels) {
            lab.scan_id = bs.id;
            bs.labels.push_back(lab);
        }
        bench.scans.push_back(std::move(bs));
    }
    return bench;
}

std::vector<BScan> simulated_object_images(const AreaSpec& area, int count, std::uint64_t seed) {
    const std::vector<ObjectKind> kinds = {ObjectKind::Pipe, ObjectKind::WaterPocket,
                                           ObjectKind::Void, ObjectKind::Crack};
    std::vector<BScan> images;
    Rng rng(Rng::mix(seed, 0x51D3));
    const double window_m = 6.0;
    for (int i = 0; i < count; ++i) {
        SceneSpec scene;
        scene.id = "sim_" + std::to_string(i);
        scene.host = area.host;
        scene.host.rel_permittivity = std::max(1.5, area.host.rel_permittivity + rng.uniform(-0.5, 0.5));
        scene.width_m = window_m;
        scene.time_window_ns = area.time_window_ns;
        scene.dt_ns = area.dt_ns;
        scene.dx_m = area.dx_m;
        scene.source_freq_mhz = area.source_freq_mhz;
        scene.noise_sigma = 0.0;
        BenchmarkConfig probe;
        probe.area = area;
        BuriedObject o = random_anomaly(kinds[i % kinds.size()],
                                        window_m / 2.0 + rng.uniform(-0.8, 0.8), probe, rng);
        scene.objects.push_back(o);
        images.push_back(render(scene, Rng::mix(seed, 0xD00 + static_cast<std::uint64_t>(i))));
    }
    return images;
}

TrainingCorpus generic_pretrain_corpus(const AreaSpec& grid, int per_class, std::uint64_t seed) {
    TrainingCorpus corpus;
    Rng rng(Rng::mix(seed, 0x6E0E));
    const std::vector<ObjectKind> kinds = {ObjectKind::Pipe, ObjectKind::WaterPocket,
                                           ObjectKind::Void, ObjectKind::Crack, ObjectKind::Rock};
    // varied host permittivities: dry soil, asphalt, cement, moist soil
    const double hosts[][2] = {{3.0, 3.0}, {3.0, 5.0}, {4.0, 6.0}, {8.0, 14.0}};
    const double window_m = 6.0;
    for (int i = 0; i < 2 * per_class; ++i) {
        const int cls = i % 2;
        SceneSpec scene;
        scene.id = "gen_" + std::to_string(i);
        const auto& hr = hosts[rng.uniform_int(0, 3)];
        scene.host = {"generic", rng.uniform(hr[0], hr[1]), 0.0};
        scene.width_m = window_m;
        scene.time_window_ns = grid.time_window_ns;
        scene.dt_ns = grid.dt_ns;
        scene.dx_m = grid.dx_m;
        scene.source_freq_mhz = grid.source_freq_mhz;
        scene.noise_sigma = 0.004 * rng.uniform(0.5, 2.0);
        if (cls == 1) {
            BenchmarkConfig probe;
            probe.area = grid;
            probe.area.host = scene.host;
            scene.objects.push_back(random_anomaly(kinds[(i / 2) % kinds.size()],
                                                   window_m / 2.0 + rng.uniform(-0.8, 0.8), probe,
                                                   rng));
        }
        BScan img = render(scene, Rng::mix(seed, 0xE00 + static_cast<std::uint64_t>(i)));
        corpus.images.push_back(std::move(img));
        corpus.labels.push_back(cls);
        corpus.manifest.push_back(std::string("{\"class\":") + std::to_string(cls) + "}");
    }
    return corpus;
}

std::vector<BScan> sample_normal_windows(const BScan& preprocessed, int count, int window_width,
                                         int section_cols, std::uint64_t seed) {
    if (section_cols > preprocessed.cols)
        throw std::invalid_argument("sample_normal_windows: section exceeds the scan");
    if (section_cols < window_width)
        throw std::invalid_argument("sample_normal_windows: section narrower than the window");
    std::vector<BScan> out;
    Rng rng(Rng::mix(seed, 0x4A11));
    for (int i = 0; i < count; ++i) {
        const int start = rng.uniform_int(0, section_cols - window_width);
        out.push_back(extract(preprocessed, Window{"normal", start, window_width}));
    }
    return out;
}

}  // namespace gpr
