#ifndef GPR_SYNTHBENCH_HPP
#define GPR_SYNTHBENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gpr/augment.hpp"
#include "gpr/bscan.hpp"
#include "gpr/simulate.hpp"

namespace gpr {

// Synthetic stand-in for the survey area's own radargram character. Real
// deployments start from a normal section recorded on site; at desk scale
// that section is synthesized as gently undulating stratigraphy (layer
// interfaces that survive mean-trace background removal) plus noise.
struct AreaSpec {
    std::string id = "area";
    MaterialSpec host{"cement", 5.0, 0.0};
    double width_m = 100.0;
    double time_window_ns = 50.0;
    double dt_ns = 0.2;
    double dx_m = 0.02;
    double source_freq_mhz = 500.0;
    int n_layers = 4;
    double layer_depth_min_m = 0.25;
    double layer_depth_max_m = 1.6;
    double layer_amp = 0.035;         // reflected amplitude per interface
    double layer_undulation_m = 0.08; // vertical wobble of each interface
    double layer_wavelength_m = 17.0; // horizontal wobble period
    double noise_sigma = 0.004;
    std::uint64_t seed = 99;
};

// Layered background only; anomaly echoes are rendered separately and
// added on top (the forward model is linear).
BScan render_area_background(const AreaSpec& area);

// One benchmark road: area background + planted anomalies, with labels
// covering only the anomalies.
struct BenchScan {
    std::string id;
    BScan scan;
    std::vector<ScanLabel> labels;
};

struct BenchmarkConfig {
    int n_scans = 6;
    int anomalies_per_scan = 4;
    double bootstrap_m = 62.0; // anomalies are planted beyond this position
    double margin_m = 4.0;     // gap to scan end and between anomalies
    std::vector<ObjectKind> kinds = {ObjectKind::Pipe, ObjectKind::WaterPocket};
    double depth_min_m = 0.35, depth_max_m = 0.9;
    std::uint64_t seed = 1234;
    AreaSpec area;
};

struct Benchmark {
    std::vector<BenchScan> scans;
    AreaSpec area;
};

// Deterministic six-road benchmark over one area. Anomaly positions,
// kinds, sizes and depths are drawn from the config seed.
Benchmark build_benchmark(const BenchmarkConfig& cfg);

// Simulated single-object images on the area's grid, one per entry, the
// counterpart of the external simulator corpus used for fusion. Covers all
// object kinds round-robin.
std::vector<BScan> simulated_object_images(const AreaSpec& area, int count, std::uint64_t seed);

// Unfused corpus over varied host materials for generic pretraining:
// class 0 = object-free noise scenes, class 1 = scenes with one object.
TrainingCorpus generic_pretrain_corpus(const AreaSpec& grid, int per_class, std::uint64_t seed);

// Random window bases (duplications allowed) from the leading normal
// section of a preprocessed area scan.
std::vector<BScan> sample_normal_windows(const BScan& preprocessed, int count, int window_width,
                                         int section_cols, std::uint64_t seed);

}  // namespace gpr

#endif
