#ifndef GPR_SIMULATE_HPP
#define GPR_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gpr/bscan.hpp"

namespace gpr {

// Subsurface medium. Conductive metal is represented by an infinite
// relative permittivity together with |reflectivity| = 1.
struct MaterialSpec {
    std::string name;
    double rel_permittivity = 1.0;
    double reflectivity = 0.0; // scattering strength in [-1, 1]
    bool is_metal() const;
};

enum class ObjectKind { Pipe, Void, Crack, WaterPocket, Rock };

const char* kind_name(ObjectKind k);
ObjectKind kind_from_name(const std::string& name);

struct BuriedObject {
    ObjectKind kind = ObjectKind::Pipe;
    double center_x_m = 0.0;
    double depth_m = 0.5;
    double size_m = 0.1; // characteristic radius / half-length
    MaterialSpec material;
};

// Declarative scene consumed by the kinematic renderer.
struct SceneSpec {
    std::string id;
    MaterialSpec host;
    double width_m = 6.0;
    double time_window_ns = 50.0;
    double dt_ns = 0.2;
    double dx_m = 0.02;
    double source_freq_mhz = 500.0;
    std::vector<BuriedObject> objects;
    double noise_sigma = 0.0;
};

// Ricker wavelet, peak 1 at t=0. f in MHz, t in ns.
double ricker(double t_ns, double f_mhz);

// Two-way travel time of the echo from `obj` seen at antenna position x,
// propagating through the host at v = c/sqrt(eps_r).
double two_way_time_ns(const BuriedObject& obj, double x_m, const MaterialSpec& host);

// Validates the scene; throws std::invalid_argument naming the first
// offending object.
void validate(const SceneSpec& scene);

// Kinematic point-scatterer forward model. Extended objects are
// discretized into scatterers every dx along their horizontal extent;
// amplitudes carry 1/t geometric spreading; voids and water pockets get a
// delayed opposite-sign bottom echo. Deterministic for a given
// (scene, seed); the model is linear in the objects, so rendering a scene
// equals the sum of its per-object renders (noise aside).
BScan render(const SceneSpec& scene, std::uint64_t seed);

struct ScanLabel {
    std::string scan_id;
    ObjectKind kind;
    int col_start = 0;
    int col_end = 0; // exclusive
};

struct SimCorpus {
    std::vector<BScan> scans;
    std::vector<std::string> scan_ids;
    std::vector<ScanLabel> labels;
};

// Renders every scene and collects ground-truth labels (one per object).
SimCorpus corpus(const std::vector<SceneSpec>& scenes, const std::vector<std::uint64_t>& seeds);

// JSON (de)serialization of scene files; schema documented in the README.
SceneSpec scene_from_json_text(const std::string& text);
std::string scene_to_json_text(const SceneSpec& scene);
SceneSpec load_scene(const std::string& path);
void save_scene(const SceneSpec& scene, const std::string& path);

void write_labels_jsonl(const std::vector<ScanLabel>& labels, const std::string& path);
std::vector<ScanLabel> read_labels_jsonl(const std::string& path);

}  // namespace gpr

#endif
