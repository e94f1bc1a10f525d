#include "gpr/simulate.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gpr/parallel.hpp"
#include "gpr/rng.hpp"

namespace gpr {

namespace {
constexpr double kC_m_per_ns = 0.2998; // free-space EM speed
constexpr double kPi = 3.14159265358979323846;
}

bool MaterialSpec::is_metal() const { return std::isinf(rel_permittivity); }

const char* kind_name(ObjectKind k) {
    switch (k) {
        case ObjectKind::Pipe: return "pipe";
        case ObjectKind::Void: return "void";
        case ObjectKind::Crack: return "crack";
        case ObjectKind::WaterPocket: return "water_pocket";
        case ObjectKind::Rock: return "rock";
    }
    return "unknown";
}

ObjectKind kind_from_name(const std::string& name) {
    if (name == "pipe") return ObjectKind::Pipe;
    if (name == "void") return ObjectKind::Void;
    if (name == "crack") return ObjectKind::Crack;
    if (name == "water_pocket") return ObjectKind::WaterPocket;
    if (name == "rock") return ObjectKind::Rock;
    throw std::invalid_argument("unknown object kind '" + name + "'");
}

double ricker(double t_ns, double f_mhz) {
    if (!(f_mhz > 0.0)) throw std::invalid_argument("ricker: frequency must be > 0");
    const double ft = f_mhz * t_ns * 1e-3; // dimensionless (MHz * ns = 1e-3)
    const double a = kPi * kPi * ft * ft;
    return (1.0 - 2.0 * a) * std::exp(-a);
}

double two_way_time_ns(const BuriedObject& obj, double x_m, const MaterialSpec& host) {
    if (!(host.rel_permittivity >= 1.0) || std::isinf(host.rel_permittivity))
        throw std::invalid_argument("two_way_time: host permittivity must be finite and >= 1");
    const double v = kC_m_per_ns / std::sqrt(host.rel_permittivity);
    const double dx = x_m - obj.center_x_m;
    return 2.0 * std::sqrt(obj.depth_m * obj.depth_m + dx * dx) / v;
}

namespace {

double object_half_extent(const BuriedObject& o) {
    switch (o.kind) {
        case ObjectKind::Pipe:
        case ObjectKind::Rock:
            return 0.0; // compact scatterer
        default:
            return o.size_m;
    }
}

void validate_object(const SceneSpec& s, const BuriedObject& o, std::size_t idx) {
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("invalid scene '" + s.id + "': object #" + std::to_string(idx) +
                                    " (" + kind_name(o.kind) + ") " + why);
    };
    if (!(o.depth_m > 0.0)) fail("must have depth > 0");
    if (!(o.size_m > 0.0)) fail("must have size > 0");
    const double he = object_half_extent(o);
    if (o.center_x_m - he < 0.0 || o.center_x_m + he > s.width_m)
        fail("lies outside the scene width");
    const double apex = 2.0 * o.depth_m * std::sqrt(s.host.rel_permittivity) / kC_m_per_ns;
    if (apex > s.time_window_ns) fail("is too deep for the time window");
}

}  // namespace

void validate(const SceneSpec& scene) {
    if (!(scene.width_m > 0.0) || !(scene.time_window_ns > 0.0))
        throw std::invalid_argument("invalid scene '" + scene.id + "': non-positive extent");
    if (!(scene.dt_ns > 0.0) || !(scene.dx_m > 0.0))
        throw std::invalid_argument("invalid scene '" + scene.id + "': non-positive sampling");
    if (!(scene.source_freq_mhz > 0.0))
        throw std::invalid_argument("invalid scene '" + scene.id + "': source frequency must be > 0");
    // at least 10 samples per source period
    if (scene.dt_ns > 100.0 / scene.source_freq_mhz)
        throw std::invalid_argument("invalid scene '" + scene.id + "': dt too coarse for " +
                                    std::to_string(scene.source_freq_mhz) + " MHz source (need dt <= " +
                                    std::to_string(100.0 / scene.source_freq_mhz) + " ns)");
    if (!(scene.host.rel_permittivity >= 1.0) || std::isinf(scene.host.rel_permittivity))
        throw std::invalid_argument("invalid scene '" + scene.id + "': host permittivity must be finite and >= 1");
    if (scene.noise_sigma < 0.0)
        throw std::invalid_argument("invalid scene '" + scene.id + "': negative noise sigma");
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        validate_object(scene, scene.objects[i], i);
}

namespace {

struct Scatterer {
    double x_m;
    double depth_m;
    double amp;        // reflectivity factor
    double extra_t_ns; // additional delay (internal bounce)
};

void collect_scatterers(const SceneSpec& s, const BuriedObject& o, std::vector<Scatterer>& out) {
    const double he = object_half_extent(o);
    const double refl = o.material.reflectivity;
    if (he <= 0.0) {
        out.push_back({o.center_x_m, o.depth_m, refl, 0.0});
        return;
    }
    const int n = static_cast<int>(std::floor(2.0 * he / s.dx_m)) + 1;
    for (int i = 0; i < n; ++i) {
        const double x = o.center_x_m - he + i * s.dx_m;
        out.push_back({x, o.depth_m, refl, 0.0});
        if (o.kind == ObjectKind::Void || o.kind == ObjectKind::WaterPocket) {
            // bottom interface: the pulse crosses the object and returns with
            // flipped polarity, delayed by the internal two-way path
            const double er = o.material.is_metal() ? 1.0 : o.material.rel_permittivity;
            const double dt_internal = 2.0 * o.size_m * std::sqrt(er) / kC_m_per_ns;
            out.push_back({x, o.depth_m, -0.7 * refl, dt_internal});
        }
    }
}

}  // namespace

BScan render(const SceneSpec& scene, std::uint64_t seed) {
    validate(scene);
    const int rows = static_cast<int>(std::floor(scene.time_window_ns / scene.dt_ns)) + 1;
    const int cols = static_cast<int>(std::floor(scene.width_m / scene.dx_m)) + 1;
    BScan out = make_scan(rows, cols, scene.dt_ns, scene.dx_m, 0.0);

    std::vector<Scatterer> pts;
    for (const auto& o : scene.objects) collect_scatterers(scene, o, pts);

    // Wavelet support: past ~3 periods the Ricker tail is < 1e-38.
    const double period_ns = 1000.0 / scene.source_freq_mhz;
    const double support_ns = 3.0 * period_ns;

#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (int c = 0; c < cols; ++c) {
        const double x = c * scene.dx_m;
        double* col_base = out.data.data();
        for (const auto& p : pts) {
            const double dxm = x - p.x_m;
            const double v = kC_m_per_ns / std::sqrt(scene.host.rel_permittivity);
            const double t0 = 2.0 * std::sqrt(p.depth_m * p.depth_m + dxm * dxm) / v + p.extra_t_ns;
            const double spread = 1.0 / std::max(t0, scene.dt_ns);
            const int r_lo = std::max(0, static_cast<int>(std::ceil((t0 - support_ns) / scene.dt_ns)));
            const int r_hi = std::min(rows - 1, static_cast<int>(std::floor((t0 + support_ns) / scene.dt_ns)));
            for (int r = r_lo; r <= r_hi; ++r) {
                const double t = r * scene.dt_ns;
                col_base[static_cast<std::size_t>(r) * cols + c] +=
                    p.amp * spread * ricker(t - t0, scene.source_freq_mhz);
            }
        }
    }

    if (scene.noise_sigma > 0.0) {
        Rng rng(seed);
        for (double& v : out.data) v += rng.normal(0.0, scene.noise_sigma);
    }
    return out;
}

SimCorpus corpus(const std::vector<SceneSpec>& scenes, const std::vector<std::uint64_t>& seeds) {
    if (scenes.empty()) throw std::invalid_argument("corpus: no scenes given");
    if (seeds.size() != scenes.size())
        throw std::invalid_argument("corpus: need one seed per scene");
    SimCorpus out;
    out.scans.resize(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        out.scans[i] = render(scenes[i], seeds[i]);
        const std::string id = scenes[i].id.empty() ? "scene_" + std::to_string(i) : scenes[i].id;
        out.scan_ids.push_back(id);
        for (const auto& o : scenes[i].objects) {
            const double he = std::max(object_half_extent(o), o.size_m);
            ScanLabel lab;
            lab.scan_id = id;
            lab.kind = o.kind;
            lab.col_start = std::max(0, static_cast<int>(std::floor((o.center_x_m - he) / scenes[i].dx_m)));
            lab.col_end = std::min(out.scans[i].cols,
                                   static_cast<int>(std::ceil((o.center_x_m + he) / scenes[i].dx_m)) + 1);
            out.labels.push_back(lab);
        }
    }
    return out;
}

namespace {

using nlohmann::json;

MaterialSpec material_from_json(const json& j) {
    MaterialSpec m;
    m.name = j.value("name", "");
    const auto& p = j.at("rel_permittivity");
    if (p.is_string()) {
        if (p.get<std::string>() != "inf")
            throw std::invalid_argument("material permittivity string must be \"inf\"");
        m.rel_permittivity = std::numeric_limits<double>::infinity();
    } else {
        m.rel_permittivity = p.get<double>();
    }
    m.reflectivity = j.at("reflectivity").get<double>();
    if (m.is_metal() && std::fabs(std::fabs(m.reflectivity) - 1.0) > 1e-12)
        throw std::invalid_argument("metal material must have |reflectivity| = 1");
    if (!m.is_metal() && !(m.rel_permittivity >= 1.0))
        throw std::invalid_argument("dielectric permittivity must be >= 1");
    if (std::fabs(m.reflectivity) > 1.0)
        throw std::invalid_argument("reflectivity must lie in [-1, 1]");
    return m;
}

json material_to_json(const MaterialSpec& m) {
    json j;
    j["name"] = m.name;
    if (m.is_metal())
        j["rel_permittivity"] = "inf";
    else
        j["rel_permittivity"] = m.rel_permittivity;
    j["reflectivity"] = m.reflectivity;
    return j;
}

}  // namespace

SceneSpec scene_from_json_text(const std::string& text) {
    json j = json::parse(text);
    SceneSpec s;
    s.id = j.value("id", "");
    s.host = material_from_json(j.at("host"));
    s.width_m = j.at("width_m").get<double>();
    s.time_window_ns = j.at("time_window_ns").get<double>();
    s.dt_ns = j.at("dt_ns").get<double>();
    s.dx_m = j.at("dx_m").get<double>();
    s.source_freq_mhz = j.at("source_freq_mhz").get<double>();
    s.noise_sigma = j.value("noise_sigma", 0.0);
    for (const auto& jo : j.value("objects", json::array())) {
        BuriedObject o;
        o.kind = kind_from_name(jo.at("kind").get<std::string>());
        o.center_x_m = jo.at("center_x_m").get<double>();
        o.depth_m = jo.at("depth_m").get<double>();
        o.size_m = jo.at("size_m").get<double>();
        o.material = material_from_json(jo.at("material"));
        s.objects.push_back(o);
    }
    validate(s);
    return s;
}

std::string scene_to_json_text(const SceneSpec& s) {
    json j;
    j["id"] = s.id;
    j["host"] = material_to_json(s.host);
    j["width_m"] = s.width_m;
    j["time_window_ns"] = s.time_window_ns;
    j["dt_ns"] = s.dt_ns;
    j["dx_m"] = s.dx_m;
    j["source_freq_mhz"] = s.source_freq_mhz;
    j["noise_sigma"] = s.noise_sigma;
    json arr = json::array();
    for (const auto& o : s.objects) {
        json jo;
        jo["kind"] = kind_name(o.kind);
        jo["center_x_m"] = o.center_x_m;
        jo["depth_m"] = o.depth_m;
        jo["size_m"] = o.size_m;
        jo["material"] = material_to_json(o.material);
        arr.push_back(jo);
    }
    j["objects"] = arr;
    return j.dump(2);
}

SceneSpec load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json_text(ss.str());
}

void save_scene(const SceneSpec& scene, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write scene file '" + path + "'");
    out << scene_to_json_text(scene) << "\n";
}

void write_labels_jsonl(const std::vector<ScanLabel>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write labels file '" + path + "'");
    for (const auto& l : labels) {
        json j;
        j["scan_id"] = l.scan_id;
        j["object_kind"] = kind_name(l.kind);
        j["col_start"] = l.col_start;
        j["col_end"] = l.col_end;
        out << j.dump() << "\n";
    }
}

std::vector<ScanLabel> read_labels_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labels file '" + path + "'");
    std::vector<ScanLabel> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ScanLabel l;
        l.scan_id = j.at("scan_id").get<std::string>();
        l.kind = kind_from_name(j.at("object_kind").get<std::string>());
        l.col_start = j.at("col_start").get<int>();
        l.col_end = j.at("col_end").get<int>();
        labels.push_back(l);
    }
    return labels;
}

}  // namespace gpr
