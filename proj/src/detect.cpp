#include "gpr/detect.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace gpr {

void validate(const SlideConfig& cfg) {
    if (cfg.step < 1) throw std::invalid_argument("slide: step must be >= 1");
    if (cfg.window_width < cfg.step)
        throw std::invalid_argument("slide: window_width must be >= step");
    if (cfg.bootstrap_cols < cfg.window_width)
        throw std::invalid_argument("slide: bootstrap_cols must cover at least one window");
}

std::vector<int> window_starts(int cols, int width, int step, bool include_tail) {
    if (cols < width) throw std::invalid_argument("window_starts: scan narrower than the window");
    std::vector<int> starts;
    const int last = cols - width;
    for (int s = 0; s <= last; s += step) starts.push_back(s);
    if (include_tail && last % step != 0) starts.push_back(last);
    return starts;
}

namespace {

std::vector<BScan> cut_windows(const BScan& scan, const std::vector<int>& starts, int width,
                               const std::string& scan_id) {
    std::vector<BScan> out;
    out.reserve(starts.size());
    for (int s : starts) out.push_back(extract(scan, Window{scan_id, s, width}));
    return out;
}

}  // namespace

ClassBank bootstrap_bank(const BScan& preprocessed, const SlideConfig& cfg,
                         const ConvNet<float>& net, const OneClassParams& params,
                         const std::string& scan_id) {
    validate(cfg);
    if (cfg.bootstrap_cols > preprocessed.cols)
        throw std::invalid_argument("bootstrap: bootstrap_cols exceeds the scan width");
    const std::vector<int> starts =
        window_starts(cfg.bootstrap_cols, cfg.window_width, cfg.step, false);
    if (starts.size() < 30)
        throw std::invalid_argument("bootstrap: needs >= 30 training windows, got " +
                                    std::to_string(starts.size()));
    const std::vector<BScan> windows = cut_windows(preprocessed, starts, cfg.window_width, scan_id);
    const std::vector<FeatureVector> feats = extract(net, windows);
    std::vector<std::vector<double>> xs;
    xs.reserve(feats.size());
    for (const auto& f : feats) xs.push_back(f.values);
    return ClassBank::bootstrap(xs, params);
}

std::vector<Decision> sweep(const BScan& preprocessed, const SlideConfig& cfg,
                            const ConvNet<float>& net, ClassBank& bank,
                            const std::string& scan_id) {
    validate(cfg);
    if (bank.num_classes() < 1) throw std::invalid_argument("sweep: bank has no classifiers");
    const std::vector<int> starts = window_starts(preprocessed.cols, cfg.window_width, cfg.step);
    const std::vector<BScan> windows = cut_windows(preprocessed, starts, cfg.window_width, scan_id);
    const std::vector<FeatureVector> feats = extract(net, windows); // data-parallel

    std::vector<Decision> decisions(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        decisions[i].window = Window{scan_id, starts[i], cfg.window_width};
        decisions[i].dist2_class0 = svdd_distance2(bank.classifier(0), feats[i].values);
        const int cls = bank.classify(feats[i].values);
        decisions[i].class_id = cls;
        if (cls < 0) {
            if (auto ev = bank.absorb(feats[i].values, static_cast<std::int64_t>(i))) {
                for (std::int64_t tag : ev->member_tags)
                    decisions[static_cast<std::size_t>(tag)].class_id = ev->class_id;
            }
        }
    }
    return decisions;
}

std::vector<AnomalyRegion> merge_regions(const std::vector<Decision>& decisions,
                                         const BScan& scan, double class0_r2) {
    std::vector<AnomalyRegion> regions;
    AnomalyRegion cur;
    double excess_sum = 0.0;
    bool open = false;
    auto close = [&]() {
        if (!open) return;
        cur.score = excess_sum / cur.window_count;
        cur.meters_start = scan.origin_x_m + cur.col_start * scan.dx_m;
        cur.meters_end = scan.origin_x_m + cur.col_end * scan.dx_m;
        regions.push_back(cur);
        open = false;
    };
    for (const auto& d : decisions) {
        if (d.class_id == 0) {
            close();
            continue;
        }
        const int w_start = d.window.col_start;
        const int w_end = d.window.col_start + d.window.width;
        if (open && d.class_id == cur.class_id && w_start <= cur.col_end) {
            cur.col_end = std::max(cur.col_end, w_end);
            ++cur.window_count;
            excess_sum += d.dist2_class0 - class0_r2;
        } else {
            close();
            cur = AnomalyRegion{};
            cur.col_start = w_start;
            cur.col_end = w_end;
            cur.class_id = d.class_id;
            cur.window_count = 1;
            excess_sum = d.dist2_class0 - class0_r2;
            open = true;
        }
    }
    close();
    return regions;
}

ScanReport detect_scan(const BScan& raw, const PreprocessConfig& pre, const SlideConfig& slide,
                       const OneClassParams& oneclass, const ConvNet<float>& net, ClassBank& bank,
                       const std::string& scan_id) {
    const BScan conditioned = preprocess(raw, pre);
    if (bank.num_classes() == 0)
        bank = bootstrap_bank(conditioned, slide, net, oneclass, scan_id);
    const std::vector<Decision> decisions = sweep(conditioned, slide, net, bank, scan_id);
    ScanReport rep;
    rep.scan_id = scan_id;
    rep.regions = merge_regions(decisions, raw, bank.classifier(0).r_squared);
    rep.windows_total = static_cast<int>(decisions.size());
    for (const auto& d : decisions)
        if (d.class_id == 0)
            ++rep.windows_normal;
        else
            ++rep.windows_anomalous;
    rep.classes_in_bank = bank.num_classes();
    rep.unclassified_buffer = static_cast<int>(bank.buffer_size());
    return rep;
}

std::string report_to_json_text(const ScanReport& report) {
    nlohmann::json j;
    j["scan_id"] = report.scan_id;
    j["windows"] = {{"total", report.windows_total},
                    {"normal", report.windows_normal},
                    {"anomalous", report.windows_anomalous}};
    j["bank_summary"] = {{"classes", report.classes_in_bank},
                         {"unclassified_buffer", report.unclassified_buffer}};
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : report.regions) {
        nlohmann::json jr;
        jr["col_start"] = r.col_start;
        jr["col_end"] = r.col_end;
        jr["meters_start"] = r.meters_start;
        jr["meters_end"] = r.meters_end;
        jr["class_id"] = r.class_id;
        jr["score"] = r.score;
        jr["window_count"] = r.window_count;
        regions.push_back(jr);
    }
    j["regions"] = regions;
    return j.dump(2);
}

GrayImage region_overlay(const BScan& raw, const std::vector<AnomalyRegion>& regions) {
    GrayImage g = to_gray(raw);
    const int band = std::max(1, raw.rows / 20);
    for (const auto& r : regions)
        for (int row = 0; row < band; ++row)
            for (int c = std::max(0, r.col_start); c < std::min(raw.cols, r.col_end); ++c)
                g.pixels[static_cast<std::size_t>(row) * g.cols + c] = 0.0;
    return g;
}

}  // namespace gpr
