#ifndef GPR_DETECT_HPP
#define GPR_DETECT_HPP

#include <string>
#include <vector>

#include "gpr/bscan.hpp"
#include "gpr/featnet.hpp"
#include "gpr/oneclass.hpp"
#include "gpr/preprocess.hpp"

namespace gpr {

struct SlideConfig {
    int window_width = 300;
    int step = 10;
    int bootstrap_cols = 3000; // leading section asserted anomaly-free
};

void validate(const SlideConfig& cfg);

// Window start columns: 0, step, 2*step, ... When the last stride does not
// land exactly on cols-width, one extra right-aligned window covers the
// trailing columns (otherwise up to width-step columns are never inspected).
std::vector<int> window_starts(int cols, int width, int step, bool include_tail = true);

// One classified window. class_id 0 is normal, positive ids are spawned
// anomaly classes, -1 marks rejected features that never formed a class
// (reported as unclassified anomalies rather than dropped).
struct Decision {
    Window window;
    int class_id = -1;
    double dist2_class0 = 0.0;
};

struct AnomalyRegion {
    int col_start = 0;
    int col_end = 0; // exclusive
    double meters_start = 0.0;
    double meters_end = 0.0;
    int class_id = -1;
    double score = 0.0; // mean excess of dist2 over the normal-class R^2
    int window_count = 0;
};

// Trains the normal-class SVDD from the leading section of an already
// preprocessed scan. Needs at least 30 bootstrap windows.
ClassBank bootstrap_bank(const BScan& preprocessed, const SlideConfig& cfg,
                         const ConvNet<float>& net, const OneClassParams& params,
                         const std::string& scan_id);

// Swipes the window across the whole scan. Features are extracted in
// parallel; classification and class spawning run sequentially in window
// order (spawning is order-dependent), and decisions absorbed into a class
// spawned later in the sweep are relabeled to that class.
std::vector<Decision> sweep(const BScan& preprocessed, const SlideConfig& cfg,
                            const ConvNet<float>& net, ClassBank& bank,
                            const std::string& scan_id);

// Unions consecutive same-class anomalous windows with overlapping or
// abutting extents. Regions of one class never overlap afterwards.
std::vector<AnomalyRegion> merge_regions(const std::vector<Decision>& decisions,
                                         const BScan& scan, double class0_r2);

struct ScanReport {
    std::string scan_id;
    std::vector<AnomalyRegion> regions;
    int windows_total = 0;
    int windows_normal = 0;
    int windows_anomalous = 0;
    int classes_in_bank = 0;
    int unclassified_buffer = 0;
};

// preprocess -> bootstrap (when the bank has no classes yet) -> sweep ->
// merge. The bank persists across calls so one survey can share classes.
ScanReport detect_scan(const BScan& raw, const PreprocessConfig& pre, const SlideConfig& slide,
                       const OneClassParams& oneclass, const ConvNet<float>& net, ClassBank& bank,
                       const std::string& scan_id);

std::string report_to_json_text(const ScanReport& report);

// Gray overlay with detected regions marked by a black band at the top.
GrayImage region_overlay(const BScan& raw, const std::vector<AnomalyRegion>& regions);

}  // namespace gpr

#endif
