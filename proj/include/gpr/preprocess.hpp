#ifndef GPR_PREPROCESS_HPP
#define GPR_PREPROCESS_HPP

#include "gpr/bscan.hpp"

namespace gpr {

enum class BackgroundMode { MeanTrace, None };

struct PreprocessConfig {
    int median_kernel = 3;        // odd edge length of the median window
    double gain_alpha = 0.025;    // exponential gain rate, 1/ns
    double gain_tmax_clip = 50.0; // gain cap
    BackgroundMode background_mode = BackgroundMode::MeanTrace;
};

// Mean-trace subtraction: every row ends up with zero mean across traces.
// Requires cols >= 2.
BScan remove_background(const BScan& scan);

// k x k median with replicate padding at the edges. k must be odd and
// no larger than min(rows, cols).
BScan median_filter(const BScan& scan, int k);

// Row r (time t = r*dt) is multiplied by g(t) = min(exp(alpha*t), cap).
// g(0) = 1 and g is non-decreasing, so the surface row is untouched.
BScan apply_gain(const BScan& scan, const PreprocessConfig& cfg);

// The fixed conditioning chain: background removal, median filter, gain.
BScan preprocess(const BScan& scan, const PreprocessConfig& cfg);

}  // namespace gpr

#endif
