#include "gpr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpr/parallel.hpp"

namespace gpr {

BScan remove_background(const BScan& scan) {
    if (scan.cols < 2)
        throw std::invalid_argument("remove_background: needs >= 2 traces (mean subtraction would zero a single-column scan)");
    BScan out = scan;
    for (int r = 0; r < scan.rows; ++r) {
        const double* src = scan.row(r);
        double mean = 0.0;
        for (int c = 0; c < scan.cols; ++c) mean += src[c];
        mean /= scan.cols;
        double* dst = out.row(r);
        for (int c = 0; c < scan.cols; ++c) dst[c] = src[c] - mean;
    }
    return out;
}

BScan median_filter(const BScan& scan, int k) {
    if (k < 1 || (k % 2) == 0) throw std::invalid_argument("median_filter: kernel size must be odd and >= 1");
    if (k > std::min(scan.rows, scan.cols))
        throw std::invalid_argument("median_filter: kernel larger than scan");
    if (k == 1) return scan;
    BScan out = scan;
    const int h = k / 2;
    const int rows = scan.rows, cols = scan.cols;
#pragma omp parallel num_threads(par::threads())
    {
        std::vector<double> buf(static_cast<std::size_t>(k) * k);
#pragma omp for schedule(static)
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                std::size_t n = 0;
                for (int dr = -h; dr <= h; ++dr) {
                    const int rr = std::clamp(r + dr, 0, rows - 1); // replicate padding
                    const double* src = scan.row(rr);
                    for (int dc = -h; dc <= h; ++dc)
                        buf[n++] = src[std::clamp(c + dc, 0, cols - 1)];
                }
                auto mid = buf.begin() + n / 2;
                std::nth_element(buf.begin(), mid, buf.begin() + n);
                out.at(r, c) = *mid;
            }
        }
    }
    return out;
}

BScan apply_gain(const BScan& scan, const PreprocessConfig& cfg) {
    if (cfg.gain_alpha < 0.0) throw std::invalid_argument("apply_gain: gain_alpha must be >= 0");
    if (cfg.gain_tmax_clip < 1.0) throw std::invalid_argument("apply_gain: gain cap must be >= 1");
    BScan out = scan;
    for (int r = 0; r < scan.rows; ++r) {
        const double t = r * scan.dt_ns;
        const double g = std::min(std::exp(cfg.gain_alpha * t), cfg.gain_tmax_clip);
        double* dst = out.row(r);
        for (int c = 0; c < scan.cols; ++c) dst[c] *= g;
    }
    return out;
}

BScan preprocess(const BScan& scan, const PreprocessConfig& cfg) {
    BScan s = (cfg.background_mode == BackgroundMode::MeanTrace) ? remove_background(scan) : scan;
    s = median_filter(s, cfg.median_kernel);
    return apply_gain(s, cfg);
}

}  // namespace gpr
