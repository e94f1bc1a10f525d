#ifndef GPR_BSCAN_HPP
#define GPR_BSCAN_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gpr {

// Thrown by the binary readers when a file does not match its format.
// `offset` is the byte position of the first offending byte.
struct FormatError : std::runtime_error {
    std::size_t offset;
    FormatError(const std::string& msg, std::size_t off)
        : std::runtime_error(msg + " (byte offset " + std::to_string(off) + ")"), offset(off) {}
};

// A B-scan radargram: rows are two-way-time samples, columns are traces
// (antenna positions). Amplitudes are kept as doubles in memory; the GSF
// file format stores them as f32. Scans are treated as immutable once
// built, so every operation below returns a new value.
struct BScan {
    int rows = 0;
    int cols = 0;
    double dt_ns = 1.0;      // sample interval
    double dx_m = 0.02;      // trace spacing
    double origin_x_m = 0.0; // position of the first trace
    std::vector<double> data; // row-major rows*cols

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    std::size_t size() const { return data.size(); }
};

// Zero-filled scan with validated geometry.
BScan make_scan(int rows, int cols, double dt_ns, double dx_ns, double origin_x_m = 0.0);

// Enforces the type invariants: rows,cols >= 1, dt,dx > 0, all finite.
// Throws std::invalid_argument.
void validate(const BScan& scan);

// One sliding-window position: all rows, columns [col_start, col_start+width).
struct Window {
    std::string scan_ref;
    int col_start = 0;
    int width = 300;
};

struct GrayImage {
    int rows = 0;
    int cols = 0;
    std::vector<double> pixels; // in [0,1], row-major
};

// Affine map of amplitudes onto [0,1]: clamp to [lo,hi], then scale.
GrayImage to_gray(const BScan& scan, double lo, double hi);
// Default clipping bounds: 1st/99th amplitude percentiles of the scan.
GrayImage to_gray(const BScan& scan);

// Nearest-rank percentiles of the amplitude distribution, q in [0,100].
std::pair<double, double> amplitude_percentiles(const BScan& scan, double q_lo, double q_hi);

// Column slice; no resampling, amplitudes are copied verbatim.
// Throws std::out_of_range when the window does not fit.
BScan extract(const BScan& scan, const Window& w);

// GSF container, bit-exact: magic "GSF1", LE u32 rows, u32 cols,
// f64 dt_ns, f64 dx_m, f64 origin_x_m, then rows*cols LE f32 row-major.
BScan read_scan(const std::string& path);
void write_scan(const BScan& scan, const std::string& path);

// Binary 8-bit PGM (P5) export of a gray image.
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_pgm(const std::string& path);

// Bilinear resample to a new grid. dt/dx are rescaled so the physical
// extent is preserved.
BScan resize_bilinear(const BScan& scan, int out_rows, int out_cols);

// Elementwise sum of two scans on the same grid (linear composition).
BScan sum(const BScan& a, const BScan& b);

}  // namespace gpr

#endif
