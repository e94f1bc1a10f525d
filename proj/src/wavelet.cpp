#include "gpr/wavelet.hpp"

#include <cmath>
#include <cstring>

#include "gpr/parallel.hpp"

namespace gpr {

Db2Filter Db2Filter::make() {
    const double s3 = std::sqrt(3.0);
    const double inv = 1.0 / (4.0 * std::sqrt(2.0));
    Db2Filter f;
    f.lowpass = {(1.0 + s3) * inv, (3.0 + s3) * inv, (3.0 - s3) * inv, (1.0 - s3) * inv};
    for (int k = 0; k < 4; ++k)
        f.highpass[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lowpass[3 - k];
    return f;
}

namespace {

const Db2Filter& filt() {
    static const Db2Filter f = Db2Filter::make();
    return f;
}

// Analysis of one even-length signal: a[m] = sum_k h[k] x[(2m+k) mod n].
void dwt1d(const double* x, int n, double* a, double* d) {
    const auto& h = filt().lowpass;
    const auto& g = filt().highpass;
    const int half = n / 2;
    for (int m = 0; m < half; ++m) {
        const int i = 2 * m;
        const int i1 = (i + 1) % n, i2 = (i + 2) % n, i3 = (i + 3) % n;
        const double x0 = x[i], x1 = x[i1], x2 = x[i2], x3 = x[i3];
        a[m] = h[0] * x0 + h[1] * x1 + h[2] * x2 + h[3] * x3;
        d[m] = g[0] * x0 + g[1] * x1 + g[2] * x2 + g[3] * x3;
    }
}

// Exact inverse via the transposed circulant: even and odd outputs gather
// taps {0,2} and {1,3} respectively.
void idwt1d(const double* a, const double* d, int n, double* x) {
    const auto& h = filt().lowpass;
    const auto& g = filt().highpass;
    const int half = n / 2;
    for (int m = 0; m < half; ++m) {
        const int i = 2 * m;
        const int mprev = (m + half - 1) % half;
        x[i] = h[0] * a[m] + g[0] * d[m] + h[2] * a[mprev] + g[2] * d[mprev];
        x[i + 1] = h[1] * a[m] + g[1] * d[m] + h[3] * a[mprev] + g[3] * d[mprev];
    }
}

// Copies src (length n) and, when n is odd, appends the whole-point
// symmetric sample src[n-2].
inline int pad_even(const double* src, int n, int stride, double* dst) {
    for (int i = 0; i < n; ++i) dst[i] = src[static_cast<std::size_t>(i) * stride];
    if (n % 2 == 1) {
        dst[n] = src[static_cast<std::size_t>(n - 2) * stride];
        return n + 1;
    }
    return n;
}

}  // namespace

WaveletPyramid dwt2(const BScan& image) {
    const int rows = image.rows, cols = image.cols;
    if (rows < 4 || cols < 4)
        throw std::invalid_argument("dwt2: image must be at least 4x4 (db2 support)");
    WaveletPyramid p;
    p.src_rows = rows;
    p.src_cols = cols;
    p.band_rows = (rows + 1) / 2;
    p.band_cols = (cols + 1) / 2;
    p.dt_ns = image.dt_ns;
    p.dx_m = image.dx_m;
    p.origin_x_m = image.origin_x_m;
    const int br = p.band_rows, bc = p.band_cols;

    // stage 1: split each row into horizontal low/high halves
    std::vector<double> lo(static_cast<std::size_t>(rows) * bc);
    std::vector<double> hi(static_cast<std::size_t>(rows) * bc);
#pragma omp parallel num_threads(par::threads())
    {
        std::vector<double> buf(cols + 1);
#pragma omp for schedule(static)
        for (int r = 0; r < rows; ++r) {
            const int n = pad_even(image.row(r), cols, 1, buf.data());
            dwt1d(buf.data(), n, &lo[static_cast<std::size_t>(r) * bc],
                  &hi[static_cast<std::size_t>(r) * bc]);
        }
    }

    // stage 2: split each column of L and H vertically
    p.ll.resize(static_cast<std::size_t>(br) * bc);
    p.lh.resize(static_cast<std::size_t>(br) * bc);
    p.hl.resize(static_cast<std::size_t>(br) * bc);
    p.hh.resize(static_cast<std::size_t>(br) * bc);
#pragma omp parallel num_threads(par::threads())
    {
        std::vector<double> buf(rows + 1), band_a(br), band_d(br);
#pragma omp for schedule(static)
        for (int c = 0; c < bc; ++c) {
            int n = pad_even(&lo[c], rows, bc, buf.data());
            dwt1d(buf.data(), n, band_a.data(), band_d.data());
            for (int m = 0; m < br; ++m) {
                p.ll[static_cast<std::size_t>(m) * bc + c] = band_a[m];
                p.lh[static_cast<std::size_t>(m) * bc + c] = band_d[m];
            }
            n = pad_even(&hi[c], rows, bc, buf.data());
            dwt1d(buf.data(), n, band_a.data(), band_d.data());
            for (int m = 0; m < br; ++m) {
                p.hl[static_cast<std::size_t>(m) * bc + c] = band_a[m];
                p.hh[static_cast<std::size_t>(m) * bc + c] = band_d[m];
            }
        }
    }
    return p;
}

namespace {

void check_pyramid(const WaveletPyramid& p) {
    const std::size_t n = static_cast<std::size_t>(p.band_rows) * p.band_cols;
    if (p.band_rows < 2 || p.band_cols < 2 || p.ll.size() != n || p.lh.size() != n ||
        p.hl.size() != n || p.hh.size() != n)
        throw std::invalid_argument("wavelet: malformed pyramid");
    if (p.band_rows != (p.src_rows + 1) / 2 || p.band_cols != (p.src_cols + 1) / 2)
        throw std::invalid_argument("wavelet: pyramid band size inconsistent with source size");
}

}  // namespace

BScan idwt2(const WaveletPyramid& p) {
    check_pyramid(p);
    const int rows = p.src_rows, cols = p.src_cols;
    const int br = p.band_rows, bc = p.band_cols;
    const int pr = 2 * br; // padded column length

    // stage 2 inverse: rebuild L and H columns
    std::vector<double> lo(static_cast<std::size_t>(rows) * bc);
    std::vector<double> hi(static_cast<std::size_t>(rows) * bc);
#pragma omp parallel num_threads(par::threads())
    {
        std::vector<double> band_a(br), band_d(br), col(pr);
#pragma omp for schedule(static)
        for (int c = 0; c < bc; ++c) {
            for (int m = 0; m < br; ++m) {
                band_a[m] = p.ll[static_cast<std::size_t>(m) * bc + c];
                band_d[m] = p.lh[static_cast<std::size_t>(m) * bc + c];
            }
            idwt1d(band_a.data(), band_d.data(), pr, col.data());
            for (int r = 0; r < rows; ++r) lo[static_cast<std::size_t>(r) * bc + c] = col[r];
            for (int m = 0; m < br; ++m) {
                band_a[m] = p.hl[static_cast<std::size_t>(m) * bc + c];
                band_d[m] = p.hh[static_cast<std::size_t>(m) * bc + c];
            }
            idwt1d(band_a.data(), band_d.data(), pr, col.data());
            for (int r = 0; r < rows; ++r) hi[static_cast<std::size_t>(r) * bc + c] = col[r];
        }
    }

    // stage 1 inverse: rebuild each row from its horizontal halves
    BScan out = make_scan(rows, cols, p.dt_ns, p.dx_m, p.origin_x_m);
    const int pc = 2 * bc;
#pragma omp parallel num_threads(par::threads())
    {
        std::vector<double> rowbuf(pc);
#pragma omp for schedule(static)
        for (int r = 0; r < rows; ++r) {
            idwt1d(&lo[static_cast<std::size_t>(r) * bc], &hi[static_cast<std::size_t>(r) * bc],
                   pc, rowbuf.data());
            std::memcpy(out.row(r), rowbuf.data(), sizeof(double) * cols);
        }
    }
    return out;
}

WaveletPyramid merge(const WaveletPyramid& pa, const WaveletPyramid& pb, DetailMerge mode) {
    check_pyramid(pa);
    check_pyramid(pb);
    if (pa.band_rows != pb.band_rows || pa.band_cols != pb.band_cols ||
        pa.src_rows != pb.src_rows || pa.src_cols != pb.src_cols)
        throw std::invalid_argument("merge: pyramid shape mismatch");
    WaveletPyramid out = pa;
    const std::size_t n = pa.ll.size();
    for (std::size_t i = 0; i < n; ++i) out.ll[i] = std::min(pa.ll[i], pb.ll[i]);
    auto pick = [mode](double a, double b) {
        if (mode == DetailMerge::SignedMax) return std::max(a, b);
        return std::fabs(a) >= std::fabs(b) ? a : b;
    };
    for (std::size_t i = 0; i < n; ++i) out.lh[i] = pick(pa.lh[i], pb.lh[i]);
    for (std::size_t i = 0; i < n; ++i) out.hl[i] = pick(pa.hl[i], pb.hl[i]);
    for (std::size_t i = 0; i < n; ++i) out.hh[i] = pick(pa.hh[i], pb.hh[i]);
    return out;
}

BScan fuse(const BScan& normal, const BScan& simulated, DetailMerge mode) {
    const BScan* sim = &simulated;
    BScan resized;
    if (simulated.rows != normal.rows || simulated.cols != normal.cols) {
        resized = resize_bilinear(simulated, normal.rows, normal.cols);
        sim = &resized;
    }
    WaveletPyramid merged = merge(dwt2(normal), dwt2(*sim), mode);
    BScan out = idwt2(merged);
    out.dt_ns = normal.dt_ns;
    out.dx_m = normal.dx_m;
    out.origin_x_m = normal.origin_x_m;
    return out;
}

}  // namespace gpr
