#include "gpr/reference.hpp"

#include <algorithm>
#include <cmath>

namespace gpr::ref {

BScan median_filter(const BScan& scan, int k) {
    if (k < 1 || (k % 2) == 0) throw std::invalid_argument("median_filter: kernel size must be odd and >= 1");
    if (k > std::min(scan.rows, scan.cols))
        throw std::invalid_argument("median_filter: kernel larger than scan");
    BScan out = scan;
    const int h = k / 2;
    std::vector<double> buf;
    for (int r = 0; r < scan.rows; ++r) {
        for (int c = 0; c < scan.cols; ++c) {
            buf.clear();
            for (int dr = -h; dr <= h; ++dr)
                for (int dc = -h; dc <= h; ++dc)
                    buf.push_back(scan.at(std::clamp(r + dr, 0, scan.rows - 1),
                                          std::clamp(c + dc, 0, scan.cols - 1)));
            std::sort(buf.begin(), buf.end());
            out.at(r, c) = buf[buf.size() / 2];
        }
    }
    return out;
}

namespace {

// Whole-point-symmetric pad to even length, then periodized db2 split.
std::pair<std::vector<double>, std::vector<double>> split1d(const std::vector<double>& x) {
    static const Db2Filter f = Db2Filter::make();
    std::vector<double> v = x;
    if (v.size() % 2 == 1) v.push_back(v[v.size() - 2]);
    const int n = static_cast<int>(v.size());
    std::vector<double> a(n / 2), d(n / 2);
    for (int m = 0; m < n / 2; ++m) {
        double sa = 0.0, sd = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double xv = v[(2 * m + k) % n];
            sa += f.lowpass[k] * xv;
            sd += f.highpass[k] * xv;
        }
        a[m] = sa;
        d[m] = sd;
    }
    return {a, d};
}

std::vector<double> join1d(const std::vector<double>& a, const std::vector<double>& d, int out_len) {
    static const Db2Filter f = Db2Filter::make();
    const int n = 2 * static_cast<int>(a.size());
    std::vector<double> x(n, 0.0);
    for (int m = 0; m < n / 2; ++m) {
        for (int k = 0; k < 4; ++k) {
            const int i = (2 * m + k) % n;
            x[i] += f.lowpass[k] * a[m] + f.highpass[k] * d[m];
        }
    }
    x.resize(out_len);
    return x;
}

std::vector<double> get_col(const std::vector<double>& m, int rows, int cols, int c) {
    std::vector<double> v(rows);
    for (int r = 0; r < rows; ++r) v[r] = m[static_cast<std::size_t>(r) * cols + c];
    return v;
}

}  // namespace

WaveletPyramid dwt2(const BScan& image) {
    if (image.rows < 4 || image.cols < 4)
        throw std::invalid_argument("dwt2: image must be at least 4x4 (db2 support)");
    WaveletPyramid p;
    p.src_rows = image.rows;
    p.src_cols = image.cols;
    p.band_rows = (image.rows + 1) / 2;
    p.band_cols = (image.cols + 1) / 2;
    p.dt_ns = image.dt_ns;
    p.dx_m = image.dx_m;
    p.origin_x_m = image.origin_x_m;
    const int br = p.band_rows, bc = p.band_cols;
    std::vector<double> lo(static_cast<std::size_t>(image.rows) * bc);
    std::vector<double> hi(lo.size());
    for (int r = 0; r < image.rows; ++r) {
        std::vector<double> rowv(image.row(r), image.row(r) + image.cols);
        auto [a, d] = split1d(rowv);
        for (int c = 0; c < bc; ++c) {
            lo[static_cast<std::size_t>(r) * bc + c] = a[c];
            hi[static_cast<std::size_t>(r) * bc + c] = d[c];
        }
    }
    p.ll.resize(static_cast<std::size_t>(br) * bc);
    p.lh.resize(p.ll.size());
    p.hl.resize(p.ll.size());
    p.hh.resize(p.ll.size());
    for (int c = 0; c < bc; ++c) {
        auto [la, ld] = split1d(get_col(lo, image.rows, bc, c));
        auto [ha, hd] = split1d(get_col(hi, image.rows, bc, c));
        for (int r = 0; r < br; ++r) {
            p.ll[static_cast<std::size_t>(r) * bc + c] = la[r];
            p.lh[static_cast<std::size_t>(r) * bc + c] = ld[r];
            p.hl[static_cast<std::size_t>(r) * bc + c] = ha[r];
            p.hh[static_cast<std::size_t>(r) * bc + c] = hd[r];
        }
    }
    return p;
}

BScan idwt2(const WaveletPyramid& p) {
    const int rows = p.src_rows, cols = p.src_cols;
    const int br = p.band_rows, bc = p.band_cols;
    std::vector<double> lo(static_cast<std::size_t>(rows) * bc);
    std::vector<double> hi(lo.size());
    for (int c = 0; c < bc; ++c) {
        auto lcol = join1d(get_col(p.ll, br, bc, c), get_col(p.lh, br, bc, c), rows);
        auto hcol = join1d(get_col(p.hl, br, bc, c), get_col(p.hh, br, bc, c), rows);
        for (int r = 0; r < rows; ++r) {
            lo[static_cast<std::size_t>(r) * bc + c] = lcol[r];
            hi[static_cast<std::size_t>(r) * bc + c] = hcol[r];
        }
    }
    BScan out = make_scan(rows, cols, p.dt_ns, p.dx_m, p.origin_x_m);
    for (int r = 0; r < rows; ++r) {
        std::vector<double> a(bc), d(bc);
        for (int c = 0; c < bc; ++c) {
            a[c] = lo[static_cast<std::size_t>(r) * bc + c];
            d[c] = hi[static_cast<std::size_t>(r) * bc + c];
        }
        auto rowv = join1d(a, d, cols);
        for (int c = 0; c < cols; ++c) out.at(r, c) = rowv[c];
    }
    return out;
}

std::vector<double> gram_rbf(const std::vector<std::vector<double>>& x, double gamma) {
    const std::size_t n = x.size();
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t t = 0; t < x[i].size(); ++t) {
                const double d = x[i][t] - x[j][t];
                d2 += d * d;
            }
            k[i * n + j] = std::exp(-gamma * d2);
        }
    }
    return k;
}

void conv3x3_batch(const float* in, int batch, int cin, int h, int w,
                   const float* weights, const float* bias, int cout, float* out) {
    const std::size_t in_img = static_cast<std::size_t>(cin) * h * w;
    const std::size_t out_img = static_cast<std::size_t>(cout) * h * w;
    for (int b = 0; b < batch; ++b) {
        for (int oc = 0; oc < cout; ++oc) {
            float* o = out + b * out_img + static_cast<std::size_t>(oc) * h * w;
            for (int i = 0; i < h * w; ++i) o[i] = bias[oc];
            for (int ic = 0; ic < cin; ++ic) {
                const float* wk = weights + (static_cast<std::size_t>(oc) * cin + ic) * 9;
                const float* ip = in + b * in_img + static_cast<std::size_t>(ic) * h * w;
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) {
                        float acc = 0.0f;
                        for (int kr = -1; kr <= 1; ++kr)
                            for (int kc = -1; kc <= 1; ++kc) {
                                const int rr = r + kr, cc = c + kc;
                                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                                acc += wk[(kr + 1) * 3 + (kc + 1)] * ip[rr * w + cc];
                            }
                        o[r * w + c] += acc;
                    }
            }
        }
    }
}

}  // namespace gpr::ref
