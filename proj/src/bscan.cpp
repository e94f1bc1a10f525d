#include "gpr/bscan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace gpr {

BScan make_scan(int rows, int cols, double dt_ns, double dx_m, double origin_x_m) {
    BScan s;
    s.rows = rows;
    s.cols = cols;
    s.dt_ns = dt_ns;
    s.dx_m = dx_m;
    s.origin_x_m = origin_x_m;
    if (rows < 1 || cols < 1) throw std::invalid_argument("BScan: rows and cols must be >= 1");
    if (!(dt_ns > 0.0) || !(dx_m > 0.0)) throw std::invalid_argument("BScan: dt and dx must be > 0");
    s.data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return s;
}

void validate(const BScan& scan) {
    if (scan.rows < 1 || scan.cols < 1)
        throw std::invalid_argument("BScan: rows and cols must be >= 1");
    if (!(scan.dt_ns > 0.0)) throw std::invalid_argument("BScan: dt must be > 0");
    if (!(scan.dx_m > 0.0)) throw std::invalid_argument("BScan: dx must be > 0");
    if (!std::isfinite(scan.origin_x_m)) throw std::invalid_argument("BScan: origin_x not finite");
    if (scan.data.size() != static_cast<std::size_t>(scan.rows) * scan.cols)
        throw std::invalid_argument("BScan: data size does not match rows*cols");
    for (double v : scan.data)
        if (!std::isfinite(v)) throw std::invalid_argument("BScan: non-finite amplitude");
}

GrayImage to_gray(const BScan& scan, double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("to_gray: lo/hi must be finite");
    if (!(lo < hi)) throw std::invalid_argument("to_gray: requires lo < hi");
    GrayImage g;
    g.rows = scan.rows;
    g.cols = scan.cols;
    g.pixels.resize(scan.data.size());
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < scan.data.size(); ++i) {
        double v = (scan.data[i] - lo) * inv;
        g.pixels[i] = std::clamp(v, 0.0, 1.0);
    }
    return g;
}

GrayImage to_gray(const BScan& scan) {
    auto [lo, hi] = amplitude_percentiles(scan, 1.0, 99.0);
    if (!(lo < hi)) { // flat scan: widen so the map stays defined
        lo -= 0.5;
        hi += 0.5;
    }
    return to_gray(scan, lo, hi);
}

std::pair<double, double> amplitude_percentiles(const BScan& scan, double q_lo, double q_hi) {
    std::vector<double> v(scan.data);
    const std::size_t n = v.size();
    auto rank = [n](double q) {
        double idx = q / 100.0 * static_cast<double>(n - 1);
        return static_cast<std::size_t>(std::llround(idx));
    };
    std::size_t ilo = rank(q_lo), ihi = rank(q_hi);
    std::nth_element(v.begin(), v.begin() + ilo, v.end());
    double lo = v[ilo];
    std::nth_element(v.begin(), v.begin() + ihi, v.end());
    double hi = v[ihi];
    return {lo, hi};
}

BScan extract(const BScan& scan, const Window& w) {
    if (w.width <= 0) throw std::out_of_range("extract: window width must be > 0");
    if (w.col_start < 0 || w.col_start + w.width > scan.cols)
        throw std::out_of_range("extract: window [" + std::to_string(w.col_start) + "," +
                                std::to_string(w.col_start + w.width) + ") outside scan with " +
                                std::to_string(scan.cols) + " cols");
    BScan out = make_scan(scan.rows, w.width, scan.dt_ns, scan.dx_m,
                          scan.origin_x_m + w.col_start * scan.dx_m);
    for (int r = 0; r < scan.rows; ++r)
        std::memcpy(out.row(r), scan.row(r) + w.col_start, sizeof(double) * w.width);
    return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'F', '1'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 8 + 8;

template <class T>
void put_le(std::string& buf, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf.append(reinterpret_cast<char*>(b), sizeof(T)); // x86: already little-endian
}

template <class T>
T get_le(const std::string& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'", 0);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

}  // namespace

BScan read_scan(const std::string& path) {
    const std::string buf = slurp(path);
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw FormatError("bad GSF magic", 0);
    if (buf.size() < kHeaderSize) throw FormatError("truncated GSF header", buf.size());
    const std::uint32_t rows = get_le<std::uint32_t>(buf, 4);
    const std::uint32_t cols = get_le<std::uint32_t>(buf, 8);
    const double dt = get_le<double>(buf, 12);
    const double dx = get_le<double>(buf, 20);
    const double origin = get_le<double>(buf, 28);
    if (rows < 1 || cols < 1) throw FormatError("GSF rows/cols must be >= 1", 4);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw FormatError("GSF dt must be finite and > 0", 12);
    if (!(dx > 0.0) || !std::isfinite(dx)) throw FormatError("GSF dx must be finite and > 0", 20);
    if (!std::isfinite(origin)) throw FormatError("GSF origin_x not finite", 28);
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    const std::uint64_t want = kHeaderSize + count * 4;
    if (buf.size() != want)
        throw FormatError("GSF payload size mismatch: header implies " + std::to_string(want) +
                              " bytes, file has " + std::to_string(buf.size()),
                          std::min<std::size_t>(buf.size(), want));
    BScan s = make_scan(static_cast<int>(rows), static_cast<int>(cols), dt, dx, origin);
    for (std::uint64_t i = 0; i < count; ++i) {
        const float f = get_le<float>(buf, kHeaderSize + i * 4);
        if (!std::isfinite(f))
            throw FormatError("non-finite amplitude", kHeaderSize + static_cast<std::size_t>(i) * 4);
        s.data[i] = static_cast<double>(f);
    }
    return s;
}

void write_scan(const BScan& scan, const std::string& path) {
    validate(scan);
    std::string buf;
    buf.reserve(kHeaderSize + scan.size() * 4);
    buf.append(kMagic, 4);
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(scan.rows));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(scan.cols));
    put_le<double>(buf, scan.dt_ns);
    put_le<double>(buf, scan.dx_m);
    put_le<double>(buf, scan.origin_x_m);
    for (double v : scan.data) put_le<float>(buf, static_cast<float>(v));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    std::string bytes(img.pixels.size(), '\0');
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        int q = static_cast<int>(std::lround(img.pixels[i] * 255.0));
        bytes[i] = static_cast<char>(std::clamp(q, 0, 255));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'", 0);
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    in >> magic >> w >> h >> maxv;
    if (magic != "P5" || w < 1 || h < 1 || maxv != 255)
        throw FormatError("unsupported PGM header in '" + path + "'", 0);
    in.get(); // single whitespace after header
    GrayImage img;
    img.rows = h;
    img.cols = w;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    std::string bytes(img.pixels.size(), '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw FormatError("truncated PGM payload", static_cast<std::size_t>(in.gcount()));
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.pixels[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
    return img;
}

BScan resize_bilinear(const BScan& scan, int out_rows, int out_cols) {
    if (out_rows < 1 || out_cols < 1)
        throw std::invalid_argument("resize_bilinear: output dims must be >= 1");
    BScan out = make_scan(out_rows, out_cols,
                          scan.dt_ns * static_cast<double>(scan.rows) / out_rows,
                          scan.dx_m * static_cast<double>(scan.cols) / out_cols,
                          scan.origin_x_m);
    const double sr = static_cast<double>(scan.rows) / out_rows;
    const double sc = static_cast<double>(scan.cols) / out_cols;
    for (int r = 0; r < out_rows; ++r) {
        // half-pixel-center mapping
        double fr = (r + 0.5) * sr - 0.5;
        fr = std::clamp(fr, 0.0, static_cast<double>(scan.rows - 1));
        const int r0 = static_cast<int>(fr);
        const int r1 = std::min(r0 + 1, scan.rows - 1);
        const double wr = fr - r0;
        for (int c = 0; c < out_cols; ++c) {
            double fc = (c + 0.5) * sc - 0.5;
            fc = std::clamp(fc, 0.0, static_cast<double>(scan.cols - 1));
            const int c0 = static_cast<int>(fc);
            const int c1 = std::min(c0 + 1, scan.cols - 1);
            const double wc = fc - c0;
            const double top = scan.at(r0, c0) * (1.0 - wc) + scan.at(r0, c1) * wc;
            const double bot = scan.at(r1, c0) * (1.0 - wc) + scan.at(r1, c1) * wc;
            out.at(r, c) = top * (1.0 - wr) + bot * wr;
        }
    }
    return out;
}

BScan sum(const BScan& a, const BScan& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("sum: shape mismatch");
    BScan out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

}  // namespace gpr
